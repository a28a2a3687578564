"""Bit-exact text formats for datasets, models, and configuration.

Dataset format "miml/1" (one example per line):

    miml/1 T=2 d=3
    labels: sea trees
    img7 | sea,trees | 0.5 1.0 2.0 ; -1.0 0.0 3.5
    img9 | sea | 0.25 0.5 0.75

Reals are written as the shortest decimal that round-trips to the same
binary64 value, so serialization is lossless and byte-deterministic.
Models travel in a one-line envelope header "miml-model/1 <algo>" followed
by a canonical JSON body.  Config files are flat key=value text.
"""

import json
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import Bag, MimlDataset, require_valid

DATASET_VERSION = "miml/1"
MODEL_VERSION = "miml-model/1"
KNOWN_ALGORITHMS = ("mimlboost", "mimlsvm", "dmimlsvm", "insdif", "subcod")

_NAME_FORBIDDEN = set(" \t|,;")


class DataFormatError(ValueError):
    """Malformed file content; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_real(x: float) -> str:
    """Shortest decimal that parses back to the identical float64."""
    return repr(float(x))


def default_label_names(T: int) -> Tuple[str, ...]:
    return tuple(f"l{i}" for i in range(T))


def serialize_dataset(ds: MimlDataset, label_names: Optional[Sequence[str]] = None) -> str:
    """Canonical text form: fixed field order, newline endings, shortest
    round-trip decimals."""
    require_valid(ds)
    names = tuple(label_names) if label_names is not None else default_label_names(ds.T)
    if len(names) != ds.T:
        raise ValueError(f"{len(names)} label names for T={ds.T}")
    for name in names:
        if not name or set(name) & _NAME_FORBIDDEN:
            raise ValueError(f"bad label name {name!r}")
    if len(set(names)) != len(names):
        raise ValueError("duplicate label names")

    lines = [f"{DATASET_VERSION} T={ds.T} d={ds.d}", "labels: " + " ".join(names)]
    for bag, labels in ds.examples:
        label_part = ",".join(names[i] for i in sorted(labels))
        inst_part = " ; ".join(
            " ".join(format_real(v) for v in row) for row in bag.feats
        )
        lines.append(f"{bag.id} | {label_part} | {inst_part}")
    return "\n".join(lines) + "\n"


def parse_dataset_with_names(text: str) -> Tuple[MimlDataset, Tuple[str, ...]]:
    lines = text.splitlines()
    if not lines:
        raise DataFormatError(1, "empty input")
    head = lines[0].split()
    if len(head) != 3 or head[0] != DATASET_VERSION:
        raise DataFormatError(1, f"expected header '{DATASET_VERSION} T=<int> d=<int>'")
    try:
        if not head[1].startswith("T=") or not head[2].startswith("d="):
            raise ValueError
        T = int(head[1][2:])
        d = int(head[2][2:])
    except ValueError:
        raise DataFormatError(1, f"malformed header fields {head[1]!r} {head[2]!r}") from None
    if len(lines) < 2 or not lines[1].startswith("labels:"):
        raise DataFormatError(2, "expected 'labels: <name> ...'")
    names = tuple(lines[1][len("labels:"):].split())
    if len(names) != T:
        raise DataFormatError(2, f"{len(names)} label names, header says T={T}")
    if len(set(names)) != len(names):
        raise DataFormatError(2, "duplicate label names")
    index = {name: i for i, name in enumerate(names)}

    examples = []
    for lineno, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        parts = raw.split("|")
        if len(parts) != 3:
            raise DataFormatError(lineno, "expected '<id> | <labels> | <instances>'")
        ident = parts[0].strip()
        if not ident:
            raise DataFormatError(lineno, "empty example id")
        labels = set()
        for token in parts[1].split(","):
            token = token.strip()
            if not token:
                raise DataFormatError(lineno, "empty label name")
            if token not in index:
                raise DataFormatError(lineno, f"unknown label {token!r}")
            labels.add(index[token])
        rows = []
        for chunk in parts[2].split(";"):
            fields = chunk.split()
            if not fields:
                raise DataFormatError(lineno, "empty instance")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                raise DataFormatError(lineno, f"non-numeric feature in {chunk.strip()!r}") from None
            if len(row) != d:
                raise DataFormatError(lineno, f"instance has {len(row)} features, expected d={d}")
            rows.append(row)
        examples.append((Bag(ident, np.asarray(rows)), frozenset(labels)))

    ds = MimlDataset(tuple(examples), T=T, d=d)
    require_valid(ds)
    return ds, names


def parse_dataset(text: str) -> MimlDataset:
    """Parse a "miml/1" stream; the result always passes validation."""
    return parse_dataset_with_names(text)[0]


@dataclass(frozen=True)
class ModelEnvelope:
    """Self-describing model container shared by all five learners."""

    algorithm: str
    hyper: dict
    payload: dict
    version: str = MODEL_VERSION


def serialize_model(env: ModelEnvelope) -> str:
    if env.algorithm not in KNOWN_ALGORITHMS:
        raise ValueError(f"unknown algorithm tag {env.algorithm!r}")
    if env.version != MODEL_VERSION:
        raise ValueError(f"unsupported envelope version {env.version!r}")
    body = json.dumps({"hyper": env.hyper, "payload": env.payload},
                      sort_keys=True, indent=1, allow_nan=False)
    return f"{MODEL_VERSION} {env.algorithm}\n{body}\n"


def parse_model(text: str) -> ModelEnvelope:
    head, _, body = text.partition("\n")
    fields = head.split()
    if len(fields) != 2 or fields[0] != MODEL_VERSION:
        raise DataFormatError(1, f"expected header '{MODEL_VERSION} <algo>'")
    algo = fields[1]
    if algo not in KNOWN_ALGORITHMS:
        raise DataFormatError(1, f"unknown algorithm tag {algo!r}")
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise DataFormatError(exc.lineno + 1, f"bad model body: {exc.msg}") from None
    return ModelEnvelope(algorithm=algo, hyper=data["hyper"], payload=data["payload"])


def parse_config(text: str) -> Dict[str, str]:
    """Flat key=value lines; '#' starts a comment."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DataFormatError(lineno, f"expected 'key=value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def config_get(cfg: Mapping[str, str], key: str, cast, default):
    """Typed lookup with a default; bools accept 1/0/true/false/yes/no."""
    if cfg is None or key not in cfg:
        return default
    raw = str(cfg[key]).strip()
    if cast is bool:
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key}: expected a boolean, got {raw!r}")
    return cast(raw)
