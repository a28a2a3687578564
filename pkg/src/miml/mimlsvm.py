"""MimlSvm: bag-level k-medoids clustering to a distance vector, then one
SVM per label, with T-Criterion prediction.

Each bag is represented by its Hausdorff distances to the k cluster medoids;
per-label binary SVMs are trained on those vectors with +1/-1 membership
targets.  Prediction returns every positively scored label and falls back
to the top-scoring label when none is positive, so the predicted set is
never empty.
"""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .bagdist import k_medoids_from_dists, pairwise_hausdorff
from .core import Bag, MimlDataset, psi, require_valid
from .dataio import config_get
from .kernels import KernelSpec
from .metrics import LabelScores
from .parallel import parallel_map
from .solvers import SvmDecision, WeightedBinaryProblem, train_weighted_svm

_C_GRID = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class MimlSvmConfig:
    k_fraction: float = 0.2
    k: Optional[int] = None          # absolute override of k_fraction
    C: Optional[float] = None        # None: hold-out selection over _C_GRID
    gamma: Optional[float] = None    # None: 1/k on the distance vectors
    seed: int = 0

    @staticmethod
    def from_mapping(cfg: Mapping[str, str]) -> "MimlSvmConfig":
        return MimlSvmConfig(
            k_fraction=config_get(cfg, "mimlsvm.k_fraction", float, 0.2),
            k=config_get(cfg, "mimlsvm.k", int, None),
            C=config_get(cfg, "mimlsvm.C", float, None),
            gamma=config_get(cfg, "mimlsvm.gamma", float, None),
            seed=config_get(cfg, "mimlsvm.seed", int, 0),
        )


@dataclass(eq=False)
class MimlSvmModel:
    medoids: Tuple[Bag, ...]
    svms: Tuple[SvmDecision, ...]   # one per label
    T: int
    k: int
    history: dict = field(default_factory=dict, repr=False)

    def to_payload(self) -> dict:
        return {
            "medoids": [{"id": b.id, "feats": b.feats.tolist()} for b in self.medoids],
            "svms": [s.to_payload() for s in self.svms],
            "T": self.T,
            "k": self.k,
        }

    @staticmethod
    def from_payload(p: dict) -> "MimlSvmModel":
        return MimlSvmModel(
            medoids=tuple(Bag(b["id"], np.asarray(b["feats"])) for b in p["medoids"]),
            svms=tuple(SvmDecision.from_payload(s) for s in p["svms"]),
            T=int(p["T"]),
            k=int(p["k"]),
        )

    def __eq__(self, other):
        if not isinstance(other, MimlSvmModel):
            return NotImplemented
        return self.to_payload() == other.to_payload()


def bag_to_vector(medoids: Sequence[Bag], bag: Bag) -> np.ndarray:
    """Hausdorff distances from the bag to every medoid."""
    if len(medoids) == 0:
        raise ValueError("no medoids")
    return pairwise_hausdorff([bag], medoids)[0]


def resolve_k(cfg: MimlSvmConfig, m: int) -> int:
    k = cfg.k if cfg.k is not None else math.ceil(cfg.k_fraction * m)
    if not (1 <= k <= m):
        raise ValueError(f"k={k} out of range [1, {m}]")
    return k


def _train_label_svms(Z: np.ndarray, label_sets, T: int, C: float,
                      gamma: Optional[float]) -> Tuple[SvmDecision, ...]:
    m, k = Z.shape
    spec = KernelSpec("rbf", gamma if gamma is not None else 1.0 / k)

    def train_one(t):
        y = np.array([float(psi(labels, t, T)) for labels in label_sets])
        prob = WeightedBinaryProblem(X=Z, y=y, weights=np.ones(m), C=C)
        return train_weighted_svm(prob, spec)

    return tuple(parallel_map(train_one, range(T)))


def tcriterion(scores: np.ndarray) -> frozenset:
    """All labels with non-negative score, or the top label if none."""
    pos = frozenset(int(i) for i in np.flatnonzero(scores >= 0))
    if pos:
        return pos
    return frozenset({int(np.argmax(scores))})


def _scores_for(svms, z: np.ndarray) -> np.ndarray:
    return np.array([s.decision_one(z) for s in svms])


def _hamming(svms, Z, label_sets, T) -> float:
    total = 0
    for i in range(Z.shape[0]):
        pred = tcriterion(_scores_for(svms, Z[i]))
        total += len(pred.symmetric_difference(label_sets[i]))
    return total / (Z.shape[0] * T)


def fit(ds: MimlDataset, cfg: MimlSvmConfig = MimlSvmConfig()) -> MimlSvmModel:
    """Cluster the training bags, map every bag to its medoid-distance
    vector, and train one SVM per label.

    With C unset, it is chosen by a 75/25 hold-out on the training set
    (the full pipeline is refit on the winning value)."""
    require_valid(ds)
    bags = ds.bags()
    label_sets = ds.label_sets()
    m = ds.m
    k = resolve_k(cfg, m)

    D = pairwise_hausdorff(bags)
    clustering = k_medoids_from_dists(D, k, seed=cfg.seed)
    medoid_idx = list(clustering.medoid_indices)
    Z = D[:, medoid_idx]

    chosen_C = cfg.C
    history = {}
    if chosen_C is None:
        chosen_C, history = _holdout_C(ds, cfg)
    svms = _train_label_svms(Z, label_sets, ds.T, chosen_C, cfg.gamma)
    model = MimlSvmModel(
        medoids=tuple(bags[i] for i in medoid_idx),
        svms=svms, T=ds.T, k=k,
        history={"C": chosen_C, **history},
    )
    return model


def _holdout_C(ds: MimlDataset, cfg: MimlSvmConfig):
    rng = np.random.default_rng(cfg.seed)
    m = ds.m
    if m < 4:
        return 1.0, {"holdout": "skipped (m < 4)"}
    perm = rng.permutation(m)
    cut = max(1, int(round(0.75 * m)))
    cut = min(cut, m - 1)
    sub, hold = perm[:cut], perm[cut:]
    sub_ds = ds.subset(sub)
    k_sub = min(resolve_k(cfg, len(sub)), len(sub))
    D = pairwise_hausdorff(sub_ds.bags())
    clustering = k_medoids_from_dists(D, k_sub, seed=cfg.seed)
    medoid_idx = list(clustering.medoid_indices)
    Z_sub = D[:, medoid_idx]
    medoid_bags = [sub_ds.bags()[i] for i in medoid_idx]
    Z_hold = pairwise_hausdorff([ds.bags()[i] for i in hold], medoid_bags)
    hold_labels = [ds.label_sets()[i] for i in hold]

    scores = {}
    for C in _C_GRID:
        svms = _train_label_svms(Z_sub, sub_ds.label_sets(), ds.T, C, cfg.gamma)
        total = 0
        for r in range(len(hold)):
            pred = tcriterion(_scores_for(svms, Z_hold[r]))
            total += len(pred.symmetric_difference(hold_labels[r]))
        scores[C] = total / (len(hold) * ds.T)
    best = min(_C_GRID, key=lambda C: (scores[C], C))
    return best, {"holdout_hamming": scores}


def predict(model: MimlSvmModel, bag: Bag) -> LabelScores:
    """T-Criterion prediction from per-label SVM scores on the distance
    vector; the returned set is never empty."""
    z = bag_to_vector(model.medoids, bag)
    scores = _scores_for(model.svms, z)
    return LabelScores(scores, tcriterion(scores))


predict_tcriterion = predict
