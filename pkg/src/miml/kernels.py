"""Instance kernels, the averaged set kernel on bags, and the joint Gram
matrix over all training bags and instances.

Objects are ordered bags first, then instances bag by bag; an instance is a
singleton bag, so one kernel covers every object pair.  The set kernel is
the mean of pairwise base-kernel values, which keeps bag self-similarity
scale-free in bag size.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Bag, MimlDataset


@dataclass(frozen=True)
class KernelSpec:
    """Base kernel on instances: rbf(gamma) or linear.

    gamma=None means the dimension-scaled default 1/d, resolved where the
    input dimension is known.
    """

    kind: str = "rbf"
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    def resolve_gamma(self, d: int) -> float:
        return self.gamma if self.gamma is not None else 1.0 / d

    def to_payload(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}

    @staticmethod
    def from_payload(p: dict) -> "KernelSpec":
        return KernelSpec(kind=p["kind"], gamma=p["gamma"])


def instance_gram(spec: KernelSpec, Z: np.ndarray, Z2: np.ndarray = None) -> np.ndarray:
    """Base-kernel matrix between instance rows (vectorized)."""
    Z = np.asarray(Z, dtype=np.float64)
    W = Z if Z2 is None else np.asarray(Z2, dtype=np.float64)
    if Z.shape[1] != W.shape[1]:
        raise ValueError("dimension mismatch")
    if spec.kind == "linear":
        B = Z @ W.T
    else:
        gamma = spec.resolve_gamma(Z.shape[1])
        sq = (
            np.sum(Z * Z, axis=1)[:, None]
            + np.sum(W * W, axis=1)[None, :]
            - 2.0 * (Z @ W.T)
        )
        B = np.exp(-gamma * np.maximum(sq, 0.0))
    if Z2 is None:
        B = (B + B.T) / 2.0  # exact symmetry
    return B


def base_kernel(spec: KernelSpec, u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    return float(instance_gram(spec, u[None, :], v[None, :])[0, 0])


def set_kernel(spec: KernelSpec, a: Bag, b: Bag) -> float:
    """Mean of pairwise base-kernel values between the two bags."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(instance_gram(spec, a.feats, b.feats).mean())


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Joint (m+n) x (m+n) kernel matrix over ordered bags and instances.

    Index function: bag i -> i, instance j of bag i -> m + offsets[i] + j
    (0-based; offsets delimit each bag's rows in the stacked instance
    matrix).
    """

    values: np.ndarray
    m: int
    offsets: np.ndarray  # (m+1,)

    @property
    def n(self) -> int:
        return int(self.offsets[-1])

    @property
    def size(self) -> int:
        return self.m + self.n

    def index_bag(self, i: int) -> int:
        return i

    def index_instance(self, i: int, j: int) -> int:
        return self.m + int(self.offsets[i]) + j

    def instance_indices(self, i: int) -> np.ndarray:
        return self.m + np.arange(int(self.offsets[i]), int(self.offsets[i + 1]))


def build_gram(spec: KernelSpec, ds: MimlDataset) -> GramMatrix:
    """Assemble the joint Gram over bags and instances from one instance-level
    base-kernel matrix plus per-bag block means."""
    bags = ds.bags()
    m = len(bags)
    sizes = np.array([b.size for b in bags], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    Z = np.vstack([b.feats for b in bags])
    B = instance_gram(spec, Z)

    n = Z.shape[0]
    S = np.zeros((m, n))
    for i in range(m):
        S[i, offsets[i]:offsets[i + 1]] = 1.0 / sizes[i]
    G_bi = S @ B
    G_bb = G_bi @ S.T
    G_bb = (G_bb + G_bb.T) / 2.0

    K = np.empty((m + n, m + n))
    K[:m, :m] = G_bb
    K[:m, m:] = G_bi
    K[m:, :m] = G_bi.T
    K[m:, m:] = B
    return GramMatrix(values=K, m=m, offsets=offsets)


def kernel_against_objects(spec: KernelSpec, bags: Sequence[Bag], query: Bag) -> np.ndarray:
    """Set-kernel values between a query bag and all m+n training objects
    (bags first, then every instance as a singleton bag)."""
    sizes = np.array([b.size for b in bags], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    Z = np.vstack([b.feats for b in bags])
    if query.dim != Z.shape[1]:
        raise ValueError("dimension mismatch")
    C = instance_gram(spec, Z, query.feats)     # (n, n_query)
    inst_vals = C.mean(axis=1)                  # query vs each instance
    m = len(bags)
    bag_vals = np.add.reduceat(inst_vals, offsets[:-1]) / sizes
    return np.concatenate([bag_vals, inst_vals])
