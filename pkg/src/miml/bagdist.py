"""Hausdorff distance between bags and k-medoids clustering over bags.

The Hausdorff distance is max over both directions of the max-min pointwise
Euclidean distance.  Clustering assigns every bag to its nearest medoid
(ties to the lowest medoid index) and re-elects each group's medoid as the
member minimizing the within-group distance sum, until the medoid set stops
changing.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ._dist import pairwise_sq_hausdorff
from .core import Bag


def stack_bags(bags: Sequence[Bag]):
    """Concatenate bag instances into (X, offsets) for the distance kernel."""
    if not bags:
        raise ValueError("need at least one bag")
    d = bags[0].dim
    for b in bags:
        if b.dim != d:
            raise ValueError("dimension mismatch between bags")
    sizes = np.array([b.size for b in bags], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    X = np.vstack([b.feats for b in bags])
    return X, offsets


def hausdorff(a: Bag, b: Bag) -> float:
    """Hausdorff distance between two bags (Euclidean base metric)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    xa, offa = stack_bags([a])
    xb, offb = stack_bags([b])
    return float(np.sqrt(pairwise_sq_hausdorff(xa, offa, xb, offb)[0, 0]))


def pairwise_hausdorff(bags_a: Sequence[Bag], bags_b: Sequence[Bag] = None) -> np.ndarray:
    """Full Hausdorff distance matrix between two bag collections.

    With one argument, returns the symmetric matrix over that collection.
    """
    xa, offa = stack_bags(bags_a)
    if bags_b is None:
        sq = pairwise_sq_hausdorff(xa, offa, xa, offa)
        sq = np.maximum(sq, sq.T)  # exact symmetry
        np.fill_diagonal(sq, 0.0)
    else:
        xb, offb = stack_bags(bags_b)
        if xa.shape[1] != xb.shape[1]:
            raise ValueError("dimension mismatch between collections")
        sq = pairwise_sq_hausdorff(xa, offa, xb, offb)
    return np.sqrt(sq)


@dataclass(frozen=True)
class Clustering:
    """Result of k-medoids: medoid example indices, per-bag assignment
    (as a medoid example index), and the total within-group distance.

    ``cost_history`` holds the cost after each assignment pass of the
    winning restart; it is non-increasing.
    """

    medoid_indices: Tuple[int, ...]
    assignment: Tuple[int, ...]
    cost: float
    cost_history: Tuple[float, ...] = ()


def medoid_of_dists(D: np.ndarray, members: Sequence[int]) -> int:
    """Member index minimizing the distance sum to all members; ties to the
    lowest index."""
    if len(members) == 0:
        raise ValueError("empty group")
    members = np.asarray(sorted(members), dtype=np.int64)
    sums = D[np.ix_(members, members)].sum(axis=1)
    return int(members[int(np.argmin(sums))])


def medoid_of(group: Sequence[Bag]) -> int:
    """Position in ``group`` of the bag minimizing the Hausdorff distance sum."""
    if len(group) == 0:
        raise ValueError("empty group")
    D = pairwise_hausdorff(group)
    return int(np.argmin(D.sum(axis=1)))


def _assign(D: np.ndarray, medoids: Sequence[int]) -> np.ndarray:
    """Nearest-medoid assignment; a medoid belongs to itself; other ties go
    to the lowest medoid example index."""
    med = np.asarray(sorted(medoids), dtype=np.int64)
    cols = D[:, med]
    choice = med[np.argmin(cols, axis=1)]  # argmin takes the first minimum
    choice[med] = med                      # each medoid stays its own
    return choice


def _cluster_cost(D: np.ndarray, assignment: np.ndarray) -> float:
    return float(D[np.arange(D.shape[0]), assignment].sum())


def k_medoids_from_dists(D: np.ndarray, k: int, seed: int,
                         max_iter: int = 100, restarts: int = 1) -> Clustering:
    """k-medoids on a precomputed distance matrix; deterministic per seed."""
    m = D.shape[0]
    if not (1 <= k <= m):
        raise ValueError(f"k={k} out of range [1, {m}]")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        medoids = set(int(i) for i in rng.choice(m, size=k, replace=False))
        history = []
        for _ in range(max_iter):
            assignment = _assign(D, medoids)
            history.append(_cluster_cost(D, assignment))
            new_medoids = set()
            for mi in sorted(medoids):
                members = np.flatnonzero(assignment == mi)
                new_medoids.add(medoid_of_dists(D, members))
            if new_medoids == medoids:
                break
            medoids = new_medoids
        assignment = _assign(D, medoids)
        cost = _cluster_cost(D, assignment)
        history.append(cost)
        if best is None or cost < best.cost:
            best = Clustering(tuple(sorted(medoids)), tuple(int(a) for a in assignment),
                              cost, tuple(history))
    return best


def k_medoids(bags: Sequence[Bag], k: int, seed: int,
              max_iter: int = 100, restarts: int = 1) -> Clustering:
    """Cluster bags under the Hausdorff distance."""
    D = pairwise_hausdorff(bags)
    return k_medoids_from_dists(D, k, seed, max_iter=max_iter, restarts=restarts)
