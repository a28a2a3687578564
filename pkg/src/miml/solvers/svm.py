"""Weighted soft-margin kernel SVM trained by SMO-style pairwise ascent.

The dual box of example i is [0, C * weight_i]; zero-weight examples are
inert.  Working pairs are chosen by maximal KKT violation and the solve
stops when the violation gap drops below tol.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..kernels import KernelSpec, instance_gram
from .errors import NumericalError


@dataclass(eq=False)
class SvmDecision:
    """Kernel expansion decision function: sum_i coef_i k(v_i, x) + bias."""

    kernel: KernelSpec
    vectors: np.ndarray   # (nsv, d)
    coef: np.ndarray      # (nsv,) = alpha_i * y_i
    bias: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if self.vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return self.coef @ instance_gram(self.kernel, self.vectors, X) + self.bias

    def decision_one(self, x) -> float:
        return float(self.decision(np.asarray(x)[None, :])[0])

    def to_payload(self) -> dict:
        return {
            "kernel": self.kernel.to_payload(),
            "vectors": self.vectors.tolist(),
            "coef": self.coef.tolist(),
            "bias": self.bias,
        }

    @staticmethod
    def from_payload(p: dict) -> "SvmDecision":
        nsv = len(p["coef"])
        vecs = np.asarray(p["vectors"], dtype=np.float64)
        if nsv == 0:
            vecs = vecs.reshape(0, 0) if vecs.size == 0 else vecs
        return SvmDecision(
            kernel=KernelSpec.from_payload(p["kernel"]),
            vectors=vecs.reshape(nsv, -1) if nsv else np.zeros((0, 0)),
            coef=np.asarray(p["coef"], dtype=np.float64),
            bias=float(p["bias"]),
        )


@dataclass
class WeightedBinaryProblem:
    X: np.ndarray          # (N, d)
    y: np.ndarray          # entries in {-1, +1}
    weights: np.ndarray    # per-example non-negative weights
    C: float


def smo_solve(K: np.ndarray, y: np.ndarray, box: np.ndarray,
              tol: float = 1e-6, max_iter: Optional[int] = None):
    """Minimize 1/2 a'(yy' * K)a - 1'a  s.t.  y'a = 0, 0 <= a <= box.

    Returns (alpha, bias, iterations).
    """
    y = np.asarray(y, dtype=np.float64)
    box = np.asarray(box, dtype=np.float64)
    N = y.size
    alpha = np.zeros(N)
    grad = -np.ones(N)
    if max_iter is None:
        max_iter = max(5000, 300 * N)

    for it in range(max_iter):
        gmax = -y * grad
        up = ((y > 0) & (alpha < box - 1e-14)) | ((y < 0) & (alpha > 1e-14))
        low = ((y > 0) & (alpha > 1e-14)) | ((y < 0) & (alpha < box - 1e-14))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(gmax[up])])
        j = int(np.flatnonzero(low)[np.argmin(gmax[low])])
        m_val, M_val = gmax[i], gmax[j]
        if m_val - M_val < tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t_star = (m_val - M_val) / eta if eta > 1e-12 else np.inf
        t_hi_i = (box[i] - alpha[i]) if y[i] > 0 else alpha[i]
        t_hi_j = alpha[j] if y[j] > 0 else (box[j] - alpha[j])
        t = min(t_star, t_hi_i, t_hi_j)
        if t <= 0:
            break
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += t * y * (K[:, i] - K[:, j])

    gmax = -y * grad
    up = ((y > 0) & (alpha < box - 1e-14)) | ((y < 0) & (alpha > 1e-14))
    low = ((y > 0) & (alpha > 1e-14)) | ((y < 0) & (alpha < box - 1e-14))
    if up.any() and low.any():
        bias = 0.5 * (gmax[up].max() + gmax[low].min())
    elif up.any():
        bias = gmax[up].max()
    elif low.any():
        bias = gmax[low].min()
    else:
        bias = 0.0
    return alpha, float(bias), it + 1


def train_weighted_svm(problem: WeightedBinaryProblem, spec: KernelSpec,
                       tol: float = 1e-6, max_iter: Optional[int] = None) -> SvmDecision:
    """Train the weighted SVM; degenerate single-class input yields a
    constant decision at that class's sign."""
    X = np.asarray(problem.X, dtype=np.float64)
    y = np.asarray(problem.y, dtype=np.float64)
    w = np.asarray(problem.weights, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be (N, d) with N >= 1")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    if np.any(w < 0) or not np.isfinite(w).all():
        raise ValueError("weights must be finite and >= 0")
    if problem.C <= 0:
        raise ValueError("C must be > 0")

    spec = KernelSpec(spec.kind, spec.resolve_gamma(X.shape[1]))
    live = w > 0
    signs = np.unique(y[live]) if live.any() else np.array([])
    if signs.size < 2:
        const = float(signs[0]) if signs.size == 1 else 1.0
        return SvmDecision(kernel=spec, vectors=np.zeros((0, X.shape[1])),
                           coef=np.zeros(0), bias=const)

    K = instance_gram(spec, X)
    alpha, bias, _ = smo_solve(K, y, problem.C * w, tol=tol, max_iter=max_iter)
    keep = alpha > 1e-12
    return SvmDecision(kernel=spec, vectors=X[keep].copy(),
                       coef=(alpha * y)[keep], bias=bias)
