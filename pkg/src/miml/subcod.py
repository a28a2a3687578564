"""SubCod: sub-concept discovery for multi-instance single-label data.

All instances are pooled and modeled by a Gaussian mixture; each mixture
component is a sub-concept.  A bag's raw pseudo-label vector marks the
components its instances fall into, then a max-margin polishing step may
flip entries: the margin problem alternates between a soft-margin QP in
(w, b) and an LP over the flip variables under a keep-at-least-theta
budget.  An inner MimlSvm learns bags -> polished pseudo-labels and a
linear mapper turns pseudo-label vectors back into the original class.
"""

from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

import numpy as np

from .core import Bag, MimlDataset, require_valid
from .dataio import config_get
from .kernels import KernelSpec
from .metrics import LabelScores
from .mimlsvm import MimlSvmConfig, MimlSvmModel
from .mimlsvm import fit as mimlsvm_fit
from .mimlsvm import predict as mimlsvm_predict
from .solvers import LpProblem, QpProblem, SvmDecision, solve_lp, solve_qp

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class SubCodConfig:
    M: Optional[int] = None          # mixture components; default scales with data
    theta: Optional[int] = None      # keep budget; default 40% of m*M
    C: float = 1.0                   # polishing margin trade-off
    seed: int = 0
    inner_k: Optional[int] = None    # clusters of the inner MimlSvm
    inner_C: float = 1.0
    em_max_iters: int = 100
    em_tol: float = 1e-7

    @staticmethod
    def from_mapping(cfg: Mapping[str, str]) -> "SubCodConfig":
        return SubCodConfig(
            M=config_get(cfg, "subcod.M", int, None),
            theta=config_get(cfg, "subcod.theta", int, None),
            C=config_get(cfg, "subcod.C", float, 1.0),
            seed=config_get(cfg, "subcod.seed", int, 0),
            inner_k=config_get(cfg, "subcod.inner_k", int, None),
            inner_C=config_get(cfg, "subcod.inner_C", float, 1.0),
            em_max_iters=config_get(cfg, "subcod.em_iters", int, 100),
            em_tol=config_get(cfg, "subcod.em_tol", float, 1e-7),
        )


# ------------------------------------------------------------------ GMM


@dataclass(eq=False)
class GmmModel:
    means: np.ndarray      # (M, d)
    covs: np.ndarray       # (M, d, d) symmetric positive definite
    weights: np.ndarray    # (M,) mixing coefficients, sum 1
    history: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def M(self) -> int:
        return self.means.shape[0]

    def component_log_pdf(self, X: np.ndarray) -> np.ndarray:
        """(N, M) log densities of every point under every component."""
        X = np.asarray(X, dtype=np.float64)
        N, d = X.shape
        out = np.empty((N, self.M))
        for k in range(self.M):
            chol = np.linalg.cholesky(self.covs[k])
            diff = X - self.means[k]
            sol = np.linalg.solve(chol, diff.T)
            maha = np.sum(sol * sol, axis=0)
            logdet = 2.0 * np.sum(np.log(np.diag(chol)))
            out[:, k] = -0.5 * (d * _LOG_2PI + logdet + maha)
        return out

    def responsibilities(self, X: np.ndarray) -> np.ndarray:
        """(N, M) row-stochastic posterior component weights."""
        logp = self.component_log_pdf(X) + np.log(self.weights)[None, :]
        mx = logp.max(axis=1, keepdims=True)
        p = np.exp(logp - mx)
        return p / p.sum(axis=1, keepdims=True)

    def log_likelihood(self, X: np.ndarray) -> float:
        logp = self.component_log_pdf(X) + np.log(self.weights)[None, :]
        mx = logp.max(axis=1)
        return float(np.sum(mx + np.log(np.exp(logp - mx[:, None]).sum(axis=1))))

    def to_payload(self) -> dict:
        return {"means": self.means.tolist(), "covs": self.covs.tolist(),
                "weights": self.weights.tolist()}

    @staticmethod
    def from_payload(p: dict) -> "GmmModel":
        return GmmModel(means=np.asarray(p["means"], dtype=np.float64),
                        covs=np.asarray(p["covs"], dtype=np.float64),
                        weights=np.asarray(p["weights"], dtype=np.float64))


def _regularize(cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    bump = 1e-6 * np.trace(cov) / d + 1e-12
    return cov + bump * np.eye(d)


def em_fit_gmm(X: np.ndarray, M: int, seed: int, max_iters: int = 100,
               tol: float = 1e-7, restarts: int = 3) -> GmmModel:
    """EM for a full-covariance Gaussian mixture, best of a few restarts.

    The winning run's log-likelihood history is non-decreasing: a step that
    fails to improve (possible only through the covariance regularizer)
    reverts to the previous parameters and stops.
    """
    X = np.asarray(X, dtype=np.float64)
    N, d = X.shape
    if not (1 <= M <= N):
        raise ValueError(f"M={M} out of range [1, {N}]")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        model = _em_once(X, M, rng, max_iters, tol)
        if best is None or model.history[-1] > best.history[-1]:
            best = model
    return best


def _em_once(X: np.ndarray, M: int, rng: np.random.Generator,
             max_iters: int, tol: float) -> GmmModel:
    N, d = X.shape
    centers = X[rng.choice(N, size=M, replace=False)]
    base_cov = _regularize(np.atleast_2d(np.cov(X.T)) if N > 1 else np.eye(d))
    model = GmmModel(means=centers.copy(),
                     covs=np.repeat(base_cov[None, :, :], M, axis=0),
                     weights=np.full(M, 1.0 / M))
    history = [model.log_likelihood(X)]
    for _ in range(max_iters):
        gamma_ik = model.responsibilities(X)
        Nk = gamma_ik.sum(axis=0)
        means = (gamma_ik.T @ X) / Nk[:, None]
        covs = np.empty((M, d, d))
        for k in range(M):
            diff = X - means[k]
            covs[k] = _regularize((gamma_ik[:, k][:, None] * diff).T @ diff / Nk[k])
        cand = GmmModel(means=means, covs=covs, weights=Nk / N)
        ll = cand.log_likelihood(X)
        if ll < history[-1] - 1e-12:
            break  # regularizer-induced dip: keep the better parameters
        model = cand
        improved = ll - history[-1]
        history.append(ll)
        if improved < tol:
            break
    model.history = tuple(history)
    return model


def assign_subconcepts(gmm: GmmModel, X: np.ndarray) -> np.ndarray:
    """Most responsible component per instance; ties go to the lowest index."""
    return np.argmax(gmm.responsibilities(X), axis=1)


def derive_label_vectors(sizes: np.ndarray, assignments: np.ndarray, M: int) -> np.ndarray:
    """(m, M) matrix with +1 where a bag contains the sub-concept, else -1."""
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    if assignments.size != offsets[-1]:
        raise ValueError("assignments do not cover all instances")
    c = -np.ones((sizes.size, M))
    for i in range(sizes.size):
        for k in assignments[offsets[i]:offsets[i + 1]]:
            c[i, int(k)] = 1.0
    return c


# ------------------------------------------------------------ polishing


def polish_objective(w: np.ndarray, b: float, Z: np.ndarray, c: np.ndarray,
                     y: np.ndarray, C: float) -> float:
    q = c * Z
    margins = y * (q @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def _polish_qp(Q_inputs: np.ndarray, y: np.ndarray, C: float):
    """Soft-margin primal over (w, b, xi) at fixed flip variables."""
    m, M = Q_inputs.shape
    nv = M + 1 + m
    Q = np.zeros((nv, nv))
    Q[:M, :M] = np.eye(M)
    c_lin = np.zeros(nv)
    c_lin[M + 1:] = C
    rows = np.zeros((m, nv))
    rows[:, :M] = -y[:, None] * Q_inputs
    rows[:, M] = -y
    rows[np.arange(m), M + 1 + np.arange(m)] = -1.0
    rhs = -np.ones(m)
    lb = np.full(nv, -np.inf)
    lb[M + 1:] = 0.0
    x0 = np.zeros(nv)
    x0[M + 1:] = 1.0
    res = solve_qp(QpProblem(Q=Q, c=c_lin, G=rows, h=rhs, lb=lb), x0=x0)
    return res.x[:M].copy(), float(res.x[M])


def _polish_lp(w: np.ndarray, b: float, c: np.ndarray, y: np.ndarray,
               theta: int, C: float) -> np.ndarray:
    """Optimal flips at fixed (w, b): minimize the summed hinge subject to
    z in [-1, 1]^(m x M) and sum z >= 2*theta - 1."""
    m, M = c.shape
    nz = m * M
    nv = nz + m
    c_obj = np.zeros(nv)
    c_obj[nz:] = C
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    for i in range(m):
        row = np.zeros(nv)
        row[i * M:(i + 1) * M] = -y[i] * (w * c[i])
        row[nz + i] = -1.0
        rows.append(row)
        rhs.append(-(1.0 - y[i] * b))
    budget = np.zeros(nv)
    budget[:nz] = -1.0
    rows.append(budget)
    rhs.append(-(2.0 * theta - 1.0))
    lb = np.concatenate([-np.ones(nz), np.zeros(m)])
    ub = np.concatenate([np.ones(nz), np.full(m, np.inf)])
    x, _ = solve_lp(LpProblem(c=c_obj, G=np.array(rows), h=np.array(rhs), lb=lb, ub=ub))
    return x[:nz].reshape(m, M)


def polish_labels(c: np.ndarray, y: np.ndarray, theta: int, C: float,
                  max_alternations: int = 50):
    """Alternating margin polishing; returns (c_tilde, objective history)."""
    c = np.asarray(c, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, M = c.shape
    if m < 2 or not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("polishing needs both target signs")
    if 2 * theta - 1 > m * M:
        raise ValueError(f"theta={theta} makes the keep budget infeasible")

    Z = np.ones((m, M))
    history = []
    prev_obj = None
    for _ in range(max_alternations):
        w, b = _polish_qp(c * Z, y, C)
        Z_new = _polish_lp(w, b, c, y, theta, C)
        obj = polish_objective(w, b, Z_new, c, y, C)
        history.append(obj)
        dz = float(np.max(np.abs(Z_new - Z)))
        Z = Z_new
        if dz < 1e-4 or (prev_obj is not None and abs(prev_obj - obj) < 1e-6):
            break
        prev_obj = obj
    c_tilde = np.where(c * Z > 0, 1.0, -1.0)
    return c_tilde, history, Z


# ------------------------------------------------------------ full model


@dataclass(eq=False)
class SubCodModel:
    gmm: GmmModel
    c_tilde: np.ndarray                  # (m, M) polished training vectors
    inner: MimlSvmModel
    mapper_classes: Tuple[int, ...]      # original label indices
    mappers: Tuple[SvmDecision, ...]     # one-vs-rest on pseudo-label vectors
    theta: int
    C: float
    history: dict = field(default_factory=dict, repr=False)

    def to_payload(self) -> dict:
        return {
            "gmm": self.gmm.to_payload(),
            "c_tilde": self.c_tilde.tolist(),
            "inner": self.inner.to_payload(),
            "mapper_classes": list(self.mapper_classes),
            "mappers": [s.to_payload() for s in self.mappers],
            "theta": self.theta,
            "C": self.C,
        }

    @staticmethod
    def from_payload(p: dict) -> "SubCodModel":
        return SubCodModel(
            gmm=GmmModel.from_payload(p["gmm"]),
            c_tilde=np.asarray(p["c_tilde"], dtype=np.float64),
            inner=MimlSvmModel.from_payload(p["inner"]),
            mapper_classes=tuple(int(v) for v in p["mapper_classes"]),
            mappers=tuple(SvmDecision.from_payload(s) for s in p["mappers"]),
            theta=int(p["theta"]),
            C=float(p["C"]),
        )

    def __eq__(self, other):
        if not isinstance(other, SubCodModel):
            return NotImplemented
        return self.to_payload() == other.to_payload()


def _single_labels(ds: MimlDataset) -> np.ndarray:
    out = []
    for _, labels in ds.examples:
        if len(labels) != 1:
            raise ValueError("SubCod expects single-label examples")
        out.append(next(iter(labels)))
    return np.asarray(out, dtype=int)


def _binary_targets(labels: np.ndarray) -> np.ndarray:
    """+1 for the most frequent class (binary: the higher label index)."""
    values, counts = np.unique(labels, return_counts=True)
    if values.size < 2:
        raise ValueError("need at least two classes")
    if values.size == 2:
        pos = values.max()
    else:
        pos = values[np.argmax(counts)]
    return np.where(labels == pos, 1.0, -1.0)


def default_components(N: int) -> int:
    return max(2, min(10, N // 10))


def fit(ds: MimlDataset, cfg: SubCodConfig = SubCodConfig()) -> SubCodModel:
    require_valid(ds)
    labels = _single_labels(ds)
    bags = ds.bags()
    sizes = np.array([b.size for b in bags])
    X = np.vstack([b.feats for b in bags])

    M = cfg.M if cfg.M is not None else default_components(X.shape[0])
    gmm = em_fit_gmm(X, M, seed=cfg.seed, max_iters=cfg.em_max_iters, tol=cfg.em_tol)
    assignments = assign_subconcepts(gmm, X)
    c = derive_label_vectors(sizes, assignments, M)

    theta = cfg.theta if cfg.theta is not None else int(round(0.4 * ds.m * M))
    y_bin = _binary_targets(labels)
    c_tilde, polish_history, _ = polish_labels(c, y_bin, theta, cfg.C)

    # every bag holds at least one instance, so at least one pseudo-label
    # must survive polishing
    for i in range(ds.m):
        if np.all(c_tilde[i] < 0):
            c_tilde[i, int(np.argmax(c[i]))] = 1.0

    pseudo = MimlDataset(
        tuple((bags[i], frozenset(int(j) for j in np.flatnonzero(c_tilde[i] > 0)))
              for i in range(ds.m)),
        T=M, d=ds.d,
    )
    inner_k = cfg.inner_k if cfg.inner_k is not None else None
    inner_cfg = MimlSvmConfig(k=inner_k, C=cfg.inner_C, seed=cfg.seed)
    inner = mimlsvm_fit(pseudo, inner_cfg)

    classes = tuple(int(v) for v in np.unique(labels))
    mappers = _fit_mappers(c_tilde, labels, classes)
    return SubCodModel(
        gmm=gmm, c_tilde=c_tilde, inner=inner,
        mapper_classes=classes, mappers=mappers,
        theta=theta, C=cfg.C,
        history={"em": gmm.history, "polish": polish_history,
                 "assignments": assignments},
    )


def _fit_mappers(c_tilde: np.ndarray, labels: np.ndarray, classes) -> Tuple[SvmDecision, ...]:
    from .solvers import WeightedBinaryProblem, train_weighted_svm
    m = c_tilde.shape[0]
    spec = KernelSpec("linear")
    mappers = []
    for cls in classes:
        y = np.where(labels == cls, 1.0, -1.0)
        prob = WeightedBinaryProblem(X=c_tilde, y=y, weights=np.ones(m), C=10.0)
        mappers.append(train_weighted_svm(prob, spec))
    return tuple(mappers)


def pseudo_label_vector(model: SubCodModel, bag: Bag) -> np.ndarray:
    """Inner MIML prediction thresholded to a +-1 vector over sub-concepts."""
    scores = mimlsvm_predict(model.inner, bag)
    vec = -np.ones(model.gmm.M)
    for j in scores.predicted:
        vec[j] = 1.0
    return vec


def predict_label(model: SubCodModel, bag: Bag) -> int:
    """Original class of a new bag: inner pseudo-labels -> mapper argmax."""
    vec = pseudo_label_vector(model, bag)
    votes = [mapper.decision_one(vec) for mapper in model.mappers]
    return model.mapper_classes[int(np.argmax(votes))]


def predict(model: SubCodModel, bag: Bag) -> LabelScores:
    """Score view for the evaluation harness: per-class mapper decisions
    with the single predicted class."""
    vec = pseudo_label_vector(model, bag)
    votes = np.array([mapper.decision_one(vec) for mapper in model.mappers])
    T = max(model.mapper_classes) + 1
    scores = np.full(T, -np.inf)
    scores[list(model.mapper_classes)] = votes
    scores[scores == -np.inf] = votes.min() - 1.0
    predicted = frozenset({model.mapper_classes[int(np.argmax(votes))]})
    return LabelScores(scores, predicted)
