"""Standardization, censored likelihoods, clique-wise fitting, and tail
dependence diagnostics.

Clique parameters are estimated independently per clique on the rows where
that clique exceeds the threshold, using censored likelihood contributions
that integrate out components at or below 1. Totals follow the spanning-tree
weight bookkeeping: clique terms plus marginal exceedance terms counted once
per node, leaving the normalizing constant out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, logit
from scipy.stats import rankdata

from .errors import DomainError, FitError, NotPositiveDefiniteError, ValidationError
from .graphs import UGraph, check_block_graph, clique_decomposition, separator_path
from .hr import (
    complete_variogram,
    hr_bivariate_extremal_coefficient,
    hr_extremal_coefficient,
    hr_log_lambda,
    phi_k,
    validate_variogram,
)
from .models import (
    CustomBivariateFamily,
    GraphModelSpec,
    HRFamily,
    LogisticFamily,
    clique_extremal_coefficient,
    logistic_log_lambda,
)
from .numerics import (
    MVN_MAX_DIM,
    RngStream,
    cholesky,
    minimize,
    mvn_cdf,
    norm_cdf,
    norm_ppf,
)
from .validation import check_data_matrix, check_node, check_probability

__all__ = [
    "ExceedanceSample",
    "CliqueFit",
    "FitReport",
    "ChiEstimate",
    "standardize",
    "extract_exceedances",
    "marginal_terms",
    "hr_censored_loglik",
    "logistic_censored_loglik",
    "fit_clique",
    "fit_graph",
    "joint_censored_loglik",
    "chi_empirical",
    "chi3_empirical",
    "chi_model",
    "chi3_model",
]

_LOG_TINY = 1e-300
_PENALTY = 1e10


# ---------------------------------------------------------------------------
# Standardization and exceedance extraction
# ---------------------------------------------------------------------------


def standardize(data) -> np.ndarray:
    """Empirical transform to standard Pareto margins.

    Component j of row h maps to 1 / (1 - F_j) with F_j = rank / (N+1),
    i.e. (N+1) / (N+1-rank); ties share the average rank. Invariant under
    strictly increasing columnwise transforms.
    """
    x = check_data_matrix(data, name="data", min_rows=2)
    n = x.shape[0]
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        col = x[:, j]
        if np.all(col == col[0]):
            raise ValidationError(f"column {j + 1} is constant")
        r = rankdata(col, method="average")
        out[:, j] = (n + 1.0) / (n + 1.0 - r)
    return out


@dataclass(frozen=True)
class ExceedanceSample:
    """Threshold exceedances scaled to the unit-threshold domain.

    ``y`` holds the retained rows divided by the threshold, ``mask`` is True
    where a component is at or below 1 (censored), ``q`` is the marginal
    quantile that set the threshold, ``n_raw`` the pre-thresholding row count.
    """

    y: np.ndarray
    mask: np.ndarray
    q: float
    n_raw: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if y.shape != mask.shape or y.ndim != 2:
            raise ValidationError("y and mask must be matching 2-d arrays")
        if y.shape[0] and not np.all(y.max(axis=1) > 1.0):
            raise ValidationError("every retained row must exceed 1 somewhere")
        if not np.array_equal(mask, y <= 1.0):
            raise ValidationError("mask must flag exactly the components <= 1")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]


def extract_exceedances(std, q: float) -> ExceedanceSample:
    """Keep rows whose maximum exceeds the marginal Pareto q-quantile
    ``u = 1/(1-q)`` and rescale them by u."""
    x = check_data_matrix(std, name="std")
    check_probability(q, name="q")
    u = 1.0 / (1.0 - q)
    keep = x.max(axis=1) > u
    if not np.any(keep):
        raise ValidationError(f"no rows exceed the threshold u = {u:.4g}")
    y = x[keep] / u
    return ExceedanceSample(y, y <= 1.0, float(q), x.shape[0])


def marginal_terms(sample: ExceedanceSample) -> np.ndarray:
    """Per-node censored marginal log-density totals: -2 sum of log y_j over
    the rows where y_j exceeds 1. These are the node corrections in the tree
    weight formula and in graph-wide totals."""
    y = sample.y
    return np.array([-2.0 * np.log(y[y[:, j] > 1.0, j]).sum() for j in range(sample.d)])


def _restrict(sample: ExceedanceSample, clique) -> np.ndarray:
    idx = np.asarray(clique, dtype=int) - 1
    rows = sample.y[:, idx]
    return rows[rows.max(axis=1) > 1.0]


# ---------------------------------------------------------------------------
# Censored likelihood terms
# ---------------------------------------------------------------------------


def _censored_row_terms(y, gamma, rng: RngStream | None = None) -> np.ndarray:
    """Per-row log of the exponent-measure density with components at or
    below 1 integrated over (0, 1].

    Rows group by censoring pattern; each group anchors at its smallest
    exceeding coordinate, evaluates the observed block as a Gaussian density
    and the censored block as a conditional normal CDF (exact for dimension
    up to 2, quasi-Monte Carlo above).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    d = gamma.shape[0]
    if y.shape[1] != d:
        raise ValidationError(f"rows must have {d} components")
    if np.any(y <= 0.0):
        raise DomainError("components must be strictly positive")
    if not np.all(y.max(axis=1) > 1.0):
        raise DomainError("every row must exceed 1 in some component")
    if rng is None:
        rng = RngStream(0, 0)

    out = np.empty(y.shape[0])
    obs = y > 1.0
    codes = obs @ (1 << np.arange(d))
    logy = np.log(y)
    for code in np.unique(codes):
        rows = np.where(codes == code)[0]
        pattern = obs[rows[0]]
        o_idx = np.where(pattern)[0]
        j_idx = np.where(~pattern)[0]
        k = int(o_idx[0])
        rest = [i for i in range(d) if i != k]
        sig = phi_k(gamma, k + 1, _validate=False)
        abs_a = [i for i in o_idx if i != k]
        pos_a = [rest.index(i) for i in abs_a]
        pos_b = [rest.index(j) for j in j_idx]
        a, b = len(pos_a), len(pos_b)
        logyk = logy[rows, k]
        term = -2.0 * logyk - logy[np.ix_(rows, abs_a)].sum(axis=1)
        s = logy[np.ix_(rows, abs_a)] - logyk[:, None] + gamma[abs_a, k] / 2.0
        c = -logyk[:, None] + gamma[j_idx, k] / 2.0
        if a:
            aa = sig[np.ix_(pos_a, pos_a)]
            low = cholesky(aa)
            z = solve_triangular(low, s.T, lower=True)
            term += -0.5 * (a * math.log(2.0 * math.pi)
                            + 2.0 * np.log(np.diag(low)).sum()
                            + (z ** 2).sum(axis=0))
            if b:
                cross = sig[np.ix_(pos_b, pos_a)]
                ainv_s = solve_triangular(low, z, lower=True, trans="T")
                mu = (cross @ ainv_s).T
                ainv_cross = solve_triangular(
                    low, solve_triangular(low, cross.T, lower=True),
                    lower=True, trans="T")
                cov = sig[np.ix_(pos_b, pos_b)] - cross @ ainv_cross
        else:
            mu = np.zeros((len(rows), b))
            cov = sig[np.ix_(pos_b, pos_b)]
        if b == 1:
            term += np.log(np.maximum(
                norm_cdf((c - mu)[:, 0] / math.sqrt(cov[0, 0])), _LOG_TINY))
        elif b == 2:
            s1, s2 = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
            rho = min(max(cov[0, 1] / (s1 * s2), -1.0), 1.0)
            from .numerics import bvn_cdf

            h = (c - mu)[:, 0] / s1
            kk = (c - mu)[:, 1] / s2
            term += np.log(np.maximum(bvn_cdf(h, kk, rho), _LOG_TINY))
        elif b >= 3:
            vals = np.empty(len(rows))
            for t, r in enumerate(rows):
                vals[t] = mvn_cdf((c - mu)[t], cov, rng=rng.child(int(r))).value
            term += np.log(np.maximum(vals, _LOG_TINY))
        out[rows] = term
    return out


def hr_censored_loglik(yc, gamma) -> float:
    """Censored log-likelihood of clique rows under the pair or triangle
    model with the given variogram block: per-row censored density terms
    normalized by the block's extremal coefficient.

    ``yc`` holds the clique columns of the rows where the clique exceeds 1.
    """
    g = validate_variogram(gamma)
    if g.shape[0] not in (2, 3):
        raise ValidationError("clique blocks must be 2 x 2 or 3 x 3")
    yc = np.asarray(yc, dtype=float)
    if yc.ndim == 1:
        yc = yc[None, :]
    if yc.shape[0] == 0:
        raise ValidationError("empty clique sample")
    terms = _censored_row_terms(yc, g)
    lam = hr_extremal_coefficient(g)
    return float(terms.sum() - yc.shape[0] * math.log(lam))


def logistic_censored_loglik(yc, theta: float) -> float:
    """Censored log-likelihood of pair rows under the symmetric logistic
    model; closed forms for both censoring patterns."""
    t = float(theta)
    if not 0.0 < t < 1.0:
        raise ValidationError(f"theta must lie in (0, 1), got {theta!r}")
    yc = np.asarray(yc, dtype=float)
    if yc.ndim == 1:
        yc = yc[None, :]
    if yc.shape[1] != 2:
        raise ValidationError("logistic cliques are pairs")
    if yc.shape[0] == 0:
        raise ValidationError("empty clique sample")
    if np.any(yc <= 0.0):
        raise DomainError("components must be strictly positive")
    if not np.all(yc.max(axis=1) > 1.0):
        raise DomainError("every row must exceed 1 in some component")
    obs = yc > 1.0
    full = obs.all(axis=1)
    total = 0.0
    if np.any(full):
        total += logistic_log_lambda(yc[full], t).sum()
    part = ~full
    if np.any(part):
        yk = yc[part].max(axis=1)
        # integral over the censored coordinate: y_k^{-2} F(1/y_k) with F the
        # ratio CDF (1 + z^{-1/t})^{t-1}
        total += float(np.sum(-2.0 * np.log(yk)
                              + (t - 1.0) * np.logaddexp(0.0, np.log(yk) / t)))
    return float(total - yc.shape[0] * t * math.log(2.0))


# ---------------------------------------------------------------------------
# Clique and graph fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CliqueFit:
    clique: tuple
    family: str
    params: np.ndarray
    loglik: float
    converged: bool
    n_evals: int

    @property
    def gamma(self) -> np.ndarray:
        if self.family != "hr":
            raise ValidationError("gamma is defined for hr cliques only")
        return _gamma_block(self.params, len(self.clique))

    @property
    def theta(self) -> float:
        if self.family != "logistic":
            raise ValidationError("theta is defined for logistic cliques only")
        return float(self.params[0])


def _gamma_block(entries, m) -> np.ndarray:
    g = np.zeros((m, m))
    vals = np.asarray(entries, dtype=float).ravel()
    pos = 0
    for i in range(m):
        for j in range(i + 1, m):
            g[i, j] = g[j, i] = vals[pos]
            pos += 1
    return g


def _chi_hat_pair(yc, i, j) -> float:
    a = yc[:, i] > 1.0
    b = yc[:, j] > 1.0
    denom = a.sum() + b.sum()
    return 2.0 * np.sum(a & b) / denom if denom else 0.5


def _start_gamma(yc, i, j) -> float:
    chi = min(max(_chi_hat_pair(yc, i, j), 0.02), 0.98)
    g = (2.0 * norm_ppf(1.0 - chi / 2.0)) ** 2
    return min(max(g, 1e-3), 50.0)


def fit_clique(sample: ExceedanceSample, clique, family: str = "hr",
               start=None) -> CliqueFit:
    """Maximize the censored clique likelihood on the rows where the clique
    exceeds the threshold.

    Parameters are optimized on unconstrained scales (log variogram entries,
    logit dependence) with Nelder-Mead; the triangle case rejects candidate
    blocks that fail the conditional negative definiteness check with a large
    penalty. The convergence flag reports the optimizer's status, not an
    error.
    """
    clique = tuple(sorted(int(v) for v in clique))
    for v in clique:
        check_node(v, sample.d)
    m = len(clique)
    yc = _restrict(sample, clique)
    if yc.shape[0] < 2:
        raise FitError(f"clique {clique}: too few exceedance rows ({yc.shape[0]})")
    if family == "hr":
        if m not in (2, 3):
            raise ValidationError("hr cliques must have 2 or 3 nodes")
        if start is None:
            pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
            start = np.array([_start_gamma(yc, i, j) for i, j in pairs])
        x0 = np.log(np.asarray(start, dtype=float).ravel())

        def obj(x):
            if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 30.0):
                return _PENALTY
            g = _gamma_block(np.exp(x), m)
            try:
                val = -hr_censored_loglik(yc, g)
            except (NotPositiveDefiniteError, ValidationError):
                return _PENALTY
            return val if np.isfinite(val) else _PENALTY

    elif family == "logistic":
        if m != 2:
            raise ValidationError("logistic cliques are pairs")
        if start is None:
            start = 0.5
        x0 = np.array([logit(float(start))])

        def obj(x):
            if not np.all(np.isfinite(x)) or abs(x[0]) > 30.0:
                return _PENALTY
            val = -logistic_censored_loglik(yc, float(expit(x[0])))
            return val if np.isfinite(val) else _PENALTY

    else:
        raise ValidationError(f"unknown family tag {family!r}")

    res = minimize(obj, x0, tol=1e-8, max_evals=4000)
    if family == "hr":
        params = np.exp(res.x)
    else:
        params = np.array([float(expit(res.x[0]))])
    return CliqueFit(clique, family, params, -res.fun, res.converged, res.n_evals)


@dataclass(frozen=True)
class FitReport:
    """Clique estimates with the graph-wide censored likelihood bookkeeping."""

    graph: UGraph
    q: float
    n: int
    cliques: tuple
    family_tags: dict
    clique_fits: dict
    total_loglik: float
    p: int
    aic: float
    gamma: np.ndarray | None

    @property
    def all_converged(self) -> bool:
        return all(f.converged for f in self.clique_fits.values())

    def params(self, clique):
        return self.clique_fits[tuple(sorted(clique))].params


def _normalize_tags(cliques, families) -> dict:
    if isinstance(families, str):
        tags = {c: families for c in cliques}
    else:
        tags = {tuple(sorted(c)): t for c, t in dict(families).items()}
        missing = set(cliques) - set(tags)
        if missing:
            raise ValidationError(f"no family tag for cliques: {sorted(missing)}")
        extra = set(tags) - set(cliques)
        if extra:
            raise ValidationError(f"family tags for non-cliques: {sorted(extra)}")
    for c, t in tags.items():
        if t not in ("hr", "logistic"):
            raise ValidationError(f"unknown family tag {t!r} for clique {c}")
        if len(c) == 3 and t != "hr":
            raise ValidationError(f"clique {c} has size 3 and must be hr")
    return tags


def fit_graph(sample: ExceedanceSample, graph: UGraph, families="hr",
              starts=None, n_jobs: int = 1) -> FitReport:
    """Fit every clique of a block graph and assemble the total.

    The total censored log-likelihood sums clique terms minus their nodes'
    marginal corrections, then adds each node's correction once; AIC is
    2p - 2 total with p the free parameter count. All-variogram fits also
    carry the completed matrix.
    """
    check_block_graph(graph, max_clique=3)
    if graph.d != sample.d:
        raise ValidationError(f"graph has {graph.d} nodes, sample has {sample.d}")
    raw, _ = clique_decomposition(graph)
    cliques = tuple(tuple(sorted(c)) for c in raw)
    tags = _normalize_tags(cliques, families)
    starts = dict(starts or {})
    starts = {tuple(sorted(c)): s for c, s in starts.items()}

    def run(c):
        return fit_clique(sample, c, tags[c], starts.get(c))

    if n_jobs > 1:
        from joblib import Parallel, delayed

        fits = Parallel(n_jobs=n_jobs)(delayed(run)(c) for c in cliques)
    else:
        fits = [run(c) for c in cliques]
    fit_map = {f.clique: f for f in fits}

    marg = marginal_terms(sample)
    total = marg.sum()
    for c in cliques:
        total += fit_map[c].loglik - marg[np.asarray(c) - 1].sum()
    p = sum(len(c) * (len(c) - 1) // 2 for c in cliques)
    aic = 2.0 * p - 2.0 * total

    gamma = None
    if all(t == "hr" for t in tags.values()):
        blocks = {c: fit_map[c].gamma for c in cliques}
        gamma = complete_variogram(graph, blocks)
    return FitReport(graph, sample.q, sample.n, cliques, tags, fit_map,
                     float(total), p, float(aic), gamma)


def joint_censored_loglik(y, gamma, rng: RngStream | None = None) -> float:
    """Full-dimensional censored log-likelihood including the normalizing
    constant: per-row censored density terms minus the extremal coefficient's
    log per row. Capped at the multivariate-CDF dimension limit."""
    g = validate_variogram(gamma)
    d = g.shape[0]
    if d > MVN_MAX_DIM:
        raise ValidationError(f"joint likelihood supports up to {MVN_MAX_DIM} "
                              f"dimensions, got {d}")
    if rng is None:
        rng = RngStream(0, 0)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    terms = _censored_row_terms(y, g, rng=rng)
    lam = hr_extremal_coefficient(g, rng=rng.child(0))
    return float(terms.sum() - y.shape[0] * math.log(lam))


# ---------------------------------------------------------------------------
# Tail dependence coefficients
# ---------------------------------------------------------------------------


class ChiEstimate(NamedTuple):
    value: float
    n_joint: int
    reliable: bool


def chi_empirical(std, i: int, j: int, q: float) -> ChiEstimate:
    """Empirical pairwise tail dependence at quantile q: joint exceedance
    count over the average margin exceedance count. Flagged unreliable under
    5 joint exceedances. ``q = 0`` reads the input as already on the
    unit-threshold exceedance scale."""
    x = check_data_matrix(std, name="std")
    d = x.shape[1]
    check_node(i, d)
    check_node(j, d)
    if not 0.0 <= q < 1.0:
        raise ValidationError(f"q must lie in [0, 1), got {q!r}")
    u = 1.0 / (1.0 - q)
    a = x[:, i - 1] > u
    b = x[:, j - 1] > u
    joint = int(np.sum(a & b))
    denom = int(a.sum()) + int(b.sum())
    value = 2.0 * joint / denom if denom else float("nan")
    return ChiEstimate(value, joint, joint >= 5)


def chi3_empirical(std, i: int, j: int, k: int, q: float) -> ChiEstimate:
    """Trivariate analogue: joint exceedance probability of all three,
    averaged over the three choices of conditioning margin."""
    x = check_data_matrix(std, name="std")
    d = x.shape[1]
    for v in (i, j, k):
        check_node(v, d)
    if len({i, j, k}) != 3:
        raise ValidationError("i, j, k must be distinct")
    if not 0.0 <= q < 1.0:
        raise ValidationError(f"q must lie in [0, 1), got {q!r}")
    u = 1.0 / (1.0 - q)
    exc = [x[:, v - 1] > u for v in (i, j, k)]
    joint = int(np.sum(exc[0] & exc[1] & exc[2]))
    counts = [int(e.sum()) for e in exc]
    if all(counts):
        value = float(np.mean([joint / c for c in counts]))
    else:
        value = float("nan")
    return ChiEstimate(value, joint, joint >= 5)


def _pair_family_chi(fam) -> float:
    if isinstance(fam, HRFamily):
        return 2.0 - hr_bivariate_extremal_coefficient(fam.gamma[0, 1])
    if isinstance(fam, LogisticFamily):
        return 2.0 - 2.0 ** fam.theta
    if isinstance(fam, CustomBivariateFamily):
        return 2.0 - clique_extremal_coefficient(fam)
    raise ValidationError(f"unknown family {fam!r}")


def chi_model(model, i: int, j: int) -> float:
    """Model tail dependence 2 - Lambda_ij(1, 1) for a variogram matrix or a
    graph spec. Specs resolve pairs through the completed variogram (all-hr),
    the shared edge's family, or (trees) a path of variogram edges whose
    parameters add; other cross-family cases have no closed form and raise.
    """
    if isinstance(model, GraphModelSpec):
        check_node(i, model.d)
        check_node(j, model.d)
        if i == j:
            raise ValidationError("i and j must be distinct")
        if model.all_hr:
            return chi_model(model.completed_gamma(), i, j)
        key = (i, j) if i < j else (j, i)
        if key in model.families:
            return _pair_family_chi(model.families[key])
        if model.is_tree:
            path = [i] + separator_path(model.graph, i, j) + [j]
            g_sum = 0.0
            for a, b in zip(path[:-1], path[1:]):
                fam = model.families[(a, b) if a < b else (b, a)]
                if not isinstance(fam, HRFamily):
                    raise ValidationError(
                        f"pair ({i},{j}): path edge ({a},{b}) is not variogram-"
                        "parameterized; no closed form for its tail dependence")
                g_sum += fam.gamma[0, 1]
            return 2.0 - hr_bivariate_extremal_coefficient(g_sum)
        raise ValidationError(
            f"pair ({i},{j}): tail dependence has no closed form for mixed "
            "non-tree specs")
    g = validate_variogram(model)
    check_node(i, g.shape[0])
    check_node(j, g.shape[0])
    if i == j:
        raise ValidationError("i and j must be distinct")
    return 2.0 - hr_bivariate_extremal_coefficient(g[i - 1, j - 1])


def chi3_model(gamma, i: int, j: int, k: int, rng: RngStream | None = None) -> float:
    """Trivariate model tail dependence: inclusion-exclusion of the three
    pairwise extremal coefficients against the triple one."""
    g = validate_variogram(gamma)
    d = g.shape[0]
    for v in (i, j, k):
        check_node(v, d)
    if len({i, j, k}) != 3:
        raise ValidationError("i, j, k must be distinct")
    pair_sum = sum(hr_bivariate_extremal_coefficient(g[a - 1, b - 1])
                   for a, b in ((i, j), (i, k), (j, k)))
    sub = g[np.ix_([i - 1, j - 1, k - 1], [i - 1, j - 1, k - 1])]
    lam3 = hr_extremal_coefficient(sub, rng=rng)
    return 3.0 - pair_sum + lam3
