"""Variogram-parameterized (log-Gaussian) model family: parameter algebra and densities.

The dependence parameter is a d x d variogram matrix: zero diagonal, symmetric,
non-negative, strictly conditionally negative definite. Anchored covariance
matrices, precision matrices, conditional independence queries, block-graph
completion, and the exponent measure density all live here.

Node labels are 1-based; matrix entry ``gamma[i-1, j-1]`` belongs to the node
pair (i, j). Anchored (d-1)-dimensional matrices are indexed by the sorted
remaining nodes.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DomainError,
    GraphError,
    IndefiniteVariogramError,
    NegativeEntryError,
    NonzeroDiagonalError,
    NotPositiveDefiniteError,
    ValidationError,
)
from .graphs import UGraph, check_block_graph, clique_decomposition, is_connected
from .numerics import RngStream, cholesky, mvn_cdf, norm_cdf
from .validation import check_node, check_square_matrix, check_symmetric

__all__ = [
    "validate_variogram",
    "anchored_nodes",
    "phi_k",
    "phi_k_inverse",
    "precision_for_anchor",
    "theta_transform",
    "ci_query",
    "ci_graph",
    "complete_variogram",
    "hr_lambda",
    "hr_log_lambda",
    "hr_extremal_coefficient",
    "hr_bivariate_extremal_coefficient",
    "hr_density",
    "hr_decomposable_density",
]

CI_RTOL = 1e-9


def validate_variogram(candidate) -> np.ndarray:
    """Validate a variogram matrix and return it as a float array.

    Checks, in order: squareness and d >= 2, symmetry, zero diagonal,
    non-negative entries, and strict conditional negative definiteness (the
    anchored covariance at node 1 must be positive definite).

    Raises
    ------
    AsymmetryError, NonzeroDiagonalError, NegativeEntryError,
    IndefiniteVariogramError
    """
    arr = check_square_matrix(candidate, name="variogram")
    if arr.shape[0] < 2:
        raise ValidationError("variogram must be at least 2 x 2")
    arr = check_symmetric(arr, name="variogram")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(np.diag(arr))) > 1e-12 * scale:
        bad = int(np.argmax(np.abs(np.diag(arr)))) + 1
        raise NonzeroDiagonalError(f"variogram diagonal must be zero, node {bad} is not")
    if np.min(arr) < -1e-12 * scale:
        i, j = np.unravel_index(np.argmin(arr), arr.shape)
        raise NegativeEntryError(
            f"variogram entries must be non-negative, entry ({i + 1}, {j + 1}) is negative"
        )
    arr = arr.copy()
    np.fill_diagonal(arr, 0.0)
    np.clip(arr, 0.0, None, out=arr)
    arr = (arr + arr.T) / 2.0
    try:
        cholesky(phi_k(arr, 1, _validate=False))
    except NotPositiveDefiniteError as exc:
        raise IndefiniteVariogramError(
            "variogram is not strictly conditionally negative definite"
        ) from exc
    return arr


def anchored_nodes(d: int, k: int):
    """Sorted node labels indexing an anchored matrix: 1..d without k."""
    return [v for v in range(1, d + 1) if v != k]


def phi_k(gamma, k: int, _validate: bool = True) -> np.ndarray:
    """Anchored covariance at node k: ``0.5 * (G_ik + G_jk - G_ij)`` for i, j != k.

    The result is (d-1) x (d-1), indexed by :func:`anchored_nodes`, and is
    positive definite exactly when ``gamma`` is a valid variogram.
    """
    if _validate:
        gamma = validate_variogram(gamma)
    else:
        gamma = np.asarray(gamma, dtype=float)
    d = gamma.shape[0]
    k = check_node(k, d, name="anchor")
    col = gamma[:, k - 1]
    full = 0.5 * (col[:, None] + col[None, :] - gamma)
    idx = np.array(anchored_nodes(d, k)) - 1
    return full[np.ix_(idx, idx)]


def phi_k_inverse(sigma, k: int) -> np.ndarray:
    """Variogram from an anchored covariance matrix (inverse of :func:`phi_k`).

    ``sigma`` is (d-1) x (d-1) positive definite; the result is the unique
    d x d variogram whose anchored covariance at node k equals ``sigma``:
    extend with a zero row/column at k, then
    ``gamma_ij = sigma~_ii + sigma~_jj - 2 sigma~_ij``.
    """
    sigma = check_symmetric(sigma, name="sigma")
    m = sigma.shape[0]
    d = m + 1
    k = check_node(k, d, name="anchor")
    cholesky(sigma)  # positive definiteness gate
    ext = np.zeros((d, d))
    idx = np.array(anchored_nodes(d, k)) - 1
    ext[np.ix_(idx, idx)] = sigma
    dg = np.diag(ext)
    gamma = dg[:, None] + dg[None, :] - 2.0 * ext
    np.fill_diagonal(gamma, 0.0)
    return gamma


def precision_for_anchor(gamma, k: int, _validate: bool = True) -> np.ndarray:
    """Inverse of the anchored covariance at k, indexed by :func:`anchored_nodes`."""
    sig = phi_k(gamma, k, _validate=_validate)
    return np.linalg.inv(sig)


def theta_transform(theta, k: int, new_anchor: int) -> np.ndarray:
    """Re-anchor a precision matrix without touching the variogram.

    Given the anchored precision at k (indexed by nodes != k), returns the
    anchored precision at ``new_anchor``: entries away from k are copied, the
    column for node k holds negated row sums, and its diagonal the grand sum.
    """
    theta = check_symmetric(theta, name="theta")
    m = theta.shape[0]
    d = m + 1
    k = check_node(k, d, name="anchor")
    new_anchor = check_node(new_anchor, d, name="new_anchor")
    if new_anchor == k:
        return theta.copy()
    nodes_k = anchored_nodes(d, k)
    pos_k = {v: i for i, v in enumerate(nodes_k)}
    row_sums = theta.sum(axis=1)
    grand = float(theta.sum())
    drop = pos_k[new_anchor]
    keep = [i for i in range(m) if i != drop]
    sub = theta[np.ix_(keep, keep)]
    sub_rows = row_sums[keep]

    nodes_new = anchored_nodes(d, new_anchor)
    pos_new = {v: i for i, v in enumerate(nodes_new)}
    out = np.empty((m, m))
    others = [v for v in nodes_new if v != k]
    oidx = [pos_new[v] for v in others]
    kpos = pos_new[k]
    out[np.ix_(oidx, oidx)] = sub
    out[oidx, kpos] = -sub_rows
    out[kpos, oidx] = -sub_rows
    out[kpos, kpos] = grand
    return out


def _default_ci_anchor(d: int, i: int, j: int) -> int:
    # prefer anchor 1; switch to d when node 1 takes part; 2 as a last resort
    if 1 not in (i, j):
        return 1
    if d not in (i, j):
        return d
    return 2


def ci_query(gamma, i: int, j: int, anchor: int | None = None, rtol: float = CI_RTOL) -> bool:
    """Extremal conditional independence of nodes i and j given the rest.

    Reads the anchored precision matrix: a zero entry (anchor outside
    {i, j}) or a zero row/column sum (anchor inside) within a relative
    tolerance of ``rtol`` times the largest precision entry. The answer does
    not depend on the anchor. For d = 2 the conditioning set is empty and the
    result is always False.
    """
    gamma = validate_variogram(gamma)
    d = gamma.shape[0]
    i = check_node(i, d, name="i")
    j = check_node(j, d, name="j")
    if i == j:
        raise ValidationError("i and j must differ")
    if d == 2:
        return False
    if anchor is None:
        anchor = _default_ci_anchor(d, i, j)
    anchor = check_node(anchor, d, name="anchor")
    theta = precision_for_anchor(gamma, anchor, _validate=False)
    nodes = anchored_nodes(d, anchor)
    pos = {v: p for p, v in enumerate(nodes)}
    tol = rtol * float(np.max(np.abs(theta)))
    if anchor == i:
        val = float(theta[:, pos[j]].sum())
    elif anchor == j:
        val = float(theta[pos[i], :].sum())
    else:
        val = float(theta[pos[i], pos[j]])
    return abs(val) <= tol


def ci_graph(gamma, rtol: float = CI_RTOL) -> UGraph:
    """Conditional independence graph implied by a variogram.

    One anchored precision inversion answers every pair. The result is
    guaranteed connected for a valid variogram; a disconnected outcome
    signals an inconsistent input and raises GraphError.
    """
    gamma = validate_variogram(gamma)
    d = gamma.shape[0]
    if d == 2:
        return UGraph(2, [(1, 2)])
    theta = precision_for_anchor(gamma, 1, _validate=False)
    tol = rtol * float(np.max(np.abs(theta)))
    col_sums = theta.sum(axis=0)
    edges = []
    for a in range(d - 1):  # positions for nodes 2..d
        for b in range(a + 1, d - 1):
            if abs(theta[a, b]) > tol:
                edges.append((a + 2, b + 2))
    for b in range(d - 1):
        if abs(col_sums[b]) > tol:
            edges.append((1, b + 2))
    g = UGraph(d, edges)
    if not is_connected(g):
        raise GraphError("conditional independence graph is disconnected; "
                         "the variogram is inconsistent")
    return g


def complete_variogram(graph: UGraph, blocks) -> np.ndarray:
    """Fill a full variogram from per-clique blocks on a block graph.

    ``blocks`` maps each maximal clique (any iterable of its 1-based nodes)
    to a valid variogram block whose rows/columns follow the clique's sorted
    node order. Off-clique entries are the separator-path sums: absorbing one
    clique at a time through its cut node ``v``,
    ``gamma_ij = gamma_iv + gamma_vj``.

    The completed matrix is itself a valid variogram whose conditional
    independence graph is exactly ``graph``.
    """
    check_block_graph(graph, max_clique=graph.d)
    cliques, separators = clique_decomposition(graph)
    want = {tuple(sorted(c)) for c in cliques}
    got = {tuple(sorted(c)): np.asarray(b, dtype=float) for c, b in dict(blocks).items()}
    missing = want - set(got)
    if missing:
        raise ValidationError(f"missing blocks for cliques: {sorted(missing)}")
    extra = set(got) - want
    if extra:
        raise ValidationError(f"blocks given for non-cliques: {sorted(extra)}")

    d = graph.d
    gamma = np.full((d, d), np.nan)
    np.fill_diagonal(gamma, 0.0)

    def set_entry(i, j, val):
        cur = gamma[i - 1, j - 1]
        if not np.isnan(cur) and abs(cur - val) > 1e-9 * max(1.0, abs(val)):
            raise ValidationError(
                f"inconsistent shared entries for node pair ({i}, {j}): {cur} vs {val}"
            )
        gamma[i - 1, j - 1] = val
        gamma[j - 1, i - 1] = val

    done: list[int] = []
    for p, clique in enumerate(cliques):
        block = got[tuple(clique)]
        if block.shape != (len(clique), len(clique)):
            raise ValidationError(
                f"block for clique {clique} must be {len(clique)} x {len(clique)}, "
                f"got {block.shape}"
            )
        validate_variogram(block)
        for a in range(len(clique)):
            for b in range(a + 1, len(clique)):
                set_entry(clique[a], clique[b], block[a, b])
        if p == 0:
            done.extend(clique)
            continue
        cut = separators[p - 1][0]
        new_nodes = [v for v in clique if v != cut]
        for i in done:
            if i == cut:
                continue
            for j in new_nodes:
                set_entry(i, j, gamma[i - 1, cut - 1] + gamma[cut - 1, j - 1])
        done.extend(new_nodes)

    if np.isnan(gamma).any():
        raise ValidationError("completion left unfilled entries; graph is not covered")
    return validate_variogram(gamma)


def _as_rows(y, d):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    rows = y[None, :] if single else y
    if rows.ndim != 2 or rows.shape[1] != d:
        raise ValidationError(f"y must have {d} components per point")
    return rows, single


def hr_log_lambda(y, gamma, k: int = 1):
    """Log exponent-measure density, vectorized over rows of ``y``.

    ``log lambda(y) = -2 log y_k - sum_{i != k} log y_i + log phi_{d-1}(s; Sigma^(k))``
    with ``s_i = log(y_i / y_k) + gamma_ik / 2``. The value does not depend on
    the anchor k. Requires strictly positive ``y``.
    """
    gamma = validate_variogram(gamma)
    d = gamma.shape[0]
    k = check_node(k, d, name="anchor")
    rows, single = _as_rows(y, d)
    if np.any(rows <= 0.0):
        raise DomainError("y must be strictly positive")
    idx = np.array(anchored_nodes(d, k)) - 1
    logs = np.log(rows)
    s = logs[:, idx] - logs[:, [k - 1]] + gamma[idx, k - 1] / 2.0
    sigma = phi_k(gamma, k, _validate=False)
    L = cholesky(sigma)
    z = solve_triangular(L, s.T, lower=True)
    quad = np.sum(z * z, axis=0)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    out = (-2.0 * logs[:, k - 1] - logs[:, idx].sum(axis=1)
           - 0.5 * ((d - 1) * math.log(2.0 * math.pi) + logdet + quad))
    return float(out[0]) if single else out


def hr_lambda(y, gamma, k: int = 1):
    """Exponent measure density (homogeneous of order -(d+1)); see :func:`hr_log_lambda`."""
    out = hr_log_lambda(y, gamma, k)
    return np.exp(out) if isinstance(out, np.ndarray) else math.exp(out)


def hr_bivariate_extremal_coefficient(gamma12: float) -> float:
    """Pair extremal coefficient ``2 Phi(sqrt(gamma12) / 2)`` in [1, 2]."""
    g = float(gamma12)
    if g < 0:
        raise ValidationError("gamma12 must be non-negative")
    return float(2.0 * norm_cdf(math.sqrt(g) / 2.0))


def hr_extremal_coefficient(gamma, z=None, rng: RngStream | None = None) -> float:
    """Exponent measure of the complement of [0, z]: ``Lambda(z)``.

    Sum over anchors k of ``z_k^{-1} Phi_{d-1}(log(z/z_k) + gamma_k / 2; Sigma^(k))``.
    ``z=None`` means all ones, giving the d-variate extremal coefficient in
    [1, d]. Dimensions up to 3 are deterministic; higher dimensions use
    quasi-Monte Carlo normal CDFs driven by ``rng`` (default ``RngStream(0, 0)``).
    """
    gamma = validate_variogram(gamma)
    d = gamma.shape[0]
    if z is None:
        z = np.ones(d)
    z = np.asarray(z, dtype=float)
    if z.shape != (d,):
        raise ValidationError(f"z must have length {d}")
    if np.any(z <= 0):
        raise DomainError("z must be strictly positive")
    if rng is None:
        rng = RngStream(0, 0)
    total = 0.0
    logz = np.log(z)
    for k in range(1, d + 1):
        idx = np.array(anchored_nodes(d, k)) - 1
        b = logz[idx] - logz[k - 1] + gamma[idx, k - 1] / 2.0
        sigma = phi_k(gamma, k, _validate=False)
        res = mvn_cdf(b, sigma, rng=rng.child(k))
        total += res.value / z[k - 1]
    return float(total)


def _check_pareto_domain(rows):
    if np.any(rows <= 0.0):
        raise DomainError("y must be strictly positive")
    if np.any(rows.max(axis=1) <= 1.0):
        raise DomainError("y must have at least one component above 1")


def hr_density(y, gamma, rng: RngStream | None = None):
    """Density ``lambda(y) / Lambda(1)`` on the exceedance region."""
    gamma = validate_variogram(gamma)
    rows, single = _as_rows(y, gamma.shape[0])
    _check_pareto_domain(rows)
    lam = hr_extremal_coefficient(gamma, rng=rng)
    out = np.exp(hr_log_lambda(rows, gamma)) / lam
    return float(out[0]) if single else out


def hr_decomposable_density(y, graph: UGraph, gamma, rng: RngStream | None = None):
    """Density of a decomposable model via its clique/separator factorization.

    ``f(y) = Lambda(1)^{-1} prod_C lambda_C(y_C) / prod_D lambda_D(y_D)``
    where the products run over the maximal cliques and separators of
    ``graph``; a singleton separator contributes ``y_v^{-2}``. For a variogram
    whose conditional independence graph equals ``graph`` this equals
    ``lambda(y) / Lambda(1)`` evaluated directly.
    """
    gamma = validate_variogram(gamma)
    d = gamma.shape[0]
    if graph.d != d:
        raise ValidationError("graph and variogram dimensions differ")
    rows, single = _as_rows(y, d)
    _check_pareto_domain(rows)
    cliques, separators = clique_decomposition(graph)
    n = rows.shape[0]
    log_num = np.zeros(n)
    for c in cliques:
        idx = np.array(c) - 1
        if len(c) == 1:
            log_num += -2.0 * np.log(rows[:, idx[0]])
            continue
        sub = gamma[np.ix_(idx, idx)]
        log_num += hr_log_lambda(rows[:, idx], sub, k=1)
    for s in separators:
        idx = np.array(s) - 1
        if len(s) == 1:
            log_num -= -2.0 * np.log(rows[:, idx[0]])
        else:
            sub = gamma[np.ix_(idx, idx)]
            log_num -= hr_log_lambda(rows[:, idx], sub, k=1)
    lam = hr_extremal_coefficient(gamma, rng=rng)
    out = np.exp(log_num) / lam
    return float(out[0]) if single else out
