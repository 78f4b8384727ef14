"""Numerical primitives: normal CDFs, Cholesky, derivative-free optimization, RNG streams.

Everything here is deterministic given its inputs. Randomized quasi-Monte Carlo
(dimension >= 3 normal CDFs) takes an explicit :class:`RngStream`, so repeated
calls with the same stream are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.optimize
from scipy.special import ndtr, ndtri

from .errors import NotPositiveDefiniteError, ValidationError
from .validation import check_square_matrix

__all__ = [
    "RngStream",
    "norm_cdf",
    "norm_ppf",
    "bvn_cdf",
    "MvnResult",
    "mvn_cdf",
    "cholesky",
    "MinimizeResult",
    "minimize",
]


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """Seedable, splittable random stream.

    A value object: functions that take a stream derive a fresh numpy
    ``Generator`` from it internally, so calling the same function twice with
    the same stream gives bit-identical output. Use :meth:`child` to derive
    independent streams for concurrent or repeated work.

    Parameters
    ----------
    seed : int
        Non-negative base seed.
    stream : int
        Non-negative stream identifier, default 0.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        if int(self.stream) != self.stream or self.stream < 0:
            raise ValidationError(f"stream must be a non-negative integer, got {self.stream!r}")

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator for this (seed, stream) pair."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Derived stream number ``index`` (deterministic, collision-free per parent)."""
        if int(index) != index or index < 0:
            raise ValidationError(f"child index must be a non-negative integer, got {index!r}")
        return RngStream(self.seed, self.stream * 1_000_003 + int(index) + 1)


# ---------------------------------------------------------------------------
# Univariate and bivariate normal CDF
# ---------------------------------------------------------------------------


def norm_cdf(x):
    """Standard normal CDF, elementwise, absolute error below 1e-12."""
    return ndtr(np.asarray(x, dtype=float))


def norm_ppf(p):
    """Standard normal quantile function, elementwise."""
    return ndtri(np.asarray(p, dtype=float))


# Gauss-Legendre nodes/weights (positive half, symmetric rules).
_GL6_W = np.array([0.1713244923791704, 0.3607615730481386, 0.4679139345726910])
_GL6_X = np.array([0.9324695142031521, 0.6612093864662645, 0.2386191860831969])
_GL12_W = np.array([
    0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
    0.2031674267230659, 0.2334925365383548, 0.2491470458134028,
])
_GL12_X = np.array([
    0.9815606342467192, 0.9041172563704749, 0.7699026741943047,
    0.5873179542866175, 0.3678314989981802, 0.1252334085114689,
])
_GL20_W = np.array([
    0.01761400713915212, 0.04060142980038694, 0.06267204833410907,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183820, 0.1491729864726037,
    0.1527533871307258,
])
_GL20_X = np.array([
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154195, 0.2277858511416451,
    0.07652652113349734,
])

_TWOPI = 2.0 * math.pi


def _bvn_upper(h, k, r):
    """P(X > h, Y > k) for standard bivariate normal with correlation r.

    Vectorized over h, k (r scalar). Drezner-Wesolowsky quadrature with the
    Genz refinement for |r| close to 1; deterministic, absolute error well
    below 1e-10.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)
    h = np.clip(h, -38.0, 38.0).copy()
    k = np.clip(k, -38.0, 38.0).copy()

    if r == 1.0:
        return ndtr(-np.maximum(h, k))
    if r == -1.0:
        return np.maximum(ndtr(-k) - ndtr(h), 0.0)

    if abs(r) < 0.3:
        w, x = _GL6_W, _GL6_X
    elif abs(r) < 0.75:
        w, x = _GL12_W, _GL12_X
    else:
        w, x = _GL20_W, _GL20_X

    hk = h * k
    bvn = np.zeros_like(h)
    with np.errstate(under="ignore"):
        if abs(r) < 0.925:
            hs = (h * h + k * k) / 2.0
            asr = math.asin(r)
            for i in range(len(w)):
                for sgn in (-1.0, 1.0):
                    sn = math.sin(asr * (sgn * x[i] + 1.0) / 2.0)
                    bvn += w[i] * np.exp((sn * hk - hs) / (1.0 - sn * sn))
            bvn = bvn * asr / (2.0 * _TWOPI) + ndtr(-h) * ndtr(-k)
            return bvn

        if r < 0.0:
            k = -k
            hk = -hk
        a2 = (1.0 - r) * (1.0 + r)
        a = math.sqrt(a2)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        asr = -(bs / a2 + hk) / 2.0
        term = np.where(
            asr > -100.0,
            a * np.exp(asr) * (1.0 - c * (bs - a2) * (1.0 - d * bs / 5.0) / 3.0
                               + c * d * a2 * a2 / 5.0),
            0.0,
        )
        bvn = term
        b = np.sqrt(bs)
        sp = math.sqrt(_TWOPI) * ndtr(-b / a)
        term = np.where(
            -hk < 100.0,
            np.exp(np.clip(-hk / 2.0, None, 700.0)) * sp * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0),
            0.0,
        )
        bvn = bvn - term
        a = a / 2.0
        for i in range(len(w)):
            for sgn in (-1.0, 1.0):
                xs = (a * (sgn * x[i] + 1.0)) ** 2
                rs = math.sqrt(1.0 - xs)
                asr1 = -(bs / xs + hk) / 2.0
                sp1 = 1.0 + c * xs * (1.0 + d * xs)
                ep = np.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                bvn = bvn + np.where(
                    asr1 > -100.0, a * w[i] * np.exp(np.clip(asr1, -745.0, 0.0)) * (ep - sp1), 0.0
                )
        bvn = -bvn / _TWOPI
        if r > 0.0:
            bvn = bvn + ndtr(-np.maximum(h, k))
        else:
            bvn = -bvn
            bvn = bvn + np.where(k > h, ndtr(k) - ndtr(h), 0.0)
    return np.maximum(np.minimum(bvn, 1.0), 0.0)


def bvn_cdf(h, k, rho):
    """P(X <= h, Y <= k) for standard bivariate normal with correlation rho.

    Vectorized over ``h`` and ``k``; ``rho`` is a scalar in [-1, 1].
    Deterministic quadrature, absolute error <= 1e-10.
    """
    rho = float(rho)
    if not -1.0 <= rho <= 1.0:
        raise ValidationError(f"correlation must lie in [-1, 1], got {rho}")
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    out = _bvn_upper(-h, -k, rho)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Multivariate normal CDF (dimension >= 3: randomized QMC)
# ---------------------------------------------------------------------------


class MvnResult(NamedTuple):
    value: float
    error: float


_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53], dtype=float)

MVN_MAX_DIM = 16


def mvn_cdf(upper, cov, rng: RngStream | None = None, n_points: int = 10_000,
            n_shifts: int = 8) -> MvnResult:
    """P(X <= upper) for X ~ N(0, cov), with a standard-error estimate.

    Dimensions 1 and 2 use deterministic quadrature (error below 1e-10,
    reported error 0). Dimensions 3..16 use randomized quasi-Monte Carlo with
    number-theoretic (Richtmyer) generating vectors: ``n_shifts`` random
    shifts of ``n_points`` antithetically folded lattice points, drawn from
    ``rng``. Fixed ``rng`` implies bit-identical results across calls.

    Parameters
    ----------
    upper : array_like
        Upper integration limits; +inf entries are marginalized out.
    cov : array_like
        Positive definite covariance matrix.
    rng : RngStream, optional
        Stream for the QMC shifts; defaults to ``RngStream(0, 0)``.

    Returns
    -------
    MvnResult
        ``(value, error)`` where ``error`` is the standard error across
        shifts (0 for the deterministic dimensions).
    """
    cov = check_square_matrix(cov, name="cov")
    d_full = cov.shape[0]
    b = np.atleast_1d(np.asarray(upper, dtype=float))
    if b.ndim != 1 or b.shape[0] != d_full:
        raise ValidationError(f"upper must be a vector of length {d_full}")
    if np.any(np.isnan(b)):
        raise ValidationError("upper contains NaN")
    if d_full > MVN_MAX_DIM:
        raise ValidationError(f"dimension {d_full} exceeds the supported maximum {MVN_MAX_DIM}")

    if np.any(np.isneginf(b)):
        return MvnResult(0.0, 0.0)
    keep = ~np.isposinf(b)
    if not np.all(keep):
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            return MvnResult(1.0, 0.0)
        b = b[idx]
        cov = cov[np.ix_(idx, idx)]
    d = b.shape[0]

    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise NotPositiveDefiniteError(int(np.argmax(sd <= 0)) + 1)

    if d == 1:
        return MvnResult(float(ndtr(b[0] / sd[0])), 0.0)
    if d == 2:
        rho = cov[0, 1] / (sd[0] * sd[1])
        rho = min(1.0, max(-1.0, rho))
        return MvnResult(float(bvn_cdf(b[0] / sd[0], b[1] / sd[1], rho)), 0.0)

    L = cholesky(cov)
    if rng is None:
        rng = RngStream(0, 0)
    gen = rng.generator()

    m = d - 1
    q = np.sqrt(_PRIMES[:m])
    i = np.arange(1, n_points + 1, dtype=float)[:, None]
    base = i * q[None, :]

    tiny = 1e-15
    e1 = ndtr(b[0] / L[0, 0])
    estimates = np.empty(n_shifts)
    for s in range(n_shifts):
        delta = gen.random(m)
        u = np.abs(2.0 * np.mod(base + delta[None, :], 1.0) - 1.0)
        f = np.full(n_points, e1)
        y = np.empty((n_points, m))
        e_prev = f.copy()
        for j in range(1, d):
            z = np.clip(u[:, j - 1] * e_prev, tiny, 1.0 - tiny)
            y[:, j - 1] = ndtri(z)
            mu = y[:, : j] @ L[j, : j]
            e_prev = ndtr((b[j] - mu) / L[j, j])
            f = f * e_prev
        estimates[s] = f.mean()

    value = float(np.mean(estimates))
    error = float(np.std(estimates, ddof=1) / math.sqrt(n_shifts))
    return MvnResult(min(1.0, max(0.0, value)), error)


# ---------------------------------------------------------------------------
# Cholesky
# ---------------------------------------------------------------------------


def cholesky(a):
    """Lower-triangular Cholesky factor of a positive definite matrix.

    Uses the lower triangle of ``a``. Raises
    :class:`~paretograph.errors.NotPositiveDefiniteError` carrying the 1-based
    index of the first failing pivot.
    """
    a = check_square_matrix(a, name="matrix")
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = a[j, j] - L[j, :j] @ L[j, :j]
        if not np.isfinite(s) or s <= 0.0:
            raise NotPositiveDefiniteError(j + 1)
        L[j, j] = math.sqrt(s)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


# ---------------------------------------------------------------------------
# Derivative-free minimization
# ---------------------------------------------------------------------------


class MinimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    n_evals: int


def minimize(f: Callable, x0: Sequence[float] | np.ndarray, tol: float = 1e-8,
             max_evals: int = 2000, args: tuple = ()) -> MinimizeResult:
    """Nelder-Mead simplex minimization, deterministic given the start point.

    Terminates when the simplex collapses below ``tol`` (both coordinate and
    value spread) or after ``max_evals`` objective evaluations.

    Raises :class:`~paretograph.errors.ValidationError` when the objective is
    non-finite at ``x0``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    f0 = f(x0, *args)
    if not np.isfinite(f0):
        raise ValidationError("objective is non-finite at the start point")
    res = scipy.optimize.minimize(
        f, x0, args=args, method="Nelder-Mead",
        options={"xatol": tol, "fatol": tol, "maxfev": max_evals, "maxiter": max_evals},
    )
    return MinimizeResult(np.asarray(res.x, dtype=float), float(res.fun),
                          bool(res.success), int(res.nfev))
