"""Censored maximum likelihood for log-location-scale families.

Fits are run in the unconstrained coordinates ``(mu, log sigma)`` with a
Nelder-Mead simplex.  :func:`fit_batch` fits many datasets of a common
layout at once (the bootstrap path); :func:`fit_mle` is the single-dataset
entry point built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from ._simplex import minimize_batch
from .data import CensoredDataset, ObservationArrays
from .distributions import LlsFamily, LlsParams
from .exceptions import ConvergenceError, DegenerateRiskSetError, DomainError, EstimabilityError

XATOL = 1e-8
MAXITER = 2000
GRAD_RTOL = 1e-5
FD_STEP = 1e-5
SIGMA_FLOOR = 0.05
START_SPREAD = 0.5
_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class FitResult:
    params: LlsParams
    loglik: float
    converged: bool
    n_events: int
    family: LlsFamily = LlsFamily.SEV


def _log1mexp(x):
    """``log(1 - exp(x))`` for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_interval_prob(family: LlsFamily, za, zb):
    """``log(Phi(zb) - Phi(za))`` evaluated from whichever tail is more accurate."""
    with np.errstate(invalid="ignore"):
        lcb = family.std_logcdf(zb)
        lca = family.std_logcdf(za)
        lsa = family.std_logsf(za)
        lsb = family.std_logsf(zb)
        lower = lcb + _log1mexp(lca - lcb)
        upper = lsa + _log1mexp(lsb - lsa)
    return np.where(lcb < _LOG_HALF, lower, upper)


class PackedData:
    """Weighted observations of many datasets padded to common widths.

    Times are stored on the log scale.  Each block is ``(rows, width)``; pad
    entries carry zero weight.  ``const`` is the per-row ``-sum(w log t)``
    Jacobian term of exact observations.
    """

    def __init__(self, exact_y, exact_w, right_y, right_w, lo_y, hi_y, interval_w):
        self.exact_y = np.atleast_2d(exact_y)
        self.exact_w = np.atleast_2d(exact_w)
        self.right_y = np.atleast_2d(right_y)
        self.right_w = np.atleast_2d(right_w)
        self.lo_y = np.atleast_2d(lo_y)
        self.hi_y = np.atleast_2d(hi_y)
        self.interval_w = np.atleast_2d(interval_w)
        self.const = -(self.exact_w * self.exact_y).sum(axis=1)
        self.rows = self.exact_y.shape[0]

    @classmethod
    def from_arrays(cls, a: ObservationArrays) -> "PackedData":
        with np.errstate(divide="ignore"):
            lo = np.log(a.lo)
        return cls(np.log(a.exact_t)[None], a.exact_w[None], np.log(a.right_t)[None],
                   a.right_w[None], lo[None], np.log(a.hi)[None], a.interval_w[None])

    def loglik(self, family: LlsFamily, mu, sigma, rows=None) -> np.ndarray:
        """Log-likelihood of ``rows`` at per-row ``(mu, sigma)``."""
        if rows is None:
            rows = slice(None)
        mu = np.asarray(mu, dtype=float)[:, None]
        sigma = np.asarray(sigma, dtype=float)[:, None]
        total = self.const[rows].copy()
        w = self.exact_w[rows]
        if w.shape[1]:
            z = (self.exact_y[rows] - mu) / sigma
            term = family.std_logpdf(z) - np.log(sigma)
            total += np.where(w > 0, w * term, 0.0).sum(axis=1)
        w = self.right_w[rows]
        if w.shape[1]:
            z = (self.right_y[rows] - mu) / sigma
            total += np.where(w > 0, w * family.std_logsf(z), 0.0).sum(axis=1)
        w = self.interval_w[rows]
        if w.shape[1]:
            za = (self.lo_y[rows] - mu) / sigma
            zb = (self.hi_y[rows] - mu) / sigma
            total += np.where(w > 0, w * log_interval_prob(family, za, zb), 0.0).sum(axis=1)
        return total


def log_likelihood(family, params: LlsParams, data: CensoredDataset) -> float:
    """Sum of log f (exact), log S (right) and log[F(b) - F(a)] (interval)."""
    family = LlsFamily.from_name(family)
    packed = PackedData.from_arrays(data.arrays)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = packed.loglik(family, np.array([params.mu]), np.array([params.sigma]))[0]
    return float(v) if not np.isnan(v) else -math.inf


def initial_values(family: LlsFamily, arrays: ObservationArrays, n: float) -> list[tuple[float, float]]:
    """Three deterministic starts ``(mu, log sigma)`` from the event times.

    The median event time is matched to the ``Phi`` quantile at half the
    observed event fraction; sigma comes from the log-time quartile spread.
    Both rules are scale-equivariant.
    """
    lo = np.where(arrays.lo > 0, arrays.lo, arrays.hi / 2.0)
    mid = np.sqrt(lo * arrays.hi)
    times = np.concatenate([arrays.exact_t, mid])
    w = np.concatenate([arrays.exact_w, arrays.interval_w])
    r = w.sum()
    frac = min(max(r / n, 1e-12), 1 - 1e-12)
    logs = np.log(times)
    order = np.argsort(logs)
    logs, w = logs[order], w[order]
    cum = np.cumsum(w) / r

    def wq(q):
        return float(logs[min(np.searchsorted(cum, q), len(logs) - 1)])

    zq = lambda q: float(family.std_ppf(q))
    spread = zq(0.75 * frac) - zq(0.25 * frac)
    sigma0 = max((wq(0.75) - wq(0.25)) / spread, SIGMA_FLOOR)
    med, zmed = wq(0.5), zq(0.5 * frac)
    starts = []
    for dl in (0.0, -START_SPREAD, START_SPREAD):
        s = sigma0 * math.exp(dl)
        starts.append((med - s * zmed, math.log(s)))
    return starts


def _stationary(family, packed, x, ll, rows):
    """Central-difference gradient norm test in ``(mu, log sigma)``."""
    h = FD_STEP * np.maximum(1.0, np.abs(x))
    grads = []
    for j in range(2):
        xp, xm = x.copy(), x.copy()
        xp[:, j] += h[:, j]
        xm[:, j] -= h[:, j]
        with np.errstate(all="ignore"):
            fp = packed.loglik(family, xp[:, 0], np.exp(xp[:, 1]), rows)
            fm = packed.loglik(family, xm[:, 0], np.exp(xm[:, 1]), rows)
        grads.append((fp - fm) / (2 * h[:, j]))
    g = np.hypot(*grads)
    return np.isfinite(g) & (g <= GRAD_RTOL * (1.0 + np.abs(ll)))


def fit_batch(family, packed: PackedData, starts: np.ndarray, step=(0.5, 0.3),
              rows=None, xatol=XATOL, maxiter=MAXITER):
    """Maximise the likelihood of each row of ``packed`` from ``starts``.

    Returns ``(x, loglik, converged)`` with ``x`` in ``(mu, log sigma)``.
    ``rows`` selects a subset of packed rows (aligned with ``starts``).
    """
    family = LlsFamily.from_name(family)
    rows = np.arange(packed.rows) if rows is None else np.asarray(rows)

    def negll(x, sub):
        with np.errstate(all="ignore"):
            return -packed.loglik(family, x[:, 0], np.exp(x[:, 1]), rows[sub])

    res = minimize_batch(negll, starts, step, xatol=xatol, maxiter=maxiter)
    ll = -res.fun
    ok = res.converged & np.isfinite(ll)
    if ok.any():
        ok[ok] = _stationary(family, packed, res.x[ok], ll[ok], rows[ok])
    return res.x, ll, ok


def fit_mle(family, data: CensoredDataset) -> FitResult:
    """ML estimate of ``(mu, sigma)`` from censored data.

    Raises :class:`EstimabilityError` with fewer than two events or when all
    events share one exact time / one inspection interval, and
    :class:`ConvergenceError` (carrying the best iterate) when no start
    converges.
    """
    family = LlsFamily.from_name(family)
    arrays = data.arrays
    r = data.n_events
    if r < 2:
        raise EstimabilityError(f"need at least 2 events to estimate (mu, sigma), got {r}")
    if arrays.distinct_events < 2:
        raise EstimabilityError("all events share one time or inspection interval")
    packed = PackedData.from_arrays(arrays)
    starts = np.array(initial_values(family, arrays, data.n))
    x, ll, ok = fit_batch(family, packed, starts, rows=np.zeros(len(starts), dtype=int))
    ll_ok = np.where(ok, ll, -np.inf)
    best = int(np.argmax(ll_ok)) if ok.any() else int(np.nanargmax(np.where(np.isfinite(ll), ll, -np.inf)))
    params = LlsParams(float(x[best, 0]), float(np.exp(x[best, 1])))
    if not ok.any():
        raise ConvergenceError("likelihood maximisation did not converge from any start",
                               best=FitResult(params, float(ll[best]), False, r, family))
    return FitResult(params, float(ll[best]), True, r, family)


def conditional_prob(family, params: LlsParams, t_c, t_w):
    """``[F(t_w) - F(t_c)] / [1 - F(t_c)]``, the chance a survivor at ``t_c`` fails by ``t_w``.

    Broadcasts over ``t_c`` and ``t_w``.
    """
    family = LlsFamily.from_name(family)
    t_c = np.asarray(t_c, dtype=float)
    t_w = np.asarray(t_w, dtype=float)
    if np.any(t_c <= 0):
        raise DomainError("censoring time must be positive")
    if np.any(t_w < t_c):
        raise DomainError("window end must not precede the censoring time")
    zc = (np.log(t_c) - params.mu) / params.sigma
    zw = (np.log(t_w) - params.mu) / params.sigma
    lsc = family.std_logsf(zc)
    if np.any(~np.isfinite(lsc)):
        raise DegenerateRiskSetError("F(t_c) is numerically 1; no survivors to predict")
    p = conditional_prob_z(family, zc, zw)
    return p[()] if p.ndim == 0 else p


def conditional_prob_z(family: LlsFamily, zc, zw):
    """Vectorised conditional probability on the standardized scale.

    ``1 - S(zw)/S(zc)`` via ``-expm1(logS(zw) - logS(zc))``; returns 1 where
    the risk set is numerically exhausted.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        lsc = family.std_logsf(zc)
        lsw = family.std_logsf(zw)
        p = -np.expm1(lsw - lsc)
    p = np.where(np.isfinite(lsc), p, 1.0)
    return np.clip(np.nan_to_num(p, nan=1.0), 0.0, 1.0)


def pi_vector(family, params_mu, params_sigma, t_c, t_w):
    """Conditional probabilities for many parameter draws and cohorts.

    ``params_*`` have shape ``(B,)``; ``t_c``/``t_w`` shape ``(S,)``; result ``(B, S)``.
    """
    family = LlsFamily.from_name(family)
    mu = np.asarray(params_mu, dtype=float)[:, None]
    sigma = np.asarray(params_sigma, dtype=float)[:, None]
    zc = (np.log(np.asarray(t_c, dtype=float))[None] - mu) / sigma
    zw = (np.log(np.asarray(t_w, dtype=float))[None] - mu) / sigma
    return conditional_prob_z(family, zc, zw)
