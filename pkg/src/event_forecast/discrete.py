"""Binomial and Poisson-binomial cdf / quantile machinery.

The Poisson-binomial here is the law of a sum of independent
``Binomial(w_s, p_s)`` counts, i.e. the count of future events over
several cohorts whose units share a conditional event probability within
a cohort.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

# Allowed pmf mass drift before renormalizing a convolution step.
MASS_DRIFT_TOL = 1e-9


@dataclass(frozen=True)
class BinomialSpec:
    m: int
    p: float

    def __post_init__(self):
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError(f"trials must be a nonnegative integer, got {self.m}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class PoibinSpec:
    probs: tuple
    weights: tuple

    def __init__(self, probs: Sequence[float], weights: Sequence[int]):
        probs = tuple(float(p) for p in np.atleast_1d(probs))
        weights = tuple(int(w) for w in np.atleast_1d(weights))
        if len(probs) != len(weights) or not probs:
            raise ValueError("probs and weights must be nonempty and of equal length")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "weights", weights)

    @property
    def total(self) -> int:
        return sum(self.weights)


def pbinom(y, m, p):
    """``P(Y <= y)`` for ``Y ~ Binomial(m, p)``; broadcasts over arguments."""
    y = np.floor(np.asarray(y, dtype=float))
    m = np.asarray(m, dtype=float)
    p = np.asarray(p, dtype=float)
    y, m, p = np.broadcast_arrays(y, m, p)
    inside = (y >= 0) & (y < m)
    out = np.where(y >= m, 1.0, 0.0)
    if np.any(inside):
        out = out.copy()
        out[inside] = special.bdtr(y[inside].astype(np.int64), m[inside].astype(np.int64), p[inside])
    return out[()] if out.ndim == 0 else out


def dbinom(m: int, p: float) -> np.ndarray:
    """Full pmf of ``Binomial(m, p)`` on ``0..m``, log-gamma based."""
    k = np.arange(m + 1)
    if p <= 0.0:
        return (k == 0).astype(float)
    if p >= 1.0:
        return (k == m).astype(float)
    logc = special.gammaln(m + 1.0) - special.gammaln(k + 1.0) - special.gammaln(m - k + 1.0)
    pmf = np.exp(logc + special.xlogy(k, p) + special.xlog1py(m - k, -p))
    return pmf / pmf.sum()


def discrete_quantile(cdf: Callable[[int], float], q: float, upper: int,
                      guess: int | None = None) -> int:
    """Smallest ``y`` in ``[0, upper]`` with ``cdf(y) >= q`` for a monotone cdf.

    ``upper`` is returned when no point reaches ``q`` (``q`` equal to 1 with a
    cdf that rounds just below it).
    """
    if q <= 0.0 or cdf(0) >= q:
        return 0
    if q >= 1.0 or cdf(upper) < q:
        return upper
    lo, hi = 0, upper  # invariant: cdf(lo) < q <= cdf(hi)
    if guess is not None and 0 < guess < upper:
        step = 1
        g = int(guess)
        if cdf(g) >= q:
            hi = g
            while g - step > lo and cdf(g - step) >= q:
                hi = g - step
                step *= 2
            lo = max(lo, g - step)
        else:
            lo = g
            while g + step < hi and cdf(g + step) < q:
                lo = g + step
                step *= 2
            hi = min(hi, g + step)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cdf(mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi


def qbinom(q: float, m: int, p: float) -> int:
    """Smallest ``y`` with ``pbinom(y, m, p) >= q``."""
    m = int(m)
    if m == 0 or p <= 0.0:
        return 0
    mean = m * p
    sd = np.sqrt(m * p * (1.0 - p))
    if 0.0 < q < 1.0:
        guess = int(np.clip(np.floor(mean + sd * special.ndtri(q)), 0, m))
    else:
        guess = None
    return discrete_quantile(lambda y: float(pbinom(y, m, p)), q, m, guess)


def dpoibin(probs, weights=None, tail: float = 0.0) -> np.ndarray:
    """Poisson-binomial pmf by cohort-by-cohort dense convolution.

    With ``tail > 0`` upper-tail mass below ``tail`` is trimmed after every
    step, so the returned array may be shorter than ``sum(weights) + 1``; any
    point beyond its end has cdf equal to 1 up to the trimmed mass.
    """
    spec = probs if isinstance(probs, PoibinSpec) else PoibinSpec(probs, weights)
    # p_s = 0 components add nothing, so the support ends early; callers treat
    # points past the end as cdf 1.
    pmf = np.ones(1)
    for p, w in zip(spec.probs, spec.weights):
        if w == 0 or p <= 0.0:
            continue
        comp = dbinom(w, p)
        if tail > 0.0:
            comp = _trim_upper(comp, tail)
        pmf = np.convolve(pmf, comp)
        total = pmf.sum()
        if abs(total - 1.0) > MASS_DRIFT_TOL + (tail * len(spec.probs) if tail else 0.0):
            raise FloatingPointError(f"pmf mass drifted to {total!r}")
        pmf /= total
        if tail > 0.0:
            pmf = _trim_upper(pmf, tail)
    return pmf


def _trim_upper(pmf: np.ndarray, tail: float) -> np.ndarray:
    upper_mass = np.cumsum(pmf[::-1])[::-1]
    keep = np.nonzero(upper_mass >= tail)[0]
    end = keep[-1] + 1 if keep.size else 1
    return pmf[:end]


def ppoibin(y, probs, weights=None):
    """``P(Y <= y)`` for the Poisson-binomial ``Poibin(probs, weights)``."""
    spec = probs if isinstance(probs, PoibinSpec) else PoibinSpec(probs, weights)
    cdf = np.minimum(np.cumsum(dpoibin(spec)), 1.0)
    y = np.floor(np.asarray(y, dtype=float))
    idx = np.clip(y, 0, len(cdf) - 1).astype(int)
    out = np.where(y < 0, 0.0, np.where(y >= len(cdf) - 1, 1.0, cdf[idx]))
    return out[()] if out.ndim == 0 else out


def qpoibin(q: float, probs, weights=None) -> int:
    """Smallest ``y`` with ``ppoibin(y) >= q``."""
    spec = probs if isinstance(probs, PoibinSpec) else PoibinSpec(probs, weights)
    cdf = np.minimum(np.cumsum(dpoibin(spec)), 1.0)
    if q <= 0.0:
        return 0
    if q >= 1.0:
        return len(cdf) - 1
    return min(int(np.searchsorted(cdf, q, side="left")), len(cdf) - 1)


def rpoibin(rng: np.random.Generator, probs, weights) -> int:
    """One draw from ``Poibin(probs, weights)``."""
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    return int(rng.binomial(np.asarray(weights, dtype=np.int64), probs).sum())


def poibin_cf(probs, weights, size: int) -> np.ndarray:
    """Characteristic function of ``Poibin`` rows on the ``size``-point DFT grid.

    ``probs`` is ``(B, S)``; ``weights`` broadcasts to it.  Returns the
    ``(B, size // 2 + 1)`` half-spectrum used by :func:`numpy.fft.irfft`.
    """
    probs = np.atleast_2d(np.clip(np.asarray(probs, dtype=float), 0.0, 1.0))
    weights = np.broadcast_to(np.asarray(weights, dtype=float), probs.shape)
    theta = 2.0 * np.pi * np.arange(size // 2 + 1) / size
    vers = 2.0 * np.sin(0.5 * theta) ** 2           # 1 - cos(theta)
    sin = np.sin(theta)
    # log(1 + p (omega - 1)) = 0.5 log1p(-2 p (1 - p) vers) - i atan2(p sin, 1 - p vers)
    mod = np.zeros((probs.shape[0], len(theta)))
    arg = np.zeros_like(mod)
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(probs.shape[1]):
            w = weights[:, s][:, None]
            p = probs[:, s][:, None]
            mod += np.where(w > 0, 0.5 * w * np.log1p(-2.0 * p * (1.0 - p) * vers), 0.0)
            arg -= w * np.arctan2(p * sin, 1.0 - p * vers)
    return np.exp(mod) * np.exp(1j * arg)


def _cf_to_pmf(cf: np.ndarray, size: int) -> np.ndarray:
    pmf = np.fft.irfft(cf, n=size, axis=-1)
    pmf = np.clip(pmf, 0.0, None)
    return pmf / pmf.sum(axis=-1, keepdims=True)


def poibin_pmf_batch(probs, weights, size: int | None = None, chunk: int = 512) -> np.ndarray:
    """Row-wise ``Poibin`` pmfs on ``0..size-1`` by inverting the characteristic function.

    ``size`` must exceed every row's total weight (default: max total + 1)
    so the discrete transform is alias-free.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    weights = np.broadcast_to(np.asarray(weights, dtype=np.int64), probs.shape)
    need = int(weights.sum(axis=1).max()) + 1
    size = need if size is None else int(size)
    if size < need:
        raise ValueError("size must exceed the largest total weight")
    out = np.empty((probs.shape[0], size))
    for a in range(0, probs.shape[0], chunk):
        sl = slice(a, a + chunk)
        out[sl] = _cf_to_pmf(poibin_cf(probs[sl], weights[sl], size), size)
    return out


def poibin_mixture_pmf(probs, weights, chunk: int = 512) -> np.ndarray:
    """Pmf of the equal-weight mixture of ``Poibin(probs[b], weights)`` over rows ``b``."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    weights = np.asarray(weights, dtype=np.int64)
    size = int(weights.sum()) + 1
    acc = np.zeros(size // 2 + 1, dtype=complex)
    for a in range(0, probs.shape[0], chunk):
        acc += poibin_cf(probs[a:a + chunk], weights, size).sum(axis=0)
    return _cf_to_pmf(acc / probs.shape[0], size)


def ppoibin_batch(y, probs, weights, chunk: int = 512) -> np.ndarray:
    """Row-wise ``P(Y_b <= y_b)`` for ``Y_b ~ Poibin(probs[b], weights[b])``."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    weights = np.broadcast_to(np.asarray(weights, dtype=np.int64), probs.shape)
    y = np.floor(np.broadcast_to(np.asarray(y, dtype=float), probs.shape[:1]))
    size = int(weights.sum(axis=1).max()) + 1
    out = np.empty(probs.shape[0])
    for a in range(0, probs.shape[0], chunk):
        sl = slice(a, a + chunk)
        cdf = np.cumsum(poibin_pmf_batch(probs[sl], weights[sl], size), axis=1)
        idx = np.clip(y[sl], 0, size - 1).astype(int)
        v = cdf[np.arange(len(idx)), idx]
        out[sl] = np.where(y[sl] < 0, 0.0, np.where(y[sl] >= weights[sl].sum(axis=1), 1.0,
                                                      np.minimum(v, 1.0)))
    return out


def binom_mixture_pmf(m: int, probs, chunk: int = 2048) -> np.ndarray:
    """Pmf on ``0..m`` of the equal-weight mixture of ``Binomial(m, p_b)``."""
    probs = np.clip(np.asarray(probs, dtype=float).ravel(), 0.0, 1.0)
    y = np.arange(m + 1, dtype=float)
    logc = special.gammaln(m + 1.0) - special.gammaln(y + 1.0) - special.gammaln(m - y + 1.0)
    acc = np.zeros(m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        for a in range(0, len(probs), chunk):
            p = probs[a:a + chunk, None]
            lp = logc + special.xlogy(y, p) + special.xlog1py(m - y, -p)
            acc += np.exp(lp).sum(axis=0)
    pmf = acc / len(probs)
    return pmf / pmf.sum()
