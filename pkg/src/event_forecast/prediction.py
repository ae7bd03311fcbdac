"""Prediction bounds for the number of future events.

Given censored data with risk set ``w_s = n_s - r_s`` per cohort, the count
of events in ``(t_c^s, t_w^s]`` is Poisson-binomial with cohort
probabilities ``p_s = pi_s(theta)`` (binomial for a single cohort).  Four
ways of bounding it are provided:

* plug-in: quantiles of the count law at ``theta_hat``;
* calibration: plug-in at a level re-tuned from the bootstrap law of
  ``U* = cdf(Y^dagger; w*, p*)``;
* direct: quantiles of the bootstrap mixture of count laws at ``p*``;
* GPQ: the same mixture at pivot-transformed parameters ``theta**``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import discrete
from .bootstrap import BootstrapRun
from .data import CensoredDataset
from .distributions import LlsParams
from .exceptions import DomainError
from .likelihood import FitResult, conditional_prob, pi_vector

METHODS = ("plugin", "calibration", "direct", "gpq")
SIDES = ("lower", "upper")
CLAMP = 1e-12
DENSE_LIMIT = 4_000_000   # materialize a one-cohort mixture when B * (m + 1) is at most this
_CAL_STREAM = 0xCA1


@dataclass(frozen=True)
class PredictionTask:
    """Forecast window plus requested levels.

    Give either ``delta`` (every cohort looks ``delta`` ahead of its own
    censoring time) or explicit per-cohort window ends ``t_w``.
    """

    delta: float | None = None
    t_w: tuple | None = None
    alphas: tuple = (0.05, 0.10)
    sides: str = "both"

    def __post_init__(self):
        if (self.delta is None) == (self.t_w is None):
            raise ValueError("give exactly one of delta or t_w")
        if self.delta is not None and not self.delta > 0:
            raise DomainError("window length must be positive")
        alphas = tuple(float(a) for a in np.atleast_1d(self.alphas))
        if any(not 0.0 < a < 1.0 for a in alphas):
            raise DomainError("alpha levels must lie in (0, 1)")
        object.__setattr__(self, "alphas", alphas)
        if self.t_w is not None:
            object.__setattr__(self, "t_w", tuple(float(t) for t in np.atleast_1d(self.t_w)))
        if self.sides not in ("lower", "upper", "both"):
            raise ValueError("sides must be lower, upper or both")

    @property
    def side_list(self) -> tuple:
        return SIDES if self.sides == "both" else (self.sides,)

    def window_ends(self, data: CensoredDataset) -> np.ndarray:
        tc = data.censor_times
        if self.delta is not None:
            return tc + self.delta
        tw = np.asarray(self.t_w, dtype=float)
        if tw.size == 1:
            tw = np.full_like(tc, tw[0])
        if tw.shape != tc.shape:
            raise DomainError(f"need {len(tc)} window ends, got {tw.size}")
        if np.any(tw <= tc):
            raise DomainError("every window end must exceed its cohort censoring time")
        return tw


@dataclass(frozen=True)
class Bound:
    method: str
    alpha: float
    side: str
    value: int | None
    calibrated_level: float | None = None
    na_reason: str | None = None
    raw_value: int | None = None     # calibrated bound before the NA guard

    @property
    def confidence(self) -> float:
        return 1.0 - self.alpha

    def as_record(self) -> dict:
        rec = {"method": self.method, "alpha": self.alpha, "side": self.side, "bound": self.value}
        if self.calibrated_level is not None:
            rec["calibrated_level"] = self.calibrated_level
        if self.na_reason is not None:
            rec["na_reason"] = self.na_reason
        return rec


@dataclass
class BoundSet:
    bounds: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.bounds)

    def __len__(self):
        return len(self.bounds)

    def extend(self, other: Iterable[Bound]):
        self.bounds.extend(other)
        return self

    def get(self, method: str, alpha: float, side: str) -> int | None:
        for b in self.bounds:
            if b.method == method and math.isclose(b.alpha, alpha) and b.side == side:
                return b.value
        raise KeyError((method, alpha, side))

    def find(self, method: str, alpha: float, side: str) -> Bound:
        for b in self.bounds:
            if b.method == method and math.isclose(b.alpha, alpha) and b.side == side:
                return b
        raise KeyError((method, alpha, side))

    def records(self) -> list[dict]:
        return [b.as_record() for b in self.bounds]


# Count laws --------------------------------------------------------------

class CountLaw:
    """Binomial or Poisson-binomial law of the future count."""

    def __init__(self, probs, weights):
        self.probs = np.clip(np.atleast_1d(np.asarray(probs, dtype=float)), 0.0, 1.0)
        self.weights = np.atleast_1d(np.asarray(weights, dtype=np.int64))
        if self.probs.shape != self.weights.shape:
            raise ValueError("probs and weights must align")
        self.total = int(self.weights.sum())
        self._cdf = None
        if len(self.weights) > 1:
            self._cdf = np.minimum(np.cumsum(discrete.dpoibin(self.probs, self.weights)), 1.0)

    def cdf(self, y):
        if self._cdf is None:
            return discrete.pbinom(y, self.total, self.probs[0])
        y = np.floor(np.asarray(y, dtype=float))
        idx = np.clip(y, 0, len(self._cdf) - 1).astype(int)
        return np.where(y < 0, 0.0, np.where(y >= len(self._cdf) - 1, 1.0, self._cdf[idx]))

    def quantile(self, q: float) -> int:
        if self._cdf is None:
            return discrete.qbinom(q, self.total, self.probs[0])
        if q <= 0.0:
            return 0
        if q >= 1.0:
            return len(self._cdf) - 1
        return min(int(np.searchsorted(self._cdf, q, side="left")), len(self._cdf) - 1)


def plugin_lower(law: CountLaw, alpha: float) -> int:
    """``sup{y : cdf(y - 1) <= alpha}`` by the quantile two-case rule."""
    q = law.quantile(alpha)
    return q if float(law.cdf(q)) > alpha else q + 1


def plugin_upper(law: CountLaw, alpha: float) -> int:
    """``inf{y : cdf(y) >= 1 - alpha}``."""
    return law.quantile(1.0 - alpha)


def plugin_bounds(weights, p_hat, alphas: Sequence[float] = (0.05, 0.10),
                  sides=SIDES, method: str = "plugin") -> BoundSet:
    """Plug-in bounds for risk set ``weights`` (scalar ``n - r`` or per cohort)."""
    law = CountLaw(p_hat, weights)
    out = BoundSet()
    for a in np.atleast_1d(alphas):
        a = float(a)
        for side in sides:
            v = plugin_lower(law, a) if side == "lower" else plugin_upper(law, a)
            out.bounds.append(Bound(method, a, side, int(v)))
    return out


# Predictive distributions ------------------------------------------------

class PredictiveDistribution:
    """Bootstrap mixture ``G(y) = mean_b cdf(y; w, p_b)`` of count laws."""

    def __init__(self, p_draws: np.ndarray, weights, method: str):
        self.p = np.clip(np.atleast_2d(np.asarray(p_draws, dtype=float)), 0.0, 1.0)
        self.weights = np.atleast_1d(np.asarray(weights, dtype=np.int64))
        if self.p.shape[1] != len(self.weights):
            raise ValueError("p draws must have one column per cohort")
        self.method = method
        self.total = int(self.weights.sum())
        self._cdf = None
        if len(self.weights) > 1:
            pmf = discrete.poibin_mixture_pmf(self.p, self.weights)
            self._cdf = np.minimum(np.cumsum(pmf), 1.0)
        elif len(self.p) * (self.total + 1) <= DENSE_LIMIT:
            pmf = discrete.binom_mixture_pmf(self.total, self.p[:, 0])
            self._cdf = np.minimum(np.cumsum(pmf), 1.0)

    def cdf(self, y):
        y = np.asarray(y)
        if self._cdf is None:
            vals = discrete.pbinom(np.asarray(y, dtype=float)[..., None], self.total, self.p[:, 0])
            return np.mean(vals, axis=-1)
        yf = np.floor(y.astype(float))
        idx = np.clip(yf, 0, self.total).astype(int)
        return np.where(yf < 0, 0.0, np.where(yf >= self.total, 1.0, self._cdf[idx]))

    def _smallest(self, q: float, strict: bool = False) -> int:
        if strict:
            q = float(np.nextafter(q, 2.0))
        if self._cdf is not None:
            if q <= 0.0:
                return 0
            return min(int(np.searchsorted(self._cdf, q, side="left")), self.total)
        return discrete.discrete_quantile(lambda y: float(self.cdf(y)), q, self.total)

    def lower(self, alpha: float) -> int:
        """``sup{y : G(y - 1) <= alpha}``, i.e. the smallest ``y`` with ``G(y) > alpha``."""
        return self._smallest(alpha, strict=True)

    def upper(self, alpha: float) -> int:
        """``inf{y : G(y) >= 1 - alpha}``."""
        return self._smallest(1.0 - alpha)

    def support(self) -> tuple[int, int]:
        """Integer range where ``G`` moves between ``CLAMP`` and ``1 - CLAMP``."""
        return self._smallest(CLAMP), self._smallest(1.0 - CLAMP)

    def values(self) -> tuple[np.ndarray, np.ndarray]:
        """``(y, G(y))`` over :meth:`support`; ``G`` is 0 below and 1 above it."""
        lo, hi = self.support()
        y = np.arange(lo, hi + 1)
        return y, np.asarray(self.cdf(y))

    def bounds(self, alphas, sides=SIDES) -> BoundSet:
        out = BoundSet()
        for a in np.atleast_1d(alphas):
            a = float(a)
            for side in sides:
                v = self.lower(a) if side == "lower" else self.upper(a)
                out.bounds.append(Bound(self.method, a, side, int(v)))
        return out


def gpq_transform(fitted, replicate):
    """Pivot-based parameter draw from a bootstrap estimate.

    ``mu** = mu + (mu - mu*) / sigma* * sigma`` and
    ``sigma** = sigma / sigma* * sigma``.  Arguments are ``(mu, sigma)``
    pairs (or :class:`LlsParams`); arrays broadcast.
    """
    mu, sigma = fitted.as_tuple() if isinstance(fitted, LlsParams) else fitted
    mu_s, sigma_s = replicate.as_tuple() if isinstance(replicate, LlsParams) else replicate
    mu_s = np.asarray(mu_s, dtype=float)
    sigma_s = np.asarray(sigma_s, dtype=float)
    if np.any(sigma_s <= 0):
        raise DomainError("bootstrap sigma must be positive")
    return mu + (mu - mu_s) / sigma_s * sigma, sigma / sigma_s * sigma


def _fitted_params(fitted) -> LlsParams:
    return fitted.params if isinstance(fitted, FitResult) else fitted


def direct_bounds(run: BootstrapRun, data: CensoredDataset, task: PredictionTask):
    tw = task.window_ends(data)
    pred = PredictiveDistribution(run.p_star(tw), data.at_risk, "direct")
    return pred, pred.bounds(task.alphas, task.side_list)


def gpq_bounds(fitted, run: BootstrapRun, data: CensoredDataset, task: PredictionTask):
    params = _fitted_params(fitted)
    tw = task.window_ends(data)
    mu2, sigma2 = gpq_transform(params, (run.mu_star, run.sigma_star))
    p2 = pi_vector(run.family, mu2, sigma2, data.censor_times, tw)
    pred = PredictiveDistribution(p2, data.at_risk, "gpq")
    return pred, pred.bounds(task.alphas, task.side_list)


def calibration_u(fitted, run: BootstrapRun, data: CensoredDataset, task: PredictionTask,
                  seed: int | None = None) -> np.ndarray:
    """Bootstrap draws ``u*_b = cdf(Y^dagger_b; n - r*_b, p*_b)``.

    ``Y^dagger_b`` is drawn from the count law at ``p_hat`` with the
    bootstrap risk set ``n - r*_b``; one draw per replicate.
    """
    params = _fitted_params(fitted)
    tw = task.window_ends(data)
    p_hat = np.atleast_1d(conditional_prob(run.family, params, data.censor_times, tw))
    p_star = run.p_star(tw)
    w_star = run.at_risk_star()
    seed = run.master_seed if seed is None else seed
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(_CAL_STREAM,))))
    y_dag = rng.binomial(w_star, p_hat[None, :]).sum(axis=1)
    if w_star.shape[1] == 1:
        return np.asarray(discrete.pbinom(y_dag, w_star[:, 0], p_star[:, 0]), dtype=float)
    return discrete.ppoibin_batch(y_dag, p_star, w_star)


def order_statistic(values: np.ndarray, q: float) -> float:
    """Sample quantile as the order statistic of rank ``ceil(B q)`` (1-based)."""
    v = np.sort(np.asarray(values, dtype=float))
    k = int(math.ceil(len(v) * q - 1e-9))
    return float(v[min(max(k, 1), len(v)) - 1])


def calibration_bounds(fitted, data: CensoredDataset, run: BootstrapRun, task: PredictionTask,
                       u: np.ndarray | None = None) -> BoundSet:
    """Plug-in bounds at bootstrap-calibrated levels.

    The lower bound uses ``u_alpha`` as its plug-in tail level and the upper
    bound uses ``u_{1-alpha}`` as its plug-in cdf level.  A level within
    ``1 / (2 (n - r))`` of 0 or 1 is numerically degenerate and gives an NA
    bound.
    """
    params = _fitted_params(fitted)
    tw = task.window_ends(data)
    p_hat = np.atleast_1d(conditional_prob(run.family, params, data.censor_times, tw))
    law = CountLaw(p_hat, data.at_risk)
    if u is None:
        u = calibration_u(params, run, data, task)
    m = max(law.total, 1)
    edge = 1.0 / (2.0 * m)
    out = BoundSet()
    for a in task.alphas:
        for side in task.side_list:
            if side == "lower":
                level = order_statistic(u, a)
                raw = plugin_lower(law, level)
                if level <= edge:
                    out.bounds.append(Bound("calibration", a, side, None, level,
                                            f"calibrated tail level {level:.3g} <= 1/(2(n-r))", raw))
                else:
                    out.bounds.append(Bound("calibration", a, side, raw, level, raw_value=raw))
            else:
                level = order_statistic(u, 1.0 - a)
                raw = plugin_upper(law, 1.0 - level)
                if level >= 1.0 - edge:
                    out.bounds.append(Bound("calibration", a, side, None, level,
                                            f"calibrated level {level:.10g} >= 1 - 1/(2(n-r))", raw))
                else:
                    out.bounds.append(Bound("calibration", a, side, raw, level, raw_value=raw))
    return out


def plugin_for(fitted, data: CensoredDataset, task: PredictionTask, family=None) -> BoundSet:
    params = _fitted_params(fitted)
    family = family if family is not None else getattr(fitted, "family")
    tw = task.window_ends(data)
    p_hat = np.atleast_1d(conditional_prob(family, params, data.censor_times, tw))
    return plugin_bounds(data.at_risk, p_hat, task.alphas, task.side_list)
