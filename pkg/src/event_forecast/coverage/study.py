"""Coverage of prediction bounds for Type I censored Weibull samples.

Each Monte Carlo sample draws ``n`` lifetimes from a Weibull with ``eta = 1``
censored at ``t_c = F^{-1}(p_f1)``.  Samples with fewer than two events are
excluded.  Bounds from every requested method are scored by their
conditional coverage ``P(Y in bound | data)`` with ``Y ~ Binomial(n - r, p)``
and ``p = d / (1 - p_f1)``, and these are averaged over retained samples.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .. import prediction as pr
from ..bootstrap import _Layout, generate_replicates, replicate_rng
from ..data import CensoredDataset
from ..discrete import pbinom
from ..distributions import LlsFamily, LlsParams
from ..exceptions import BootstrapError, ConvergenceError, DomainError, EstimabilityError, StudyError
from ..likelihood import conditional_prob, fit_mle

logger = logging.getLogger(__name__)

SAMPLE_STREAM = 0x51
BOOT_STREAM = 0xB0
NA_POLICIES = ("raw", "trivial")


def exclusion_probability(n: int, p_f1: float) -> float:
    """Chance that a sample of ``n`` has fewer than two events by ``t_c``."""
    return float(pbinom(1, n, p_f1))


@dataclass(frozen=True)
class SimFactors:
    p_f1: float
    expected_events: float
    d: float
    beta: float = 2.0
    alphas: tuple = (0.05, 0.10)
    sides: str = "both"
    N: int = 1000
    B: int = 500
    master_seed: int = 0
    methods: tuple = pr.METHODS
    known_p: bool = False
    na_policy: str = "raw"

    def __post_init__(self):
        if not 0 < self.p_f1 < 1 or not 0 < self.d < 1 or self.p_f1 + self.d >= 1:
            raise DomainError("need 0 < p_f1, 0 < d and p_f1 + d < 1")
        if not self.expected_events > 0 or not self.beta > 0:
            raise DomainError("expected events and beta must be positive")
        if self.n < 2:
            raise DomainError(f"sample size round(E(r)/p_f1) = {self.n} is below 2")
        if self.N < 1 or self.B < 1:
            raise DomainError("N and B must be positive")
        if self.na_policy not in NA_POLICIES:
            raise DomainError(f"na_policy must be one of {NA_POLICIES}")
        bad = set(self.methods) - set(pr.METHODS)
        if bad:
            raise DomainError(f"unknown methods {sorted(bad)}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in np.atleast_1d(self.alphas)))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def n(self) -> int:
        return int(round(self.expected_events / self.p_f1))

    @property
    def params(self) -> LlsParams:
        return LlsParams.from_weibull(1.0, self.beta)

    @property
    def t_c(self) -> float:
        return (-math.log1p(-self.p_f1)) ** (1.0 / self.beta)

    @property
    def t_w(self) -> float:
        return (-math.log1p(-(self.p_f1 + self.d))) ** (1.0 / self.beta)

    @property
    def p_true(self) -> float:
        return self.d / (1.0 - self.p_f1)

    @property
    def side_list(self) -> tuple:
        return pr.SIDES if self.sides == "both" else (self.sides,)

    def layout(self) -> _Layout:
        empty = CensoredDataset.type1([], self.n, self.t_c)
        return _Layout(LlsFamily.SEV, self.params, empty, "type1")


@dataclass(frozen=True)
class CoverageRow:
    method: str
    alpha: float
    side: str
    coverage: float
    se: float
    n_used: int
    n_excluded: int
    n_na: int

    @property
    def nominal(self) -> float:
        return 1.0 - self.alpha


@dataclass
class CoverageResult:
    factors: SimFactors
    rows: list
    conditional: dict = field(repr=False)   # (method, alpha, side) -> per-sample coverage
    n_excluded: int = 0
    n_failed: int = 0

    def find(self, method: str, alpha: float, side: str) -> CoverageRow:
        for r in self.rows:
            if r.method == method and math.isclose(r.alpha, alpha) and r.side == side:
                return r
        raise KeyError((method, alpha, side))

    def coverage(self, method, alpha, side) -> float:
        return self.find(method, alpha, side).coverage

    @property
    def exclusion_fraction(self) -> float:
        return self.n_excluded / self.factors.N

    @property
    def exclusion_se(self) -> float:
        f = self.exclusion_fraction
        return math.sqrt(max(f * (1 - f), 0.0) / self.factors.N)

    def difference(self, a: tuple, b: tuple) -> tuple[float, float]:
        """Mean and standard error of the paired coverage difference ``a - b``."""
        diff = self.conditional[a] - self.conditional[b]
        return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(len(diff)))

    def to_csv(self, header: bool = True) -> str:
        f = self.factors
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["p_f1", "expected_events", "d", "beta", "n", "method", "alpha", "side",
                        "nominal", "coverage", "se", "n_used", "n_excluded", "n_na"])
        for r in self.rows:
            w.writerow([f.p_f1, f.expected_events, f.d, f.beta, f.n, r.method, r.alpha, r.side,
                        r.nominal, f"{r.coverage:.6f}", f"{r.se:.6f}", r.n_used,
                        r.n_excluded, r.n_na])
        return buf.getvalue()


def _sample_bounds(factors: SimFactors, data: CensoredDataset, index: int):
    """Bounds per method for one simulated dataset; NA entries are ``None``."""
    family = LlsFamily.SEV
    fit = fit_mle(family, data)
    task = pr.PredictionTask(t_w=(factors.t_w,), alphas=factors.alphas, sides=factors.sides)
    m = data.at_risk
    out = pr.BoundSet()
    if "plugin" in factors.methods:
        p = factors.p_true if factors.known_p else conditional_prob(
            family, fit.params, factors.t_c, factors.t_w)
        out.extend(pr.plugin_bounds(m, p, factors.alphas, factors.side_list))
    boot = [x for x in factors.methods if x != "plugin"]
    if boot:
        run = generate_replicates(family, fit, data, factors.B, factors.master_seed,
                                  seed_prefix=(BOOT_STREAM, index))
        if "calibration" in boot:
            out.extend(pr.calibration_bounds(fit, data, run, task))
        if "direct" in boot:
            out.extend(pr.direct_bounds(run, data, task)[1])
        if "gpq" in boot:
            out.extend(pr.gpq_bounds(fit, run, data, task)[1])
    return out


def run_coverage_study(factors: SimFactors) -> CoverageResult:
    """Unconditional coverage per ``(method, alpha, side)``.

    Calibration bounds flagged NA are counted in ``n_na`` and scored by
    ``factors.na_policy``: ``"raw"`` keeps the calibrated value computed
    before the NA guard, ``"trivial"`` substitutes 0 (lower) or ``n - r``
    (upper).
    Deterministic given ``factors.master_seed``.
    """
    layout = factors.layout()
    keys = [(mth, a, s) for mth in factors.methods for a in factors.alphas for s in factors.side_list]
    cond = {k: [] for k in keys}
    na = dict.fromkeys(keys, 0)
    excluded = failed = 0
    p = factors.p_true
    for i in range(factors.N):
        rng = replicate_rng(factors.master_seed, i, SAMPLE_STREAM)
        r, ey, _ = layout.draw(rng)
        if r.sum() < 2:
            excluded += 1
            continue
        data = CensoredDataset.type1(np.exp(ey), factors.n, factors.t_c)
        try:
            bounds = _sample_bounds(factors, data, i)
        except (ConvergenceError, EstimabilityError, BootstrapError) as exc:
            logger.warning("sample %d dropped: %s", i, exc)
            failed += 1
            continue
        m = int(data.at_risk[0])
        for k in keys:
            b = bounds.find(*k)
            v = b.value
            if v is None:
                na[k] += 1
                if factors.na_policy == "raw":
                    v = b.raw_value
                else:
                    v = 0 if k[2] == "lower" else m
            if k[2] == "lower":
                cond[k].append(1.0 - float(pbinom(v - 1, m, p)))
            else:
                cond[k].append(float(pbinom(v, m, p)))
    used = factors.N - excluded - failed
    if used == 0:
        raise StudyError("every Monte Carlo sample was excluded")
    rows, arrays = [], {}
    for k in keys:
        c = np.asarray(cond[k])
        arrays[k] = c
        se = float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else float("nan")
        rows.append(CoverageRow(*k, float(c.mean()), se, used, excluded, na[k]))
    return CoverageResult(factors, rows, arrays, excluded, failed)
