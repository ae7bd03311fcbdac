"""Limiting coverage of plug-in upper bounds.

With ``v1`` the scaled sampling variance of ``p_hat``, the plug-in
``1 - alpha`` upper bound has limiting coverage

    Lambda(v1) = integral Phi(Phi^{-1}(1 - alpha) + z sqrt(v1)) dPhi(z),

which equals ``Phi(Phi^{-1}(1 - alpha) / sqrt(1 + v1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ..bootstrap import generate_replicates
from ..data import CensoredDataset
from ..distributions import LlsFamily
from ..exceptions import DomainError
from ..likelihood import FitResult, pi_vector
from .study import SimFactors

V1_STREAM = 0x71
_Z_LIMIT = 40.0


def lambda_asymptotic(v1: float, alpha: float) -> float:
    """``Lambda_{1-alpha}(v1)`` by adaptive quadrature."""
    if v1 < 0 or not math.isfinite(v1):
        raise DomainError("v1 must be finite and nonnegative")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    zq = special.ndtri(1.0 - alpha)
    if v1 == 0:
        return 1.0 - alpha
    s = math.sqrt(v1)

    def f(z):
        return special.ndtr(zq + z * s) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    # The normal weight is below 1e-300 outside [-40, 40].  The inner cdf
    # switches from 0 to 1 over a band of width ~1/s around c, so mark that
    # band and the weight's centre as breakpoints.
    c = -zq / s
    cand = {0.0} | {c + k / s for k in (-8, -2, 0, 2, 8)}
    pts = sorted(x for x in cand if -_Z_LIMIT < x < _Z_LIMIT)
    val, _ = integrate.quad(f, -_Z_LIMIT, _Z_LIMIT, points=pts, epsabs=1e-12, epsrel=1e-12, limit=400)
    return float(val)


def lambda_closed_form(v1: float, alpha: float) -> float:
    return float(special.ndtr(special.ndtri(1.0 - alpha) / math.sqrt(1.0 + v1)))


@dataclass(frozen=True)
class V1Estimate:
    v1: float
    se: float
    M: int

    def lambda_se(self, alpha: float, h: float = 1e-4) -> float:
        """Delta-method standard error of ``Lambda(v1_hat)``."""
        lo = max(self.v1 - h, 0.0)
        slope = (lambda_closed_form(self.v1 + h, alpha) - lambda_closed_form(lo, alpha)) / (self.v1 + h - lo)
        return abs(slope) * self.se


def v1_from_estimates(p_hat, p0: float, n: int, f_tc: float) -> V1Estimate:
    """``(1 - F(t_c)) Var[sqrt(n) (p_hat - p0)] / (p0 (1 - p0))`` from draws of ``p_hat``."""
    x = math.sqrt(n) * (np.asarray(p_hat, dtype=float) - p0)
    scale = (1.0 - f_tc) / (p0 * (1.0 - p0))
    sq = (x - x.mean()) ** 2
    v = float(x.var(ddof=1)) * scale
    se = float(sq.std(ddof=1) / math.sqrt(len(x))) * scale
    return V1Estimate(v, se, len(x))


def estimate_v1(factors: SimFactors, M: int = 4000, seed: int | None = None,
                n: int | None = None) -> V1Estimate:
    """Monte Carlo ``v1`` at the study's true Weibull model.

    Samples with fewer than two events are redrawn, matching the
    exclusion rule of the coverage study.
    """
    if M < 2:
        raise DomainError("need M >= 2 simulated fits")
    n = factors.n if n is None else int(n)
    seed = factors.master_seed if seed is None else seed
    truth = FitResult(factors.params, float("nan"), True, 0, LlsFamily.SEV)
    layout = CensoredDataset.type1([], n, factors.t_c)
    run = generate_replicates(LlsFamily.SEV, truth, layout, M, seed, seed_prefix=(V1_STREAM,))
    p_hat = pi_vector(LlsFamily.SEV, run.mu_star, run.sigma_star, [factors.t_c], [factors.t_w])[:, 0]
    return v1_from_estimates(p_hat, factors.p_true, n, factors.p_f1)
