"""Distributions that agree at two quantiles but differ in the far tail."""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .. import distributions as dist
from ..distributions import LlsFamily, LlsParams
from ..exceptions import DomainError

TARGETS = (LlsFamily.NORMAL, LlsFamily.LEV)


def weibull_with_quantile(beta: float, q: float, t: float) -> LlsParams:
    """Weibull with shape ``beta`` whose ``q`` quantile is ``t``."""
    eta = t / (-math.log1p(-q)) ** (1.0 / beta)
    return LlsParams.from_weibull(eta, beta)


def match_distributions(base: LlsParams, q_low: float = 0.01, q_high: float = 0.05,
                        base_family=LlsFamily.SEV) -> dict:
    """Lognormal and Frechet fits crossing ``base`` at its ``q_low`` and ``q_high`` quantiles."""
    if not 0 < q_low < 1 or not 0 < q_high < 1:
        raise DomainError("quantile levels must lie in (0, 1)")
    if q_low == q_high:
        raise DomainError("q_low equals q_high; the matching system is singular")
    base_family = LlsFamily.from_name(base_family)
    y = np.log([dist.quantile(base_family, base, q_low), dist.quantile(base_family, base, q_high)])
    out = {base_family: base}
    for fam in TARGETS:
        if fam == base_family:
            continue
        z = fam.std_ppf(np.array([q_low, q_high]))
        sigma = (y[1] - y[0]) / (z[1] - z[0])
        out[fam] = LlsParams(float(y[0] - sigma * z[0]), float(sigma))
    return out


def curves_csv(matched: dict, t) -> str:
    """CSV rows ``t, F_weibull, F_lognormal, F_frechet``."""
    fams = (LlsFamily.SEV, LlsFamily.NORMAL, LlsFamily.LEV)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"F_{f.value}" for f in fams])
    for ti in np.asarray(t, dtype=float):
        w.writerow([repr(float(ti))] + [f"{float(dist.cdf(f, matched[f], ti)):.12g}" for f in fams])
    return buf.getvalue()
