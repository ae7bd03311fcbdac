"""Log-location-scale lifetime families.

A lifetime ``T`` belongs to the family when ``log T = mu + sigma * Z`` and
``Z`` has a fixed standard cdf ``Phi``.  Three members are supported:

=========  ==============================  =====================
name       standard cdf of ``Z``            lifetime distribution
=========  ==============================  =====================
weibull    smallest extreme value (SEV)     Weibull
lognormal  standard normal                  lognormal
frechet    largest extreme value (LEV)      Frechet
=========  ==============================  =====================

All internal work happens in ``(mu, sigma)``; the Weibull ``(eta, beta)``
view is only offered at the API boundary through :class:`LlsParams`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import DomainError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class LlsFamily(enum.Enum):
    SEV = "weibull"
    NORMAL = "lognormal"
    LEV = "frechet"

    @classmethod
    def from_name(cls, name: "str | LlsFamily") -> "LlsFamily":
        if isinstance(name, LlsFamily):
            return name
        key = str(name).strip().lower()
        aliases = {
            "weibull": cls.SEV, "sev": cls.SEV,
            "lognormal": cls.NORMAL, "normal": cls.NORMAL,
            "frechet": cls.LEV, "fréchet": cls.LEV, "lev": cls.LEV,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(
                f"unknown family {name!r}; expected one of weibull, lognormal, frechet"
            ) from None

    # Standard (location 0, scale 1) functions on the log-time scale.

    def std_cdf(self, z):
        z = np.asarray(z, dtype=float)
        if self is LlsFamily.SEV:
            return -np.expm1(-np.exp(z))
        if self is LlsFamily.NORMAL:
            return special.ndtr(z)
        return np.exp(-np.exp(-z))

    def std_logcdf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self is LlsFamily.SEV:
                return np.log(-np.expm1(-np.exp(z)))
            if self is LlsFamily.NORMAL:
                return special.log_ndtr(z)
            return -np.exp(-z)

    def std_logsf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self is LlsFamily.SEV:
                return -np.exp(z)
            if self is LlsFamily.NORMAL:
                return special.log_ndtr(-z)
            return np.log(-np.expm1(-np.exp(-z)))

    def std_logpdf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore"):
            if self is LlsFamily.SEV:
                return z - np.exp(z)
            if self is LlsFamily.NORMAL:
                return -0.5 * z * z - _LOG_SQRT_2PI
            return -z - np.exp(-z)

    def std_ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self is LlsFamily.SEV:
            return np.log(-np.log1p(-q))
        if self is LlsFamily.NORMAL:
            return special.ndtri(q)
        return -np.log(-np.log(q))


@dataclass(frozen=True)
class LlsParams:
    """Location ``mu`` and scale ``sigma`` of ``log T``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")

    @classmethod
    def from_weibull(cls, eta: float, beta: float) -> "LlsParams":
        return cls(mu=math.log(eta), sigma=1.0 / beta)

    @property
    def eta(self) -> float:
        return math.exp(self.mu)

    @property
    def beta(self) -> float:
        return 1.0 / self.sigma

    def as_tuple(self) -> tuple[float, float]:
        return (self.mu, self.sigma)


def _standardize(params: LlsParams, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(np.isnan(t)):
        raise DomainError("lifetimes must be positive")
    return (np.log(t) - params.mu) / params.sigma


def cdf(family, params: LlsParams, t):
    """``F(t) = Phi((log t - mu) / sigma)``."""
    family = LlsFamily.from_name(family)
    return family.std_cdf(_standardize(params, t))


def sf(family, params: LlsParams, t):
    family = LlsFamily.from_name(family)
    return np.exp(family.std_logsf(_standardize(params, t)))


def pdf(family, params: LlsParams, t):
    family = LlsFamily.from_name(family)
    t = np.asarray(t, dtype=float)
    z = _standardize(params, t)
    return np.exp(family.std_logpdf(z)) / (params.sigma * t)


def quantile(family, params: LlsParams, q):
    family = LlsFamily.from_name(family)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0) or np.any(q >= 1) or np.any(np.isnan(q)):
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    return np.exp(params.mu + params.sigma * family.std_ppf(q))


def sample(family, params: LlsParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-cdf draw of ``n`` lifetimes from ``rng``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    family = LlsFamily.from_name(family)
    u = open_uniform(rng, n)
    return np.exp(params.mu + params.sigma * family.std_ppf(u))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1); both endpoints map to 0 or inf times."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k + 0.5) * 2.0**-53
