"""Independent brute-force reference computations used by the tests."""

import itertools
import math

import numpy as np


def binom_pmf_exact(m, p):
    return [math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(m + 1)]


def poibin_pmf_enum(probs, weights):
    """Pmf by enumerating every Bernoulli outcome pattern of the units."""
    unit_p = [p for p, w in zip(probs, weights) for _ in range(w)]
    pmf = np.zeros(len(unit_p) + 1)
    for pattern in itertools.product((0, 1), repeat=len(unit_p)):
        pr = 1.0
        for x, p in zip(pattern, unit_p):
            pr *= p if x else 1 - p
        pmf[sum(pattern)] += pr
    return pmf


def cdf_from_pmf(pmf):
    return np.cumsum(pmf)


def smallest_reaching(cdf, q):
    """Smallest y with cdf[y] >= q by a linear scan."""
    for y, c in enumerate(cdf):
        if c >= q:
            return y
    return len(cdf) - 1


def lower_by_scan(cdf_fn, alpha, upper):
    """sup{y in 0..upper : cdf(y - 1) <= alpha} by exhaustive scan."""
    best = 0
    for y in range(upper + 1):
        prev = 0.0 if y == 0 else cdf_fn(y - 1)
        if prev <= alpha:
            best = y
    return best
