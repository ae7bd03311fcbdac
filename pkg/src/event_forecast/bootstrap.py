"""Parametric bootstrap that keeps the censoring layout of the data.

Replicate ``b`` draws from its own counter-based stream keyed by
``(master_seed, b)``, so the simulated samples do not depend on chunking
or execution order.  Refits are bit-identical for a fixed chunk size; a
different chunk size can move estimates within the optimizer tolerance.  A replicate whose sample is not estimable (fewer than two
events, or all events at one time / in one inspection interval) or whose
refit does not converge is redrawn from the same stream.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .data import CensoredDataset
from .distributions import LlsFamily, LlsParams, open_uniform
from .exceptions import BootstrapError
from .likelihood import FitResult, PackedData, fit_batch, initial_values, pi_vector
from .data import ObservationArrays

logger = logging.getLogger(__name__)

SCHEMES = ("type1", "inspection")
CHUNK = 4096
MAX_REGEN_FACTOR = 10


def replicate_rng(master_seed: int, index, *prefix: int) -> np.random.Generator:
    """Philox stream for replicate ``index`` (optionally nested under ``prefix``)."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(*prefix, int(index)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class BootstrapReplicate:
    index: int
    params_star: LlsParams
    events_star: tuple
    p_star: tuple | None = None


@dataclass
class BootstrapRun:
    """Bootstrap estimates ``(mu*, sigma*)`` and event counts ``r*`` per cohort."""

    family: LlsFamily
    fitted: FitResult
    mu_star: np.ndarray
    sigma_star: np.ndarray
    events_star: np.ndarray          # (B, S)
    sizes: np.ndarray                # (S,) n_s
    censor_times: np.ndarray         # (S,) t_c^s
    master_seed: int
    regenerated_count: int = 0
    failures: dict = field(default_factory=dict)
    scheme: str = "type1"

    @property
    def B(self) -> int:
        return len(self.mu_star)

    def p_star(self, t_w) -> np.ndarray:
        """``pi_s(theta*_b)`` as a ``(B, S)`` array for window ends ``t_w``."""
        return pi_vector(self.family, self.mu_star, self.sigma_star, self.censor_times, t_w)

    def at_risk_star(self) -> np.ndarray:
        """Bootstrap risk-set weights ``n_s - r*_s``, shape ``(B, S)``."""
        return self.sizes[None, :] - self.events_star

    def replicates(self, t_w=None) -> list[BootstrapReplicate]:
        ps = self.p_star(t_w) if t_w is not None else None
        return [
            BootstrapReplicate(
                b, LlsParams(float(self.mu_star[b]), float(self.sigma_star[b])),
                tuple(int(r) for r in self.events_star[b]),
                None if ps is None else tuple(float(p) for p in ps[b]),
            )
            for b in range(self.B)
        ]

    def to_csv(self, t_w) -> str:
        ps = self.p_star(t_w)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "mu_star", "sigma_star", "r_star_total"]
                   + [f"p_star_{s + 1}" for s in range(ps.shape[1])])
        for b in range(self.B):
            w.writerow([b, repr(float(self.mu_star[b])), repr(float(self.sigma_star[b])),
                        int(self.events_star[b].sum())] + [repr(float(p)) for p in ps[b]])
        return buf.getvalue()


class _Layout:
    """Per-cohort simulation recipe derived from the observed data."""

    def __init__(self, family: LlsFamily, params: LlsParams, data: CensoredDataset, scheme: str):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.family = family
        self.params = params
        self.sizes = data.sizes
        self.tc = data.censor_times
        self.S = len(self.sizes)
        self.log_tc = np.log(self.tc)
        self.F_tc = np.array([float(dist.cdf(family, params, t)) for t in self.tc])
        # Inspection bins per cohort (edges include 0 and t_c); None = exact times.
        self.bins = []
        for c in data.cohorts:
            if scheme == "inspection" and c.is_interval:
                edges = np.union1d(np.append(c.inspection_edges, 0.0), [c.censor_time])
                edges = edges[edges <= c.censor_time]
                cdf = np.concatenate([[0.0], dist.cdf(family, params, edges[1:])])
                probs = np.append(np.diff(cdf), 1.0 - cdf[-1])
                self.bins.append((edges, np.clip(probs, 0.0, 1.0) / np.clip(probs, 0, 1).sum()))
            else:
                self.bins.append(None)

    def draw(self, rng: np.random.Generator):
        """One bootstrap sample: ``(r per cohort, exact times list, interval rows)``."""
        r = np.zeros(self.S, dtype=np.int64)
        exact, intervals = [], []
        for s in range(self.S):
            if self.bins[s] is None:
                k = int(rng.binomial(self.sizes[s], self.F_tc[s]))
                if k:
                    u = open_uniform(rng, k) * self.F_tc[s]
                    z = self.family.std_ppf(u)
                    exact.append(self.params.mu + self.params.sigma * z)
                r[s] = k
            else:
                edges, probs = self.bins[s]
                counts = rng.multinomial(self.sizes[s], probs)
                for j in range(len(edges) - 1):
                    if counts[j]:
                        intervals.append((edges[j], edges[j + 1], counts[j]))
                r[s] = counts[:-1].sum()
        ey = np.concatenate(exact) if exact else np.empty(0)
        return r, ey, intervals

    @staticmethod
    def estimable(r, ey, intervals) -> bool:
        if r.sum() < 2:
            return False
        distinct = len(np.unique(ey)) + len({(a, b) for a, b, _ in intervals})
        return distinct >= 2


def _pack(layout: _Layout, samples) -> PackedData:
    nb = len(samples)
    ke = max((len(ey) for _, ey, _ in samples), default=0)
    ki = max((len(iv) for _, _, iv in samples), default=0)
    ey = np.zeros((nb, ke))
    ew = np.zeros((nb, ke))
    ry = np.broadcast_to(layout.log_tc, (nb, layout.S)).copy()
    rw = np.zeros((nb, layout.S))
    lo = np.zeros((nb, ki))
    hi = np.ones((nb, ki))
    iw = np.zeros((nb, ki))
    for i, (r, y, iv) in enumerate(samples):
        ey[i, :len(y)] = y
        ew[i, :len(y)] = 1.0
        rw[i] = layout.sizes - r
        for j, (a, b, c) in enumerate(iv):
            with np.errstate(divide="ignore"):
                lo[i, j] = np.log(a)
            hi[i, j] = np.log(b)
            iw[i, j] = c
    return PackedData(ey, ew, ry, rw, lo, hi, iw)


def _fallback_starts(layout: _Layout, sample) -> np.ndarray:
    r, ey, iv = sample
    t = np.exp(ey)
    arrays = ObservationArrays(
        t, np.ones_like(t), layout.tc, (layout.sizes - r).astype(float),
        np.array([a for a, _, _ in iv], dtype=float), np.array([b for _, b, _ in iv], dtype=float),
        np.array([c for _, _, c in iv], dtype=float),
    )
    return np.array(initial_values(layout.family, arrays, float(layout.sizes.sum())))


def _fit_samples(layout: _Layout, samples, warm: np.ndarray):
    """Refit a chunk: warm start first, then the three data-driven starts."""
    packed = _pack(layout, samples)
    nb = len(samples)
    starts = np.broadcast_to(warm, (nb, 2)).copy()
    x, ll, ok = fit_batch(layout.family, packed, starts)
    bad = np.nonzero(~ok)[0]
    if bad.size:
        st = np.concatenate([_fallback_starts(layout, samples[i]) for i in bad])
        rows = np.repeat(bad, 3)
        x2, ll2, ok2 = fit_batch(layout.family, packed, st, rows=rows)
        ll2 = np.where(ok2, ll2, -np.inf).reshape(-1, 3)
        pick = np.argmax(ll2, axis=1)
        good = np.isfinite(ll2[np.arange(len(bad)), pick])
        x2 = x2.reshape(-1, 3, 2)[np.arange(len(bad)), pick]
        x[bad[good]] = x2[good]
        ok[bad[good]] = True
    return x, ok


def generate_replicates(family, fitted: FitResult, data: CensoredDataset, B: int,
                        master_seed: int, scheme: str = "type1", chunk: int = CHUNK,
                        seed_prefix: tuple = ()) -> BootstrapRun:
    """Parametric bootstrap of ``data`` under ``fitted``.

    ``scheme="type1"`` simulates exact lifetimes censored at each cohort's
    censoring time; ``"inspection"`` instead bins lifetimes of
    interval-censored cohorts into that cohort's inspection intervals.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    family = LlsFamily.from_name(family)
    layout = _Layout(family, fitted.params, data, scheme)
    warm = np.array([fitted.params.mu, np.log(fitted.params.sigma)])
    mu = np.empty(B)
    sigma = np.empty(B)
    events = np.empty((B, layout.S), dtype=np.int64)
    regenerated = 0
    failures = {"not_estimable": 0, "no_convergence": 0}
    budget = MAX_REGEN_FACTOR * B

    for start in range(0, B, chunk):
        idx = np.arange(start, min(start + chunk, B))
        rngs = [replicate_rng(master_seed, b, *seed_prefix) for b in idx]
        pending = list(range(len(idx)))
        samples = [None] * len(idx)
        while pending:
            for i in pending:
                while True:
                    smp = layout.draw(rngs[i])
                    if _Layout.estimable(*smp):
                        break
                    regenerated += 1
                    failures["not_estimable"] += 1
                    if regenerated > budget:
                        raise BootstrapError(
                            f"more than {budget} bootstrap samples regenerated "
                            f"({failures}); data too sparse for the bootstrap"
                        )
                samples[i] = smp
            x, ok = _fit_samples(layout, [samples[i] for i in pending], warm)
            for j, i in enumerate(pending):
                if ok[j]:
                    mu[idx[i]] = x[j, 0]
                    sigma[idx[i]] = np.exp(x[j, 1])
                    events[idx[i]] = samples[i][0]
            failed = [i for j, i in enumerate(pending) if not ok[j]]
            regenerated += len(failed)
            failures["no_convergence"] += len(failed)
            if regenerated > budget:
                raise BootstrapError(
                    f"more than {budget} bootstrap samples regenerated ({failures})"
                )
            pending = failed
    if regenerated:
        logger.info("bootstrap regenerated %d samples: %s", regenerated, failures)
    return BootstrapRun(family, fitted, mu, sigma, events, layout.sizes.copy(),
                        layout.tc.copy(), int(master_seed), regenerated, failures, scheme)
