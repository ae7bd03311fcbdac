"""Nelder-Mead simplex search run on many independent problems at once.

Every row of the batch carries its own simplex and follows exactly the
trajectory a scalar implementation would; rows only share the vectorised
objective calls.  Results are therefore independent of how rows are
grouped into batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

RHO, CHI, GAMMA, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class SimplexResult:
    x: np.ndarray          # (B, d) best vertex
    fun: np.ndarray        # (B,)
    converged: np.ndarray  # (B,) bool, simplex diameter below xatol
    nit: np.ndarray        # (B,)


def minimize_batch(fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   x0: np.ndarray, step, xatol: float = 1e-8,
                   maxiter: int = 2000) -> SimplexResult:
    """Minimise ``fun`` independently for each row of ``x0``.

    ``fun(x, rows)`` evaluates the objective of problems ``rows`` at points
    ``x`` (shape ``(len(rows), d)``) and returns non-finite values for
    infeasible points.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    nb, d = x0.shape
    step = np.broadcast_to(np.asarray(step, dtype=float), (d,))
    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    for i in range(d):
        sim[:, i + 1, i] += step[i]
    rows_all = np.arange(nb)
    fs = np.empty((nb, d + 1))
    for i in range(d + 1):
        fs[:, i] = _eval(fun, sim[:, i], rows_all)

    nit = np.zeros(nb, dtype=np.int64)
    converged = np.zeros(nb, dtype=bool)
    active = rows_all.copy()
    while active.size:
        s, f = sim[active], fs[active]
        order = np.argsort(f, axis=1, kind="stable")
        s = np.take_along_axis(s, order[:, :, None], axis=1)
        f = np.take_along_axis(f, order, axis=1)
        diam = np.max(np.abs(s[:, 1:] - s[:, :1]), axis=(1, 2))
        done = diam <= xatol
        converged[active[done]] = True
        stop = done | (nit[active] >= maxiter)
        sim[active], fs[active] = s, f
        if stop.all():
            break
        keep = ~stop
        active, s, f = active[keep], s[keep], f[keep]
        nit[active] += 1

        worst = s[:, -1]
        cen = s[:, :-1].mean(axis=1)
        xr = cen + RHO * (cen - worst)
        fr = _eval(fun, xr, active)
        new_x, new_f = worst.copy(), f[:, -1].copy()
        shrink = np.zeros(len(active), dtype=bool)

        exp_m = fr < f[:, 0]
        if exp_m.any():
            xe = cen[exp_m] + CHI * (xr[exp_m] - cen[exp_m])
            fe = _eval(fun, xe, active[exp_m])
            take_e = fe < fr[exp_m]
            new_x[exp_m] = np.where(take_e[:, None], xe, xr[exp_m])
            new_f[exp_m] = np.where(take_e, fe, fr[exp_m])

        refl_m = (fr >= f[:, 0]) & (fr < f[:, -2])
        new_x[refl_m], new_f[refl_m] = xr[refl_m], fr[refl_m]

        out_m = (fr >= f[:, -2]) & (fr < f[:, -1])
        if out_m.any():
            xc = cen[out_m] + GAMMA * (xr[out_m] - cen[out_m])
            fc = _eval(fun, xc, active[out_m])
            ok = fc <= fr[out_m]
            idx = np.nonzero(out_m)[0]
            new_x[idx[ok]], new_f[idx[ok]] = xc[ok], fc[ok]
            shrink[idx[~ok]] = True

        in_m = ~(exp_m | refl_m | out_m)
        if in_m.any():
            xcc = cen[in_m] - GAMMA * (cen[in_m] - worst[in_m])
            fcc = _eval(fun, xcc, active[in_m])
            ok = fcc < f[in_m, -1]
            idx = np.nonzero(in_m)[0]
            new_x[idx[ok]], new_f[idx[ok]] = xcc[ok], fcc[ok]
            shrink[idx[~ok]] = True

        s[:, -1], f[:, -1] = new_x, new_f
        if shrink.any():
            idx = np.nonzero(shrink)[0]
            best = s[idx, :1]
            s[idx, 1:] = best + SHRINK * (s[idx, 1:] - best)
            for i in range(1, d + 1):
                f[idx, i] = _eval(fun, s[idx, i], active[idx])
        sim[active], fs[active] = s, f

    best = np.argmin(fs, axis=1)
    x = sim[rows_all, best]
    return SimplexResult(x=x, fun=fs[rows_all, best], converged=converged, nit=nit)


def _eval(fun, x, rows):
    v = np.asarray(fun(x, rows), dtype=float)
    return np.where(np.isfinite(v), v, np.inf)
