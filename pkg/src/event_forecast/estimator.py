"""Estimator-style front end: ``fit`` on censored data, ``predict`` a window."""

from __future__ import annotations

import numbers
import os
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import prediction as pr
from .bootstrap import SCHEMES, generate_replicates
from .data import BUILTINS, CensoredDataset, Cohort, Observation, builtin, load_csv
from .distributions import LlsFamily
from .exceptions import DataError, DomainError
from .likelihood import conditional_prob, fit_mle


def check_dataset(X) -> CensoredDataset:
    """Coerce ``X`` to a :class:`CensoredDataset`.

    Accepts a dataset, a builtin name, a CSV path, or an iterable of
    ``(cohort, kind, t1, t2, count)`` rows (``t2`` may be ``None``).
    """
    if isinstance(X, CensoredDataset):
        return X
    if isinstance(X, (str, os.PathLike)):
        if str(X) in BUILTINS:
            return builtin(str(X))
        path = Path(X)
        if not path.is_file():
            raise DataError(f"no such data file or builtin dataset: {X}")
        return load_csv(path)
    try:
        rows = list(X)
    except TypeError:
        raise DataError(f"cannot interpret {type(X).__name__} as censored data") from None
    if not rows:
        raise DataError("no observations")
    cohorts: dict = {}
    for row in rows:
        row = tuple(row)
        if len(row) not in (4, 5):
            raise DataError("rows must be (cohort, kind, t1, t2[, count])")
        t2 = row[3]
        t2 = None if t2 is None or (isinstance(t2, float) and np.isnan(t2)) else float(t2)
        count = int(row[4]) if len(row) == 5 else 1
        cohorts.setdefault(str(row[0]), []).append(Observation(str(row[1]), float(row[2]), t2, count))
    return CensoredDataset(tuple(Cohort(k, tuple(v)) for k, v in cohorts.items()))


def check_alphas(alphas) -> tuple:
    a = tuple(float(x) for x in np.atleast_1d(alphas))
    if not a or any(not 0.0 < x < 0.5 for x in a):
        raise DomainError("alpha levels must lie in (0, 0.5)")
    return a


def check_methods(methods) -> tuple:
    if isinstance(methods, str):
        methods = pr.METHODS if methods == "all" else tuple(m.strip() for m in methods.split(","))
    methods = tuple(methods)
    bad = [m for m in methods if m not in pr.METHODS]
    if bad or not methods:
        raise DomainError(f"unknown method(s) {bad}; choose from {', '.join(pr.METHODS)}")
    return methods


def check_seed(random_state) -> int:
    """Master seed from an int, ``None`` (fresh entropy) or a numpy generator."""
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    if isinstance(random_state, numbers.Integral):
        if random_state < 0:
            raise DomainError("random_state must be nonnegative")
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(2**63))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(2**31))
    raise DomainError(f"cannot use {random_state!r} as a seed")


class WithinSamplePredictor(BaseEstimator):
    """Prediction bounds for future events among the units still at risk.

    Parameters
    ----------
    family : {"weibull", "lognormal", "frechet"}
    methods : "all", a comma list, or a sequence drawn from
        ``plugin``, ``calibration``, ``direct``, ``gpq``.
    alphas : one-sided levels; each gives ``1 - alpha`` bounds.
    n_bootstrap : bootstrap size ``B`` for the resampling methods.
    random_state : master seed (int), ``None`` or a numpy generator.
    scheme : ``"type1"`` (exact lifetimes censored at each cohort's
        censoring time) or ``"inspection"`` (binned into the observed
        inspection intervals).

    Attributes
    ----------
    dataset_, fit_, params_, bootstrap_ (``None`` when only plug-in is
    requested), seed_.
    """

    def __init__(self, family="weibull", methods="all", alphas=(0.05, 0.10),
                 n_bootstrap=10_000, random_state=0, scheme="type1"):
        self.family = family
        self.methods = methods
        self.alphas = alphas
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state
        self.scheme = scheme

    def fit(self, X, y=None):
        family = LlsFamily.from_name(self.family)
        methods = check_methods(self.methods)
        check_alphas(self.alphas)
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        data = check_dataset(X)
        self.dataset_ = data
        self.family_ = family
        self.methods_ = methods
        self.seed_ = check_seed(self.random_state)
        self.fit_ = fit_mle(family, data)
        self.params_ = self.fit_.params
        self.bootstrap_ = None
        if any(m != "plugin" for m in methods):
            if int(self.n_bootstrap) < 1:
                raise DomainError("n_bootstrap must be positive")
            self.bootstrap_ = generate_replicates(family, self.fit_, data, int(self.n_bootstrap),
                                                  self.seed_, scheme=self.scheme)
        return self

    def _task(self, delta, t_w, sides):
        return pr.PredictionTask(delta=delta, t_w=t_w, alphas=check_alphas(self.alphas), sides=sides)

    def conditional_probs(self, delta=None, t_w=None) -> np.ndarray:
        """Estimated per-cohort chance that a survivor fails in the window."""
        check_is_fitted(self, "fit_")
        tw = self._task(delta, t_w, "both").window_ends(self.dataset_)
        return np.atleast_1d(conditional_prob(self.family_, self.params_, self.dataset_.censor_times, tw))

    def predict(self, delta=None, t_w=None, sides="both") -> pr.BoundSet:
        """Bounds for the count in the window ``delta`` (or ending at ``t_w``)."""
        check_is_fitted(self, "fit_")
        task = self._task(delta, t_w, sides)
        data, run = self.dataset_, self.bootstrap_
        out = pr.BoundSet()
        for m in self.methods_:
            if m == "plugin":
                out.extend(pr.plugin_for(self.fit_, data, task, self.family_))
            elif m == "calibration":
                out.extend(pr.calibration_bounds(self.fit_, data, run, task))
            elif m == "direct":
                out.extend(pr.direct_bounds(run, data, task)[1])
            else:
                out.extend(pr.gpq_bounds(self.fit_, run, data, task)[1])
        return out

    def predictive_distribution(self, method="direct", delta=None, t_w=None):
        """Bootstrap predictive distribution (``direct`` or ``gpq``)."""
        check_is_fitted(self, "fit_")
        if self.bootstrap_ is None:
            raise DomainError("fit with a bootstrap method to get a predictive distribution")
        task = self._task(delta, t_w, "both")
        if method == "direct":
            return pr.direct_bounds(self.bootstrap_, self.dataset_, task)[0]
        if method == "gpq":
            return pr.gpq_bounds(self.fit_, self.bootstrap_, self.dataset_, task)[0]
        raise DomainError("predictive distributions exist for direct and gpq only")
