import functools

import pytest
from hypothesis import HealthCheck, settings

from event_forecast import data
from event_forecast.likelihood import fit_mle

settings.register_profile(
    "default", max_examples=100, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def _fitted(name):
    ds = data.builtin(name)
    return ds, fit_mle("weibull", ds)


@pytest.fixture(scope="session")
def heat():
    return _fitted("heat-exchanger")


@pytest.fixture(scope="session")
def product_a():
    return _fitted("product-a")


@pytest.fixture(scope="session")
def bearing():
    return _fitted("bearing-cage")
