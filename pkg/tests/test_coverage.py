import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from event_forecast import distributions as dist
from event_forecast.coverage import (
    SimFactors, estimate_v1, exclusion_probability, lambda_asymptotic, lambda_closed_form,
    match_distributions, run_coverage_study, v1_from_estimates, weibull_with_quantile,
)
from event_forecast.coverage.dist_compare import curves_csv
from event_forecast.distributions import LlsFamily
from event_forecast.exceptions import DomainError

SEV, NOR, LEV = LlsFamily.SEV, LlsFamily.NORMAL, LlsFamily.LEV


# Study ---------------------------------------------------------------------

def test_factor_derivations():
    f = SimFactors(0.2, 45, 0.2)
    assert f.n == 225 and f.p_true == pytest.approx(0.25)
    assert float(dist.cdf(SEV, f.params, f.t_c)) == pytest.approx(0.2)
    assert float(dist.cdf(SEV, f.params, f.t_w)) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        SimFactors(0.5, 5, 0.6)
    with pytest.raises(DomainError):
        SimFactors(0.2, 0.1, 0.2)


def test_exclusion_fraction_small_design():
    f = SimFactors(0.05, 5, 0.2, N=2000, methods=("plugin",), master_seed=1)
    res = run_coverage_study(f)
    assert exclusion_probability(f.n, f.p_f1) == pytest.approx(0.037, abs=5e-4)
    assert abs(res.exclusion_fraction - 0.037) <= 3 * math.sqrt(0.037 * 0.963 / f.N)


def test_no_exclusions_large_design():
    res = run_coverage_study(SimFactors(0.2, 45, 0.2, N=200, methods=("plugin",)))
    assert res.n_excluded == 0 and res.exclusion_fraction == 0.0


def test_known_p_gives_nominal_coverage():
    f = SimFactors(0.2, 45, 0.2, N=300, methods=("plugin",), known_p=True)
    res = run_coverage_study(f)
    for row in res.rows:
        # Discreteness makes the bounds conservative, never anticonservative.
        assert row.coverage >= row.nominal - 1e-12
        assert row.coverage <= row.nominal + 0.05


def test_study_is_reproducible():
    f = SimFactors(0.2, 45, 0.2, N=6, B=40, master_seed=5)
    a, b = run_coverage_study(f), run_coverage_study(f)
    assert a.to_csv() == b.to_csv()
    for k in a.conditional:
        assert np.array_equal(a.conditional[k], b.conditional[k])
    c = run_coverage_study(SimFactors(0.2, 45, 0.2, N=6, B=40, master_seed=6))
    assert a.to_csv() != c.to_csv()


def test_csv_and_paired_difference():
    f = SimFactors(0.2, 45, 0.2, N=8, B=40, methods=("plugin", "direct"))
    res = run_coverage_study(f)
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("p_f1,expected_events,d,beta,n,method")
    assert len(lines) == 1 + 2 * 2 * 2
    mean, se = res.difference(("direct", 0.05, "upper"), ("plugin", 0.05, "upper"))
    assert mean == pytest.approx(res.coverage("direct", 0.05, "upper") - res.coverage("plugin", 0.05, "upper"))
    assert se >= 0


# Asymptotics -----------------------------------------------------------

def test_lambda_examples():
    assert lambda_asymptotic(0, 0.05) == 0.95
    assert abs(lambda_asymptotic(1e6, 0.05) - 0.5) < 1e-3
    assert lambda_asymptotic(1, 0.05) == pytest.approx(0.8776, abs=1e-4)
    with pytest.raises(DomainError):
        lambda_asymptotic(-1, 0.05)


@given(st.floats(0, 1e4), st.floats(0.001, 0.999))
def test_lambda_quadrature_matches_closed_form(v1, alpha):
    assert abs(lambda_asymptotic(v1, alpha) - lambda_closed_form(v1, alpha)) <= 1e-8


def test_lambda_monotone_in_v1():
    grid = np.linspace(0.1, 10, 100)
    lo = [lambda_asymptotic(v, 0.05) for v in grid]
    hi = [lambda_asymptotic(v, 0.95) for v in grid]
    assert np.all(np.diff(lo) < 0) and np.all(np.diff(hi) > 0)
    assert all(0.5 <= x < 0.95 for x in lo)


def test_v1_degenerate_and_scaling():
    est = v1_from_estimates(np.full(100, 0.25), 0.25, 500, 0.2)
    assert est.v1 == 0 and est.se == 0
    f = SimFactors(0.2, 45, 0.2)
    a = estimate_v1(f, M=2000, seed=1)
    b = estimate_v1(f, M=2000, seed=2, n=2 * f.n)
    assert a.v1 > 0 and a.M == 2000
    assert abs(a.v1 - b.v1) <= 3 * math.hypot(a.se, b.se)
    assert 0 < a.lambda_se(0.05) < 0.05


# Distribution comparison --------------------------------------------------

def test_matched_lognormal_example():
    base = weibull_with_quantile(2.0, 0.01, 1.0)
    m = match_distributions(base, 0.01, 0.05)
    assert m[NOR].mu == pytest.approx(2.7821, abs=1e-4)
    assert m[NOR].sigma == pytest.approx(1.1959, abs=1e-4)
    assert float(dist.cdf(NOR, m[NOR], 1.0)) == pytest.approx(0.01, abs=1e-12)
    t05 = float(dist.quantile(SEV, base, 0.05))
    assert t05 == pytest.approx(2.2591, abs=1e-4)


@given(st.floats(0.5, 5), st.floats(0.001, 0.1), st.floats(0.02, 0.3))
def test_matched_curves_cross_and_order(beta, q_low, gap):
    q_high = min(q_low + gap, 0.5)
    base = weibull_with_quantile(beta, q_low, 1.0)
    m = match_distributions(base, q_low, q_high)
    for fam in (NOR, LEV):
        for q in (q_low, q_high):
            t = float(dist.quantile(SEV, base, q))
            assert float(dist.cdf(fam, m[fam], t)) == pytest.approx(q, abs=1e-9)
    t_far = float(dist.quantile(SEV, base, q_high)) * np.array([1.5, 3.0, 10.0])
    w, ln, fr = (np.asarray(dist.cdf(f, m[f], t_far)) for f in (SEV, NOR, LEV))
    assert np.all(w >= ln) and np.all(ln >= fr)


def test_singular_matching_and_csv():
    base = weibull_with_quantile(2.0, 0.01, 1.0)
    with pytest.raises(DomainError, match="singular"):
        match_distributions(base, 0.05, 0.05)
    text = curves_csv(match_distributions(base), [1.0, 2.0])
    assert text.startswith("t,F_")
    assert len(text.splitlines()) == 3


@pytest.mark.slow
def test_large_sample_coverage_matches_limit():
    f = SimFactors(0.2, 2000, 0.2, N=1000, methods=("plugin",), alphas=(0.05,), sides="upper")
    assert f.n == 10_000
    row = run_coverage_study(f).find("plugin", 0.05, "upper")
    v1 = estimate_v1(f, M=2000)
    lam = lambda_asymptotic(v1.v1, 0.05)
    assert abs(row.coverage - lam) <= 3 * math.hypot(row.se, v1.lambda_se(0.05))
