import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from event_forecast import data
from event_forecast.data import CensoredDataset, Cohort, Observation
from event_forecast.exceptions import DataError

HEAT_CSV = """cohort,kind,t1,t2,count
A,interval,0,1,1
A,interval,1,2,1
A,interval,2,3,6
A,right,3,,19992
"""


def test_heat_exchanger_csv():
    ds = data.read_csv(io.StringIO(HEAT_CSV))
    assert len(ds.cohorts) == 1
    assert ds.n == 20000
    assert data.event_count(ds) == ([8], 8)
    assert ds.censor_times.tolist() == [3.0]
    assert ds.at_risk.tolist() == [19992]


def test_builtins():
    assert data.heat_exchanger().n_events == 8
    bc = data.bearing_cage()
    assert bc.n_events == 6
    assert bc.n == 1703
    assert len(bc.cohorts) > 1
    assert data.product_a().n == 10000
    with pytest.raises(DataError, match="available: bearing-cage, heat-exchanger, product-a"):
        data.builtin("nope")


def test_all_right_censored_count():
    ds = CensoredDataset.type1([], 10, 5.0)
    assert data.event_count(ds) == ([0], 0)


@pytest.mark.parametrize("text, match", [
    ("", "empty"),
    ("# only a comment\n", "empty"),
    ("a,b,c\n1,2,3\n", "line 1: expected header"),
    ("cohort,kind,t1,t2,count\n", "no observations"),
    ("cohort,kind,t1,t2,count\nA,exact,1,,0\n", "line 2: count must be a positive"),
    ("cohort,kind,t1,t2,count\nA,exact,1,,1\nA,interval,3,2,1\n", "line 3: interval needs"),
    ("cohort,kind,t1,t2,count\nA,weird,1,,1\n", "line 2: kind must be"),
    ("cohort,kind,t1,t2,count\nA,exact,x,,1\n", "line 2: t1 is not a number"),
    ("cohort,kind,t1,t2,count\nA,right,2,3,1\n", "line 2: right rows take no t2"),
    ("cohort,kind,t1,t2,count\nA,exact,1,1\n", "line 2: expected 5 fields"),
    ("cohort,kind,t1,t2,count\nA,exact,-1,,1\n", "line 2: exact time must be positive"),
])
def test_parse_errors(text, match):
    with pytest.raises(DataError, match=match):
        data.read_csv(io.StringIO(text))


def test_count_column_optional_and_expands():
    ds = data.read_csv(io.StringIO("cohort,kind,t1,t2\nA,exact,1.5,\nA,right,4,\n"))
    assert ds.n == 2 and ds.n_events == 1
    ds = data.read_csv(io.StringIO("cohort,kind,t1,t2,count\nA,exact,1.5,,3\nA,right,4,,7\n"))
    assert ds.n == 10 and ds.n_events == 3


def test_cohort_censor_time_checks():
    with pytest.raises(DataError):
        Cohort("a", (Observation("exact", 5.0),), censor_time=4.0)
    c = Cohort("a", (Observation("exact", 2.0), Observation("right", 6.0, count=3)))
    assert c.censor_time == 6.0 and c.at_risk == 3


def test_duplicate_cohorts_rejected():
    c = Cohort("a", (Observation("right", 1.0),))
    with pytest.raises(DataError):
        CensoredDataset((c, c))


def test_save_load(tmp_path):
    ds = data.bearing_cage()
    path = tmp_path / "bc.csv"
    data.save_csv(ds, path)
    assert data.load_csv(path) == ds


obs_strategy = st.one_of(
    st.builds(lambda t, c: Observation("exact", t, None, c), st.floats(1e-3, 1e3), st.integers(1, 5)),
    st.builds(lambda t, c: Observation("right", t, None, c), st.floats(1e-3, 1e3), st.integers(1, 50)),
    st.builds(lambda a, w, c: Observation("interval", a, a + w, c),
              st.floats(0, 1e3), st.floats(1e-3, 1e2), st.integers(1, 5)),
)


@given(st.lists(st.lists(obs_strategy, min_size=1, max_size=6), min_size=1, max_size=4))
def test_serialize_round_trip(groups):
    ds = CensoredDataset(tuple(Cohort(f"c{i}", tuple(g)) for i, g in enumerate(groups)))
    back = data.read_csv(io.StringIO(data.to_csv(ds)))
    assert back == ds
    assert back.n == sum(c.size for c in back.cohorts)
    assert back.n_events == sum(data.event_count(back)[0])


@given(st.lists(st.floats(0.01, 10), min_size=0, max_size=20), st.integers(0, 30), st.floats(1, 100))
def test_scaled_and_replicated(times, extra, factor):
    ds = CensoredDataset.type1(times, len(times) + extra + 1, 10.0)
    sc = ds.scaled(factor)
    assert sc.n == ds.n and sc.censor_times[0] == pytest.approx(10.0 * factor)
    rep = ds.replicated(3)
    assert rep.n == 3 * ds.n and rep.n_events == 3 * ds.n_events
    np.testing.assert_allclose(sorted(sc.arrays.exact_t), sorted(np.asarray(times) * factor))
