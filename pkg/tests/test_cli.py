import io
import json

import pytest

from event_forecast import prediction as pr
from event_forecast.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_predict_plugin_table():
    code, text = run("predict", "--data", "heat-exchanger", "--family", "weibull",
                     "--method", "plugin", "--alpha", "0.05,0.10", "--window", "7")
    assert code == 0
    p_hat = float(text.split("p_hat=")[1].split()[0])
    assert p_hat == pytest.approx(0.00797, abs=1e-4)
    _, js = run("predict", "--data", "heat-exchanger", "--method", "plugin", "--window", "7",
                "--format", "json")
    lib = pr.plugin_bounds(19992, json.loads(js)["p_hat"][0], (0.05, 0.10))
    rows = [line.split() for line in text.splitlines()[2:]]
    assert [r[:2] for r in rows] == [["95%", "lower"], ["90%", "lower"], ["90%", "upper"], ["95%", "upper"]]
    got = [int(r[2]) for r in rows]
    assert got == [lib.get("plugin", 0.05, "lower"), lib.get("plugin", 0.10, "lower"),
                   lib.get("plugin", 0.10, "upper"), lib.get("plugin", 0.05, "upper")]


def test_fit_json():
    code, text = run("fit", "--data", "heat-exchanger", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    assert doc["schema"] == 1
    assert doc["fit"]["beta"] == pytest.approx(2.531, abs=0.005)
    assert doc["fit"]["eta"] == pytest.approx(66.058, abs=0.1)
    code, text = run("fit", "--data", "heat-exchanger")
    assert "2.531" in text and "66.0" in text


def test_missing_data_is_usage_error(capsys):
    code, _ = run("predict", "--window", "7")
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_window_choice_is_usage_error():
    assert run("predict", "--data", "heat-exchanger", "--method", "plugin")[0] == 2


def test_bad_inputs_exit_three(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("cohort,kind,t1,t2,count\nA,exact,-1,,1\n")
    assert run("fit", "--data", str(bad))[0] == 3
    assert run("fit", "--data", "no-such-thing")[0] == 3
    assert run("predict", "--data", "heat-exchanger", "--window", "7", "--alpha", "0.7",
               "--method", "plugin")[0] == 3
    assert "error[" in capsys.readouterr().err


def test_thread_env_is_validated(monkeypatch):
    monkeypatch.setenv("EVENT_FORECAST_THREADS", "zero")
    assert run("datasets")[0] == 2
    monkeypatch.setenv("EVENT_FORECAST_THREADS", "2")
    code, text = run("datasets")
    assert code == 0 and "heat-exchanger" in text


def test_json_is_byte_identical_and_dump(tmp_path):
    argv = ["predict", "--data", "bearing-cage", "--window", "300", "--bootstrap", "200",
            "--seed", "8", "--format", "json"]
    a, b = run(*argv), run(*argv)
    assert a[0] == 0 and a[1] == b[1]
    doc = json.loads(a[1])
    assert doc["bootstrap"]["B"] == 200
    assert {r["method"] for r in doc["bounds"]} == set(pr.METHODS)
    dump = tmp_path / "reps.csv"
    assert run(*argv, "--dump-replicates", str(dump))[0] == 0
    assert len(dump.read_text().splitlines()) == 201


def test_table_numbers_appear_in_json():
    base = ["predict", "--data", "bearing-cage", "--window", "300", "--bootstrap", "200", "--seed", "2"]
    _, table = run(*base)
    _, js = run(*base, "--format", "json")
    values = {str(r["bound"]) for r in json.loads(js)["bounds"] if r["bound"] is not None}
    for line in table.splitlines()[2:]:
        for cell in line.split()[2:]:
            assert cell == "NA" or cell in values


def test_simulate_compare_and_asymptotics():
    code, text = run("simulate", "--pf1", "0.2", "--er", "45", "--d", "0.2", "--n-sim", "5",
                     "--bootstrap", "30", "--methods", "plugin,direct")
    assert code == 0 and len(text.splitlines()) == 1 + 2 * 2 * 2
    code, text = run("compare-dist", "--points", "5")
    assert code == 0 and text.startswith("t,F_") and len(text.splitlines()) == 6
    code, text = run("asymptotics", "--v1", "0,1", "--alpha", "0.05", "--format", "json")
    rows = json.loads(text)["rows"]
    assert rows[0]["lambda"] == pytest.approx(0.95) and rows[1]["lambda"] == pytest.approx(0.8776, abs=1e-4)
