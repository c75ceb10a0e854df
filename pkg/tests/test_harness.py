import io
import json

import numpy as np
import pytest

from cran_dimred import harness as hx
from cran_dimred.channel import SystemConfig
from cran_dimred.cli import main
from cran_dimred.errors import ValidationError


def small(scenario, **kw):
    kw.setdefault("trials", 3)
    kw.setdefault("seed", 5)
    return hx.ExperimentConfig(scenario=scenario, **kw)


def test_config_invariants():
    with pytest.raises(ValidationError):
        small("SumRateVsN", trials=0)
    with pytest.raises(ValidationError):
        small("SumRateVsN", sweep=[])
    with pytest.raises(ValidationError):
        small("SumRateVsN", methods=[])
    with pytest.raises(ValidationError):
        small("Nope")
    with pytest.raises(ValidationError):
        small("SumRateVsN", sweep=[0])
    with pytest.raises(ValidationError):
        small("FronthaulVsT", methods=["cklt"])


def test_config_dict_round_trip():
    ecfg = small("OutageVsN", sweep=[2, 3], threshold_bits=3.0)
    again = hx.ExperimentConfig.from_dict(json.loads(json.dumps(ecfg.to_dict())))
    assert again == ecfg


def test_deterministic_rows():
    ecfg = small("SumRateVsN", sweep=[2, 3], trials=1)
    assert hx.run_experiment(ecfg) == hx.run_experiment(ecfg)


def test_worker_count_independent(monkeypatch):
    ecfg = small("SumRateVsN", sweep=[2, 4], trials=6)
    serial = hx.run_experiment(ecfg, workers=1)
    monkeypatch.setenv("DIMRED_THREADS", "2")
    assert hx.worker_count() == 2
    assert hx.run_experiment(ecfg) == serial


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("DIMRED_THREADS", raising=False)
    assert hx.worker_count() == 1
    monkeypatch.setenv("DIMRED_THREADS", "0")
    assert hx.worker_count() >= 1
    monkeypatch.setenv("DIMRED_THREADS", "x")
    with pytest.raises(ValidationError):
        hx.worker_count()


def test_full_dimension_is_lossless():
    rows = hx.run_experiment(small("SumRateVsN", sweep=[8], methods=["full", "cklt"], trials=4))
    assert hx.lookup(rows, "cklt", 8, "delta").mean <= 1e-9
    assert hx.lookup(rows, "full", 8, "delta").mean == 0.0


def test_stderr_definition():
    ecfg = small("SumRateVsN", sweep=[3], methods=["cklt"], trials=5)
    per_trial = [v[("cklt", 3.0, "sum_rate")] for v, _ in hx.collect_trials(ecfg)]
    row = hx.lookup(hx.aggregate(ecfg, hx.collect_trials(ecfg)), "cklt", 3, "sum_rate")
    assert row.mean == pytest.approx(np.mean(per_trial))
    assert row.stderr == pytest.approx(np.std(per_trial, ddof=1) / np.sqrt(5))
    assert row.trials == 5 and row.seed == 5


@pytest.mark.parametrize("scenario", hx.SCENARIOS)
def test_every_scenario_runs(scenario):
    base = SystemConfig()
    kw = {}
    if scenario == "DensityScaling":
        kw["sweep"] = [8, 16]
    elif scenario == "SumRateVsM":
        kw["sweep"] = [3, 6]
    elif scenario in ("SumRateVsN", "UserRateVsN", "OutageVsN", "DownlinkVsN"):
        kw["sweep"] = [1, 3]
    rows = hx.run_experiment(small(scenario, base=base, trials=2, **kw))
    assert rows and all(r.scenario == scenario for r in rows)
    assert all(np.isfinite(r.mean) and r.stderr >= 0 for r in rows)


def test_downlink_infeasible_is_reported():
    rows = hx.run_experiment(small("DownlinkVsN", sweep=[1, 2], methods=["cklt"], trials=2))
    assert hx.lookup(rows, "cklt", 1, "infeasible").mean == 1.0
    with pytest.raises(KeyError):
        hx.lookup(rows, "cklt", 1, "user_rate")
    assert hx.lookup(rows, "cklt", 2, "user_rate").mean > 0


def test_doubling_trials_is_stable():
    ecfg = small("SumRateVsN", sweep=list(range(1, 9)), trials=200, seed=3)
    results = hx.collect_trials(ecfg)
    half = hx.aggregate(ecfg, results[:100])
    full = {(r.method, r.param, r.metric): r for r in hx.aggregate(ecfg, results)}
    ok = [abs(full[(r.method, r.param, r.metric)].mean - r.mean) < 3 * r.stderr or r.stderr == 0
          for r in half]
    assert np.mean(ok) >= 0.99


# ---------------------------------------------------------------- CSV


def _rows(n, rng):
    return [hx.ResultRow("SumRateVsN", f"m{i % 3}", float(i), "sum_rate", float(rng.standard_normal()),
                         float(rng.uniform()), 10, 2 ** 63 + i) for i in range(n)]


def test_csv_empty(tmp_path):
    p = tmp_path / "e.csv"
    hx.emit_csv([], p)
    assert p.read_text() == ",".join(hx.CSV_HEADER) + "\n"
    assert hx.read_csv(p) == []


def test_csv_one_row(tmp_path, rng):
    p = tmp_path / "one.csv"
    rows = _rows(1, rng)
    hx.emit_csv(rows, p)
    assert len(p.read_text().splitlines()) == 2
    assert hx.read_csv(p) == rows


def test_csv_round_trip_full_precision(tmp_path, rng):
    p = tmp_path / "many.csv"
    rows = _rows(1000, rng)
    hx.emit_csv(rows, p)
    assert hx.read_csv(p) == hx.sort_rows(rows)


def test_csv_unwritable(tmp_path):
    with pytest.raises(OSError):
        hx.emit_csv([], tmp_path / "missing" / "x.csv")


# ---------------------------------------------------------------- CLI


def test_cli_writes_csv(tmp_path):
    out = tmp_path / "out.csv"
    dump = tmp_path / "trials.csv"
    code = main(["sumrate-vs-n", "--users", "8", "--rrhs", "4", "--antennas", "8", "--snr-db", "5",
                 "--dims", "2,3", "--trials", "2", "--seed", "7", "--methods", "cklt,antred",
                 "--out", str(out), "--dump-trials", str(dump)])
    assert code == 0
    rows = hx.read_csv(out)
    assert {r.method for r in rows} == {"cklt", "antred"} and {r.param for r in rows} == {2.0, 3.0}
    assert dump.read_text().startswith("trial,method,param,metric,value\n")


def test_cli_stdout(capsys):
    assert main(["fronthaul", "--coherence", "20,100"]) == 0
    text = capsys.readouterr().out
    assert text.startswith(",".join(hx.CSV_HEADER))
    assert "decentralised" in text


def test_cli_negative_db_list(capsys):
    assert main(["csi-sweep", "--csi-db", "-10,20", "--trials", "1", "--methods", "cklt"]) == 0
    rows = list(io.StringIO(capsys.readouterr().out))
    assert len(rows) == 3


@pytest.mark.parametrize("argv", [
    ["sumrate-vs-n", "--dims", "0"],
    ["sumrate-vs-n", "--bogus"],
    ["nosuch"],
    [],
    ["outage", "--trials", "0"],
    ["sumrate-vs-n", "--methods", "nope"],
])
def test_cli_validation_exit_code(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_cli_io_errors(tmp_path, capsys):
    assert main(["fronthaul", "--config", str(tmp_path / "absent.json")]) == 2
    assert main(["fronthaul", "--out", str(tmp_path / "no" / "dir.csv")]) == 2


def test_cli_config_defaults_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 2, "seed": 4, "methods": ["cklt"], "sweep": [2],
                               "base": {"rho": 10.0}}))
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sumrate-vs-n", "--config", str(cfg), "--out", str(out_a)]) == 0
    a = hx.read_csv(out_a)
    assert {r.param for r in a} == {2.0} and a[0].trials == 2 and a[0].seed == 4
    assert main(["sumrate-vs-n", "--config", str(cfg), "--seed", "9", "--dims", "3", "--out", str(out_b)]) == 0
    b = hx.read_csv(out_b)
    assert {r.param for r in b} == {3.0} and b[0].seed == 9
