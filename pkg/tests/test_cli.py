import json

import pytest

from uwbcap.cli import main
from uwbcap.sweeps import recompute_csv, run_figure
from uwbcap.verify import run_verification


def _bytes(path):
    return path.read_bytes()


DESK = {
    "bandwidth_w_hz": 1e8,
    "num_paths_l": 4,
    "ppm_symbol_time_ts_s": 8e-7,
    "ppm_guard_time_s": 2e-7,
    "p_over_n0_db": 50.0,
    "duty_cycle_theta": 0.05,
}


def _desk_config(tmp_path):
    cfg = tmp_path / "desk.json"
    cfg.write_text(json.dumps(DESK))
    return str(cfg)


def _run_twice(tmp_path, argv, stem, suffixes=(".csv", ".json")):
    argv = [_desk_config(tmp_path) if a == "DESK" else a for a in argv]
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        assert main(argv + ["--out", str(d / f"{stem}.csv")]) == 0
        outs.append({s: _bytes(d / f"{stem}{s}") for s in suffixes})
    return outs


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds"],
        ["optimize-theta"],
        ["simulate", "--config", "DESK", "--trials", "3000", "--seed", "7"],
        ["figure", "fig6", "--plot", "--gnuplot"],
    ],
)
def test_reruns_are_byte_identical(tmp_path, argv, capsys):
    suffixes = (".csv", ".json", ".png", ".gp") if "--plot" in argv else (".csv", ".json")
    a, b = _run_twice(tmp_path, argv, "out", suffixes)
    assert a == b


def test_simulate_columns(tmp_path, capsys):
    assert main(["simulate", "--config", _desk_config(tmp_path), "--trials", "2000", "--out", str(tmp_path / "s.csv")]) == 0
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header.split(",")[1:] == ["ppm_error_rate", "ppm_error_rate_ci_low", "ppm_error_rate_ci_high", "union_bound"]


def test_sidecar_recomputes_rows(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sweep_parameter": "num_paths_l", "sweep_values": [1, 10, 100, 1000]}))
    out = tmp_path / "b.csv"
    assert main(["bounds", "--config", str(cfg), "--variant", "delay_exact", "--out", str(out)]) == 0
    doc = json.loads(out.with_suffix(".json").read_text())
    assert doc["variant_flags"]["delay_mode"] == "exact_entropy"
    assert recompute_csv(doc) == out.read_text()


def test_jobs_do_not_change_output(tmp_path):
    run_figure("fig5", out_path=tmp_path / "a.csv", jobs=1)
    run_figure("fig5", out_path=tmp_path / "b.csv", jobs=4)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("UWBCAP_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["bounds"]) == 0
    assert (tmp_path / "env" / "bounds.csv").exists()
    assert (tmp_path / "env" / "bounds.json").exists()


def test_fig6_summary_ordering(tmp_path):
    _, json_path, _ = run_figure("fig6", out_path=tmp_path / "f.csv")
    summary = json.loads(json_path.read_text())["summary"]
    assert summary["dsss_argmax_below_ppm_argmax"] is True


@pytest.mark.parametrize(
    "doc, key",
    [({"bandwidth_w_ghz": 20}, "bandwidth_w_ghz"), ({"num_paths_l": 0}, "num_paths_l")],
)
def test_config_errors_exit_2(tmp_path, capsys, doc, key):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
    assert key in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_figure_rejects_sweep_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sweep_parameter": "num_paths_l", "sweep_values": [1, 2]}))
    assert main(["figure", "fig3", "--config", str(cfg), "--out", str(tmp_path / "f.csv")]) == 2


def test_unwritable_output_exits_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["bounds", "--out", str(blocker / "sub" / "b.csv")]) == 2


def test_usage_errors_exit_2(capsys):
    for argv in (["figure", "fig9"], ["bounds", "--seed", "-1"], ["bounds", "--variant", "nope"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2


def test_verify_smoke_passes(tmp_path, capsys):
    assert main(["verify", "overlap", "--out", str(tmp_path / "v.json")]) == 0
    report = json.loads((tmp_path / "v.json").read_text())
    assert report["passed"] and report["complete"]


def test_verify_failure_exit_3(tmp_path, monkeypatch):
    from uwbcap import verify

    def failing(scale, seed):
        return [lambda: verify.Check("forced", False, 1.0, 0.0, "exact")]

    monkeypatch.setitem(verify.SUITES, "overlap", failing)
    _, code, _ = run_verification("overlap", out_path=tmp_path / "v.json")
    assert code == 3


def test_verify_budget_exit_4(tmp_path):
    report, code, _ = run_verification("overlap", budget_seconds=0.0, out_path=tmp_path / "v.json")
    assert code == 4
    assert report["complete"] is False and report["skipped_checks"]


def test_verify_reports_are_byte_identical(tmp_path, capsys):
    for k in range(2):
        assert main(["verify", "autocorr", "--seed", "3", "--out", str(tmp_path / f"v{k}.json")]) == 0
    assert (tmp_path / "v0.json").read_bytes() == (tmp_path / "v1.json").read_bytes()
