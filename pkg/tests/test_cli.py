import json
import os

import pytest

from covertfading import cli, experiments
from covertfading.experiments import read_contour_csv, read_sweep_csv, read_table

SWEEP = {"master_seed": 21, "sweep": {
    "mode": "phase", "n_values": [50, 100], "block_len": 1, "rho_grid": [0.3, 0.6],
    "c": 0.03, "fading_mean": 100, "target_pfa": 0.01, "trials": 2000,
    "calibration_trials": 5000, "detectors": ["lrt", "power"]}}


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_help_lists_every_flag(capsys):
    with pytest.raises(SystemExit):
        run("sweep", "--help")
    out = capsys.readouterr().out
    for flag in ("--config", "--seed", "--workers", "--out-dir", "--preset", "--quadrature",
                 "--nodes", cli.OUT_DIR_ENV):
        assert flag in out


def test_bounds_unit_preset(tmp_path, capsys):
    assert run("bounds", "--preset", "unit", "--out-dir", tmp_path) == 0
    meta, cols, rows = read_table(tmp_path / "bounds.csv")
    values = dict(rows)
    assert cols == ["quantity", "value"]
    assert float(values["bound_ei"]) == pytest.approx(0.403653, abs=1e-6)
    assert float(values["bound_simple"]) == 0.5
    assert "config_hash" in meta and meta["master_seed"] == "1"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == {"bounds": ["bounds.csv"]}
    assert manifest["config_hash"] == meta["config_hash"]
    assert manifest["workers"] == 1 and manifest["wall_clock_seconds"] >= 0
    assert "bound_ei" in capsys.readouterr().out


def test_bounds_zero_power(tmp_path):
    cfg = {"scenario": {"n": 4, "num_blocks": 2, "fading_rate": 1.0, "alice_power": 0.0},
           "bounds": {"samples": 10000}}
    assert run("bounds", "--config", write(tmp_path, cfg), "--out-dir", tmp_path / "o") == 0
    values = dict(read_table(tmp_path / "o" / "bounds.csv")[2])
    for key in ("d_f1_f0_mc", "d_f0_f1_mc", "bound_ei", "bound_simple", "bound_quartic"):
        assert float(values[key]) == 0.0
    assert float(values["pe_floor"]) == 1.0


@pytest.mark.parametrize("text, needle", [
    ('{"scenario": {"n": 2,,}}', "cfg.json:1:"),
    ('{"scenario": {"n": 2, "num_blocks": 2, "fading_rate": 1.0, "colour": 1}}', "colour"),
    ('{"scenario": {"n": 3, "num_blocks": 2, "fading_rate": 1.0}}', "scenario"),
    ('{"scenario": {"n": 2, "num_blocks": 2, "fading_rate": "fast"}}', "fading_rate"),
    ('{"master_seed": -4, "scenario": {"n": 1, "num_blocks": 1, "fading_rate": 1}}',
     "master_seed"),
    ('[1, 2]', "object"),
])
def test_malformed_config_fails_without_output(tmp_path, capsys, text, needle):
    out = tmp_path / "out"
    assert run("bounds", "--config", write(tmp_path, text), "--out-dir", out) == cli.EXIT_CONFIG
    assert needle in capsys.readouterr().err
    assert not out.exists()


def test_unknown_preset_and_missing_section(tmp_path):
    assert run("bounds", "--preset", "fig9", "--out-dir", tmp_path / "a") == cli.EXIT_CONFIG
    assert run("sweep", "--preset", "unit", "--out-dir", tmp_path / "b") == cli.EXIT_CONFIG
    assert not (tmp_path / "a").exists() and not (tmp_path / "b").exists()


def test_contour_fig5_preset_labels(tmp_path):
    assert run("contour", "--preset", "fig5", "--out-dir", tmp_path) == 0
    _, cols, rows = read_table(tmp_path / "contour_points.csv")
    labels = {(float(r[0]), float(r[1])): r[cols.index("label")] for r in rows}
    assert labels == {(4.8, 4.8): "pd_only", (9.0, 0.2): "lrt_only"}
    meta, grid = read_contour_csv(tmp_path / "contour.csv")
    assert len(grid) == 61 * 61 and "master_seed" in meta
    assert len(read_table(tmp_path / "contour_level_set.csv")[2]) > 10


def test_sweep_is_deterministic_across_runs_and_workers(tmp_path):
    cfg = write(tmp_path, SWEEP)
    outs = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}"
        assert run("sweep", "--config", cfg, "--workers", workers, "--out-dir", out) == 0
        outs.append((out / "sweep.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    meta, rows = read_sweep_csv(tmp_path / "run0" / "sweep.csv")
    assert len(rows) == 2 * 2 * 2 and all(r.ok for r in rows)
    assert meta["master_seed"] == "21"


def test_seed_and_quadrature_overrides(tmp_path):
    cfg = write(tmp_path, SWEEP)
    assert run("sweep", "--config", cfg, "--seed", 5, "--quadrature", "laguerre", "--nodes", 32,
               "--out-dir", tmp_path / "a") == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["master_seed"] == 5
    assert manifest["config"]["quadrature"] == {"method": "laguerre", "node_count": 32}
    meta, rows = read_sweep_csv(tmp_path / "a" / "sweep.csv")
    assert meta["master_seed"] == "5" and all(r.master_seed == 5 for r in rows)


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "env"))
    assert run("bounds", "--preset", "unit") == 0
    assert (tmp_path / "env" / "bounds.csv").exists()


def test_partial_failure_exit_code(tmp_path, monkeypatch, capsys):
    real = experiments.run_cell

    def flaky(cfg, n, m, rho):
        if rho == 0.6 and n == 100:
            return [experiments._failed_row(cfg, n, m, rho, k, f"{n}:{m}:{rho!r}",
                                            ArithmeticError("boom")) for k in cfg.detectors]
        return real(cfg, n, m, rho)

    monkeypatch.setattr(experiments, "run_cell", flaky)
    code = run("sweep", "--config", write(tmp_path, SWEEP), "--out-dir", tmp_path / "o")
    assert code == cli.EXIT_FAILED_CELLS
    err = capsys.readouterr().err
    assert "2 cell(s) failed" in err and "100:100:0.6 lrt" in err
    _, rows = read_sweep_csv(tmp_path / "o" / "sweep.csv")
    assert sum(not r.ok for r in rows) == 2
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["failed_cells"]


def test_run_error_writes_nothing(tmp_path):
    cfg = {"scenario": {"n": 2, "num_blocks": 2, "fading_rate": 1.0, "alice_power": 1.0},
           "calibrate": {"target_pfa": 0.01, "trials": 1000}}
    out = tmp_path / "o"
    assert run("calibrate", "--config", write(tmp_path, cfg), "--out-dir", out) == 1
    assert not out.exists()


def test_simulate_and_calibrate_outputs_parse(tmp_path):
    assert run("simulate", "--preset", "unit", "--out-dir", tmp_path) == 0
    _, cols, rows = read_table(tmp_path / "simulate.csv")
    assert cols == ["trial", "hypothesis", "lrt", "power", "mean_threshold"]
    assert len(rows) == 2000 and {r[1] for r in rows} == {"h0", "h1"}
    assert run("calibrate", "--preset", "unit", "--out-dir", tmp_path) == 0
    _, cols, rows = read_table(tmp_path / "calibrate.csv")
    by_kind = {r[0]: r for r in rows}
    assert set(by_kind) == {"lrt", "power", "mean_threshold"}
    exact = float(by_kind["power"][cols.index("analytic_threshold")])
    assert float(by_kind["power"][cols.index("threshold")]) == pytest.approx(exact, rel=0.05)


def test_presets_resolve():
    from covertfading import config
    fig3 = config.sweep(config.preset("fig3"))
    assert fig3.n_values == (100, 1000, 10_000, 100_000) and fig3.fading_rate == 0.01
    assert len(fig3.rho_grid) == 19 and fig3.rho_grid[0] == 0.05 and fig3.rho_grid[-1] == 0.95
    fig4 = config.sweep(config.preset("fig4"))
    assert [m for _, m, _ in fig4.cells()][::19] == [10, 100, 1000]
    assert config.scenario(config.preset("fig5")).kappa == 0.5
