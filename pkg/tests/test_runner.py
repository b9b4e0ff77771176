"""End-to-end scenario runs: artifacts on disk, determinism, comparisons."""

import dataclasses
import json

import numpy as np
import pytest

from hyperlqr import (
    ConfigError,
    KernelSpec,
    ScenarioConfig,
    ShapeSpec,
    compare_controllers,
    config_from_dict,
    run_scenario,
    with_overrides,
)
from hyperlqr.runner import (
    build_params,
    build_weights,
    resolve_output_dir,
    resolve_time_grid,
)


def small_config(**overrides):
    base = dict(
        eps1=1.0,
        eps2=1.5,
        q=0.8,
        c1=ShapeSpec(kind="constant", value=2.0),
        c2=ShapeSpec(kind="constant", value=3.0),
        R=1.0,
        Q1=KernelSpec(kind="sine_product", amplitude=4.0),
        Q2=KernelSpec(kind="sine_product", amplitude=6.0),
        Pf1=KernelSpec(kind="sine_product", amplitude=1.0),
        Pf2=KernelSpec(kind="sine_product", amplitude=2.0),
        n_cells=12,
        t_final=0.3,
        cfl=0.8,
        u0=ShapeSpec(kind="sine", amplitude=1.0),
        v0=ShapeSpec(kind="sine", amplitude=1.0),
        controller="none",
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


class TestTimeGrid:
    def test_case1_lqr_halves_the_step(self, case1):
        # the 2-D Riccati stencil needs dt <= dx / (2 max eps)
        assert resolve_time_grid(case1).n_steps == 223

    def test_case1_plain_cfl(self, case1):
        assert resolve_time_grid(with_overrides(case1, controller="none")).n_steps == 112

    def test_pinned_steps_win(self):
        config = small_config(controller="lqr", cfl=None, n_steps=9)
        tg = resolve_time_grid(config)
        assert tg.n_steps == 9
        assert tg.t_final == 0.3


class TestOutputDir:
    def test_argument_wins(self, tmp_path):
        config = small_config(output_dir=str(tmp_path / "cfg"))
        assert resolve_output_dir(config, tmp_path / "arg") == tmp_path / "arg"

    def test_config_directory_next(self, tmp_path):
        config = small_config(output_dir=str(tmp_path / "cfg"))
        assert resolve_output_dir(config) == tmp_path / "cfg"

    def test_environment_root_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HYPERLQR_OUT", str(tmp_path / "env"))
        assert resolve_output_dir(small_config()) == tmp_path / "env" / "none"

    def test_default_root(self, monkeypatch):
        monkeypatch.delenv("HYPERLQR_OUT", raising=False)
        config = small_config(controller="lqr", cfl=None, n_steps=4)
        assert resolve_output_dir(config).parts[-2:] == ("runs", "lqr")


class TestRunScenario:
    def test_zero_data_zero_cost(self, tmp_path):
        config = small_config(u0=ShapeSpec(kind="zero"), v0=ShapeSpec(kind="zero"))
        run = run_scenario(config, tmp_path)
        assert run.total_cost == 0.0
        assert run.running_cost == 0.0
        assert run.terminal_cost == 0.0
        for path in (run.u_path, run.v_path):
            _, data = read_csv(path)
            assert np.all(data[:, 1:] == 0.0)
        _, signals = read_csv(run.signals_path)
        assert np.all(signals[:, 1:] == 0.0)

    def test_artifact_files_exist_and_align(self, tmp_path):
        config = small_config()
        run = run_scenario(config, tmp_path)
        tg = resolve_time_grid(config)
        header, u = read_csv(run.u_path)
        assert header == ["t"] + [f"x{i}" for i in range(13)]
        assert u.shape == (tg.n_steps + 1, 14)
        np.testing.assert_allclose(u[:, 0], np.asarray(tg.times))
        _, signals = read_csv(run.signals_path)
        assert signals.shape == (tg.n_steps + 1, 5)
        np.testing.assert_allclose(signals[:, 2], run.norm_u, rtol=1e-12)
        assert run.gain_rows_path is None
        assert run.riccati_diag_path is None

    def test_snapshot_stride_keeps_final_level(self, tmp_path):
        config = small_config(cfl=None, n_steps=10, snapshot_stride=4)
        run = run_scenario(config, tmp_path)
        _, u = read_csv(run.u_path)
        tg = resolve_time_grid(config)
        times = np.asarray(tg.times)
        # levels 0, 4, 8 plus the always-written final level 10
        np.testing.assert_allclose(u[:, 0], times[[0, 4, 8, 10]])
        # signals.csv is never strided
        _, signals = read_csv(run.signals_path)
        assert signals.shape[0] == 11

    def test_lqr_run_writes_gain_and_diagnostics(self, tmp_path):
        run = run_scenario(small_config(controller="lqr"), tmp_path)
        header, gain = read_csv(run.gain_rows_path)
        assert header == ["t"] + [f"y{i}" for i in range(13)]
        tg_steps = gain.shape[0] - 1
        header, diag = read_csv(run.riccati_diag_path)
        assert header == ["t", "constraint_residual", "outflow_bc_residual"]
        assert diag.shape == (tg_steps + 1, 3)
        assert "riccati" in run.reports
        assert np.isfinite(run.reports["riccati"]["max_constraint_residual"])

    def test_steady_gain_rows_constant_in_time(self, tmp_path):
        run = run_scenario(small_config(controller="lqr_steady"), tmp_path)
        _, gain = read_csv(run.gain_rows_path)
        assert np.all(gain[:, 1:] == gain[0, 1:])
        assert run.riccati_diag_path is None
        assert run.reports["riccati_steady"]["residual"] < 1e-8

    def test_summary_structure(self, tmp_path):
        config = small_config(controller="lqr")
        run = run_scenario(config, tmp_path)
        summary = json.loads(run.summary_path.read_text())
        assert config_from_dict(summary["config"]) == config
        assert summary["controller"] == "lqr"
        costs = summary["costs"]
        assert costs["total"] == pytest.approx(costs["running"] + costs["terminal"])
        assert costs["total"] == pytest.approx(run.total_cost)
        assert summary["norms"]["final_u"] == pytest.approx(float(run.norm_u[-1]))
        assert summary["time_grid"]["n_steps"] == resolve_time_grid(config).n_steps
        assert set(summary["runtimes"]) == {"synthesis_s", "simulate_s", "total_s"}
        assert summary["max_abs_control"] == pytest.approx(float(np.abs(run.control).max()))

    def test_runs_are_deterministic(self, tmp_path):
        config = small_config(controller="lqr")
        run1 = run_scenario(config, tmp_path / "first")
        run2 = run_scenario(config, tmp_path / "second")
        for name in ("u_path", "v_path", "signals_path", "gain_rows_path",
                     "riccati_diag_path"):
            a = getattr(run1, name).read_bytes()
            b = getattr(run2, name).read_bytes()
            assert a == b, f"{name} differs between identical runs"

    def test_missing_artifact_rejected(self, tmp_path):
        run = run_scenario(small_config(), tmp_path)
        run.u_path.unlink()
        with pytest.raises(FileNotFoundError, match="u_path"):
            dataclasses.replace(run)

    def test_open_loop_sweep_controller(self, tmp_path):
        config = small_config(controller="open_loop_sweep", n_cells=8, t_final=0.2)
        run = run_scenario(config, tmp_path)
        assert run.reports["sweep"]["converged"] is True
        assert run.reports["sweep"]["final_gradient_max"] <= 1e-8

    def test_builders_sample_config_shapes(self):
        config = small_config()
        params = build_params(config)
        assert params.eps2 == 1.5
        assert np.all(np.asarray(params.c1.values) == 2.0)
        weights = build_weights(config)
        x = np.asarray(config.grid.nodes)
        np.testing.assert_allclose(
            np.asarray(weights.Q1.values), 4.0 * np.outer(np.sin(np.pi * x), np.sin(np.pi * x))
        )


class TestCompare:
    def test_plant_mismatch_rejected(self, tmp_path):
        a = small_config()
        b = small_config(q=0.5)
        with pytest.raises(ConfigError, match="plant data.*'q'"):
            compare_controllers(a, b, tmp_path)

    def test_unaligned_time_grids_rejected(self, tmp_path):
        a = small_config(controller="lqr")
        b = small_config(controller="none")
        with pytest.raises(ConfigError, match="pin n_steps"):
            compare_controllers(a, b, tmp_path)

    def test_self_comparison_identical_columns(self, tmp_path):
        config = small_config(cfl=None, n_steps=8)
        result = compare_controllers(config, config, tmp_path)
        header, table = read_csv(result.table_path)
        assert header == ["t", "U_a", "U_b", "norm_u_a", "norm_u_b",
                          "norm_v_a", "norm_v_b", "cum_cost_a", "cum_cost_b"]
        np.testing.assert_array_equal(table[:, 1], table[:, 2])
        np.testing.assert_array_equal(table[:, 3], table[:, 4])
        np.testing.assert_array_equal(table[:, 7], table[:, 8])
        assert (tmp_path / "a_none").is_dir()
        assert (tmp_path / "b_none").is_dir()

    def test_lqr_beats_uncontrolled_on_cost(self, tmp_path):
        # optimal feedback reduces the quadratic cost of this coupled plant
        # by roughly a quarter (measured ratio 0.7707)
        lqr = small_config(controller="lqr")
        steps = resolve_time_grid(lqr).n_steps
        none = with_overrides(small_config(), n_steps=steps)
        result = compare_controllers(lqr, none, tmp_path)
        assert result.run_a.total_cost < 0.85 * result.run_b.total_cost
        lines = result.ranking_lines()
        assert len(lines) == 2
        assert lines[0].endswith("a:lqr")
        assert lines[1].endswith("a:lqr")

    def test_cumulative_cost_column_matches_trapezoid(self, tmp_path):
        config = small_config(cfl=None, n_steps=6)
        result = compare_controllers(config, config, tmp_path)
        _, table = read_csv(result.table_path)
        t = result.run_a.times
        running = result.run_a.running_series
        expected = np.concatenate(
            [[0.0], np.cumsum(0.5 * np.diff(t) * (running[1:] + running[:-1]))]
        )
        np.testing.assert_allclose(table[:, 7], expected, rtol=1e-12, atol=1e-15)
