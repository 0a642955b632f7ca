"""
Tests for the command-line interface and the experiment runner
"""

import json

import pytest

from conefix.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, build_parser, main
from conefix.config import build_config
from conefix.experiments import ExperimentRunner, render_summary
from conefix.solver import read_trace_csv


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_certify_f1(tmp_path):
    code = main(["certify", "--mapping", "f1", "--box-lo", "0.5", "--box-hi", "1.5",
                 "--mu", "0.3333333333", "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = read_json(tmp_path / "certify_f1_summary.json")
    assert summary["c"] == pytest.approx(0.7712, abs=5e-4)
    assert summary["fixed_point_in_box"] is True
    assert summary["c_ge_rho"] is True
    assert summary["command_line"].startswith("conefix certify")


def test_certify_refuses_g(tmp_path, capsys):
    code = main(["certify", "--mapping", "g", "--box-lo", "1", "--box-hi", "3", "--out", str(tmp_path)])
    assert code == EXIT_ERROR
    assert "not strictly positive" in capsys.readouterr().err


def test_spectral_radius_exit_codes(tmp_path):
    assert main(["spectral-radius", "--mapping", "f2", "--out", str(tmp_path)]) == EXIT_INFEASIBLE
    assert main(["spectral-radius", "--mapping", "f1", "--out", str(tmp_path)]) == EXIT_OK
    summary = read_json(tmp_path / "spectral_radius_f1_summary.json")
    assert summary["rho"] == pytest.approx(0.5)
    assert summary["verdict"] == "has-fixed-point"


def test_invalid_flags_exit_with_error(tmp_path):
    assert main(["demo1d", "--tol", "-1", "--out", str(tmp_path)]) == EXIT_ERROR
    assert main(["demo1d", "--mapping", "fey", "--out", str(tmp_path)]) == EXIT_ERROR


def test_demo1d_outputs_are_deterministic(tmp_path):
    args = ["demo1d", "--mapping", "f1", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    trace_path = tmp_path / "demo1d_f1_trace.csv"
    first = trace_path.read_bytes()
    lines = trace_path.read_text().splitlines()
    assert lines[0].startswith("# conefix ")
    assert lines[1].startswith("# command: conefix demo1d")
    assert lines[2] == "# seed: 0"

    assert main(args) == EXIT_OK
    assert trace_path.read_bytes() == first
    rows = read_trace_csv(trace_path)
    assert rows[0]["ratio_l2"] == pytest.approx(0.5)


def test_demo1d_g_eps(tmp_path):
    code = main(["demo1d", "--mapping", "g-eps", "--max-iter", "2500", "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = read_json(tmp_path / "demo1d_g_eps_0.001_summary.json")
    assert summary["reference"] == pytest.approx(2.229, abs=0.01)
    assert summary["classification"] == "geometric"


def test_load_sim_with_emitted_scenario(tmp_path):
    scenario_path = tmp_path / "scenario.json"
    code = main(["load-sim", "--users", "30", "--stations", "4", "--seed", "1",
                 "--demand-scale", "0.1", "--emit-scenario", str(scenario_path),
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    first = read_json(tmp_path / "load_sim_seed1_summary.json")
    assert first["feasible"] is True
    assert (tmp_path / "load_sim_seed1_trace.csv").exists()
    assert scenario_path.exists()

    replay = tmp_path / "replay"
    code = main(["load-sim", "--scenario", str(scenario_path), "--seed", "1",
                 "--out", str(replay)])
    assert code == EXIT_OK
    second = read_json(replay / "load_sim_seed1_summary.json")
    assert second["rho"] == first["rho"]
    assert second["iterations"] == first["iterations"]


def test_spectral_radius_of_a_load_scenario(tmp_path):
    scenario_path = tmp_path / "scenario.json"
    main(["load-sim", "--users", "40", "--stations", "4", "--seed", "2",
          "--emit-scenario", str(scenario_path), "--out", str(tmp_path)])
    main(["spectral-radius", "--scenario", str(scenario_path), "--out", str(tmp_path)])
    summaries = list(tmp_path.glob("spectral_radius_load*_summary.json"))
    assert len(summaries) == 1
    summary = read_json(summaries[0])
    assert summary["rho"] == pytest.approx(summary["rho_matrix"], abs=1e-6)


def test_load_sim_seed_sweep(tmp_path):
    config = build_config("load-sim", overrides={
        "users": 20, "stations": 4, "seeds": "0..2", "demand_scale": 0.1,
        "workers": 2, "out": str(tmp_path),
    })
    summary = ExperimentRunner(config).run()
    assert summary["runs"] == 3
    assert sorted(summary["seeds"]) == ["0", "1", "2"]
    assert summary["failures"] == {}
    assert (tmp_path / "load_sim_seeds0-2_summary.json").exists()
    for seed in range(3):
        assert (tmp_path / f"load_sim_seed{seed}_trace.csv").exists()
    assert "seed 1:" in render_summary(summary)


def test_power_sim_capped(tmp_path):
    code = main(["power-sim", "--users", "3", "--stations", "1", "--antennas", "2",
                 "--p-bar", "5", "--seed", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = read_json(tmp_path / "power_sim_seed4_summary.json")
    assert summary["rho"] == 0.0
    assert summary["p_bar"] == 5.0
    solution = read_json(tmp_path / "power_sim_seed4_solution.json")
    assert len(solution["users"]) == 3


def test_config_file_feeds_the_runner(tmp_path):
    path = tmp_path / "certify.yaml"
    path.write_text("mapping: f1\nbox-lo: [0.5]\nbox-hi: [1.5]\n")
    assert main(["certify", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    summary = read_json(tmp_path / "certify_f1_summary.json")
    assert summary["mu"] == pytest.approx(0.4)
