import json
import os

import numpy as np
import pytest

from hjkam.cli import RunConfig, build_parser, config_from_args, export_dataset, main
from hjkam.errors import ConfigError
from hjkam.laxoleinik import GridFunction


def run_cli(argv):
    return main(argv)


def test_gen_s_free(tmp_path):
    out = tmp_path / "o"
    code = run_cli(["gen-s", "--model", "free", "--t", "1", "--q0", "0",
                    "--q1", "1", "--sigma-eff", "1.5", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["S"] - 0.5) < 1e-9
    row = (out / "gen_s.csv").read_text().strip().split("\n")[1].split(",")
    assert abs(float(row[4]) - 0.5) < 1e-9
    meta = json.loads((out / "meta.json").read_text())
    assert meta["seed"] == 0 and "model_hash" in meta
    assert meta["sigma_policy"]["mode"] == "certified-override"


def test_check_pendulum_file(tmp_path):
    model_file = tmp_path / "pendulum.json"
    model_file.write_text(json.dumps({"family": "mechanical", "d": 1,
                                      "V_coeffs": [0.0, 1.0], "m": 1.0,
                                      "M": 40.0, "periodic": True}))
    out = tmp_path / "o"
    code = run_cli(["check", "--model", str(model_file), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "hypothesis_report.json").read_text())
    assert all(report["passes"].values())
    assert abs(report["M_emp"] - 4 * np.pi ** 2) < 1e-2


def test_alpha_pendulum(tmp_path):
    out = tmp_path / "o"
    code = run_cli(["alpha", "--model", "pendulum", "--grid", "64", "--t-max", "6",
                    "--sigma-eff", "0.2", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["alpha"] - 1.0) <= 1e-2


def test_determinism_byte_identical(tmp_path):
    args = ["alpha", "--model", "pendulum", "--grid", "32", "--t-max", "3",
            "--sigma-eff", "0.2", "--seed", "7"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    for name in ("summary.json", "meta.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_flow_and_monodromy(tmp_path):
    out = tmp_path / "f"
    code = run_cli(["flow", "--model", "free", "--q0", "0", "--p0", "1",
                    "--t", "2", "--out", str(out)])
    assert code == 0
    lines = (out / "trajectory.csv").read_text().strip().split("\n")
    assert lines[0] == "t,q_0,p_0,H"
    assert abs(float(lines[-1].split(",")[1]) - 2.0) < 1e-12
    out2 = tmp_path / "m"
    code = run_cli(["monodromy", "--model", "free", "--q0", "0", "--p0", "1",
                    "--t", "0.3", "--out", str(out2)])
    assert code == 0
    mono = json.loads((out2 / "monodromy.json").read_text())
    assert abs(mono["blocks"]["dpQ"][0][0] - 0.3) < 1e-12


def test_action_lax_regularize_mane_aubry_calibrate(tmp_path):
    base = ["--model", "pendulum", "--grid", "32", "--sigma-eff", "0.2"]
    assert run_cli(["action", *base, "--t", "0.4", "--q0", "0.1", "--q1", "0.5",
                    "--out", str(tmp_path / "a")]) == 0
    assert run_cli(["lax", *base, "--t", "0.2", "--out", str(tmp_path / "l")]) == 0
    assert run_cli(["regularize", "--model", "free", "--grid", "32",
                    "--sigma-eff", "0.25", "--t", "0.5",
                    "--out", str(tmp_path / "r")]) == 0
    assert run_cli(["mane", *base, "--a", "1.0", "--t-max", "4",
                    "--out", str(tmp_path / "mn")]) == 0
    assert run_cli(["aubry", *base, "--out", str(tmp_path / "au")]) == 0
    mask = (tmp_path / "au" / "aubry_mask.csv").read_text().strip().split("\n")
    assert mask[0] == "node,q" and len(mask) >= 2
    assert run_cli(["weakkam", *base, "--out", str(tmp_path / "wk")]) == 0
    u = GridFunction.load(tmp_path / "wk" / "u.gridfn")
    assert u.n_per_dim == 32
    assert run_cli(["calibrate", *base, "--a", "1.0", "--q0", "0.15", "--q1", "0.45",
                    "--cap", "2.0", "--out", str(tmp_path / "c")]) == 0
    summary = json.loads((tmp_path / "c" / "summary.json").read_text())
    assert summary["energy_deviation"] <= 1e-4


def test_config_errors_exit_1(tmp_path):
    assert run_cli(["alpha", "--bogus-flag"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"family": "mechanical", "junk": 1}))
    assert run_cli(["check", "--model", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert run_cli(["check", "--model", str(tmp_path / "missing.json"),
                    "--out", str(tmp_path / "o2")]) == 1


def test_solver_errors_exit_2(tmp_path):
    # generating value requested past the twist window
    code = run_cli(["gen-s", "--model", "pendulum", "--t", "0.5", "--q0", "0",
                    "--q1", "0.2", "--sigma-eff", "0.2",
                    "--out", str(tmp_path / "o")])
    assert code == 2


def test_runconfig_validation():
    with pytest.raises(ConfigError):
        RunConfig(command="nope", model_source="free", out_dir=".")
    with pytest.raises(ConfigError):
        RunConfig(command="alpha", model_source="free", out_dir=".", grid_n=1)
    with pytest.raises(ConfigError):
        RunConfig(command="alpha", model_source="free", out_dir=".",
                  tolerances={"tol_wk": -1.0})


def test_tol_flag_parsing():
    parser = build_parser()
    args = parser.parse_args(["alpha", "--model", "free", "--tol", "tol_wk=1e-3"])
    config = config_from_args(args)
    assert config.tolerances == {"tol_wk": 1e-3}
    with pytest.raises(ConfigError):
        config_from_args(parser.parse_args(["alpha", "--model", "free",
                                            "--tol", "oops"]))


def test_export_dataset_gridfunction(tmp_path):
    u = GridFunction(1, 4, np.zeros(4))
    path = export_dataset(u, "csv", str(tmp_path / "u.csv"))
    lines = open(path).read().strip().split("\n")
    assert lines[0] == "q,value"
    assert len(lines) == 5
    assert all(line.endswith(",0") for line in lines[1:])
    with pytest.raises(ConfigError):
        export_dataset(u, "yaml", str(tmp_path / "u.yaml"))
