"""Command-line contract: outputs, exit codes, manifests, reproducibility."""

import json
import os
from pathlib import Path

import numpy as np
import pytest

from soblab.cli.io import read_csv, write_csv
from soblab.cli.main import main
from soblab.geometry import PointCloud, save_cloud_csv


def run_cli(*argv):
    return main([str(a) for a in argv])


def grid_csv(tmp_path, n=5):
    xs = np.linspace(0.0, 1.0, n)
    pts = np.array([[a, b] for a in xs for b in xs])
    cloud = PointCloud(points=pts, values=pts[:, 0] + pts[:, 1])
    path = tmp_path / "grid.csv"
    save_cloud_csv(cloud, path)
    return path


def read_all_bytes(directory, skip=("manifest.json",)):
    out = {}
    for p in sorted(Path(directory).rglob("*")):
        if p.is_file() and p.name not in skip:
            out[str(p.relative_to(directory))] = p.read_bytes()
    return out


# -- derivs ---------------------------------------------------------------------

def test_derivs_plane_gradients(tmp_path):
    data = grid_csv(tmp_path)
    out = tmp_path / "out"
    assert run_cli("--out-dir", out, "derivs", "--input", data, "--k", 6, "--m", 1) == 0
    header, rows = read_csv(out / "jets.csv")
    assert header[:3] == ["j", "x1", "x2"]
    c10 = header.index("c_1_0")
    c01 = header.index("c_0_1")
    for row in rows:
        assert row[c10] == pytest.approx(1.0, abs=1e-9)
        assert row[c01] == pytest.approx(1.0, abs=1e-9)
    assert (out / "manifest.json").exists()


def test_derivs_k_below_basis_exits_3(tmp_path, capsys):
    data = grid_csv(tmp_path)
    code = run_cli("--out-dir", tmp_path / "o", "derivs", "--input", data, "--k", 3, "--m", 2)
    assert code == 3
    message = capsys.readouterr().err
    assert "K >= I" in message


def test_derivs_bad_csv_exits_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,u\n0.0,oops,1.0\n")
    assert run_cli("--out-dir", tmp_path / "o", "derivs", "--input", bad) == 2
    missing = tmp_path / "missing.csv"
    assert run_cli("--out-dir", tmp_path / "o", "derivs", "--input", missing) == 2


def test_derivs_deterministic_rerun(tmp_path):
    data = grid_csv(tmp_path)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    run_cli("--out-dir", out1, "derivs", "--input", data, "--k", 6, "--m", 1)
    run_cli("--out-dir", out2, "--from-manifest", out1 / "manifest.json")
    assert read_all_bytes(out1) == read_all_bytes(out2)


# -- rates ----------------------------------------------------------------------

def test_rates_polynomial_exact(tmp_path):
    out = tmp_path / "r"
    code = run_cli(
        "--seed", 0, "--out-dir", out, "rates",
        "--function", "plane", "--resolutions", "100,200,400", "--k", 8, "--m", 1,
    )
    assert code == 0
    header, rows = read_csv(out / "rates.csv")
    mse = header.index("mse")
    exact = header.index("exact")
    for row in rows:
        assert row[mse] < 1e-10
        assert row[exact] == 1
    assert (out / "rates.svg").exists()


def test_rates_sincos_positive_slope(tmp_path):
    out = tmp_path / "r"
    run_cli(
        "--seed", 0, "--out-dir", out, "rates",
        "--function", "sincos", "--resolutions", "300,600,1200", "--orders", "1",
    )
    header, rows = read_csv(out / "rates.csv")
    slope = header.index("slope_running")
    assert rows[-1][slope] > 0


def test_rates_requires_resolutions(tmp_path):
    assert run_cli("--out-dir", tmp_path, "rates", "--function", "sincos") == 3


# -- flow -----------------------------------------------------------------------

def test_flow_both_modes_dominance(tmp_path):
    out = tmp_path / "f"
    code = run_cli(
        "--out-dir", out, "flow",
        "--theta0", 1.0, "--ratio0", 1.2, "--mode", "both",
        "--dt", 0.01, "--T", 20, "--allow-outside",
    )
    assert code == 0
    _, rows_l2 = read_csv(out / "trajectory_l2.csv")
    _, rows_sob = read_csv(out / "trajectory_sob.csv")
    d_l2 = np.array([r[-2] for r in rows_l2])
    d_sob = np.array([r[-2] for r in rows_sob])
    assert np.all(d_sob <= d_l2 + 1e-12)
    assert (out / "flow.svg").exists()


def test_flow_outside_basin_needs_flag(tmp_path):
    code = run_cli(
        "--out-dir", tmp_path / "f", "flow", "--theta0", 1.0, "--ratio0", 1.2,
        "--mode", "L2", "--T", 1,
    )
    assert code == 3


def test_flow_zero_horizon(tmp_path):
    out = tmp_path / "f"
    run_cli("--out-dir", out, "flow", "--theta0", 0.5, "--ratio0", 1.0, "--mode", "L2", "--T", 0)
    _, rows = read_csv(out / "trajectory_l2.csv")
    assert len(rows) == 1


def test_flow_parallel_start_flat(tmp_path):
    out = tmp_path / "f"
    run_cli("--out-dir", out, "flow", "--theta0", 0, "--ratio0", 1.0, "--mode", "L2", "--T", 2)
    _, rows = read_csv(out / "trajectory_l2.csv")
    dist2 = [r[-2] for r in rows]
    assert max(abs(d) for d in dist2) < 1e-24


# -- landscape ---------------------------------------------------------------------

def test_landscape_outputs_and_ordering(tmp_path, capsys):
    out = tmp_path / "l"
    assert run_cli("--out-dir", out, "landscape", "--theta-steps", 16, "--x-steps", 12) == 0
    header, rows = read_csv(out / "landscape.csv")
    v1 = header.index("v_l2")
    v2 = header.index("v_sob")
    flag = header.index("defined")
    for row in rows:
        if row[flag]:
            assert row[v2] <= row[v1] + 1e-12
    for name in ("landscape_l2.svg", "landscape_sob.svg", "margin_curve.svg"):
        assert (out / name).exists()
    assert "undefined" in capsys.readouterr().out


# -- train and sweep -----------------------------------------------------------------

TRAIN_FAST = [
    "--epochs", 3, "--train-size", 6, "--val-size", 3, "--test-size", 3,
    "--sensors", 12, "--queries", 24, "--k", 8, "--rank", 3, "--hidden", "8",
]


def test_train_writes_report_and_losses(tmp_path, capsys):
    out = tmp_path / "t"
    code = run_cli("--seed", 1, "--out-dir", out, "train", "--mode", "sobolev", *TRAIN_FAST)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "sobolev"
    assert len(report["epoch_l2"]) == 3
    header, rows = read_csv(out / "losses.csv")
    assert header == ["epoch", "l2", "der", "val_rel_l2"]
    assert len(rows) == 3
    assert "final relative-L2" in capsys.readouterr().out


def test_train_zero_epochs_reports_initial_only(tmp_path):
    out = tmp_path / "t0"
    run_cli("--out-dir", out, "train", "--mode", "ordinary", "--epochs", 0, *TRAIN_FAST[2:])
    report = json.loads((out / "report.json").read_text())
    assert report["epoch_l2"] == []
    assert report["initial_l2"] > 0


def test_train_nan_exits_4(tmp_path):
    code = run_cli(
        "--out-dir", tmp_path / "t", "train", "--mode", "ordinary",
        "--learning-rate", 1e9, *TRAIN_FAST,
    )
    assert code == 4


def test_train_rerun_byte_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    run_cli("--seed", 2, "--out-dir", out1, "train", "--mode", "sobolev+pcgrad", *TRAIN_FAST)
    run_cli("--out-dir", out2, "--from-manifest", out1 / "manifest.json")
    assert read_all_bytes(out1) == read_all_bytes(out2)


def test_sweep_m_values_table(tmp_path):
    out = tmp_path / "s"
    code = run_cli(
        "--seed", 0, "--out-dir", out, "sweep", "--param", "m", "--values", "1,2",
        "--repeats", 2, "--mode", "sobolev", *TRAIN_FAST,
    )
    assert code == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header == ["m", "mode", "seed", "final_rel_l2"]
    assert len(rows) == 4  # 2 values x 2 repeats
    assert (out / "sweep.svg").exists()


def test_sweep_noise_all_modes(tmp_path):
    out = tmp_path / "s"
    code = run_cli(
        "--seed", 0, "--out-dir", out, "sweep", "--param", "noise",
        "--values", "0,0.03", "--repeats", 1, *TRAIN_FAST,
    )
    assert code == 0
    _, rows = read_csv(out / "sweep.csv")
    modes = {r[1] for r in rows}
    assert modes == {"ordinary", "sobolev", "sobolev+pcgrad"}
    assert len(rows) == 6


def test_sweep_threads_deterministic(tmp_path):
    args = [
        "sweep", "--param", "noise", "--values", "0,0.02", "--repeats", 1,
        "--mode", "sobolev", *TRAIN_FAST,
    ]
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    run_cli("--seed", 3, "--out-dir", out1, "--threads", 1, *args)
    run_cli("--seed", 3, "--out-dir", out2, "--threads", 2, *args)
    assert read_all_bytes(out1) == read_all_bytes(out2)


def test_sweep_validation(tmp_path):
    assert run_cli("--out-dir", tmp_path, "sweep", "--param", "q", "--values", "1,2") == 3
    assert run_cli("--out-dir", tmp_path, "sweep", "--param", "m", "--values", "2") == 3


# -- validate, config file, misc -------------------------------------------------------

def test_validate_passes_and_writes_verdicts(tmp_path):
    out = tmp_path / "v"
    assert run_cli("--seed", 0, "--out-dir", out, "validate") == 0
    verdicts = json.loads((out / "validate.json").read_text())
    assert all(v["pass"] for v in verdicts)
    names = {v["name"] for v in verdicts}
    assert "gated_correlation_mc_3se" in names


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k = 6\nm = 5\nseed = 7\n")
    data = grid_csv(tmp_path)
    out = tmp_path / "o"
    # flag --m 1 beats the config file's m = 5; k comes from the file
    code = run_cli("--config", cfg, "--out-dir", out, "derivs", "--input", data, "--m", 1)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["k"] == 6
    assert manifest["config"]["m"] == 1
    assert manifest["seed"] == 7


def test_no_command_is_config_error():
    assert run_cli("--seed", 1) == 3


def test_config_file_json_list_accepted(tmp_path):
    cfg = tmp_path / "rates.cfg"
    cfg.write_text("resolutions = [100, 200, 400]\nfunction = plane\nk = 8\nm = 1\n")
    out = tmp_path / "o"
    assert run_cli("--config", cfg, "--out-dir", out, "rates") == 0
    _, rows = read_csv(out / "rates.csv")
    assert {r[0] for r in rows} == {100, 200, 400}


def test_garbage_values_exit_3(tmp_path, capsys):
    code = run_cli(
        "--out-dir", tmp_path, "sweep", "--param", "noise", "--values", "a,b",
        "--repeats", 1, "--mode", "ordinary", *TRAIN_FAST,
    )
    assert code == 3
    assert "Traceback" not in capsys.readouterr().err


def test_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = [[1, 0.1 + 0.2, "x"], [2, 1e-17, "y"]]
    write_csv(path, ["a", "b", "c"], rows)
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    assert back == rows
    write_csv(tmp_path / "t2.csv", ["a", "b", "c"], back)
    assert (tmp_path / "t.csv").read_bytes() == (tmp_path / "t2.csv").read_bytes()
