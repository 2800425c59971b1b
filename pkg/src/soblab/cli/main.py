"""soblab command line: derivs, rates, flow, landscape, train, sweep, validate.

Global flags come before the subcommand: --seed, --out-dir, --threads,
--config FILE (key = value lines; explicit flags win), and
--from-manifest FILE to replay a previous run byte for byte.

Exit codes: 2 input parse error, 3 configuration error, 4 numerical
failure.  Expected errors print a one-line message, never a stack trace.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import __version__, convlab, mls
from ..errors import (
    CloudFormatError,
    ConfigError,
    EmptyCloudError,
    KTooLargeError,
    NanLossError,
    NonpositiveSupportError,
    OutOfDomainError,
    PhiZeroError,
    SingularNormalMatrixError,
    SoblabError,
    StepTooLargeError,
)
from ..geometry import load_cloud_csv
from ..training import DatasetSizes, TrainConfig, synth_dataset, train
from . import svg
from .io import atomic_write_text, write_csv
from .manifest import load_manifest, write_manifest

EXIT_PARSE, EXIT_CONFIG, EXIT_NUMERIC = 2, 3, 4

_PARSE_ERRORS = (CloudFormatError, EmptyCloudError)
_CONFIG_ERRORS = (ConfigError, KTooLargeError, NonpositiveSupportError, OutOfDomainError)
_NUMERIC_ERRORS = (
    SingularNormalMatrixError,
    StepTooLargeError,
    NanLossError,
    PhiZeroError,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as configuration errors."""

    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# command defaults and runners; every runner consumes one resolved config dict
# ---------------------------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "derivs": {"input": None, "k": 20, "m": 2, "out": "jets.csv"},
    "rates": {
        "function": "sincos",
        "resolutions": None,
        "k": 20,
        "m": 2,
        "orders": None,
    },
    "flow": {
        "dim": 2,
        "theta0": 0.8,
        "ratio0": 1.0,
        "mode": "both",
        "dt": 0.01,
        "t_final": 40.0,
        "allow_outside": False,
        "record_every": 10,
    },
    "landscape": {"theta_steps": 48, "x_steps": 40, "x_max": 3.0},
    "train": {
        "task": "antiderivative1d",
        "mode": "sobolev",
        "noise": 0.0,
        "k": 20,
        "m": 2,
        "epochs": 300,
        "learning_rate": 0.05,
        "batch_size": 0,
        "rank": 8,
        "hidden": "64,64",
        "der_weight": 1.0,
        "derivative_source": "mls",
        "train_size": 64,
        "val_size": 16,
        "test_size": 16,
        "sensors": 32,
        "queries": 96,
        "optimizer": "gd",
    },
    "sweep": {},  # filled below: train defaults plus sweep controls
    "validate": {"full": False},
}
DEFAULTS["sweep"] = {
    **DEFAULTS["train"],
    "param": None,
    "values": None,
    "repeats": 5,
    "mode": "all",
}


def _parse_float_list(value):
    try:
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        return [float(v) for v in str(value).split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {value!r}") from None


def _parse_int_list(value):
    try:
        if isinstance(value, (list, tuple)):
            return [int(v) for v in value]
        return [int(v) for v in str(value).split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {value!r}") from None


def run_derivs(config, out_dir, seed, threads):
    cloud = load_cloud_csv(config["input"])
    cfg = mls.MlsConfig(k=int(config["k"]), m=int(config["m"]))
    jet = mls.estimate_derivatives(cloud, cfg)
    header = (
        ["j"]
        + [f"x{d + 1}" for d in range(jet.dim)]
        + ["c_" + "_".join(str(a) for a in alpha) for alpha in jet.multi_indices]
        + ["flagged"]
    )
    rows = []
    for j in range(jet.size):
        rows.append(
            [j, *jet.points[j].tolist(), *jet.coefficients[j].tolist(), int(jet.flagged[j])]
        )
    write_csv(os.path.join(out_dir, config["out"]), header, rows)
    return [config["input"]]


def run_rates(config, out_dir, seed, threads):
    name = config["function"]
    if name not in mls.BUILTIN_FUNCTIONS:
        raise ConfigError(f"unknown function {name!r}; choose from {sorted(mls.BUILTIN_FUNCTIONS)}")
    if not config["resolutions"]:
        raise ConfigError("--resolutions is required (comma-separated point counts)")
    fn = mls.BUILTIN_FUNCTIONS[name]()
    resolutions = _parse_int_list(config["resolutions"])
    cfg = mls.MlsConfig(k=int(config["k"]), m=int(config["m"]))
    orders = _parse_int_list(config["orders"]) if config.get("orders") else None
    box = (np.zeros(fn.dim), np.ones(fn.dim))
    study = mls.convergence_study(fn, box, resolutions, cfg, seed=seed, orders=orders)
    rows = [
        [r.resolution, r.h, r.order, r.mse, r.slope_running, int(r.mse < 1e-12), seed]
        for r in study.rows
    ]
    write_csv(
        os.path.join(out_dir, "rates.csv"),
        ["resolution", "h", "order", "mse", "slope_running", "exact", "seed"],
        rows,
    )
    series = []
    for order in sorted(study.slopes):
        _, hs, errs = study.mse_series(order)
        slope = study.slopes[order]
        label = f"order {order}" + ("" if math.isnan(slope) else f" (slope {slope:.2f})")
        series.append((label, hs, errs))
    plot = svg.line_plot(
        series,
        title=f"derivative MSE vs spacing: {name}",
        xlabel="h",
        ylabel="mse",
        logx=True,
        logy=True,
    )
    atomic_write_text(os.path.join(out_dir, "rates.svg"), plot)
    return []


def _flow_start(dim, theta0, ratio0):
    if dim < 2:
        raise ConfigError("flow needs --dim >= 2")
    w_star = np.zeros(dim)
    w_star[0] = 1.0
    w0 = np.zeros(dim)
    w0[0] = ratio0 * math.cos(theta0)
    w0[1] = ratio0 * math.sin(theta0)
    return w0, w_star


def run_flow(config, out_dir, seed, threads):
    modes = ["L2", "Sob"] if config["mode"] == "both" else [config["mode"]]
    w0, w_star = _flow_start(int(config["dim"]), float(config["theta0"]), float(config["ratio0"]))
    series = []
    for mode in modes:
        traj = convlab.flow_integrate(
            convlab.FlowConfig(
                w0=w0,
                w_star=w_star,
                dt=float(config["dt"]),
                t_final=float(config["t_final"]),
                mode=mode,
                record_every=int(config["record_every"]),
                allow_outside_basin=bool(config["allow_outside"]),
            )
        )
        header = (
            ["t"] + [f"w{d + 1}" for d in range(traj.weights.shape[1])] + ["dist2", "ddt_dist2"]
        )
        rows = [
            [traj.times[i], *traj.weights[i].tolist(), traj.dist2[i], traj.ddt_dist2[i]]
            for i in range(len(traj.times))
        ]
        write_csv(os.path.join(out_dir, f"trajectory_{mode.lower()}.csv"), header, rows)
        series.append((mode, traj.times, np.sqrt(traj.dist2)))
    plot = svg.line_plot(
        series,
        title="distance to target under the gradient flow",
        xlabel="t",
        ylabel="|w - w*|",
    )
    atomic_write_text(os.path.join(out_dir, "flow.svg"), plot)
    return []


def run_landscape(config, out_dir, seed, threads):
    steps = int(config["theta_steps"])
    x_steps = int(config["x_steps"])
    if steps < 2 or x_steps < 2:
        raise ConfigError("need at least 2 steps per axis")
    thetas = np.linspace(0.0, math.pi, steps + 2)[1:-1]
    ratios = np.linspace(0.0, float(config["x_max"]), x_steps + 1)[1:]
    table = convlab.descent_landscape(thetas, ratios)
    rows = [[t, x, v1, v2, int(flag)] for (t, x, v1, v2, flag) in table.rows()]
    write_csv(
        os.path.join(out_dir, "landscape.csv"),
        ["theta", "x", "v_l2", "v_sob", "defined"],
        rows,
    )
    atomic_write_text(
        os.path.join(out_dir, "landscape_l2.svg"),
        svg.heatmap(
            thetas, ratios, table.v_l2, title="normalized descent rate: value flow",
            xlabel="theta", ylabel="|w|/|w*|",
        ),
    )
    atomic_write_text(
        os.path.join(out_dir, "landscape_sob.svg"),
        svg.heatmap(
            thetas, ratios, table.v_sob, title="normalized descent rate: derivative-supervised flow",
            xlabel="theta", ylabel="|w|/|w*|",
        ),
    )
    grid = np.linspace(0.0, math.pi, 2048)
    margins, defined = convlab.derivative_flow_margin_scan(grid)
    curve = svg.line_plot(
        [("margin", grid[defined], margins[defined])],
        title="derivative-flow margin (undefined range excluded)",
        xlabel="theta",
        ylabel="margin",
    )
    atomic_write_text(os.path.join(out_dir, "margin_curve.svg"), curve)
    undefined_cells = int((~defined).sum())
    print(f"margin curve: {undefined_cells} of {grid.size} grid angles undefined")
    return []


def _train_once(config, seed):
    sizes = DatasetSizes(
        train=int(config["train_size"]),
        val=int(config["val_size"]),
        test=int(config["test_size"]),
        sensors=int(config["sensors"]),
        queries=int(config["queries"]),
    )
    dataset = synth_dataset(
        config["task"],
        sizes=sizes,
        noise=float(config["noise"]),
        seed=seed,
        derivative_source=config["derivative_source"],
        mls_k=int(config["k"]),
        mls_m=int(config["m"]),
    )
    hidden = tuple(_parse_int_list(config["hidden"]))
    cfg = TrainConfig(
        epochs=int(config["epochs"]),
        learning_rate=float(config["learning_rate"]),
        batch_size=int(config["batch_size"]) or None,
        der_weight=float(config["der_weight"]),
        rank=int(config["rank"]),
        hidden=hidden,
        optimizer=config["optimizer"],
        seed=seed,
    )
    return train(cfg, dataset, config["mode"])


def run_train(config, out_dir, seed, threads):
    report = _train_once(config, seed)
    payload = report.to_dict()
    atomic_write_text(
        os.path.join(out_dir, "report.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    rows = [
        [e, report.epoch_l2[e], report.epoch_der[e], report.epoch_val_rel_l2[e]]
        for e in range(len(report.epoch_l2))
    ]
    write_csv(os.path.join(out_dir, "losses.csv"), ["epoch", "l2", "der", "val_rel_l2"], rows)
    print(f"final relative-L2 test error: {report.final_test_rel_l2:.6e}")
    return []


def run_sweep(config, out_dir, seed, threads):
    param = config["param"]
    if param not in ("K", "m", "noise"):
        raise ConfigError("--param must be one of K, m, noise")
    if not config["values"]:
        raise ConfigError("--values is required")
    values = _parse_float_list(config["values"])
    if len(values) < 2:
        raise ConfigError("need at least 2 sweep values")
    repeats = int(config["repeats"])
    modes = (
        ["ordinary", "sobolev", "sobolev+pcgrad"] if config["mode"] == "all" else [config["mode"]]
    )

    jobs = []
    for value in values:
        for mode in modes:
            if mode == "ordinary" and param in ("K", "m"):
                continue  # stencil parameters only matter with derivative targets
            for rep in range(repeats):
                run_cfg = dict(config)
                run_cfg["mode"] = mode
                if param == "K":
                    run_cfg["k"] = int(value)
                elif param == "m":
                    run_cfg["m"] = int(value)
                else:
                    run_cfg["noise"] = value
                jobs.append((value, mode, seed + rep, run_cfg))

    def execute(job):
        value, mode, run_seed, run_cfg = job
        report = _train_once(run_cfg, run_seed)
        return [value, mode, run_seed, report.final_test_rel_l2]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(execute, jobs))
    else:
        rows = [execute(job) for job in jobs]

    write_csv(
        os.path.join(out_dir, "sweep.csv"),
        [param, "mode", "seed", "final_rel_l2"],
        rows,
    )
    series = []
    for mode in modes:
        if mode == "ordinary" and param in ("K", "m"):
            continue
        medians = []
        for value in values:
            errs = [r[3] for r in rows if r[0] == value and r[1] == mode]
            medians.append(float(np.median(errs)))
        series.append((mode, values, medians))
    plot = svg.line_plot(
        series,
        title=f"median relative-L2 error vs {param}",
        xlabel=param,
        ylabel="median rel-L2",
    )
    atomic_write_text(os.path.join(out_dir, "sweep.svg"), plot)
    return []


def run_validate(config, out_dir, seed, threads):
    verdicts = convlab.validation_suite(seed=seed, full=bool(config["full"]))
    atomic_write_text(
        os.path.join(out_dir, "validate.json"), json.dumps(verdicts, indent=2, sort_keys=True) + "\n"
    )
    width = max(len(v["name"]) for v in verdicts)
    for v in verdicts:
        status = "pass" if v["pass"] else "FAIL"
        print(f"{v['name']:<{width}}  statistic={v['statistic']:.3e}  bound={v['bound']:.3e}  {status}")
    if not all(v["pass"] for v in verdicts):
        raise SoblabError("validation suite reported failures")
    return []


RUNNERS = {
    "derivs": run_derivs,
    "rates": run_rates,
    "flow": run_flow,
    "landscape": run_landscape,
    "train": run_train,
    "sweep": run_sweep,
    "validate": run_validate,
}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="soblab", description=__doc__)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--config", default=None, help="key = value defaults file")
    parser.add_argument("--from-manifest", default=None, help="replay a recorded run")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("derivs", help="estimate jets for a point-cloud CSV")
    p.add_argument("--input")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--out")

    p = sub.add_parser("rates", help="convergence-rate study on random clouds")
    p.add_argument("--function")
    p.add_argument("--resolutions")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--orders")

    p = sub.add_parser("flow", help="integrate the population gradient flow")
    p.add_argument("--dim", type=int)
    p.add_argument("--theta0", type=float)
    p.add_argument("--ratio0", type=float)
    p.add_argument("--mode", choices=["L2", "Sob", "both"])
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, dest="t_final")
    p.add_argument("--record-every", type=int)
    p.add_argument("--allow-outside", action="store_true", default=None)

    p = sub.add_parser("landscape", help="normalized descent-rate landscape")
    p.add_argument("--theta-steps", type=int)
    p.add_argument("--x-steps", type=int)
    p.add_argument("--x-max", type=float)

    def add_train_args(p):
        p.add_argument("--task")
        p.add_argument("--mode")
        p.add_argument("--noise", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--rank", type=int)
        p.add_argument("--hidden")
        p.add_argument("--der-weight", type=float)
        p.add_argument("--derivative-source")
        p.add_argument("--train-size", type=int)
        p.add_argument("--val-size", type=int)
        p.add_argument("--test-size", type=int)
        p.add_argument("--sensors", type=int)
        p.add_argument("--queries", type=int)
        p.add_argument("--optimizer")

    p = sub.add_parser("train", help="train the operator network on a synthetic task")
    add_train_args(p)

    p = sub.add_parser("sweep", help="parameter sweep over repeated training runs")
    add_train_args(p)
    p.add_argument("--param")
    p.add_argument("--values")
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("validate", help="closed-form vs Monte-Carlo check suite")
    p.add_argument("--full", action="store_true", default=None)
    return parser


def _read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            try:
                out[key] = json.loads(value)
            except json.JSONDecodeError:
                out[key] = value
    return out


def resolve_config(command: str, cli_args: dict, file_values: dict) -> dict:
    """defaults < config file < explicit flags."""
    config = dict(DEFAULTS[command])
    for key, value in file_values.items():
        if key in config:
            config[key] = value
    for key, value in cli_args.items():
        if key in config and value is not None:
            config[key] = value
    return config


def execute(command: str, config: dict, out_dir: str, seed: int, threads: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    started = time.monotonic()
    inputs = RUNNERS[command](config, out_dir, seed, threads) or []
    write_manifest(
        out_dir,
        command,
        {**config, "out_dir": out_dir, "threads": threads},
        seed,
        __version__,
        input_files=inputs,
        duration_s=time.monotonic() - started,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.from_manifest:
            record = load_manifest(args.from_manifest)
            command = record["command"]
            config = dict(record["config"])
            out_dir = args.out_dir or config.pop("out_dir", ".")
            config.pop("out_dir", None)
            threads = args.threads if args.threads is not None else config.pop("threads", 1)
            config.pop("threads", None)
            seed = args.seed if args.seed is not None else record["seed"]
            execute(command, config, out_dir, seed, threads)
            return 0
        if not args.command:
            raise ConfigError("a command is required (or --from-manifest)")
        file_values = _read_config_file(args.config) if args.config else {}
        cli_args = {
            k: v
            for k, v in vars(args).items()
            if k not in ("command", "seed", "out_dir", "threads", "config", "from_manifest")
        }
        seed = args.seed if args.seed is not None else int(file_values.get("seed", 0))
        out_dir = args.out_dir or str(file_values.get("out_dir", "."))
        threads = args.threads if args.threads is not None else int(file_values.get("threads", 1))
        config = resolve_config(args.command, cli_args, file_values)
        execute(args.command, config, out_dir, seed, threads)
        return 0
    except _PARSE_ERRORS as exc:
        print(f"soblab: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _CONFIG_ERRORS as exc:
        print(f"soblab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"soblab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SoblabError as exc:
        print(f"soblab: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"soblab: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, TypeError) as exc:
        print(f"soblab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
