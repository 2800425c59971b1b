"""Synthetic operator-learning datasets with exact or estimated derivatives.

Input functions are drawn from a seeded random smooth family (a short
cosine series); outputs come from closed forms or fine-grid quadrature
depending on the task.  Target noise, when requested, is i.i.d.
Gaussian with standard deviation sigma times the clean training-target
range, injected into the training targets only.  Derivative targets are
either the exact closed forms or meshfree estimates recomputed from the
(possibly noisy) sampled targets, which is the pipeline the training
experiments exercise.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..geometry import PointCloud
from ..mls import MlsConfig, derivative_field, estimate_derivatives

GENERATORS = ("antiderivative1d", "poisson1d", "smoothing2d", "discontinuous_inverse")


@dataclass(frozen=True)
class DatasetSizes:
    train: int = 64
    val: int = 16
    test: int = 16
    sensors: int = 32
    queries: int = 96

    def validate(self):
        for name in ("train", "val", "test", "sensors", "queries"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sizes.{name} must be positive")


@dataclass(frozen=True)
class OperatorDataset:
    """Sampled input/output function pairs at fixed sensors and queries."""

    generator: str
    sensor_points: np.ndarray          # (Jt, d_in)
    query_points: np.ndarray           # (J, n)
    train_inputs: np.ndarray           # (N_train, Jt)
    train_targets: np.ndarray          # (N_train, J), noisy when noise > 0
    val_inputs: np.ndarray
    val_targets: np.ndarray
    test_inputs: np.ndarray
    test_targets: np.ndarray
    noise: float
    seed: int
    derivative_source: str             # "exact", "mls" or "none"
    derivatives_reliable: bool
    train_d_targets: np.ndarray | None = None  # (N_train, J, n)
    clean_train_targets: np.ndarray | None = field(default=None, repr=False)

    @property
    def query_dim(self) -> int:
        return self.query_points.shape[1]

    @property
    def has_derivatives(self) -> bool:
        return self.train_d_targets is not None


# -- random smooth input family ---------------------------------------------

def _draw_series(rng, terms=4):
    """Coefficients of v(x) = c0 + sum_r a_r cos(w_r x + b_r) on [0, 1]."""
    c0 = rng.normal(scale=0.8)
    amps = rng.normal(scale=1.0, size=terms) / np.arange(1, terms + 1)
    freqs = rng.uniform(np.pi, 3.0 * np.pi, size=terms)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=terms)
    return c0, amps, freqs, phases


def _series_value(coeffs, x):
    c0, amps, freqs, phases = coeffs
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, c0)
    for a, w, b in zip(amps, freqs, phases):
        out += a * np.cos(w * x + b)
    return out


def _series_antiderivative(coeffs, x):
    """Integral from 0 to x of the series, in closed form."""
    c0, amps, freqs, phases = coeffs
    x = np.asarray(x, dtype=float)
    out = c0 * x
    for a, w, b in zip(amps, freqs, phases):
        out += (a / w) * (np.sin(w * x + b) - np.sin(b))
    return out


def _series_poisson(coeffs, x):
    """Solution of -u'' = v on [0, 1] with u(0) = u(1) = 0, and u'."""
    c0, amps, freqs, phases = coeffs
    x = np.asarray(x, dtype=float)

    def particular(y):
        out = -0.5 * c0 * y**2
        for a, w, b in zip(amps, freqs, phases):
            out += (a / w**2) * np.cos(w * y + b)
        return out

    def particular_d(y):
        out = -c0 * y
        for a, w, b in zip(amps, freqs, phases):
            out += -(a / w) * np.sin(w * y + b)
        return out

    up0 = particular(np.zeros(1))[0]
    up1 = particular(np.ones(1))[0]
    lin_b = -(up1 - up0)
    return particular(x) - up0 + lin_b * x, particular_d(x) + lin_b


def _draw_series_2d(rng, terms=6):
    amps = rng.normal(scale=1.0, size=terms) / np.arange(1, terms + 1)
    freqs = rng.uniform(np.pi, 2.5 * np.pi, size=(terms, 2))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=terms)
    return amps, freqs, phases


def _series_value_2d(coeffs, xy):
    amps, freqs, phases = coeffs
    xy = np.atleast_2d(xy)
    out = np.zeros(xy.shape[0])
    for a, w, b in zip(amps, freqs, phases):
        out += a * np.cos(xy @ w + b)
    return out


# -- task constructors --------------------------------------------------------

def _build_1d(kind, sizes, rng):
    sensors = np.linspace(0.0, 1.0, sizes.sensors)[:, None]
    queries = np.sort(rng.uniform(0.02, 0.98, size=sizes.queries))[:, None]
    total = sizes.train + sizes.val + sizes.test
    inputs = np.empty((total, sizes.sensors))
    targets = np.empty((total, sizes.queries))
    d_targets = np.empty((total, sizes.queries, 1))
    for k in range(total):
        coeffs = _draw_series(rng)
        inputs[k] = _series_value(coeffs, sensors[:, 0])
        if kind == "antiderivative1d":
            targets[k] = _series_antiderivative(coeffs, queries[:, 0])
            d_targets[k, :, 0] = _series_value(coeffs, queries[:, 0])
        elif kind == "poisson1d":
            u, du = _series_poisson(coeffs, queries[:, 0])
            targets[k] = u
            d_targets[k, :, 0] = du
        else:  # discontinuous_inverse: a jump whose location tracks the input
            c = 0.35 + 0.3 / (1.0 + np.exp(-3.0 * inputs[k].mean()))
            targets[k] = 1.0 + (queries[:, 0] > c)
            d_targets[k, :, 0] = 0.0
    return sensors, queries, inputs, targets, d_targets


def _build_smoothing2d(sizes, rng, kernel_width=0.12, grid=64):
    side = max(2, int(round(np.sqrt(sizes.sensors))))
    axis = np.linspace(0.0, 1.0, side)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    sensors = np.column_stack([gx.ravel(), gy.ravel()])
    queries = rng.uniform(0.05, 0.95, size=(sizes.queries, 2))

    qaxis = np.linspace(0.0, 1.0, grid)
    qx, qy = np.meshgrid(qaxis, qaxis, indexing="ij")
    quad_pts = np.column_stack([qx.ravel(), qy.ravel()])
    cell = (qaxis[1] - qaxis[0]) ** 2

    diff = queries[:, None, :] - quad_pts[None, :, :]
    sq = (diff**2).sum(axis=2)
    gauss = np.exp(-sq / (2.0 * kernel_width**2)) / (2.0 * np.pi * kernel_width**2)
    kernel = gauss * cell
    kernel_dx = kernel * (-diff[:, :, 0] / kernel_width**2)
    kernel_dy = kernel * (-diff[:, :, 1] / kernel_width**2)

    total = sizes.train + sizes.val + sizes.test
    inputs = np.empty((total, sensors.shape[0]))
    targets = np.empty((total, sizes.queries))
    d_targets = np.empty((total, sizes.queries, 2))
    for k in range(total):
        coeffs = _draw_series_2d(rng)
        inputs[k] = _series_value_2d(coeffs, sensors)
        v_quad = _series_value_2d(coeffs, quad_pts)
        targets[k] = kernel @ v_quad
        d_targets[k, :, 0] = kernel_dx @ v_quad
        d_targets[k, :, 1] = kernel_dy @ v_quad
    return sensors, queries, inputs, targets, d_targets


def mls_derivative_targets(query_points, targets, k=20, m=2):
    """Meshfree derivative estimates recomputed from sampled target values."""
    query_points = np.atleast_2d(query_points)
    targets = np.atleast_2d(targets)
    n = query_points.shape[1]
    cfg = MlsConfig(k=min(k, query_points.shape[0]), m=m)
    out = np.empty((targets.shape[0], targets.shape[1], n))
    unit_axes = [tuple(1 if d == i else 0 for i in range(n)) for d in range(n)]
    for sample in range(targets.shape[0]):
        cloud = PointCloud(points=query_points, values=targets[sample])
        jet = estimate_derivatives(cloud, cfg)
        for d, alpha in enumerate(unit_axes):
            out[sample, :, d] = derivative_field(jet, alpha)
    return out


def synth_dataset(
    kind: str,
    sizes: DatasetSizes | None = None,
    noise: float = 0.0,
    seed: int = 0,
    derivative_source: str = "mls",
    mls_k: int = 20,
    mls_m: int = 2,
) -> OperatorDataset:
    """Generate one synthetic operator-learning dataset.

    derivative_source selects how the training derivative targets are
    produced: "exact" closed forms, "mls" estimates from the (noisy)
    sampled targets, or "none".  Noise perturbs training targets only.
    """
    if kind not in GENERATORS:
        raise ConfigError(f"unknown dataset kind {kind!r}; choose from {GENERATORS}")
    if derivative_source not in ("exact", "mls", "none"):
        raise ConfigError(f"derivative_source must be exact|mls|none, got {derivative_source!r}")
    sizes = sizes or DatasetSizes()
    sizes.validate()
    rng = np.random.default_rng(seed)

    if kind == "smoothing2d":
        sensors, queries, inputs, targets, exact_d = _build_smoothing2d(sizes, rng)
    else:
        sensors, queries, inputs, targets, exact_d = _build_1d(kind, sizes, rng)

    n_train = sizes.train
    n_val = sizes.val
    train_targets = targets[:n_train].copy()
    clean_train = train_targets.copy()
    if noise > 0.0:
        spread = float(clean_train.max() - clean_train.min())
        train_targets = train_targets + rng.normal(
            scale=noise * spread, size=train_targets.shape
        )

    reliable = kind != "discontinuous_inverse"
    if derivative_source == "none":
        d_targets = None
    elif derivative_source == "exact":
        d_targets = exact_d[:n_train].copy()
    else:
        d_targets = mls_derivative_targets(queries, train_targets, k=mls_k, m=mls_m)

    return OperatorDataset(
        generator=kind,
        sensor_points=sensors,
        query_points=queries,
        train_inputs=inputs[:n_train],
        train_targets=train_targets,
        val_inputs=inputs[n_train : n_train + n_val],
        val_targets=targets[n_train : n_train + n_val],
        test_inputs=inputs[n_train + n_val :],
        test_targets=targets[n_train + n_val :],
        noise=float(noise),
        seed=int(seed),
        derivative_source=derivative_source,
        derivatives_reliable=reliable,
        train_d_targets=d_targets,
        clean_train_targets=clean_train,
    )


# -- on-disk layout -----------------------------------------------------------

def save_dataset(ds: OperatorDataset, directory) -> None:
    """Directory layout: meta.json, sensors.csv, queries.csv, and one CSV
    per sample under inputs/, targets/ and derivs/."""
    from ..cli.io import write_csv

    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    meta = {
        "generator": ds.generator,
        "seed": ds.seed,
        "noise": ds.noise,
        "derivative_source": ds.derivative_source,
        "derivatives_reliable": ds.derivatives_reliable,
        "sizes": {
            "train": int(ds.train_inputs.shape[0]),
            "val": int(ds.val_inputs.shape[0]),
            "test": int(ds.test_inputs.shape[0]),
            "sensors": int(ds.sensor_points.shape[0]),
            "queries": int(ds.query_points.shape[0]),
        },
    }
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    def grid_csv(name, arr):
        header = [f"x{i + 1}" for i in range(arr.shape[1])]
        write_csv(os.path.join(directory, name), header, arr.tolist())

    grid_csv("sensors.csv", ds.sensor_points)
    grid_csv("queries.csv", ds.query_points)

    def samples_csv(sub, arrays, headers):
        os.makedirs(os.path.join(directory, sub), exist_ok=True)
        for idx, arr in enumerate(arrays):
            rows = arr if arr.ndim == 2 else arr[:, None]
            write_csv(
                os.path.join(directory, sub, f"{idx:04d}.csv"), headers[: rows.shape[1]], rows.tolist()
            )

    samples_csv("inputs_train", ds.train_inputs, ["v"])
    samples_csv("targets_train", ds.train_targets, ["u"])
    samples_csv("inputs_val", ds.val_inputs, ["v"])
    samples_csv("targets_val", ds.val_targets, ["u"])
    samples_csv("inputs_test", ds.test_inputs, ["v"])
    samples_csv("targets_test", ds.test_targets, ["u"])
    if ds.train_d_targets is not None:
        headers = [f"du{i + 1}" for i in range(ds.train_d_targets.shape[2])]
        samples_csv("derivs_train", ds.train_d_targets, headers)


def load_dataset(directory) -> OperatorDataset:
    from ..cli.io import read_csv

    directory = os.fspath(directory)
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)

    def grid(name):
        _, rows = read_csv(os.path.join(directory, name))
        return np.asarray(rows, dtype=float)

    def samples(sub, count):
        out = []
        for idx in range(count):
            _, rows = read_csv(os.path.join(directory, sub, f"{idx:04d}.csv"))
            out.append(np.asarray(rows, dtype=float))
        return np.asarray(out)

    sizes = meta["sizes"]
    train_inputs = samples("inputs_train", sizes["train"])[:, :, 0]
    train_targets = samples("targets_train", sizes["train"])[:, :, 0]
    d_path = os.path.join(directory, "derivs_train")
    d_targets = samples("derivs_train", sizes["train"]) if os.path.isdir(d_path) else None
    return OperatorDataset(
        generator=meta["generator"],
        sensor_points=grid("sensors.csv"),
        query_points=grid("queries.csv"),
        train_inputs=train_inputs,
        train_targets=train_targets,
        val_inputs=samples("inputs_val", sizes["val"])[:, :, 0],
        val_targets=samples("targets_val", sizes["val"])[:, :, 0],
        test_inputs=samples("inputs_test", sizes["test"])[:, :, 0],
        test_targets=samples("targets_test", sizes["test"])[:, :, 0],
        noise=float(meta["noise"]),
        seed=int(meta["seed"]),
        derivative_source=meta["derivative_source"],
        derivatives_reliable=bool(meta["derivatives_reliable"]),
        train_d_targets=d_targets,
    )
