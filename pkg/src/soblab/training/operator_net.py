"""Low-rank kernel operator network.

The prediction at a query point x for an input function sampled at the
sensor points y_l is

    u(x) = (1/Jt) * sum_l sum_i phi_i(x) psi_i(y_l) v(y_l),

two small ReLU networks contracted through the rank index: a
discretized integral operator with a separable learned kernel.  Both
the value and its exact gradient with respect to x are differentiable
in the parameters via the hand-written passes in mlp.py.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatchError
from .mlp import ReluMLP


@dataclass
class OperatorNet:
    """Query-side and sensor-side basis networks plus the sensor grid."""

    phi: ReluMLP
    psi: ReluMLP
    sensor_points: np.ndarray
    rank: int

    @property
    def query_dim(self) -> int:
        return self.phi.in_dim

    @property
    def n_sensors(self) -> int:
        return self.sensor_points.shape[0]

    @property
    def n_params(self) -> int:
        return self.phi.n_params + self.psi.n_params

    def get_params(self) -> np.ndarray:
        return np.concatenate([self.phi.get_params(), self.psi.get_params()])

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise DimMismatchError(f"expected {self.n_params} parameters, got {flat.shape}")
        split = self.phi.n_params
        self.phi.set_params(flat[:split])
        self.psi.set_params(flat[split:])


def make_operator_net(
    query_dim: int,
    sensor_points,
    rank: int = 8,
    hidden=(64, 64),
    seed: int = 0,
) -> OperatorNet:
    """Fresh network with seeded Gaussian initialization."""
    sensor_points = np.atleast_2d(np.asarray(sensor_points, dtype=float))
    rng = np.random.default_rng(seed)
    phi = ReluMLP([query_dim, *hidden, rank], rng=rng)
    psi = ReluMLP([sensor_points.shape[1], *hidden, rank], rng=rng)
    return OperatorNet(phi=phi, psi=psi, sensor_points=sensor_points, rank=rank)


@dataclass(frozen=True)
class Batch:
    """One training batch: sampled input functions, shared query points,
    value targets and (optionally) derivative targets."""

    inputs: np.ndarray        # (N, Jt)
    queries: np.ndarray       # (J, n)
    targets: np.ndarray       # (N, J)
    d_targets: np.ndarray | None = None  # (N, J, n)


def _sample_coefficients(net: OperatorNet, inputs):
    """Rank coefficients s_k = (1/Jt) sum_l psi(y_l) v_k(y_l), with cache."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != net.n_sensors:
        raise DimMismatchError(
            f"{inputs.shape[1]} sensor values but the net expects {net.n_sensors}"
        )
    psi_out, psi_cache = net.psi.forward(net.sensor_points)
    coeffs = inputs @ psi_out / net.n_sensors
    return coeffs, psi_out, psi_cache


def predict_values(net: OperatorNet, inputs, queries):
    """Predicted values (N, J) for a batch of input functions."""
    coeffs, _, _ = _sample_coefficients(net, inputs)
    phi_out, _ = net.phi.forward(np.atleast_2d(queries))
    return coeffs @ phi_out.T


def predict_gradients(net: OperatorNet, inputs, queries):
    """Predicted query-space gradients (N, J, n), exact differentiation."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    coeffs, _, _ = _sample_coefficients(net, inputs)
    _, phi_cache = net.phi.forward(queries)
    j, n = queries.shape
    out = np.empty((coeffs.shape[0], j, n))
    for d in range(n):
        tangent = np.zeros_like(queries)
        tangent[:, d] = 1.0
        t_out, _ = net.phi.jvp(phi_cache, tangent)
        out[:, :, d] = coeffs @ t_out.T
    return out


def net_forward(net: OperatorNet, sensor_values, query_point):
    """Value and exact input gradient of the prediction at one point."""
    sensor_values = np.asarray(sensor_values, dtype=float).ravel()
    query_point = np.asarray(query_point, dtype=float).ravel()
    if query_point.shape[0] != net.query_dim:
        raise DimMismatchError(
            f"query point has dim {query_point.shape[0]}, net expects {net.query_dim}"
        )
    coeffs, _, _ = _sample_coefficients(net, sensor_values[None, :])
    phi_out, phi_cache = net.phi.forward(query_point[None, :])
    value = float(coeffs[0] @ phi_out[0])
    grad = net.phi.input_gradient(phi_cache, coeffs)[0]
    return value, grad


def evaluate_losses(net: OperatorNet, batch: Batch):
    """(value loss, derivative loss) on a batch; der is NaN when the batch
    carries no derivative targets."""
    from .losses import der_loss, l2_loss

    values = predict_values(net, batch.inputs, batch.queries)
    l2 = l2_loss(values, batch.targets)
    if batch.d_targets is None:
        return l2, float("nan")
    grads = predict_gradients(net, batch.inputs, batch.queries)
    return l2, der_loss(grads, batch.d_targets)


def backward(net: OperatorNet, batch: Batch, loss_kind: str) -> np.ndarray:
    """Exact flat parameter gradient of the selected loss on the batch.

    loss_kind "l2" differentiates the value loss, "der" the derivative
    loss; the derivative path runs one JVP per input dimension and the
    almost-everywhere parameter rule for the gated tangents.
    """
    kind = loss_kind.strip().lower()
    if kind not in ("l2", "der"):
        raise ValueError(f"loss_kind must be 'l2' or 'der', got {loss_kind!r}")

    inputs = np.atleast_2d(np.asarray(batch.inputs, dtype=float))
    queries = np.atleast_2d(np.asarray(batch.queries, dtype=float))
    coeffs, psi_out, psi_cache = _sample_coefficients(net, inputs)
    phi_out, phi_cache = net.phi.forward(queries)
    n_samples, jt = inputs.shape
    j, n = queries.shape

    if kind == "l2":
        residual = coeffs @ phi_out.T - np.asarray(batch.targets, dtype=float)
        cot_values = 2.0 * residual / residual.size
        phi_grads, _ = net.phi.backward(phi_cache, cot_values.T @ coeffs)
        d_coeffs = cot_values @ phi_out
    else:
        if batch.d_targets is None:
            raise DimMismatchError("derivative loss requested but batch has no derivative targets")
        d_targets = np.asarray(batch.d_targets, dtype=float)
        phi_grads = np.zeros(net.phi.n_params)
        d_coeffs = np.zeros_like(coeffs)
        denom = n_samples * j * n
        for d in range(n):
            tangent = np.zeros_like(queries)
            tangent[:, d] = 1.0
            t_out, t_cache = net.phi.jvp(phi_cache, tangent)
            residual_d = coeffs @ t_out.T - d_targets[:, :, d]
            cot_d = 2.0 * residual_d / denom
            phi_grads += net.phi.jvp_param_grads(phi_cache, t_cache, cot_d.T @ coeffs)
            d_coeffs += cot_d @ t_out

    psi_cot = inputs.T @ d_coeffs / jt
    psi_grads, _ = net.psi.backward(psi_cache, psi_cot)
    return np.concatenate([phi_grads, psi_grads])
