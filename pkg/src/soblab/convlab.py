"""Closed-form gradient-flow lab for derivative-supervised training.

For a rank-one ReLU kernel model with Gaussian query points, the
population gradients of the value loss and of the derivative loss have
closed forms built from half-space geometry: the angle between weight
vectors, the joint activation probability, and the expectation of the
ReLU-gated correlation vector.  This module evaluates those formulas,
integrates the two gradient flows, scans the scalar inequalities the
convergence argument rests on, and cross-checks everything against
Monte-Carlo sampling.

All scalar-vector operations broadcast over a leading batch axis, so
grids and trajectory bundles evaluate without Python loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    DimMismatchError,
    NoLocalMinError,
    NotUnitError,
    OutOfDomainError,
    PhiZeroError,
    SoblabError,
    StepTooLargeError,
    ZeroVectorError,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# half-space geometry
# ---------------------------------------------------------------------------

def _norm(w, keepdims=False):
    return np.linalg.norm(np.asarray(w, dtype=float), axis=-1, keepdims=keepdims)


def _check_nonzero(*vectors):
    for w in vectors:
        if np.any(_norm(w) == 0.0):
            raise ZeroVectorError("angle undefined for a zero vector")


def angle_between(w1, w2) -> float:
    """Angle in [0, pi] between two nonzero vectors."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    _check_nonzero(w1, w2)
    cos = np.sum(w1 * w2, axis=-1) / (_norm(w1) * _norm(w2))
    out = np.arccos(np.clip(cos, -1.0, 1.0))
    return float(out) if out.ndim == 0 else out


class HalfspaceCoefficients(NamedTuple):
    """Scalar weights of the closed-form Gaussian half-space expectations.

    joint is the probability that a standard Gaussian lands in both
    half-spaces {x: x.w1 > 0} and {x: x.w2 > 0}; in the gated correlation
    vector it weights the parallel component while ortho weights the
    orthogonal one; mixed = joint*cos(theta) + ortho scales the effective
    prediction amplitude.
    """

    mixed: float
    joint: float
    ortho: float


def _coeffs_of_angle(theta):
    p0 = ((math.pi - theta) * np.cos(theta) + np.sin(theta)) / TWO_PI
    p1 = (math.pi - theta) / TWO_PI
    p2 = np.sin(theta) / TWO_PI
    return p0, p1, p2


def halfspace_coefficients(w1, w2) -> HalfspaceCoefficients:
    """(mixed, joint, ortho) coefficients for the pair of directions."""
    t = angle_between(w1, w2)
    p0, p1, p2 = _coeffs_of_angle(t)
    if np.ndim(t) == 0:
        return HalfspaceCoefficients(float(p0), float(p1), float(p2))
    return HalfspaceCoefficients(p0, p1, p2)


def gated_correlation(e, w):
    """E over x ~ N(0, I) of 1{x.e > 0} 1{x.w > 0} (x.w) x, in closed form.

    Requires e to be a unit vector.  Equals joint * w + ortho * |w| * e
    with the half-space coefficients of the pair.
    """
    e = np.asarray(e, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(np.abs(_norm(e) - 1.0) > 1e-9):
        raise NotUnitError("direction argument must be a unit vector")
    _check_nonzero(w)
    t = angle_between(e, w)
    t = np.asarray(t)
    nw = _norm(w, keepdims=True)
    term = (math.pi - t)[..., None] * w + (nw * np.sin(t)[..., None]) * e
    return term / TWO_PI


def gated_correlation_sum(x_rows, e, w):
    """Finite-sample version: sum_j 1{x_j.e > 0} 1{x_j.w > 0} (x_j.w) x_j."""
    x_rows = np.asarray(x_rows, dtype=float)
    e = np.asarray(e, dtype=float)
    w = np.asarray(w, dtype=float)
    if x_rows.ndim != 2 or x_rows.shape[1] != e.shape[-1] or e.shape != w.shape:
        raise DimMismatchError(
            f"rows {x_rows.shape} incompatible with directions {e.shape}/{w.shape}"
        )
    xw = x_rows @ w
    gate = (x_rows @ e > 0) & (xw > 0)
    return ((gate * xw)[:, None] * x_rows).sum(axis=0)


def effective_amplitude(w1, w2) -> float:
    """w1 . gated_correlation(w1/|w1|, w2) = |w1| |w2| * mixed coefficient."""
    _check_nonzero(w1, w2)
    t = angle_between(w1, w2)
    p0, _, _ = _coeffs_of_angle(np.asarray(t))
    out = _norm(w1) * _norm(w2) * p0
    return float(out) if np.ndim(out) == 0 else out


def quadrant_prob(rho) -> float:
    """P[x > 0, y > 0] for standard bivariate normals with correlation rho."""
    rho = float(rho)
    if not -1.0 <= rho <= 1.0:
        raise OutOfDomainError(f"correlation must lie in [-1, 1], got {rho}")
    return 0.25 + math.asin(rho) / TWO_PI


# ---------------------------------------------------------------------------
# population gradients of the two losses
# ---------------------------------------------------------------------------

def _clamped_angle_stats(w, w_star, theta_clamp):
    """Norms, clamped angle and half-space coefficients, batched over w."""
    nw = _norm(w, keepdims=True)
    nws = float(_norm(w_star))
    cos = (w @ w_star) / (nw[..., 0] * nws)
    t = np.arccos(np.clip(cos, -1.0, 1.0))
    if theta_clamp > 0.0:
        t = np.clip(t, theta_clamp, math.pi - theta_clamp)
    p0, p1, p2 = _coeffs_of_angle(t)
    return nw, nws, t, p0, p1, p2


def _mu_factor(mu) -> float:
    mu = np.asarray(mu, dtype=float)
    if mu.size == 0:
        raise ConfigError("amplitude list must be nonempty")
    return float(np.mean(np.abs(mu) ** 2))


def _value_gradient(w, w_star, mu_fac, theta_clamp=0.0):
    """Population gradient of the value loss; w may carry a batch axis."""
    nw, nws, t, p0, p1, p2 = _clamped_angle_stats(w, w_star, theta_clamp)
    amp = nw[..., 0] * nws * p0
    amp_star = 0.5 * nws * nws
    w_hat = w / nw
    corr_star = p1[..., None] * w_star + (nws * p2)[..., None] * w_hat
    inner = amp[..., None] * (0.5 * w) - amp_star * corr_star
    grad = amp[..., None] * inner + corr_star * np.sum(w * inner, axis=-1, keepdims=True)
    return mu_fac * grad


def _derivative_gradient(w, w_star, mu_fac, theta_clamp=0.0):
    """Population gradient of the derivative loss; w may carry a batch axis."""
    nw, nws, t, p0, p1, p2 = _clamped_angle_stats(w, w_star, theta_clamp)
    amp = nw[..., 0] * nws * p0
    amp_star = 0.5 * nws * nws
    w_hat = w / nw
    corr_star = p1[..., None] * w_star + (nws * p2)[..., None] * w_hat
    cw = np.sum(corr_star * w, axis=-1)
    cws = np.sum(corr_star * w_star, axis=-1)
    grad = (
        (0.5 * amp * amp + 0.5 * amp * cw - amp * p1 * cws)[..., None] * w
        - (amp * amp_star * p1)[..., None] * w_star
    )
    return mu_fac * grad


def value_flow_gradient(w, w_star, mu=(1.0,)):
    """Closed-form expectation over queries of the value-loss gradient.

    Assembled as (amp * I + corr w^T)(amp * corr_self - amp* * corr_star)
    averaged over the squared input amplitudes; vanishes exactly at
    w = w_star.
    """
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    _check_nonzero(w, w_star)
    return _value_gradient(w, w_star, _mu_factor(mu))


def derivative_flow_gradient(w, w_star, mu=(1.0,)):
    """Closed-form expectation over queries of the derivative-loss gradient."""
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    _check_nonzero(w, w_star)
    return _derivative_gradient(w, w_star, _mu_factor(mu))


def finite_sample_value_gradient(x_rows, w, w_star, mu=(1.0,)):
    """Per-draw value-loss gradient with the query average left empirical.

    Averaging this over fresh Gaussian draws converges to
    value_flow_gradient; used as the Monte-Carlo oracle.
    """
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    _check_nonzero(w, w_star)
    j = x_rows.shape[0]
    w_hat = w / _norm(w)
    amp = effective_amplitude(w, w_star)
    amp_star = effective_amplitude(w_star, w_star)
    corr_star = gated_correlation(w_hat, w_star)
    f_self = gated_correlation_sum(x_rows, w_hat, w)
    f_star = gated_correlation_sum(x_rows, w_hat, w_star)
    inner = amp * f_self - amp_star * f_star
    return _mu_factor(mu) * (amp * inner + corr_star * float(w @ inner)) / j


def finite_sample_derivative_gradient(x_rows, w, w_star, mu=(1.0,)):
    """Per-draw derivative-loss gradient with empirical activation gates."""
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    _check_nonzero(w, w_star)
    j = x_rows.shape[0]
    w_hat = w / _norm(w)
    amp = effective_amplitude(w, w_star)
    amp_star = effective_amplitude(w_star, w_star)
    corr_star = gated_correlation(w_hat, w_star)
    gate_w = (x_rows @ w > 0)
    gate_both = gate_w & (x_rows @ w_star > 0)
    n_w = float(np.count_nonzero(gate_w))
    n_both = float(np.count_nonzero(gate_both))
    term = (
        amp * amp * n_w * w
        + amp * n_w * float(corr_star @ w) * w
        - amp * amp_star * n_both * w_star
        - amp * n_both * float(corr_star @ w_star) * w
    )
    return _mu_factor(mu) * term / j


# ---------------------------------------------------------------------------
# scalar inequality machinery
# ---------------------------------------------------------------------------

def _check_angle_domain(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > math.pi + 1e-12):
        raise OutOfDomainError("angle must lie in [0, pi]")
    return np.clip(theta, 0.0, math.pi)


def value_flow_angular_term(theta):
    """(cos t - 1)((pi - t)(cos t - 1) + 2 sin t); nonpositive on [0, pi].

    This is the angular contribution to the squared-distance decrease
    under the value flow; its nonpositivity drives convergence.
    """
    t = _check_angle_domain(theta)
    out = (np.cos(t) - 1.0) * ((math.pi - t) * (np.cos(t) - 1.0) + 2.0 * np.sin(t))
    return float(out) if out.ndim == 0 else out


def derivative_cubic_coefficients(theta):
    """(a, b, c, d) with f(x) = a x^3 - b x^2 - c x + d the normalized
    distance-decrease contribution of the derivative-loss gradient, as a
    function of the norm ratio x."""
    t = _check_angle_domain(theta)
    p0, p1, p2 = _coeffs_of_angle(t)
    cos = np.cos(t)
    a = p0
    b = p0 * cos + p1 * (p1 + p2 * cos)
    c = p1 * cos * (0.5 - p1 - p2 * cos)
    d = 0.5 * p1
    return a, b, c, d


def cubic_local_min(a, b, c, d):
    """Location and value of the local minimum of f(t) = a t^3 - b t^2 - c t + d.

    Requires a > 0 and b^2 + 3 a c >= 0.  The closed-form value is
    cross-checked against direct evaluation of f at the returned point.
    """
    a, b, c, d = float(a), float(b), float(c), float(d)
    if a <= 0:
        raise NoLocalMinError(f"leading coefficient must be positive, got {a}")
    disc = b * b + 3.0 * a * c
    if disc < 0:
        raise NoLocalMinError(f"discriminant b^2 + 3ac = {disc} is negative")
    t0 = (b + math.sqrt(disc)) / (3.0 * a)
    f_closed = (
        27.0 * a * a * d - 2.0 * b**3 - 9.0 * a * b * c - 2.0 * disc * math.sqrt(disc)
    ) / (27.0 * a * a)
    f_direct = a * t0**3 - b * t0**2 - c * t0 + d
    scale = max(1.0, abs(f_closed), abs(a), abs(b), abs(c), abs(d))
    if abs(f_closed - f_direct) > 1e-9 * scale:
        raise SoblabError(
            f"cubic minimum cross-check failed: closed {f_closed} vs direct {f_direct}"
        )
    return t0, f_closed


def derivative_flow_margin(theta):
    """Scaled minimum of the derivative-flow cubic; None where undefined.

    Nonnegative wherever defined, and zero only at theta = 0: this is
    the quantity whose sign certifies that the derivative term can only
    accelerate the distance decrease.  Undefined when the cubic's
    discriminant is negative (the cubic is then increasing and the
    certificate is not needed).
    """
    t = float(_check_angle_domain(theta))
    a, b, c, d = derivative_cubic_coefficients(t)
    disc = b * b + 3.0 * a * c
    if disc < 0 or a <= 1e-12:
        # a vanishes only toward theta = pi, where the cubic degenerates
        return None
    return float(
        27.0 * a * a * d - 2.0 * b**3 - 9.0 * a * b * c - 2.0 * disc * math.sqrt(disc)
    )


def derivative_flow_margin_scan(thetas):
    """Vectorized margin over a grid: (values with NaN, defined mask)."""
    t = _check_angle_domain(thetas)
    a, b, c, d = derivative_cubic_coefficients(t)
    disc = b * b + 3.0 * a * c
    defined = (disc >= 0) & (a > 1e-12)
    disc_safe = np.where(defined, disc, 0.0)
    vals = 27.0 * a * a * d - 2.0 * b**3 - 9.0 * a * b * c - 2.0 * disc_safe**1.5
    return np.where(defined, vals, np.nan), defined


# ---------------------------------------------------------------------------
# gradient flows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowConfig:
    """One gradient-flow run: start, target, amplitudes, integrator grid.

    mode is "L2" (value loss only) or "Sob" (value plus derivative
    loss).  dt defaults to 1e-3 normalized by |w_star|^2.  theta_clamp
    keeps the angle away from the kinks at 0 and pi inside the flow's
    coefficient evaluations.
    """

    w0: np.ndarray
    w_star: np.ndarray
    mu: tuple[float, ...] = (1.0,)
    dt: float | None = None
    t_final: float = 10.0
    mode: str = "L2"
    theta_clamp: float = 1e-8
    record_every: int = 1
    allow_outside_basin: bool = False

    def resolved_dt(self) -> float:
        if self.dt is not None:
            if self.dt <= 0:
                raise ConfigError(f"dt must be positive, got {self.dt}")
            return self.dt
        nws = float(np.linalg.norm(np.asarray(self.w_star, dtype=float)))
        return 1e-3 / (nws * nws)


@dataclass(frozen=True)
class FlowTrajectory:
    """Sampled flow: times, weights, squared distance and its closed-form
    time derivative at each sample."""

    times: np.ndarray
    weights: np.ndarray
    dist2: np.ndarray
    ddt_dist2: np.ndarray
    mode: str

    @property
    def final_distance(self) -> float:
        return float(math.sqrt(self.dist2[-1]))


def _flow_mode(mode: str) -> str:
    m = mode.strip().lower()
    if m in ("l2", "value"):
        return "l2"
    if m in ("sob", "sobolev"):
        return "sob"
    raise ConfigError(f"unknown flow mode {mode!r} (expected L2 or Sob)")


def _flow_rhs(w, w_star, mu_fac, mode, theta_clamp):
    g = _value_gradient(w, w_star, mu_fac, theta_clamp)
    if mode == "sob":
        g = g + _derivative_gradient(w, w_star, mu_fac, theta_clamp)
    return -g


def flow_integrate(cfg: FlowConfig) -> FlowTrajectory:
    """Integrate dw/dt = -grad(loss) with classical fixed-step RK4.

    Raises StepTooLargeError when the squared distance grows by more
    than 21% (distance by 10%) in a single step, which signals that dt
    is too coarse for the configuration.
    """
    w = np.asarray(cfg.w0, dtype=float).copy()
    w_star = np.asarray(cfg.w_star, dtype=float)
    _check_nonzero(w, w_star)
    if w.shape != w_star.shape:
        raise DimMismatchError(f"w0 shape {w.shape} != w_star shape {w_star.shape}")
    nws = float(np.linalg.norm(w_star))
    if not cfg.allow_outside_basin and np.linalg.norm(w - w_star) >= nws:
        raise ConfigError(
            "initialization outside the basin |w - w_star| < |w_star|; "
            "set allow_outside_basin to integrate anyway"
        )
    mode = _flow_mode(cfg.mode)
    mu_fac = _mu_factor(cfg.mu)
    dt = cfg.resolved_dt()
    n_steps = max(0, int(round(cfg.t_final / dt)))
    stride = max(1, int(cfg.record_every))

    def rhs(u):
        return _flow_rhs(u, w_star, mu_fac, mode, cfg.theta_clamp)

    times = [0.0]
    weights = [w.copy()]
    d2 = float(np.dot(w - w_star, w - w_star))
    dist2 = [d2]
    # ddt_dist2 = 2 (w - w*) . dw/dt, evaluated from the closed-form RHS
    ddt = [2.0 * float(np.dot(w - w_star, rhs(w)))]
    floor = (1e-9 * nws) ** 2
    for step in range(1, n_steps + 1):
        k1 = rhs(w)
        k2 = rhs(w + 0.5 * dt * k1)
        k3 = rhs(w + 0.5 * dt * k2)
        k4 = rhs(w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        d2_new = float(np.dot(w - w_star, w - w_star))
        if d2 > floor and d2_new > 1.21 * d2:
            raise StepTooLargeError(
                f"distance grew more than 10% at step {step}; reduce dt",
                step_index=step,
            )
        d2 = d2_new
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            weights.append(w.copy())
            dist2.append(d2)
            ddt.append(2.0 * float(np.dot(w - w_star, rhs(w))))
    return FlowTrajectory(
        times=np.asarray(times),
        weights=np.asarray(weights),
        dist2=np.asarray(dist2),
        ddt_dist2=np.asarray(ddt),
        mode=cfg.mode,
    )


def integrate_flow_batch(
    w0_batch,
    w_star,
    mu=(1.0,),
    dt=1e-3,
    t_final=10.0,
    mode="L2",
    theta_clamp=1e-8,
    record_every=1,
):
    """RK4 on a whole bundle of starts at once.

    Returns (times (S,), dist2 (B, S), final weights (B, n)).  Identical
    dynamics to flow_integrate, vectorized for scans and acceptance
    checks.
    """
    w = np.array(w0_batch, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    mode = _flow_mode(mode)
    mu_fac = _mu_factor(mu)
    n_steps = max(0, int(round(t_final / dt)))
    stride = max(1, int(record_every))

    def rhs(u):
        return _flow_rhs(u, w_star, mu_fac, mode, theta_clamp)

    diff = w - w_star
    records = [np.sum(diff * diff, axis=-1)]
    times = [0.0]
    for step in range(1, n_steps + 1):
        k1 = rhs(w)
        k2 = rhs(w + 0.5 * dt * k1)
        k3 = rhs(w + 0.5 * dt * k2)
        k4 = rhs(w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            diff = w - w_star
            records.append(np.sum(diff * diff, axis=-1))
            times.append(step * dt)
    return np.asarray(times), np.stack(records, axis=-1), w


# ---------------------------------------------------------------------------
# descent landscape
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandscapeTable:
    """Dense (theta, ratio) table of normalized descent rates.

    v_l2 and v_sob are d/dt of the squared distance under each flow,
    divided by 2 * mixed * |w| * |w_star|^5; cells where the mixed
    coefficient is below 1e-12 are reported as undefined, not zero.
    """

    theta: np.ndarray
    ratio: np.ndarray
    v_l2: np.ndarray
    v_sob: np.ndarray
    defined: np.ndarray

    def rows(self):
        for i, t in enumerate(self.theta):
            for j, x in enumerate(self.ratio):
                yield (
                    float(t),
                    float(x),
                    float(self.v_l2[i, j]),
                    float(self.v_sob[i, j]),
                    bool(self.defined[i, j]),
                )


def descent_landscape(theta_grid, ratio_grid, dim=2, w_star_norm=1.0) -> LandscapeTable:
    """Normalized descent rates over an angle-ratio grid.

    Realizes each (theta, x) cell as concrete vectors in the given
    dimension, evaluates both population gradients, and normalizes; the
    result is independent of the realization dimension.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    ratio_grid = np.asarray(ratio_grid, dtype=float)
    if np.any(theta_grid >= math.pi):
        raise PhiZeroError("theta = pi is excluded: the normalization vanishes")
    if np.any(theta_grid <= 0.0) or np.any(ratio_grid <= 0.0):
        raise OutOfDomainError("grids must lie in (0, pi) x (0, inf)")
    if dim < 2:
        raise ConfigError("need dim >= 2 to realize an angle")

    nws = float(w_star_norm)
    w_star = np.zeros(dim)
    w_star[0] = nws
    tt, xx = np.meshgrid(theta_grid, ratio_grid, indexing="ij")
    w = np.zeros(tt.shape + (dim,))
    w[..., 0] = xx * nws * np.cos(tt)
    w[..., 1] = xx * nws * np.sin(tt)

    g_val = _value_gradient(w, w_star, 1.0)
    g_der = _derivative_gradient(w, w_star, 1.0)
    diff = w - w_star
    ddt_l2 = -2.0 * np.sum(diff * g_val, axis=-1)
    ddt_sob = ddt_l2 - 2.0 * np.sum(diff * g_der, axis=-1)

    p0 = _coeffs_of_angle(tt)[0]
    norm = 2.0 * p0 * (xx * nws) * nws**5
    defined = p0 > 1e-12
    safe = np.where(defined, norm, 1.0)
    v_l2 = np.where(defined, ddt_l2 / safe, np.nan)
    v_sob = np.where(defined, ddt_sob / safe, np.nan)
    return LandscapeTable(
        theta=theta_grid, ratio=ratio_grid, v_l2=v_l2, v_sob=v_sob, defined=defined
    )


# ---------------------------------------------------------------------------
# Monte-Carlo cross checks and the validation suite
# ---------------------------------------------------------------------------

def mc_gated_correlation(e, w, draws, seed=0, chunk=200_000):
    """Empirical mean and standard error of the per-row gated correlation."""
    e = np.asarray(e, dtype=float)
    w = np.asarray(w, dtype=float)
    n = e.shape[0]
    rng = np.random.default_rng(seed)
    total = np.zeros(n)
    total_sq = np.zeros(n)
    done = 0
    while done < draws:
        m = int(min(chunk, draws - done))
        x = rng.standard_normal((m, n))
        xw = x @ w
        gate = (x @ e > 0) & (xw > 0)
        rows = (gate * xw)[:, None] * x
        total += rows.sum(axis=0)
        total_sq += (rows * rows).sum(axis=0)
        done += m
    mean = total / draws
    var = total_sq / draws - mean * mean
    se = np.sqrt(np.maximum(var, 0.0) / draws)
    return mean, se


def random_admissible_cubic(rng):
    """Moderate-scale (a, b, c, d) satisfying the local-minimum preconditions."""
    a = rng.uniform(0.2, 2.0)
    b = rng.normal()
    c_lo = -(b * b) / (3.0 * a)
    c = rng.uniform(c_lo, abs(c_lo) + 2.0)
    d = rng.normal()
    return a, b, c, d


def mc_quadrant_prob(rho, draws, seed=0):
    """Empirical P[x>0, y>0] for correlated standard normals."""
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(draws)
    z2 = rng.standard_normal(draws)
    y = rho * z1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * z2
    return float(np.mean((z1 > 0) & (y > 0)))


def sample_basin(w_star, count, rng, theta_range=None, radius_limit=0.999):
    """Random starts strictly inside the basin |w - w_star| < |w_star|.

    With theta_range, rejection-samples until the angle to w_star lies
    in the given open interval.
    """
    w_star = np.asarray(w_star, dtype=float)
    n = w_star.shape[0]
    nws = float(np.linalg.norm(w_star))
    out = np.empty((count, n))
    got = 0
    while got < count:
        direction = rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        radius = radius_limit * nws * rng.random() ** (1.0 / n)
        w = w_star + radius * direction
        if theta_range is not None:
            t = angle_between(w, w_star)
            if not (theta_range[0] < t < theta_range[1]):
                continue
        out[got] = w
        got += 1
    return out


def validation_suite(seed=0, full=False):
    """Run every closed-form-vs-sampling check; returns verdict records.

    Each record is {"name", "statistic", "bound", "pass"}.  full=True
    uses the publication-size sample counts (slower).
    """
    rng = np.random.default_rng(seed)
    verdicts = []

    def add(name, statistic, bound, ok):
        verdicts.append(
            {"name": name, "statistic": float(statistic), "bound": float(bound), "pass": bool(ok)}
        )

    # gated correlation closed form vs Monte Carlo
    pair_count = 20 if full else 6
    draws = 1_000_000 if full else 200_000
    dims = (2, 5, 10)
    worst = 0.0
    for i in range(pair_count):
        n = dims[i % len(dims)]
        e = rng.standard_normal(n)
        e /= np.linalg.norm(e)
        w = rng.standard_normal(n)
        mean, se = mc_gated_correlation(e, w, draws, seed=int(rng.integers(2**63)))
        closed = gated_correlation(e, w)
        ratio = np.abs(mean - closed) / np.maximum(se, 1e-300)
        worst = max(worst, float(ratio.max()))
    add("gated_correlation_mc_3se", worst, 3.0, worst <= 3.0)

    # quadrant probability
    qd = 1_000_000 if full else 400_000
    worst = 0.0
    for rho in (-0.9, 0.0, 0.5, 0.9):
        worst = max(
            worst,
            abs(mc_quadrant_prob(rho, qd, seed=int(rng.integers(2**63))) - quadrant_prob(rho)),
        )
    add("quadrant_prob_mc_absdiff", worst, 5e-3, worst <= 5e-3)

    # scalar inequality scans
    grid = np.linspace(0.0, math.pi, 10_000)
    g_max = float(np.max(value_flow_angular_term(grid)))
    add("value_angular_term_max", g_max, 1e-12, g_max <= 1e-12)
    p0_min = float(np.min(_coeffs_of_angle(grid)[0]))
    add("mixed_coefficient_min", p0_min, -1e-12, p0_min >= -1e-12)
    margins, defined = derivative_flow_margin_scan(grid)
    m_min = float(np.nanmin(margins))
    add("derivative_margin_min", m_min, -1e-10, m_min >= -1e-10)
    near_zero = margins[defined] < 1e-8
    zero_only_at_origin = bool(np.all(grid[defined][near_zero] < 1e-3))
    add("derivative_margin_zero_only_at_0", float(zero_only_at_origin), 1.0, zero_only_at_origin)

    # cubic closed form vs direct evaluation
    worst = 0.0
    trials = 10_000 if full else 2_000
    for _ in range(trials):
        a, b, c, d = random_admissible_cubic(rng)
        t0, f0 = cubic_local_min(a, b, c, d)
        direct = a * t0**3 - b * t0**2 - c * t0 + d
        worst = max(worst, abs(f0 - direct))
    add("cubic_min_closed_vs_direct", worst, 1e-10, worst <= 1e-10)

    # population gradients vs Monte Carlo (2% relative)
    draws = 200 if full else 60
    j_rows = 2_000
    worst = 0.0
    for n in (3, 5):
        w_star = rng.standard_normal(n)
        w = sample_basin(w_star, 1, rng)[0]
        acc_v = np.zeros(n)
        acc_d = np.zeros(n)
        for _ in range(draws):
            x = rng.standard_normal((j_rows, n))
            acc_v += finite_sample_value_gradient(x, w, w_star)
            acc_d += finite_sample_derivative_gradient(x, w, w_star)
        rv = np.linalg.norm(acc_v / draws - value_flow_gradient(w, w_star))
        rv /= np.linalg.norm(value_flow_gradient(w, w_star))
        rd = np.linalg.norm(acc_d / draws - derivative_flow_gradient(w, w_star))
        rd /= np.linalg.norm(derivative_flow_gradient(w, w_star))
        worst = max(worst, float(rv), float(rd))
    add("population_gradient_mc_rel", worst, 0.02, worst <= 0.02)

    # basin flow: monotone decrease, convergence and derivative dominance
    count = 40 if full else 16
    w_star = np.zeros(3)
    w_star[0] = 1.0
    starts = sample_basin(w_star, count, rng, theta_range=(0.05, math.pi - 0.05))
    _, d_l2, _ = integrate_flow_batch(starts, w_star, dt=0.02, t_final=80.0, mode="L2")
    _, d_sob, _ = integrate_flow_batch(starts, w_star, dt=0.02, t_final=80.0, mode="Sob")
    mono = float(np.max(np.diff(d_l2, axis=-1)))
    add("flow_l2_monotone_max_increase", mono, 1e-12, mono <= 1e-12)
    final = float(np.max(np.sqrt(d_l2[:, -1])))
    add("flow_l2_final_distance", final, 1e-3, final < 1e-3)
    dom = float(np.max(d_sob - d_l2))
    add("flow_sob_dominance_max_excess", dom, 1e-12, dom <= 1e-12)

    return verdicts
