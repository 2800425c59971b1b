"""Moving-least-squares derivative estimation on irregular meshes.

At every mesh point a polynomial of total degree <= m is fitted to the K
nearest samples by weighted least squares in the shifted basis
(x - x_j)^alpha.  The fitted coefficients form an order-m jet: the
derivative of order alpha at x_j is alpha! times the coefficient c_alpha
(Taylor convention).  A convergence-rate study against functions with
known derivatives is included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    NonpositiveSupportError,
    OrderTooHighError,
    SingularNormalMatrixError,
)
from .geometry import PointCloud, SpatialIndex, build_index, knn_all, knn_arrays

# Stencils whose (scaled) normal matrix is worse conditioned than this fall
# back to a truncated pseudo-inverse and are flagged in the output.
_COND_LIMIT = 1e12
# Iterative refinement toward the unregularized normal equations is applied
# only while the stencil is comfortably well conditioned; beyond this the
# ridge is doing real stabilization work and must be left in place.
_REFINE_COND_LIMIT = 1e8
_PINV_CUTOFF = 1e-12


def enumerate_multi_indices(n: int, m: int) -> list[tuple[int, ...]]:
    """All multi-indices alpha with |alpha| <= m, graded-lexicographic.

    Degrees ascend; within a degree the exponent tuples descend
    lexicographically, so the n=2, m=2 basis comes out as
    (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
    """
    if n < 1:
        raise ConfigError(f"dimension must be >= 1, got {n}")
    if m < 0:
        raise ConfigError(f"order must be >= 0, got {m}")

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    out: list[tuple[int, ...]] = []
    for degree in range(m + 1):
        out.extend(compositions(degree, n))
    return out


def basis_size(n: int, m: int) -> int:
    """Number of monomials of total degree <= m in n variables."""
    return math.comb(m + n, n)


def multi_index_factorial(alpha) -> int:
    """alpha! = prod(alpha_i!)."""
    out = 1
    for a in alpha:
        out *= math.factorial(int(a))
    return out


def weight(t, d_support):
    """Compactly supported stencil weight (1 - t/D)^4 (4 t/D + 1).

    Equals 1 at t=0, 0 at t=D, strictly decreasing in between; clamped
    to 0 for t > D.  Accepts scalars or arrays.
    """
    if d_support <= 0:
        raise NonpositiveSupportError(f"support radius must be positive, got {d_support}")
    s = np.asarray(t, dtype=float) / d_support
    w = np.where(s <= 1.0, (1.0 - s) ** 4 * (4.0 * s + 1.0), 0.0)
    if np.ndim(t) == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class MlsConfig:
    """Stencil parameters for the local fits.

    k: neighbor count (self included); m: polynomial order;
    weight_margin: support radius inflation over the largest neighbor
    distance; ridge: relative Tikhonov regularizer on the normal matrix;
    per_point_support: use a per-stencil support radius instead of the
    global one (for strongly graded meshes).
    """

    k: int = 20
    m: int = 2
    weight_margin: float = 1.1
    ridge: float = 1e-10
    per_point_support: bool = False

    def validate(self, dim: int) -> None:
        if self.m < 1 and not (self.m == 0 and self.k >= 1):
            raise ConfigError(f"polynomial order must be >= 1 (or 0 with K >= 1), got m={self.m}")
        if self.weight_margin <= 1.0:
            raise ConfigError(f"weight_margin must exceed 1, got {self.weight_margin}")
        if self.ridge < 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")
        needed = basis_size(dim, self.m)
        if self.k < needed:
            raise ConfigError(
                f"K >= I required: K={self.k} but the order-{self.m} basis in "
                f"{dim}-D has I={needed} functions"
            )


@dataclass(frozen=True)
class JetField:
    """Per-point MLS coefficient vectors, graded-lex multi-index order.

    coefficients[j, i] is c_{j, alpha_i}; h is the mesh spacing statistic
    min over points of the nearest non-self neighbor distance; flagged
    marks points rescued by the pseudo-inverse fallback.
    """

    points: np.ndarray
    coefficients: np.ndarray
    multi_indices: tuple[tuple[int, ...], ...]
    order: int
    h: float
    support_radius: float
    flagged: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def index_of(self, alpha) -> int:
        try:
            return self.multi_indices.index(tuple(int(a) for a in alpha))
        except ValueError:
            raise OrderTooHighError(
                f"multi-index {tuple(alpha)} not in the order-{self.order} jet"
            ) from None


def derivative_at(jet: JetField, j: int, alpha) -> float:
    """Derivative estimate D^alpha u(x_j) = alpha! * c_{j, alpha}."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != jet.dim:
        raise OrderTooHighError(f"multi-index {alpha} has wrong length for dim {jet.dim}")
    if sum(alpha) > jet.order:
        raise OrderTooHighError(f"|alpha|={sum(alpha)} exceeds fitted order m={jet.order}")
    return multi_index_factorial(alpha) * float(jet.coefficients[j, jet.index_of(alpha)])


def derivative_field(jet: JetField, alpha) -> np.ndarray:
    """Vector of derivative estimates D^alpha u at every point."""
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) > jet.order:
        raise OrderTooHighError(f"|alpha|={sum(alpha)} exceeds fitted order m={jet.order}")
    return multi_index_factorial(alpha) * jet.coefficients[:, jet.index_of(alpha)]


def _basis_matrix(diffs: np.ndarray, indices) -> np.ndarray:
    """Monomial basis (..., K, I) evaluated on centered offsets (..., K, n)."""
    shape = diffs.shape[:-1] + (len(indices),)
    b = np.empty(shape, dtype=float)
    for i, alpha in enumerate(indices):
        col = np.ones(diffs.shape[:-1], dtype=float)
        for d, a in enumerate(alpha):
            if a:
                col = col * diffs[..., d] ** a
        b[..., i] = col
    return b


def normal_matrix(diffs: np.ndarray, weights: np.ndarray, indices) -> np.ndarray:
    """E = sum_k w_k b(x_k) b(x_k)^T for one stencil of centered offsets."""
    b = _basis_matrix(diffs, indices)
    return np.einsum("k,ki,kl->il", weights, b, b)


def _solve_stencils(diffs, dists, values, cfg, d_support):
    """Solve the weighted normal equations for a batch of stencils.

    diffs: (J, K, n) neighbor offsets from each center; dists: (J, K);
    values: (J, K) samples at the neighbors; d_support: scalar or (J,).
    Returns (coefficients (J, I), flagged (J,)).
    """
    j_count, k_count, dim = diffs.shape
    indices = enumerate_multi_indices(dim, cfg.m)
    i_count = len(indices)
    degrees = np.array([sum(a) for a in indices], dtype=float)

    d_arr = np.broadcast_to(np.asarray(d_support, dtype=float), (j_count,))
    if np.any(d_arr <= 0):
        raise NonpositiveSupportError("support radius must be positive")
    s = dists / d_arr[:, None]
    w = np.where(s <= 1.0, (1.0 - s) ** 4 * (4.0 * s + 1.0), 0.0)

    # Scale each stencil to the unit ball before forming the normal matrix;
    # the raw basis has entries ~ h^|alpha| and is needlessly ill conditioned.
    scale = dists.max(axis=1)
    scale[scale == 0.0] = 1.0
    b = _basis_matrix(diffs / scale[:, None, None], indices)

    e = np.einsum("jk,jki,jkl->jil", w, b, b)
    rhs = np.einsum("jk,jki,jk->ji", w, b, values)

    trace = np.trace(e, axis1=1, axis2=2)
    reg = cfg.ridge * trace / i_count
    e_reg = e + reg[:, None, None] * np.eye(i_count)

    eig = np.linalg.eigvalsh(e_reg)
    lo, hi = eig[:, 0], eig[:, -1]
    with np.errstate(divide="ignore", over="ignore"):
        cond = np.where(lo > 0, hi / np.maximum(lo, np.finfo(float).tiny), np.inf)

    coeffs = np.empty((j_count, i_count), dtype=float)
    flagged = cond > _COND_LIMIT
    good = ~flagged
    if np.any(good):
        sol = np.linalg.solve(e_reg[good], rhs[good][..., None])[..., 0]
        # Refinement removes the O(ridge * cond) bias so polynomial inputs
        # are reproduced to machine precision on healthy stencils.
        refine = cond[good] < _REFINE_COND_LIMIT
        if np.any(refine):
            eg = e[good]
            rg = rhs[good]
            for _ in range(2):
                resid = rg - np.einsum("jil,jl->ji", eg, sol)
                corr = np.linalg.solve(e_reg[good], resid[..., None])[..., 0]
                sol = sol + np.where(refine[:, None], corr, 0.0)
        coeffs[good] = sol
    for row in np.flatnonzero(flagged):
        u_svd, sv, vt = np.linalg.svd(e[row], hermitian=True)
        keep = sv > _PINV_CUTOFF * sv[0] if sv[0] > 0 else sv > 0
        if not np.any(keep):
            raise SingularNormalMatrixError(
                f"normal matrix at point {row} is numerically zero", point_index=int(row)
            )
        inv = (vt[keep].T / sv[keep]) @ u_svd[:, keep].T
        coeffs[row] = inv @ rhs[row]

    # Undo the stencil scaling: c_alpha in original coordinates.
    coeffs /= scale[:, None] ** degrees[None, :]
    return coeffs, flagged


def fit_local_jet(
    cloud: PointCloud,
    index: SpatialIndex,
    j: int,
    cfg: MlsConfig,
    d_support: float,
) -> np.ndarray:
    """Coefficient vector c_j of the weighted local fit at point j.

    d_support must cover the whole stencil (every neighbor distance).
    Raises SingularNormalMatrixError for degenerate stencils that the
    ridge and pseudo-inverse cannot rescue.
    """
    cfg.validate(cloud.dim)
    nbr, dist = knn_arrays(index, j, cfg.k)
    if d_support < dist[-1]:
        raise ConfigError(
            f"support radius {d_support} smaller than stencil radius {dist[-1]}"
        )
    diffs = cloud.points[nbr] - cloud.points[j]
    coeffs, _ = _solve_stencils(
        diffs[None], dist[None], cloud.values[nbr][None], cfg, d_support
    )
    return coeffs[0]


def estimate_derivatives(cloud: PointCloud, cfg: MlsConfig) -> JetField:
    """Order-m jets at every cloud point (Algorithm: KNN + local fits).

    The support radius is global, weight_margin times the largest
    neighbor distance over all stencils; with per_point_support each
    stencil uses its own radius instead.
    """
    cfg.validate(cloud.dim)
    index = build_index(cloud)
    nbr, dist = knn_all(index, cfg.k)

    if cfg.per_point_support:
        d_support = cfg.weight_margin * dist.max(axis=1)
        d_support[d_support == 0.0] = 1.0  # single-point cloud, constant fit
        d_global = float(d_support.max())
    else:
        d_global = cfg.weight_margin * float(dist.max())
        if d_global == 0.0:
            d_global = 1.0
        d_support = d_global

    diffs = cloud.points[nbr] - cloud.points[:, None, :]
    coeffs, flagged = _solve_stencils(diffs, dist, cloud.values[nbr], cfg, d_support)
    h = float(dist[:, 1].min()) if cfg.k >= 2 else float("nan")
    return JetField(
        points=cloud.points,
        coefficients=coeffs,
        multi_indices=tuple(enumerate_multi_indices(cloud.dim, cfg.m)),
        order=cfg.m,
        h=h,
        support_radius=d_global,
        flagged=flagged,
    )


class AnalyticFunction:
    """Test function with exact derivatives of every order.

    value(X) evaluates on an (J, n) array; derivative(alpha, X) returns
    the exact D^alpha values.
    """

    def __init__(self, name, dim, value, derivative):
        self.name = name
        self.dim = dim
        self.value = value
        self.derivative = derivative


def sin_cos_2d() -> AnalyticFunction:
    """u(x) = sin(x1) cos(x2); all derivatives are phase-shifted sin/cos."""

    def deriv(alpha, x):
        a1, a2 = alpha
        return np.sin(x[:, 0] + a1 * np.pi / 2) * np.cos(x[:, 1] + a2 * np.pi / 2)

    return AnalyticFunction(
        "sincos", 2, lambda x: np.sin(x[:, 0]) * np.cos(x[:, 1]), deriv
    )


def sin_1d() -> AnalyticFunction:
    """u(x) = sin(x) on the line."""

    def deriv(alpha, x):
        return np.sin(x[:, 0] + alpha[0] * np.pi / 2)

    return AnalyticFunction("sin", 1, lambda x: np.sin(x[:, 0]), deriv)


def polynomial_function(coeff: dict[tuple[int, ...], float], dim: int) -> AnalyticFunction:
    """Polynomial from {multi-index: coefficient}; derivatives are exact."""

    def value(x):
        out = np.zeros(x.shape[0])
        for beta, c in coeff.items():
            term = np.full(x.shape[0], c)
            for d, b in enumerate(beta):
                if b:
                    term = term * x[:, d] ** b
            out += term
        return out

    def deriv(alpha, x):
        out = np.zeros(x.shape[0])
        for beta, c in coeff.items():
            if any(a > b for a, b in zip(alpha, beta)):
                continue
            factor = c
            for a, b in zip(alpha, beta):
                factor *= math.factorial(b) / math.factorial(b - a)
            term = np.full(x.shape[0], factor)
            for d, (a, b) in enumerate(zip(alpha, beta)):
                if b - a:
                    term = term * x[:, d] ** (b - a)
            out += term
        return out

    name = "poly" + "+".join(
        "".join(str(b) for b in beta) for beta in sorted(coeff)
    )
    return AnalyticFunction(name, dim, value, deriv)


BUILTIN_FUNCTIONS = {
    "sincos": sin_cos_2d,
    "sin1d": sin_1d,
    "plane": lambda: polynomial_function({(0, 0): 0.5, (1, 0): 1.0, (0, 1): 1.0}, 2),
}


@dataclass(frozen=True)
class ConvergenceRow:
    resolution: int
    h: float
    order: int
    mse: float
    slope_running: float


@dataclass(frozen=True)
class ConvergenceStudy:
    """MSE-vs-spacing table for one analytic function, plus fitted slopes."""

    rows: tuple[ConvergenceRow, ...]
    slopes: dict[int, float]
    seed: int
    config: MlsConfig
    function: str

    def mse_series(self, order: int):
        rows = [r for r in self.rows if r.order == order]
        return (
            np.array([r.resolution for r in rows]),
            np.array([r.h for r in rows]),
            np.array([r.mse for r in rows]),
        )


def convergence_study(
    fn: AnalyticFunction,
    box,
    resolutions,
    cfg: MlsConfig,
    seed: int = 0,
    orders=None,
) -> ConvergenceStudy:
    """Estimate jets on nested random clouds and tabulate errors vs h.

    box is ((lo_1, ..., lo_n), (hi_1, ..., hi_n)); resolutions must be at
    least three strictly increasing point counts.  For each resolution,
    each derivative order contributes
    mse = mean_j sum_{|alpha|=order} |alpha! c - D^alpha u(x_j)|^2;
    slope_running is the log-log slope of mse against h over the rows
    seen so far.  The same seed reproduces the table bit for bit.
    """
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ConfigError("need at least 3 resolutions")
    if any(b >= a for a, b in zip(resolutions[1:], resolutions)):
        raise ConfigError("resolutions must be strictly increasing")
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if orders is None:
        orders = list(range(cfg.m + 1))

    rng = np.random.default_rng(seed)
    all_indices = enumerate_multi_indices(fn.dim, cfg.m)
    rows: list[ConvergenceRow] = []
    seen: dict[int, tuple[list[float], list[float]]] = {o: ([], []) for o in orders}
    for res in resolutions:
        pts = lo + (hi - lo) * rng.random((res, fn.dim))
        cloud = PointCloud(points=pts, values=fn.value(pts))
        jet = estimate_derivatives(cloud, cfg)
        for order in orders:
            sq = np.zeros(res)
            for alpha in all_indices:
                if sum(alpha) != order:
                    continue
                est = multi_index_factorial(alpha) * jet.coefficients[:, jet.index_of(alpha)]
                sq += (est - fn.derivative(alpha, pts)) ** 2
            mse = float(sq.mean())
            hs, es = seen[order]
            hs.append(jet.h)
            es.append(mse)
            slope = _loglog_slope(hs, es)
            rows.append(ConvergenceRow(res, jet.h, order, mse, slope))
    slopes = {o: _loglog_slope(*seen[o]) for o in orders}
    return ConvergenceStudy(
        rows=tuple(rows), slopes=slopes, seed=seed, config=cfg, function=fn.name
    )


def _loglog_slope(hs, errors) -> float:
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 2 or np.any(errors <= 0) or np.any(hs <= 0):
        return float("nan")
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
