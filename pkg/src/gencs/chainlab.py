"""Low-dimensional chain diagnostics against an exact quadrature target.

Everything here is restricted to latent dimension 1 or 2, where the Gibbs law
pi proportional to exp(-beta F) on the domain ball can be tabulated on a grid
accurately enough to serve as ground truth for total-variation curves,
conductance scans and warm-start ratios.

Histogram binning always equals the quadrature grid it is compared against,
so every TV number carries the same binning bias on both sides. Mixing curves
default to a coarser grid (128 cells at d=1) than the density default (2048):
with a few thousand chains, the Monte Carlo noise floor of a 2048-cell
histogram would swamp the signal being measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonFiniteError, UnsupportedDimensionError
from .generator import Activation, GeneratorNet
from .loss import Problem, estimate_constants, grad_batch, loss_batch
from .numerics import RngStream, gaussian_matrix, uniform_in_ball
from .samplers import resolve_config
from .sensing import identity_sensing

GRID_RESOLUTION_1D = 2048
GRID_RESOLUTION_2D = 256
MIXING_RESOLUTION_1D = 128
MIXING_RESOLUTION_2D = 32
MIXING_STREAM_ID = 303
NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class GibbsGrid:
    """Tabulated Gibbs density exp(-beta F)/Lambda over a domain-ball grid.

    ``points`` are in-domain cell centers, ``density`` the normalized density
    at those centers, ``partition`` the quadrature value of Lambda (also kept
    as ``log_partition`` because extreme beta can overflow the plain value).
    """

    dim: int
    beta: float
    radius: float
    resolution: int
    cell_volume: float
    points: np.ndarray = field(repr=False)
    f_values: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    partition: float = 0.0
    log_partition: float = 0.0
    index_map: np.ndarray | None = field(default=None, repr=False)

    @property
    def cell_masses(self):
        return self.density * self.cell_volume


def gibbs_grid(problem, beta, resolution=None):
    """Tabulate pi on a uniform grid over the domain ball (d <= 2 only)."""
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    d, radius = problem.dim, problem.radius
    if d == 1:
        res = int(resolution or GRID_RESOLUTION_1D)
        delta = 2.0 * radius / res
        centers = -radius + (np.arange(res) + 0.5) * delta
        points = centers[:, None]
        cell_volume = delta
        index_map = None
    elif d == 2:
        res = int(resolution or GRID_RESOLUTION_2D)
        delta = 2.0 * radius / res
        axis = -radius + (np.arange(res) + 0.5) * delta
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        inside = xx ** 2 + yy ** 2 <= radius ** 2
        points = np.column_stack([xx[inside], yy[inside]])
        cell_volume = delta * delta
        index_map = np.full((res, res), -1, dtype=np.int64)
        index_map[inside] = np.arange(int(np.sum(inside)))
    else:
        raise UnsupportedDimensionError(
            "grid diagnostics support d in {1, 2}, got d=%d" % d)

    f_values = loss_batch(problem, points)
    if not np.all(np.isfinite(f_values)):
        raise NonFiniteError("objective is non-finite on the diagnostic grid")
    f_min = float(np.min(f_values))
    w = np.exp(-beta * (f_values - f_min))
    w_sum = float(np.sum(w)) * cell_volume
    density = w / w_sum
    log_partition = math.log(w_sum) - beta * f_min
    try:
        partition = math.exp(log_partition)
    except OverflowError:
        partition = math.inf
    return GibbsGrid(dim=d, beta=float(beta), radius=float(radius), resolution=res,
                     cell_volume=float(cell_volume), points=points, f_values=f_values,
                     density=density, partition=partition, log_partition=log_partition,
                     index_map=index_map)


def _histogram(samples, grid):
    """Per-cell sample fractions plus the fraction falling outside the grid."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != grid.dim:
        raise ValueError("samples have shape %s, expected (N, %d)" % (x.shape, grid.dim))
    if x.shape[0] < 1:
        raise ValueError("need at least one sample")
    n = x.shape[0]
    res, radius = grid.resolution, grid.radius
    delta = 2.0 * radius / res
    idx = np.floor((x + radius) / delta).astype(np.int64)
    in_box = np.all((idx >= 0) & (idx < res), axis=1)
    if grid.dim == 1:
        cell = idx[:, 0]
        valid = in_box
    else:
        flat = idx[:, 0].clip(0, res - 1) * res + idx[:, 1].clip(0, res - 1)
        cell = grid.index_map.reshape(-1)[flat]
        valid = in_box & (cell >= 0)
    counts = np.bincount(cell[valid], minlength=grid.points.shape[0]).astype(np.float64)
    outside = float(n - np.sum(valid)) / n
    return counts / n, outside


def tv_distance(samples, grid):
    """Total variation between a sample histogram and the grid law.

    Binning equals the quadrature grid, so the estimate carries a binning
    bias of order (cell size) times the density's Lipschitz constant, plus
    the usual multinomial noise in the counts.
    """
    hist, outside = _histogram(samples, grid)
    return 0.5 * (float(np.sum(np.abs(hist - grid.cell_masses))) + outside)


@dataclass(frozen=True)
class MixingCurve:
    """TV-to-target at chain checkpoints, with Monte Carlo standard errors."""

    ks: np.ndarray
    tv: np.ndarray
    stderr: np.ndarray
    method: str
    n_chains: int
    resolution: int

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,tv,mc_stderr\n")
            for i in range(self.ks.shape[0]):
                fh.write("%d,%s,%s\n" % (int(self.ks[i]), repr(float(self.tv[i])),
                                         repr(float(self.stderr[i]))))


def _batch_warm_start(problem, beta, l_smooth, n_chains, stream, cap=1000):
    d, radius = problem.dim, problem.radius
    if math.isinf(beta):
        return np.zeros((n_chains, d))
    if beta * l_smooth <= 0.0:
        out = np.empty((n_chains, d))
        for i in range(n_chains):
            out[i] = uniform_in_ball(stream, d, radius)
        return out
    sigma = math.sqrt(1.0 / (2.0 * l_smooth * beta))
    out = np.empty((n_chains, d))
    need = np.arange(n_chains)
    for _ in range(cap):
        draw = sigma * gaussian_matrix(stream, need.shape[0], d)
        ok = np.linalg.norm(draw, axis=1) <= radius
        out[need[ok]] = draw[ok]
        need = need[~ok]
        if need.shape[0] == 0:
            return out
    raise RuntimeError("batch warm start failed to fill %d chains" % need.shape[0])


def _tv_with_se(zs, grid):
    hist, outside = _histogram(zs, grid)
    masses = grid.cell_masses
    tv = 0.5 * (float(np.sum(np.abs(hist - masses))) + outside)
    signed = float(np.sum(np.sign(hist - masses) * hist)) + outside
    n = zs.shape[0]
    se = math.sqrt(max(1.0 - signed ** 2, 0.0) / (4.0 * n))
    return tv, se


def mixing_curve(problem, config, n_chains, checkpoints, method="sgld",
                 resolution=None, stream=None, constants=None):
    """Run n_chains independent chains and record TV to the grid law.

    Chains are advanced as one vectorized batch fed from a single stream,
    which is deterministic in (config.seed, stream id) like everything else.
    Checkpoints must be nondecreasing; k = 0 measures the warm-start law.
    """
    if method not in ("sgld", "mh_sgld"):
        raise ValueError("mixing_curve supports sgld or mh_sgld, got %r" % method)
    checkpoints = sorted(int(k) for k in checkpoints)
    if not checkpoints or checkpoints[0] < 0:
        raise ValueError("checkpoints must be nonnegative")
    n_chains = int(n_chains)
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    if resolution is None:
        resolution = MIXING_RESOLUTION_1D if problem.dim == 1 else MIXING_RESOLUTION_2D
    grid = gibbs_grid(problem, config.beta, resolution=resolution)
    config, constants = resolve_config(problem, method, config, constants)
    if stream is None:
        stream = RngStream(config.seed, MIXING_STREAM_ID)

    eta, beta, r, radius = config.eta, config.beta, config.r, problem.radius
    noise_scale = math.sqrt(2.0 * eta / beta) if math.isfinite(beta) else 0.0
    zs = _batch_warm_start(problem, beta, constants.loss_smoothness, n_chains, stream)

    tvs, ses = [], []
    if checkpoints[0] == 0:
        tv, se = _tv_with_se(zs, grid)
        tvs.append(tv)
        ses.append(se)
        remaining = checkpoints[1:]
    else:
        remaining = checkpoints

    if method == "mh_sgld":
        f_cur = loss_batch(problem, zs)
        g_cur = grad_batch(problem, zs)
    k = 0
    for target in remaining:
        while k < target:
            if method == "sgld":
                g = grad_batch(problem, zs)
                v = zs - eta * g + noise_scale * gaussian_matrix(stream, n_chains, problem.dim)
                dist_ok = np.einsum("ij,ij->i", v - zs, v - zs) <= r * r
                dom_ok = np.einsum("ij,ij->i", v, v) <= radius * radius
                accept = dist_ok & dom_ok
                zs = np.where(accept[:, None], v, zs)
            else:
                lazy_u = stream.uniforms(n_chains)
                xi = gaussian_matrix(stream, n_chains, problem.dim)
                accept_u = stream.uniforms(n_chains)
                v = zs - eta * g_cur + noise_scale * xi
                dist_sq = np.einsum("ij,ij->i", v - zs, v - zs)
                live = ((lazy_u >= 0.5) & (dist_sq <= r * r) & (dist_sq > 0.0)
                        & (np.einsum("ij,ij->i", v, v) <= radius * radius))
                f_w = loss_batch(problem, v)
                g_w = grad_batch(problem, v)
                fwd = np.einsum("ij,ij->i", v - zs + eta * g_cur, v - zs + eta * g_cur)
                rev = np.einsum("ij,ij->i", zs - v + eta * g_w, zs - v + eta * g_w)
                log_ratio = beta / (4.0 * eta) * (fwd - rev) - beta * (f_w - f_cur)
                accept = live & (np.log(1.0 - accept_u) < log_ratio)
                zs = np.where(accept[:, None], v, zs)
                f_cur = np.where(accept, f_w, f_cur)
                g_cur = np.where(accept[:, None], g_w, g_cur)
            k += 1
        tv, se = _tv_with_se(zs, grid)
        tvs.append(tv)
        ses.append(se)
    return MixingCurve(ks=np.asarray(checkpoints, dtype=np.int64),
                       tv=np.asarray(tvs), stderr=np.asarray(ses),
                       method=method, n_chains=n_chains, resolution=grid.resolution)


@dataclass(frozen=True)
class CheegerReport:
    """Best (smallest) boundary-to-mass ratio found over the cut dictionary."""

    value: float
    cut: str


def cheeger_estimate(grid):
    """Conductance upper bound by scanning cuts of the grid law.

    d = 1 scans every cell boundary, which is exhaustive for threshold cuts.
    d = 2 scans axis-aligned halfspaces and origin-centered disks.
    """
    masses = grid.cell_masses
    if grid.dim == 1:
        density = grid.density
        cum = np.cumsum(masses)
        total = cum[-1]
        best, best_cut = math.inf, ""
        for j in range(1, grid.resolution):
            left = cum[j - 1]
            small = min(left, total - left)
            if small <= 0.0:
                continue
            boundary = 0.5 * (density[j - 1] + density[j])
            ratio = boundary / small
            if ratio < best:
                best = ratio
                best_cut = "threshold z <= %.6g" % (-grid.radius + j * 2.0 * grid.radius
                                                    / grid.resolution)
        return CheegerReport(value=float(best), cut=best_cut)

    res, radius = grid.resolution, grid.radius
    delta = 2.0 * radius / res
    dens2 = np.zeros((res, res))
    mass2 = np.zeros((res, res))
    dens2[grid.index_map >= 0] = grid.density[grid.index_map[grid.index_map >= 0]]
    mass2[grid.index_map >= 0] = masses[grid.index_map[grid.index_map >= 0]]
    total = float(np.sum(mass2))
    best, best_cut = math.inf, ""
    for axis in (0, 1):
        m = mass2 if axis == 0 else mass2.T
        d2 = dens2 if axis == 0 else dens2.T
        line_mass = np.sum(m, axis=1)
        cum = np.cumsum(line_mass)
        for j in range(1, res):
            small = min(cum[j - 1], total - cum[j - 1])
            if small <= 0.0:
                continue
            boundary = float(np.sum(0.5 * (d2[j - 1, :] + d2[j, :]))) * delta
            ratio = boundary / small
            if ratio < best:
                best = ratio
                best_cut = "halfspace axis %d at %.6g" % (axis, -radius + j * delta)
    norms = np.linalg.norm(grid.points, axis=1)
    order = np.argsort(norms)
    cum_mass = np.cumsum(masses[order])
    for frac in np.linspace(0.1, 0.9, 17):
        r_cut = frac * radius
        inside = float(cum_mass[np.searchsorted(norms[order], r_cut, side="right") - 1]) \
            if np.any(norms <= r_cut) else 0.0
        small = min(inside, total - inside)
        if small <= 0.0:
            continue
        ring = (norms >= r_cut - 0.5 * delta) & (norms < r_cut + 0.5 * delta)
        boundary = float(np.sum(masses[ring])) / delta
        ratio = boundary / small
        if ratio < best:
            best = ratio
            best_cut = "disk of radius %.6g" % r_cut
    return CheegerReport(value=float(best), cut=best_cut)


def warm_start_lambda(grid, l_smooth, beta):
    """Density-ratio bound of the warm start N(0, 1/(2 L beta) I) against pi.

    Both laws are tabulated on the same grid; a cell where pi underflows to
    zero while the warm start does not means the ratio diverges, which is
    reported as an error instead of a number.
    """
    sq_norms = np.einsum("ij,ij->i", grid.points, grid.points)
    expo = -beta * l_smooth * sq_norms
    w = np.exp(expo - np.max(expo))
    mu_density = w / (float(np.sum(w)) * grid.cell_volume)
    bad = (grid.density <= 0.0) & (mu_density > 0.0)
    if np.any(bad):
        raise ValueError("warm-start ratio diverges: pi underflows to zero on "
                         "%d cells with positive warm-start mass" % int(np.sum(bad)))
    return float(np.max(mu_density / grid.density))


def gibbs_expected_loss(grid, problem=None):
    """Quadrature value of E_pi[F], using the objective cached on the grid."""
    return float(np.sum(grid.f_values * grid.cell_masses))


def quadratic_problem(radius=10.0, z_star=0.0):
    """d = 1 identity generator and identity sensing: F(z) = (z - z_star)^2."""
    net = GeneratorNet([(np.array([[1.0]]), np.array([0.0]), Activation("identity"))],
                       radius=radius)
    return Problem(generator=net, sensing=identity_sensing(1),
                   y=np.array([float(z_star)]), z_star=np.array([float(z_star)]))


def double_well_problem(sharpness=0.8, radius=3.0):
    """d = 1 bimodal objective built from a two-unit tanh generator.

    The observation sits outside the generator's range, which makes
    F(z) = ||y - G(z)||^2 a symmetric double well with minima near
    z = +-2/sharpness scale and a barrier at the origin; larger sharpness
    deepens the barrier.
    """
    s = float(sharpness)
    net = GeneratorNet([(np.array([[s], [s]]), np.array([-s, s]), Activation("tanh"))],
                       radius=radius)
    a = math.tanh(s)
    return Problem(generator=net, sensing=identity_sensing(2),
                   y=np.array([a, -a]))


def chainlab_constants(problem, n_samples=256, seed=0):
    """Convenience wrapper: sampled constants with the lab's reserved stream."""
    return estimate_constants(problem, n_samples, RngStream(seed, MIXING_STREAM_ID + 1))
