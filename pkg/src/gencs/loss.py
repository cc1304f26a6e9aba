"""Measurement-misfit objective F(z) = ||y - A G(z)||^2 and its exact gradient.

The gradient here is the exact derivative 2 J^T A^T (A G(z) - y). Reported
regularity constants follow the un-doubled convention L = (M B + kappa^2)
||A^T A||, so empirical Lipschitz checks on this gradient carry a factor 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import generator as gen
from .exceptions import ShapeError
from .numerics import as_vector, spectral_norm, uniform_in_ball, uniform_on_sphere

CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class Problem:
    """Bundle of generator, sensing operator and observation vector.

    When ``z_star`` is given, construction checks y = A G(z_star) + noise to
    within 1e-12 so stored ground truth can never drift from the data.
    """

    generator: object
    sensing: object
    y: np.ndarray
    z_star: np.ndarray | None = None
    noise: np.ndarray | None = None

    def __post_init__(self):
        y = as_vector(self.y, "observation y")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if self.sensing.n != self.generator.output_dim:
            raise ShapeError("sensing expects n=%d but generator emits %d"
                             % (self.sensing.n, self.generator.output_dim))
        if y.shape[0] != self.sensing.m:
            raise ShapeError("y has length %d but sensing emits m=%d"
                             % (y.shape[0], self.sensing.m))
        if self.z_star is not None:
            z_star = as_vector(self.z_star, "z_star")
            z_star.setflags(write=False)
            object.__setattr__(self, "z_star", z_star)
            expected = self.sensing.a @ gen.forward(self.generator, z_star)
            if self.noise is not None:
                noise = as_vector(self.noise, "noise")
                noise.setflags(write=False)
                object.__setattr__(self, "noise", noise)
                expected = expected + noise
            gap = float(np.max(np.abs(self.y - expected)))
            if gap > CONSISTENCY_TOL:
                raise ValueError(
                    "y does not equal A G(z_star) + noise (max gap %.3e)" % gap)

    @property
    def dim(self):
        return self.generator.input_dim

    @property
    def radius(self):
        return self.generator.radius


def make_problem(net, sensing, z_star, noise=None):
    """Build a consistent Problem by synthesizing y = A G(z_star) + noise."""
    y = sensing.a @ gen.forward(net, z_star)
    if noise is not None:
        y = y + as_vector(noise, "noise")
    return Problem(generator=net, sensing=sensing, y=y, z_star=z_star, noise=noise)


def loss(problem, z):
    """F(z) = ||y - A G(z)||^2."""
    residual = problem.y - problem.sensing.a @ gen.forward(problem.generator, z)
    return float(residual @ residual)


def grad(problem, z):
    """Exact gradient 2 J(z)^T A^T (A G(z) - y)."""
    residual = problem.sensing.a @ gen.forward(problem.generator, z) - problem.y
    return 2.0 * gen.vjp(problem.generator, z, problem.sensing.a.T @ residual)


def loss_batch(problem, zs):
    """Row-wise F over an (N, d) batch of latents."""
    residual = gen.forward_batch(problem.generator, zs) @ problem.sensing.a.T - problem.y
    return np.einsum("ij,ij->i", residual, residual)


def grad_batch(problem, zs):
    """Row-wise exact gradient over an (N, d) batch of latents."""
    residual = gen.forward_batch(problem.generator, zs) @ problem.sensing.a.T - problem.y
    return 2.0 * gen.vjp_batch(problem.generator, zs, residual @ problem.sensing.a)


@dataclass(frozen=True)
class ConstantsReport:
    """Sampled regularity constants of a problem instance.

    output_bound    sup ||G(z)|| over the sampled latent set (B)
    iota, kappa     min and max sampled ||G(z)-G(z')|| / ||z-z'||
    jac_lipschitz   max sampled ||J(z)-J(z')|| / ||z-z'|| (M)
    gram_norm       ||A^T A||
    loss_smoothness (M B + kappa^2) ||A^T A||, un-doubled convention (L)
    grad_bound      kappa^2 ||A^T A|| (D)
    grad_bound_diam grad_bound * 2 radius, the diameter-absorbed variant
    """

    output_bound: float
    iota: float
    kappa: float
    jac_lipschitz: float
    gram_norm: float
    loss_smoothness: float
    grad_bound: float
    grad_bound_diam: float
    n_samples: int
    method: str = "sampled"

    def __post_init__(self):
        if self.iota > self.kappa:
            raise ValueError("iota must not exceed kappa")


def _latent_samples(net, n_points, stream):
    """Latent sample set: every fourth point on the boundary sphere, rest uniform.

    The boundary points matter because sup ||G|| over a ball is typically
    attained at the boundary; interior-only sampling would bias B low.
    """
    d, radius = net.input_dim, net.radius
    points = np.empty((n_points, d))
    for i in range(n_points):
        if i % 4 == 0:
            points[i] = radius * uniform_on_sphere(stream, d)
        else:
            points[i] = uniform_in_ball(stream, d, radius)
    return points


def estimate_constants(problem, n_samples, stream):
    """Estimate (B, iota, kappa, M) from sampled pairs and compose L and D.

    Sampled extrema are lower bounds of the true suprema; they tighten as
    n_samples grows and are tagged method="sampled" in the report.
    """
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    net = problem.generator
    points = _latent_samples(net, 2 * n_samples, stream)
    outputs = [gen.forward(net, p) for p in points]
    output_bound = max(float(np.linalg.norm(x)) for x in outputs)

    iota, kappa, jac_lip = np.inf, 0.0, 0.0
    jacs = [gen.jacobian(net, p) for p in points]
    for i in range(n_samples):
        z1, z2 = points[2 * i], points[2 * i + 1]
        dz = float(np.linalg.norm(z1 - z2))
        if dz == 0.0:
            continue
        ratio = float(np.linalg.norm(outputs[2 * i] - outputs[2 * i + 1])) / dz
        iota = min(iota, ratio)
        kappa = max(kappa, ratio)
        jac_lip = max(jac_lip, spectral_norm(jacs[2 * i] - jacs[2 * i + 1]) / dz)

    gram_norm = spectral_norm(problem.sensing.a) ** 2
    loss_smoothness = (jac_lip * output_bound + kappa ** 2) * gram_norm
    grad_bound = kappa ** 2 * gram_norm
    return ConstantsReport(
        output_bound=output_bound, iota=float(iota), kappa=float(kappa),
        jac_lipschitz=float(jac_lip), gram_norm=float(gram_norm),
        loss_smoothness=float(loss_smoothness), grad_bound=float(grad_bound),
        grad_bound_diam=float(grad_bound * 2.0 * net.radius),
        n_samples=n_samples, method="sampled")
