"""Empirical checks of the curvature assumptions behind the sampling theory.

The central quantity is the pairwise inner product
u = <G(z) - G(z'), J(z) (z - z')> against v = ||z - z'||^2. A lower
supporting line u >= alpha v - gamma witnesses strong smoothness; the same
fit applied through the measurement operator witnesses dissipativity of the
actual objective. Fits never cross the sampled cloud: that is an invariant,
enforced to the last ulp.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import generator as gen
from .numerics import gaussian_vector, spectral_norm, uniform_in_ball

GAMMA_TOL = 1e-9
GRID_SIZE = 512


def _sample_pairs(d, n_pairs, stream, law="gaussian", radius=None, base=None):
    """Draw latent pairs; law "gaussian" is N(0, I), "ball" is uniform in B(0, radius).

    A fixed ``base`` pins the second element of every pair, which turns the
    fit into a check around one anchor point instead of a global one.
    """
    n_pairs = int(n_pairs)
    if n_pairs < 2:
        raise ValueError("n_pairs must be >= 2")
    if law not in ("gaussian", "ball"):
        raise ValueError("unknown sampling law %r" % law)
    z1 = np.empty((n_pairs, d))
    z2 = np.empty((n_pairs, d))
    for i in range(n_pairs):
        if law == "gaussian":
            z1[i] = gaussian_vector(stream, d)
            z2[i] = base if base is not None else gaussian_vector(stream, d)
        else:
            z1[i] = uniform_in_ball(stream, d, radius)
            z2[i] = base if base is not None else uniform_in_ball(stream, d, radius)
    return z1, z2


def _fit_support_line(u, v, gamma_tol, grid_size):
    """Largest-slope supporting line under the (v, u) cloud.

    Scans a slope grid over [0, max(u/v)]. gamma(alpha) is the smallest
    nonnegative offset making alpha v - gamma a lower bound. Preference goes
    to the largest slope with (near-)zero offset; otherwise the grid point
    maximizing alpha - gamma/mean(v) wins, which pivots the line around
    typical-scale pairs instead of the single worst one.
    """
    ratios = u / v
    hi = max(float(np.max(ratios)), 0.0)
    alphas = np.linspace(0.0, hi, int(grid_size))
    slack = alphas[:, None] * v[None, :] - u[None, :]
    gammas = np.maximum(np.max(slack, axis=1), 0.0)
    exact = np.flatnonzero((gammas <= gamma_tol) & (alphas > 0.0))
    if exact.size:
        idx = int(exact[-1])
    else:
        idx = int(np.argmax(alphas - gammas / float(np.mean(v))))
    alpha, gamma = float(alphas[idx]), float(gammas[idx])
    # rounding guard: the reported line must never cross the cloud
    while np.any(u < alpha * v - gamma):
        gamma = np.nextafter(gamma, np.inf)
    return alpha, gamma, np.column_stack([alphas, gammas])


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Supporting-line fit (alpha, gamma) plus the full scan and raw cloud."""

    alpha: float
    gamma: float
    n_pairs: int
    sampling_law: str
    outside_theory: bool
    curve: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def to_json_dict(self):
        return {"alpha": self.alpha, "gamma": self.gamma, "n_pairs": self.n_pairs,
                "sampling_law": self.sampling_law, "outside_theory": self.outside_theory}


def _pair_cloud(net, z1, z2):
    """u_i = <G(z)-G(z'), J(z)(z-z')> and v_i = ||z-z'||^2, dropping zero pairs."""
    us, vs, diffs, jdirs = [], [], [], []
    for a, b in zip(z1, z2):
        dz = a - b
        v = float(dz @ dz)
        if v == 0.0:
            continue
        dg = gen.forward(net, a) - gen.forward(net, b)
        jdz = gen.jvp(net, a, dz)
        us.append(float(np.dot(dg, jdz)))
        vs.append(v)
        diffs.append(dg)
        jdirs.append(jdz)
    if not us:
        raise ValueError("all sampled pairs were degenerate")
    return np.asarray(us), np.asarray(vs), diffs, jdirs


def estimate_strong_smoothness(net, n_pairs, stream, ball_constrained=False,
                               base=None, gamma_tol=GAMMA_TOL, grid_size=GRID_SIZE):
    """Fit the strong-smoothness supporting line for the generator alone."""
    if net.outside_theory:
        warnings.warn("generator uses relu, which is outside the smoothness theory")
    law = "ball" if ball_constrained else "gaussian"
    z1, z2 = _sample_pairs(net.input_dim, n_pairs, stream, law=law,
                           radius=net.radius, base=base)
    u, v, _, _ = _pair_cloud(net, z1, z2)
    alpha, gamma, curve = _fit_support_line(u, v, gamma_tol, grid_size)
    return SmoothnessEstimate(alpha=alpha, gamma=gamma, n_pairs=len(u),
                              sampling_law=law, outside_theory=net.outside_theory,
                              curve=curve, u=u, v=v)


def estimate_dissipativity_sensing(net, sensing, n_pairs, stream,
                                   ball_constrained=False, base=None,
                                   gamma_tol=GAMMA_TOL, grid_size=GRID_SIZE):
    """Same fit through the measurement operator(s).

    ``sensing`` may be a single operator or a sequence; the cloud pools every
    (pair, operator) combination. With A = I this reduces to
    estimate_strong_smoothness on the same pairs, bit for bit.
    """
    operators = sensing if isinstance(sensing, (list, tuple)) else [sensing]
    if not operators:
        raise ValueError("need at least one sensing operator")
    law = "ball" if ball_constrained else "gaussian"
    z1, z2 = _sample_pairs(net.input_dim, n_pairs, stream, law=law,
                           radius=net.radius, base=base)
    u0, v0, diffs, jdirs = _pair_cloud(net, z1, z2)
    us, vs = [], []
    for op in operators:
        a = op.a
        for i in range(len(v0)):
            us.append(float(np.dot(a @ diffs[i], a @ jdirs[i])))
            vs.append(v0[i])
    u, v = np.asarray(us), np.asarray(vs)
    alpha, gamma, curve = _fit_support_line(u, v, gamma_tol, grid_size)
    return SmoothnessEstimate(alpha=alpha, gamma=gamma, n_pairs=len(u),
                              sampling_law=law, outside_theory=net.outside_theory,
                              curve=curve, u=u, v=v)


@dataclass(frozen=True)
class SufficientConditionReport:
    """Sampled (iota, kappa, M) and the sufficient condition 2 iota^2 > M kappa.

    When the condition holds, the implied supporting line has slope at least
    ``predicted_alpha`` = iota^2 - kappa M / 2 with zero offset.
    """

    iota: float
    kappa: float
    jac_lipschitz: float
    condition_holds: bool
    predicted_alpha: float
    outside_theory: bool
    n_pairs: int

    def to_json_dict(self):
        return {"iota": self.iota, "kappa": self.kappa,
                "jac_lipschitz": self.jac_lipschitz,
                "condition_holds": self.condition_holds,
                "predicted_alpha": self.predicted_alpha,
                "outside_theory": self.outside_theory, "n_pairs": self.n_pairs}


def check_sufficient_condition(net, n_pairs, stream, ball_constrained=False):
    """Estimate (iota, kappa, M) on sampled pairs and test 2 iota^2 > M kappa.

    Uses the same pair-sampling law as estimate_strong_smoothness, so equal
    streams see equal pairs and the implied slope can be compared directly.
    """
    if net.outside_theory:
        warnings.warn("generator uses relu, which is outside the smoothness theory")
    law = "ball" if ball_constrained else "gaussian"
    z1, z2 = _sample_pairs(net.input_dim, n_pairs, stream, law=law, radius=net.radius)
    iota, kappa, jac_lip = np.inf, 0.0, 0.0
    n_used = 0
    for a, b in zip(z1, z2):
        dz = float(np.linalg.norm(a - b))
        if dz == 0.0:
            continue
        ratio = float(np.linalg.norm(gen.forward(net, a) - gen.forward(net, b))) / dz
        iota = min(iota, ratio)
        kappa = max(kappa, ratio)
        jac_lip = max(jac_lip, spectral_norm(gen.jacobian(net, a) - gen.jacobian(net, b)) / dz)
        n_used += 1
    if n_used == 0:
        raise ValueError("all sampled pairs were degenerate")
    condition = 2.0 * iota ** 2 > jac_lip * kappa
    return SufficientConditionReport(
        iota=float(iota), kappa=float(kappa), jac_lipschitz=float(jac_lip),
        condition_holds=bool(condition),
        predicted_alpha=float(iota ** 2 - kappa * jac_lip / 2.0),
        outside_theory=net.outside_theory, n_pairs=n_used)
