"""Gaussian measurement matrices and empirical restricted-isometry checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix, gaussian_matrix, spectral_norm, uniform_in_ball
from . import generator as gen


@dataclass(frozen=True)
class SensingMatrix:
    """Measurement operator A of shape (m, n) plus provenance notes."""

    a: np.ndarray
    provenance: str = "manual"

    def __post_init__(self):
        a = as_matrix(self.a, "sensing matrix")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]


def identity_sensing(n):
    """A = I, the no-compression operator used for reductions and diagnostics."""
    return SensingMatrix(np.eye(int(n)), provenance="identity")


def sample_matrix(m, n, stream):
    """Draw A with i.i.d. N(0, 1/m) entries so A^T A concentrates around I."""
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ValueError("sensing matrix needs m >= 1 and n >= 1, got (%d, %d)" % (m, n))
    a = gaussian_matrix(stream, m, n) / np.sqrt(m)
    return SensingMatrix(a, provenance="gaussian(seed=%d,stream=%d)"
                         % (stream.seed, stream.stream_id))


def gram_deviation(sensing, tol=None):
    """Spectral norm of I - A^T A, the near-isometry defect of the draw."""
    a = sensing.a
    gram_gap = np.eye(a.shape[1]) - a.T @ a
    if tol is None:
        return spectral_norm(gram_gap)
    return spectral_norm(gram_gap, tol=tol)


@dataclass(frozen=True)
class SrecReport:
    """Outcome of a sampled set-restricted eigenvalue check.

    Over sampled latent pairs (z, z'), counts violations of
    ||A (G(z) - G(z'))|| >= tau * ||G(z) - G(z')|| - offset.
    ``worst_margin`` is the most negative (or smallest) slack observed.
    """

    tau: float
    offset: float
    n_pairs: int
    n_violations: int
    worst_margin: float
    margins: np.ndarray = field(repr=False)

    @property
    def violation_rate(self):
        return self.n_violations / self.n_pairs


def srec_check(sensing, net, n_pairs, tau, offset, stream):
    """Empirically test the restricted lower isometry of A on the range of G."""
    n_pairs = int(n_pairs)
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    if offset < 0.0:
        raise ValueError("offset must be nonnegative")
    if sensing.n != net.output_dim:
        raise ValueError("sensing expects n=%d but generator emits %d"
                         % (sensing.n, net.output_dim))
    d, radius = net.input_dim, net.radius
    margins = np.empty(n_pairs)
    for i in range(n_pairs):
        z1 = uniform_in_ball(stream, d, radius)
        z2 = uniform_in_ball(stream, d, radius)
        diff = gen.forward(net, z1) - gen.forward(net, z2)
        margins[i] = np.linalg.norm(sensing.a @ diff) - (tau * np.linalg.norm(diff) - offset)
    n_violations = int(np.sum(margins < 0.0))
    return SrecReport(tau=float(tau), offset=float(offset), n_pairs=n_pairs,
                      n_violations=n_violations, worst_margin=float(margins.min()),
                      margins=margins)
