"""Seeded random streams and the small dense linear-algebra kernel set.

Everything downstream draws randomness through :class:`RngStream` so that any
run of the package is bit-reproducible from (seed, stream_id) pairs, including
runs that split work across threads.
"""

from __future__ import annotations

import numpy as np

from .exceptions import PowerIterationError, ShapeError

POWER_ITERATION_CAP = 10_000
SPECTRAL_TOL = 1e-10


def as_vector(x, name="vector"):
    """Validate ``x`` as a finite 1-d float64 array with at least one entry."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ShapeError("%s must be a nonempty 1-d array, got shape %s" % (name, (v.shape,)))
    if not np.all(np.isfinite(v)):
        raise ValueError("%s contains non-finite entries" % name)
    return v


def as_matrix(x, name="matrix"):
    """Validate ``x`` as a finite 2-d float64 array with at least one entry."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.size < 1:
        raise ShapeError("%s must be a nonempty 2-d array, got shape %s" % (name, (m.shape,)))
    if not np.all(np.isfinite(m)):
        raise ValueError("%s contains non-finite entries" % name)
    return m


class RngStream:
    """Counter-based uniform stream keyed by (seed, stream_id).

    Identical (seed, stream_id) pairs reproduce the same draw sequence
    bit-for-bit; distinct stream_ids are statistically independent, so
    parallel workers can split ids without sharing mutable state.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        if self.seed >> 64 or self.stream_id >> 64:
            raise ValueError("seed and stream_id must fit in 64 bits")
        self._gen = np.random.Generator(
            np.random.Philox(key=self.seed + (self.stream_id << 64)))

    def split(self, stream_id):
        """Fresh independent stream with the same seed and a new id."""
        return RngStream(self.seed, stream_id)

    def uniforms(self, n):
        """``n`` uniform draws in [0, 1)."""
        return self._gen.random(int(n))

    def __repr__(self):
        return "RngStream(seed=%d, stream_id=%d)" % (self.seed, self.stream_id)


def gaussian_vector(stream, d):
    """``d`` independent N(0, 1) draws via Box-Muller on the stream's uniforms."""
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1, got %d" % d)
    n_pairs = (d + 1) // 2
    u = stream.uniforms(2 * n_pairs)
    # pair i consumes uniforms (2i, 2i+1) so prefixes are request-size stable
    u1 = 1.0 - u[0::2]  # (0, 1], keeps the log finite
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    z = np.empty(2 * n_pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:d]


def gaussian_matrix(stream, m, n):
    """(m, n) array of independent N(0, 1) draws."""
    return gaussian_vector(stream, int(m) * int(n)).reshape(int(m), int(n))


def uniform_on_sphere(stream, d):
    """Uniform draw from the unit sphere in R^d."""
    while True:
        g = gaussian_vector(stream, d)
        norm = np.linalg.norm(g)
        if norm > 0.0:
            return g / norm


def uniform_in_ball(stream, d, radius):
    """Uniform draw from the closed ball of the given radius in R^d."""
    direction = uniform_on_sphere(stream, d)
    u = stream.uniforms(1)[0]
    return radius * u ** (1.0 / d) * direction


def matvec(m_mat, v):
    """Matrix-vector product with shape validation."""
    m_mat = np.asarray(m_mat, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m_mat.ndim != 2 or v.ndim != 1 or m_mat.shape[1] != v.shape[0]:
        raise ShapeError(
            "matvec shape mismatch: matrix %s vs vector %s" % (m_mat.shape, v.shape))
    return m_mat @ v


def matvec_transpose(m_mat, v):
    """Product of the transpose with a vector, with shape validation."""
    m_mat = np.asarray(m_mat, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m_mat.ndim != 2 or v.ndim != 1 or m_mat.shape[0] != v.shape[0]:
        raise ShapeError(
            "matvec_transpose shape mismatch: matrix %s vs vector %s" % (m_mat.shape, v.shape))
    return m_mat.T @ v


def spectral_norm(m_mat, tol=SPECTRAL_TOL, max_iter=POWER_ITERATION_CAP):
    """Largest singular value via power iteration on M^T M.

    Raises PowerIterationError (carrying the last estimate) if the relative
    change between sweeps does not drop below ``tol`` within ``max_iter``.
    """
    a = as_matrix(m_mat, "spectral_norm argument")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    n = a.shape[1]
    # Deterministic start with a small tilt so v0 is not orthogonal to the
    # leading right singular vector of any fixed matrix encountered here.
    v = np.ones(n) + np.linspace(0.0, 0.5, n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(int(max_iter)):
        w = a @ v
        sigma_new = np.linalg.norm(w)
        if sigma_new == 0.0:
            return 0.0
        v = a.T @ w
        v_norm = np.linalg.norm(v)
        if v_norm == 0.0:
            return float(sigma_new)
        v /= v_norm
        if abs(sigma_new - sigma) <= tol * sigma_new:
            return float(sigma_new)
        sigma = sigma_new
    raise PowerIterationError(
        "power iteration did not converge in %d sweeps (last estimate %.6e)"
        % (max_iter, sigma), last_estimate=float(sigma))
