"""Projected stochastic gradient Langevin chains over a latent ball.

Three kernels share one chain-state layout:

* ``sgld_step``: Euler-Maruyama proposal z - eta grad F + sqrt(2 eta / beta) xi,
  rejected (chain stays put) unless it lands inside both the trust ball of
  radius r around the current point and the latent domain ball of radius R.
* ``gd_step``: plain gradient descent with radial projection onto the domain,
  the beta = infinity limit used as the recovery baseline.
* ``mh_sgld_step``: the same proposal wrapped in a lazy Metropolis-Hastings
  correction, which removes discretization bias and is exactly reversible.

Warm starts draw from N(0, 1/(2 L beta) I) conditioned on the domain ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NonFiniteError, RejectionCapError
from .loss import estimate_constants, grad, loss
from .numerics import gaussian_vector, uniform_in_ball

METHODS = ("sgld", "gd", "mh_sgld")

CONSTANTS_STREAM_ID = 909
WARM_START_CAP = 1_000_000
DEFAULT_CONSTANT_SAMPLES = 256


def smoothness_step_size(constants, d):
    """Step-size cap 1/(30 L d) from the descent side of the theory."""
    return 1.0 / (30.0 * constants.loss_smoothness * d)


def mixing_step_size(constants, d, beta):
    """min{1/(30 L d), d/(25 beta D^2)}, the schedule the mixing bound needs."""
    cap = smoothness_step_size(constants, d)
    if not math.isfinite(beta):
        return cap
    return min(cap, d / (25.0 * beta * constants.grad_bound ** 2))


def default_step_size(constants, d, beta=None):
    """Default eta: the beta-aware schedule when beta is given, else the L cap."""
    if beta is None:
        return smoothness_step_size(constants, d)
    return mixing_step_size(constants, d, beta)


def default_radius(eta, d, beta):
    """Trust-ball radius sqrt(10 eta d / beta); infinite when noise is disabled."""
    if not math.isfinite(beta):
        return math.inf
    return math.sqrt(10.0 * eta * d / beta)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain parameters. ``eta`` and ``r`` may be None, meaning: resolve the
    documented defaults from a ConstantsReport at run time. ``beta`` has no
    default on purpose; the inverse temperature is an experiment-level choice.
    math.inf disables the noise term (gradient-descent sentinel)."""

    beta: float
    eta: float | None = None
    r: float | None = None
    k_max: int = 1000
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be positive (math.inf disables noise)")
        if self.eta is not None and self.eta < 0.0:
            raise ValueError("eta must be nonnegative")
        if self.r is not None and not self.r > 0.0:
            raise ValueError("r must be positive")
        if self.k_max < 0:
            raise ValueError("k_max must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class ChainState:
    """Current location plus step bookkeeping; counters always sum to k.

    ``n_lazy`` and ``n_rejected_mh`` stay zero for the plain kernels and count
    the lazy stays and Metropolis rejections of the corrected chain. Cached
    loss and gradient ride along so rejected steps never recompute them.
    """

    z: np.ndarray
    k: int = 0
    n_accepted: int = 0
    n_rejected_ball: int = 0
    n_rejected_domain: int = 0
    n_lazy: int = 0
    n_rejected_mh: int = 0
    f_cache: float | None = field(default=None, repr=False, compare=False)
    grad_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def counters(self):
        return {"n_accepted": self.n_accepted,
                "n_rejected_ball": self.n_rejected_ball,
                "n_rejected_domain": self.n_rejected_domain,
                "n_lazy": self.n_lazy,
                "n_rejected_mh": self.n_rejected_mh}


def _require_resolved(config):
    if config.eta is None or config.r is None:
        raise ValueError("config.eta and config.r must be resolved before stepping; "
                         "use run() or fill them explicitly")


def _cached_grad(state, problem):
    g = state.grad_cache
    if g is None:
        g = grad(problem, state.z)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("gradient is non-finite at k=%d" % state.k)
    return g


def _cached_loss(state, problem):
    f = state.f_cache
    if f is None:
        f = loss(problem, state.z)
    if not math.isfinite(f):
        raise NonFiniteError("loss is non-finite at k=%d" % state.k)
    return f


def warm_start(problem, beta, l_smooth, stream, max_attempts=WARM_START_CAP):
    """Draw z0 from N(0, 1/(2 L beta) I) conditioned on the domain ball.

    beta = inf collapses the law to a point mass at the origin. beta = 0 (or
    L = 0) is the flat limit and falls back to a uniform draw from the ball.
    """
    d, radius = problem.dim, problem.radius
    if math.isinf(beta):
        return np.zeros(d)
    if beta * l_smooth <= 0.0:
        return uniform_in_ball(stream, d, radius)
    sigma = math.sqrt(1.0 / (2.0 * l_smooth * beta))
    for _ in range(int(max_attempts)):
        z = sigma * gaussian_vector(stream, d)
        if np.linalg.norm(z) <= radius:
            return z
    raise RejectionCapError(
        "warm start rejected %d consecutive draws (sigma=%.3e, radius=%.3e)"
        % (max_attempts, sigma, radius))


def sgld_step(state, problem, config, stream):
    """One projected-by-rejection Langevin step.

    The proposal is checked against the trust ball first and the domain ball
    second; whichever test fails is the counter that records the rejection.
    """
    _require_resolved(config)
    g = _cached_grad(state, problem)
    v = state.z - config.eta * g
    if math.isfinite(config.beta):
        xi = gaussian_vector(stream, state.z.shape[0])
        v = v + math.sqrt(2.0 * config.eta / config.beta) * xi
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("proposal is non-finite at k=%d" % state.k)
    dist = np.linalg.norm(v - state.z)
    if dist > config.r:
        return replace(state, k=state.k + 1, n_rejected_ball=state.n_rejected_ball + 1,
                       grad_cache=g)
    if np.linalg.norm(v) > problem.radius:
        return replace(state, k=state.k + 1, n_rejected_domain=state.n_rejected_domain + 1,
                       grad_cache=g)
    return replace(state, z=v, k=state.k + 1, n_accepted=state.n_accepted + 1,
                   f_cache=None, grad_cache=None)


def gd_step(state, problem, config, stream=None):
    """One gradient-descent step with radial projection onto the domain ball."""
    if config.eta is None:
        raise ValueError("config.eta must be resolved before stepping")
    g = _cached_grad(state, problem)
    v = state.z - config.eta * g
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("iterate is non-finite at k=%d" % state.k)
    norm = np.linalg.norm(v)
    if norm > problem.radius:
        v = v * (problem.radius / norm)
    return replace(state, z=v, k=state.k + 1, n_accepted=state.n_accepted + 1,
                   f_cache=None, grad_cache=None)


def mh_acceptance_log_ratio(problem, eta, beta, u, f_u, g_u, w, f_w, g_w):
    """log of the Metropolis ratio for the lazy truncated-Gaussian kernel.

    Only the continuous parts of the transition densities enter: for w != u
    the point-mass components of both kernels cancel. The normalizing
    constants of the two Gaussians are equal and drop out as well.
    """
    forward_sq = float(np.sum((w - u + eta * g_u) ** 2))
    reverse_sq = float(np.sum((u - w + eta * g_w) ** 2))
    return beta / (4.0 * eta) * (forward_sq - reverse_sq) - beta * (f_w - f_u)


def mh_sgld_step(state, problem, config, stream):
    """One step of the lazy Metropolis-adjusted Langevin chain.

    With probability 1/2 the chain is lazy and stays. Otherwise the Langevin
    proposal is drawn; if it leaves the trust or domain ball the move
    collapses to the current point (no acceptance test is needed for a
    self-move). Surviving proposals pass through the Metropolis filter, with
    full rejection forced if the reverse move would be unreachable.
    """
    _require_resolved(config)
    if not math.isfinite(config.beta):
        raise ValueError("mh_sgld requires a finite beta")
    lazy_u = stream.uniforms(1)[0]
    if lazy_u < 0.5:
        return replace(state, k=state.k + 1, n_lazy=state.n_lazy + 1)

    g_u = _cached_grad(state, problem)
    f_u = _cached_loss(state, problem)
    d = state.z.shape[0]
    xi = gaussian_vector(stream, d)
    w = state.z - config.eta * g_u + math.sqrt(2.0 * config.eta / config.beta) * xi
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("proposal is non-finite at k=%d" % state.k)
    dist = np.linalg.norm(w - state.z)
    if dist > config.r:
        return replace(state, k=state.k + 1, n_rejected_ball=state.n_rejected_ball + 1,
                       f_cache=f_u, grad_cache=g_u)
    if np.linalg.norm(w) > problem.radius:
        return replace(state, k=state.k + 1, n_rejected_domain=state.n_rejected_domain + 1,
                       f_cache=f_u, grad_cache=g_u)
    if dist == 0.0:
        # degenerate self-move (eta = 0): trivially accepted
        return replace(state, k=state.k + 1, n_accepted=state.n_accepted + 1,
                       f_cache=f_u, grad_cache=g_u)

    f_w = loss(problem, w)
    g_w = grad(problem, w)
    # reverse reachability: if the current point is not inside the proposal's
    # trust ball intersected with the domain, the ratio is zero
    if dist > config.r or np.linalg.norm(state.z) > problem.radius:
        log_ratio = -math.inf
    else:
        log_ratio = mh_acceptance_log_ratio(
            problem, config.eta, config.beta, state.z, f_u, g_u, w, f_w, g_w)
        if math.isnan(log_ratio):
            raise NonFiniteError("acceptance ratio is non-finite at k=%d" % state.k)
    accept_u = 1.0 - stream.uniforms(1)[0]  # (0, 1], log is finite
    if math.log(accept_u) < log_ratio:
        return replace(state, z=w, k=state.k + 1, n_accepted=state.n_accepted + 1,
                       f_cache=f_w, grad_cache=g_w)
    return replace(state, k=state.k + 1, n_rejected_mh=state.n_rejected_mh + 1,
                   f_cache=f_u, grad_cache=g_u)


_STEP_FUNCS = {"sgld": sgld_step, "gd": gd_step, "mh_sgld": mh_sgld_step}


@dataclass(frozen=True)
class Trajectory:
    """Recorded (k, z, F) checkpoints plus the final chain state and config."""

    method: str
    config: SamplerConfig
    ks: np.ndarray
    zs: np.ndarray
    fs: np.ndarray
    final_state: ChainState

    @property
    def dim(self):
        return self.zs.shape[1]

    def to_csv(self, path):
        """Write checkpoints as k,f_value,z_0..z_{d-1} with round-trip floats."""
        cols = ["k", "f_value"] + ["z_%d" % j for j in range(self.dim)]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(self.ks.shape[0]):
                row = [str(int(self.ks[i])), repr(float(self.fs[i]))]
                row += [repr(float(x)) for x in self.zs[i]]
                fh.write(",".join(row) + "\n")

    def sidecar(self):
        """JSON-ready metadata: resolved config and step counters."""
        cfg = {"beta": self.config.beta, "eta": self.config.eta, "r": self.config.r,
               "k_max": self.config.k_max, "seed": self.config.seed,
               "record_every": self.config.record_every}
        return {"method": self.method, "config": cfg,
                "counters": self.final_state.counters()}


def resolve_config(problem, method, config, constants=None):
    """Fill eta and r defaults from a ConstantsReport; returns (config, constants).

    gd resolves the smoothness cap 1/(30 L d); the stochastic kernels resolve
    the beta-aware schedule. A caller-supplied report skips re-estimation.
    """
    if method not in METHODS:
        raise ValueError("unknown method %r, expected one of %s" % (method, (METHODS,)))
    needs_constants = config.eta is None or constants is None
    if needs_constants and constants is None:
        from .numerics import RngStream
        const_stream = RngStream(config.seed, CONSTANTS_STREAM_ID)
        constants = estimate_constants(problem, DEFAULT_CONSTANT_SAMPLES, const_stream)
    eta = config.eta
    if eta is None:
        beta = None if method == "gd" else config.beta
        eta = default_step_size(constants, problem.dim, beta)
    r = config.r
    if r is None:
        r = default_radius(eta, problem.dim, config.beta)
        if r == 0.0:
            r = math.inf  # eta = 0 proposals never move; keep the ball test vacuous
    return replace(config, eta=float(eta), r=float(r)), constants


def run(problem, method, config, stream, constants=None):
    """Run a chain from a warm start and record every record_every-th state.

    k = 0 and the final state are always recorded. gd and sgld runs sharing
    (seed, stream) draw identical warm starts, which is what paired
    comparisons rely on.
    """
    config, constants = resolve_config(problem, method, config, constants)
    step = _STEP_FUNCS[method]
    z0 = warm_start(problem, config.beta, constants.loss_smoothness, stream)
    state = ChainState(z=np.asarray(z0, dtype=np.float64))

    record_ks = list(range(0, config.k_max + 1, config.record_every))
    if record_ks[-1] != config.k_max:
        record_ks.append(config.k_max)
    n_rec = len(record_ks)
    ks = np.asarray(record_ks, dtype=np.int64)
    zs = np.empty((n_rec, problem.dim))
    fs = np.empty(n_rec)

    next_rec = 0
    for k in range(config.k_max + 1):
        if next_rec < n_rec and k == record_ks[next_rec]:
            zs[next_rec] = state.z
            fs[next_rec] = _cached_loss(state, problem)
            if state.f_cache is None:
                state = replace(state, f_cache=fs[next_rec])
            next_rec += 1
        if k < config.k_max:
            state = step(state, problem, config, stream)

    total = (state.n_accepted + state.n_rejected_ball + state.n_rejected_domain
             + state.n_lazy + state.n_rejected_mh)
    assert total == state.k, "step counters drifted from k"
    return Trajectory(method=method, config=config, ks=ks, zs=zs, fs=fs,
                      final_state=state)
