"""Compressed sensing with generative priors.

Recover latent codes of a feedforward generator from compressed linear
measurements by sampling the Gibbs measure of the empirical risk with a
projected Langevin chain, rather than relying on gradient descent alone.
The package bundles the samplers, the assumption validators and a small
low-dimensional chain laboratory behind one CLI (``cscli``).
"""

from .exceptions import (ConfigError, NonFiniteError, PowerIterationError,
                         RejectionCapError, ShapeError,
                         UnsupportedDimensionError, WeightFileError)
from .generator import (Activation, GeneratorNet, NetSpec, forward, jacobian,
                        jvp, load_net, random_net, save_net, vjp)
from .loss import (ConstantsReport, Problem, estimate_constants, grad, loss,
                   make_problem)
from .numerics import RngStream, gaussian_matrix, gaussian_vector, spectral_norm
from .samplers import (ChainState, SamplerConfig, Trajectory, default_radius,
                       default_step_size, gd_step, mh_sgld_step, mixing_step_size,
                       resolve_config, run, sgld_step, smoothness_step_size,
                       warm_start)
from .sensing import (SensingMatrix, SrecReport, gram_deviation, identity_sensing,
                      sample_matrix, srec_check)
from .validators import (SmoothnessEstimate, SufficientConditionReport,
                         check_sufficient_condition, estimate_dissipativity_sensing,
                         estimate_strong_smoothness)

__version__ = "0.1.0"

__all__ = [
    "Activation", "ChainState", "ConfigError", "ConstantsReport", "GeneratorNet",
    "NetSpec", "NonFiniteError", "PowerIterationError", "Problem",
    "RejectionCapError", "RngStream", "SamplerConfig", "SensingMatrix",
    "ShapeError", "SmoothnessEstimate", "SrecReport", "SufficientConditionReport",
    "Trajectory", "UnsupportedDimensionError", "WeightFileError",
    "check_sufficient_condition", "default_radius", "default_step_size",
    "estimate_constants", "estimate_dissipativity_sensing",
    "estimate_strong_smoothness", "forward", "gaussian_matrix", "gaussian_vector",
    "gd_step", "grad", "gram_deviation", "identity_sensing", "jacobian", "jvp",
    "load_net", "loss", "make_problem", "mh_sgld_step", "mixing_step_size",
    "random_net", "resolve_config", "run", "sample_matrix", "save_net",
    "sgld_step", "smoothness_step_size", "spectral_norm", "srec_check",
    "vjp", "warm_start",
]
