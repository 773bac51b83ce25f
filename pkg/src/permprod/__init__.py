"""Expectations of permanental minors and their products over Bernoulli 0-1 matrices."""

from .exact import (
    EnsembleParams, Profile, ProfileError, binomial, enumerate_profiles, exact_product,
    exact_single, falling, t6_exact, term_product,
)
from .optimize import RateOptions, RateResult, ls_rs, rate_product, sweep_r
from .rate import ScaledProfile, eta, grad_F, objective_F, rate_single

__version__ = "0.1.0"
