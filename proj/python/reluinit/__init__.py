"""Closed-form moments of ReLU networks at Gaussian initialization."""

import json

from ._core import (
    ConfigError,
    DomainError,
    InsufficientDataError,
    backward_variance,
    binomial_sums,
    first_moment,
    forward_backward,
    gautschi_ratio,
    log_gamma,
    norm_growth_factor,
    predict,
    sample_weights,
    schedule,
    second_moment,
)
from . import _core

__all__ = [
    "ConfigError",
    "DomainError",
    "InsufficientDataError",
    "backward_variance",
    "binomial_sums",
    "bounds",
    "first_moment",
    "forward_backward",
    "gautschi_ratio",
    "log_gamma",
    "norm_growth_factor",
    "predict",
    "predict_report",
    "sample_weights",
    "schedule",
    "second_moment",
    "verify",
]


def _options(kwargs):
    out = {}
    for key, value in kwargs.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        out[key] = str(value)
    return out


def verify(**options):
    """Run a Monte Carlo verification and return the report as a dict.

    Keyword names are the config-file keys (shape, schedule, trials, seed, ...).
    """
    return json.loads(_core.verify_json(_options(options)))


def predict_report(**options):
    """Closed-form predictions and schedule characterization as a dict."""
    return json.loads(_core.predict_json(_options(options)))


def bounds(n_max=200, i_max=10000, t_samples=100000, seed=0):
    """Sweep the binomial-sum and Gamma-ratio inequalities."""
    return json.loads(_core.bounds_json(n_max, i_max, t_samples, seed))
