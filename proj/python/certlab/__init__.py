"""Randomized-smoothing certification and impossibility bounds."""

import json as _json

from ._core import (
    Distribution,
    __version__,
    box_flip_threshold,
    box_overlap_prob,
    build_halfspace,
    certify,
    clopper_pearson_lower,
    crossing_scan,
    gaussian_lp_radius,
    gengauss_bound,
    iid_bound,
    norm_cdf,
    norm_ppf,
    uniform_l1_bound,
    uniform_linf_bound,
    verify_suites,
)
from ._core import cli as _cli
from ._core import run_suite as _run_suite


def verify(name, **params):
    """Run a verification suite and return its report as a dict."""
    return _json.loads(_run_suite(name, **params))


def main(args):
    """Run the command-line interface in-process; returns (exit_code, stdout, stderr)."""
    return _cli([str(a) for a in args])


__all__ = [
    "Distribution",
    "__version__",
    "box_flip_threshold",
    "box_overlap_prob",
    "build_halfspace",
    "certify",
    "clopper_pearson_lower",
    "crossing_scan",
    "gaussian_lp_radius",
    "gengauss_bound",
    "iid_bound",
    "main",
    "norm_cdf",
    "norm_ppf",
    "uniform_l1_bound",
    "uniform_linf_bound",
    "verify",
    "verify_suites",
]
