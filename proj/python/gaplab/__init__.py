"""Gradient blow-up lab for insulated m-convex inclusions.

Thin wrappers over the compiled ``_gaplab`` extension. Reports come back as
plain dicts; sweep tables as lists of dicts with the CSV column names.
"""

import csv
import io
import json

from . import _gaplab
from ._gaplab import (
    ConvergenceError,
    DomainError,
    alpha,
    alpha_k,
    exponents,
    mode_decay,
    p_poly,
    r0_C0,
    solve_g,
    subsolution_threshold,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "alpha",
    "alpha_k",
    "certify_bounds",
    "exponents",
    "fit_rate",
    "mode_decay",
    "p_poly",
    "r0_C0",
    "run_sweep",
    "solve_g",
    "solve_mode",
    "subsolution_threshold",
    "verify_all",
]


def certify_bounds(epsilon, d=3, m=2.0, lambda_=1.0, beta=None, a0=1.0, b0=2.0, tol=1e-6):
    """Envelope certificate for the radial profile; beta defaults to the threshold."""
    return json.loads(_gaplab.certify_bounds(epsilon, d, m, lambda_, beta or 0.0, a0, b0, tol))


def solve_mode(epsilon, **kwargs):
    out = _gaplab.solve_mode(epsilon, **kwargs)
    out["diagnostics"] = json.loads(out["diagnostics"])
    return out


def fit_rate(epsilon, y, target):
    return json.loads(_gaplab.fit_rate(list(epsilon), list(y), target))


def run_sweep(config):
    text = _gaplab.run_sweep(json.dumps(config))
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def verify_all(config):
    return json.loads(_gaplab.verify_all(json.dumps(config)))
