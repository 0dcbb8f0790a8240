"""Nonparametric HMM emission estimation with per-state model selection."""

import json

import numpy as np

from . import _core
from ._core import (
    NphmmError,
    benchmark_emissions,
    benchmark_transition,
    rate_regression,
    schema_version,
    simplex_project,
    stationary_distribution,
    true_density,
)

__all__ = [
    "NphmmError",
    "benchmark_emissions",
    "benchmark_transition",
    "cv_select",
    "estimate_family",
    "hdet",
    "rate_regression",
    "schema_version",
    "select",
    "simplex_project",
    "simulate",
    "stationary_distribution",
    "true_density",
]


def simulate(n, seed=1, emissions=None, Q=None):
    """n + 2 observations of a stationary HMM (the three-state benchmark by default)."""
    emissions = benchmark_emissions() if emissions is None else list(emissions)
    Q = benchmark_transition() if Q is None else np.asarray(Q, dtype=float)
    return np.asarray(_core.simulate(int(n), int(seed), emissions, Q))


def estimate_family(obs, K=3, method="spectral", basis="trig", m=20, M_min=3, M_max=300,
                    retries=0, seed=0, threads=1):
    """Aligned family of estimates over M_min..M_max, as the family JSON document."""
    obs = np.ascontiguousarray(obs, dtype=float).ravel().tolist()
    return json.loads(_core.estimate_json(obs, K, method, basis, m, M_min, M_max, retries, seed, threads))


def select(family, variant="standard", calibration="eachjump", rho=None, rho_points=64):
    """Per-state selection. With calibration="none", rho gives the penalty constants."""
    rho = [] if rho is None else list(np.atleast_1d(rho).astype(float))
    return json.loads(_core.select_json(json.dumps(family), variant, calibration, rho, rho_points))


def cv_select(obs, K=3, m=20, M_min=3, M_max=300, folds=10, gap=30, seed=0):
    """Blocked cross-validation baseline: one dimension shared by all states."""
    obs = np.ascontiguousarray(obs, dtype=float).ravel().tolist()
    return json.loads(_core.cv_json(obs, K, m, M_min, M_max, folds, gap, seed))


def hdet(params, step=1e-4):
    """Hessian diagnostic for a parameter dict {pi, Q, O}."""
    doc = {"schema_version": schema_version, "kind": "trig"}
    doc.update({k: np.asarray(v, dtype=float).tolist() for k, v in params.items() if k in ("pi", "Q", "O")})
    return json.loads(_core.hdet_json(json.dumps(doc), step))
