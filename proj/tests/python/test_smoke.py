import math

import numpy as np
import pytest

nphmm = pytest.importorskip("nphmm")


def test_simulate_reproducible():
    a = nphmm.simulate(2000, seed=3)
    b = nphmm.simulate(2000, seed=3)
    assert a.shape == (2002,)
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 1.0


def test_density_and_stationary():
    assert nphmm.true_density("beta(3,7)", 0.2) == pytest.approx(2.6424, abs=1e-4)
    pi = nphmm.stationary_distribution(nphmm.benchmark_transition())
    assert pi.sum() == pytest.approx(1.0)
    assert np.allclose(pi @ nphmm.benchmark_transition(), pi)
    assert np.allclose(nphmm.simplex_project(np.array([0.5, 0.5, 0.5])), [1 / 3] * 3)


def test_estimate_select_cv():
    obs = nphmm.simulate(30000, seed=5)
    fam = nphmm.estimate_family(obs, K=3, m=8, M_min=3, M_max=12, seed=1)
    assert fam["schema_version"] == nphmm.schema_version
    assert fam["model_grid"] == list(range(3, 13))
    sel = nphmm.select(fam, variant="max")
    assert len(sel["states"]) == 3
    assert all(3 <= s["M_hat"] <= 12 for s in sel["states"])
    fixed = nphmm.select(fam, calibration="none", rho=1e6)
    assert all(s["M_hat"] == 3 for s in fixed["states"])
    cv = nphmm.cv_select(obs, K=3, m=6, M_min=3, M_max=8, folds=4)
    assert cv["M_hat"] in cv["model_grid"]


def test_rates_and_hdet():
    pts = [(n, 2.0 * n ** -0.4) for n in (1e3, 1e4, 1e5)]
    fit = nphmm.rate_regression(pts, 0.0)
    assert fit["slope"] == pytest.approx(-0.4)
    Q = np.array([[0.8, 0.2], [0.3, 0.7]])
    pi = nphmm.stationary_distribution(Q)
    O = np.array([[1.0, 1.0], [0.3, -0.2], [0.1, 0.4]])
    rep = nphmm.hdet({"pi": pi, "Q": Q, "O": O})
    assert rep["dim"] == 5
    assert math.isfinite(rep["det"])


def test_errors_are_raised():
    with pytest.raises(nphmm.NphmmError, match="invalid-argument"):
        nphmm.true_density("gamma(1,2)", 0.5)
    with pytest.raises(nphmm.NphmmError):
        nphmm.stationary_distribution(np.eye(2))
