import math
import os
from pathlib import Path

import numpy as np
import pytest

import proxmmse as pm

DATA = Path(os.environ.get("PROXMMSE_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


def test_version():
    assert pm.__version__ == "0.1.0"


def test_gaussian_shrinkage():
    prior = pm.Prior.analytic_gaussian(0.0, 1.0)
    model = pm.NoiseModel.gaussian_white(1.0)
    for y in (-3.0, 0.5, 2.0):
        assert pm.conditional_mean(prior, model, [y])[0] == pytest.approx(y / 2, rel=1e-8, abs=1e-12)


def test_discrete_mean_and_estimate():
    prior = pm.Prior.discrete([([-1.0], 0.5), ([1.0], 0.5)])
    model = pm.NoiseModel.gaussian_white(1.0)
    assert pm.conditional_mean(prior, model, [0.7])[0] == pytest.approx(math.tanh(0.7), rel=1e-14)
    q, f, ok = pm.estimate(prior, model, [[0.0], [1.0]])
    assert all(ok)
    assert f[0][0] == 0.0
    assert q[0] > 0


def test_scalar_checks():
    y = np.linspace(-5, 5, 201)
    assert pm.check_scalar_monotone(y, np.tanh(y)).passed
    gg = pm.NoiseModel.generalized_gaussian(0.5)
    grid = np.linspace(-3, 3, 13)
    cert = pm.check_condition_b(gg, grid, grid)
    assert cert.failed
    assert pm.reverify(cert, gg)
    assert set(cert.witness) >= {"x", "x'", "y", "y'"}


def test_jacobian_and_psd():
    prior = pm.Prior.discrete([([0.0, 0.0], 0.3), ([1.0, 0.0], 0.3), ([0.0, 1.0], 0.4)])
    model = pm.NoiseModel.log_poisson(2)
    J = pm.jacobian(prior, model, [1.0, 2.0])
    assert J.shape == (2, 2)
    assert pm.check_symmetric_psd(J).passed
    skew = pm.check_symmetric_psd(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert skew.verdict == "fail"
    assert "verdict: fail" in skew.report()


def test_counterexample_dichotomy():
    box = pm.SearchBox([-3.0, -3.0], [3.0, 3.0])
    lap = pm.NoiseModel.laplacian(2)
    ce = pm.search_counterexample(lap, box, box, budget=20000, refinements=4000)
    assert ce is not None and ce.violation < -1e-6
    assert pm.reverify(ce.certificate, lap)
    assert ce.certificate.seed == 20180601
    gauss = pm.NoiseModel.gaussian_white(1.0, 2)
    assert pm.search_counterexample(gauss, box, box, budget=20000, refinements=4000) is None


def test_penalty_recovery_soft_threshold():
    y = np.linspace(-4, 4, 801)
    f = np.sign(y) * np.maximum(np.abs(y) - 1, 0)
    table = pm.recover_scalar(y, f)
    for x, phi in table.phi_pairs:
        assert phi == pytest.approx(abs(x[0]), abs=1e-4)
    assert pm.verify_prox([2.0], [3.0], table) <= 1e-2
    with pytest.raises(pm.ExtrapolationError):
        pm.verify_prox([3.5], [4.5], table)
    assert table.to_csv().startswith("y_1,f_1,psi,x_1,phi\n")


def test_laplace_laplace_figure():
    ll = pm.LaplaceLaplaceCase(0.9)
    assert ll.marginal(-2.0) == ll.marginal(2.0)
    assert ll.mean(0.0) == 0.0
    table, monotone = pm.figure_l1l1(ll, np.linspace(-10, 10, 401))
    assert monotone.passed
    assert min(table.psi_values) == 0.0
    with pytest.raises(pm.InvalidArgument, match="closed form invalid at c=1"):
        pm.LaplaceLaplaceCase(1.0)


def test_vector_recovery_with_python_map():
    prior = pm.Prior.discrete([([-1.0, 0.0], 0.5), ([1.0, 0.0], 0.5)])
    model = pm.NoiseModel.gaussian_white(1.0, 2)
    f = lambda y: pm.conditional_mean(prior, model, y)
    sym = pm.check_symmetric_psd(pm.jacobian(prior, model, [0.0, 0.0]))
    nodes = [np.array([a, b]) for a in np.linspace(-2, 2, 9) for b in np.linspace(-2, 2, 9)]
    table = pm.recover_vector(f, np.zeros(2), nodes, sym)
    assert len(table.y_grid) == 81
    # Atoms on a line: f drops the second coordinate, so 9 distinct x remain.
    assert len(table.phi_pairs) == 9
    pairs = [(np.array([a, 0.3]), np.array([-a, 1.0])) for a in np.linspace(0.1, 2, 20)]
    assert pm.check_monotone_operator(f, pairs).passed


def test_run_config(tmp_path):
    out = pm.run_config(DATA / "gauss_gauss.ini", tmp_path)
    assert not out["any_fail"]
    assert out["prox_deviation_cells"] <= 1.0
    assert (tmp_path / "gauss_gauss_estimate.csv").exists()
    with pytest.raises(pm.Error, match="no_such_prior.csv"):
        pm.run_config(DATA / "missing_prior.ini", tmp_path)
