import math

import numpy as np
import pytest

import psmm


def test_two_point_dual():
    sol = psmm.solve_svm_dual(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.array([1.0, -1.0]), box=50.0)
    assert sol["converged"]
    np.testing.assert_allclose(sol["alphas"], [1.0, 1.0], atol=1e-9)
    assert sol["dual_objective"] == pytest.approx(-1.0)
    assert abs(sol["bias_t"]) < 1e-9


def test_single_class_raises():
    with pytest.raises(psmm.PsmmError, match="InfeasibleLabels"):
        psmm.solve_svm_dual(np.eye(2), np.array([1.0, 1.0]))


def test_flipflop_convention():
    rng = np.random.default_rng(0)
    fit = psmm.flipflop_fit(rng.standard_normal((200, 3, 4)))
    assert fit["converged"]
    assert np.trace(fit["sigma_col"]) == pytest.approx(4.0)
    assert np.all(np.diff(fit["loglik_trace"]) >= -1e-9)


def test_fit_and_reduce_model1():
    x, y, row, col = psmm.gen_model(1, 200, 4, seed=3)
    assert x.shape == (200, 4, 4)
    est = psmm.fit_psmm(x, y, slices=5, r1=1, r2=2, restarts=1, seed=3)
    assert est["row_basis"].shape == (4, 1)
    assert est["col_basis"].shape == (4, 2)
    np.testing.assert_allclose(est["row_basis"].T @ est["row_basis"], np.eye(1), atol=1e-10)
    dist = psmm.subspace_distance(est["row_basis"], est["col_basis"], row, col)
    assert 0.0 <= dist < 1.0
    z = psmm.reduce(x, est)
    assert z.shape == (200, 1, 2)
    np.testing.assert_allclose(z[0], est["row_basis"].T @ x[0] @ est["col_basis"], atol=1e-12)

    again = psmm.fit_psmm(x, y, slices=5, r1=1, r2=2, restarts=1, seed=3)
    assert again["json"] == est["json"]


def test_vectorized_baseline_and_tensor():
    x, y, _, _ = psmm.gen_model(1, 150, 3, seed=5)
    vec = psmm.fit_psvm(x, y, slices=5, rank=2)
    assert vec["row_basis"].shape == (9, 2)
    assert psmm.reduce(x, vec).shape == (150, 2, 1)

    rng = np.random.default_rng(1)
    t = rng.standard_normal((150, 3, 2, 3))
    ty = t[:, 0, 0, 0] + 0.1 * rng.standard_normal(150)
    fit = psmm.fit_pstm(t, ty, slices=5, ranks=[1, 1, 1], restarts=0)
    assert [b.shape for b in fit["bases"]] == [(3, 1), (2, 1), (3, 1)]


def test_small_helpers():
    assert psmm.select_dimension_bic(np.array([10.0, 0.5, 0.1]), 100) == 1
    assert psmm.select_dimension_bic(np.array([4.0, 4.0, 4.0]), 16) == 3
    cut, kept, labels = psmm.slice_labels(np.array([1.0, 2.0, 3.0, 4.0]), 2)
    assert cut == [2.0, 4.0] and kept == [1]
    np.testing.assert_array_equal(labels[0], [-1, -1, 1, 1])
    e1, e2 = np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])
    assert psmm.subspace_distance(e1, e1, e2, e2) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert psmm.projector_distance(e1, e1) == pytest.approx(0.0, abs=1e-12)


def test_invalid_config():
    x, y, _, _ = psmm.gen_model(1, 40, 3, seed=1)
    with pytest.raises(psmm.PsmmError, match="H >= 2"):
        psmm.fit_psmm(x, y, slices=1)
    with pytest.raises(ValueError):
        psmm.fit_psmm(x[0], y)
