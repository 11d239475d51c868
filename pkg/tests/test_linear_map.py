import numpy as np
import pytest
from numpy.testing import assert_allclose

from plirls.core.linear_map import LinearMap
from plirls.exceptions import InstanceError


def test_dense_norms_are_exact():
    B = LinearMap.from_dense(np.diag([3.0, 4.0]))
    assert B.operator_norm == pytest.approx(4.0)
    assert B.gram_norm == pytest.approx(16.0)
    assert B.is_dense


def test_matrix_free_norms_are_upper_bounds(rng):
    M = rng.standard_normal((7, 5))
    B = LinearMap.from_callbacks((7, 5), apply=lambda x: M @ x, adjoint_apply=lambda u: M.T @ u)
    sigma = np.linalg.svd(M, compute_uv=False)[0]
    assert not B.is_dense
    assert sigma <= B.operator_norm <= 1.01 * sigma * (1 + 1e-6)
    assert sigma ** 2 <= B.gram_norm <= 1.01 * sigma ** 2 * (1 + 1e-6)


def test_identity():
    eye = LinearMap.identity(3)
    x = np.array([1.0, -2.0, 0.5])
    assert_allclose(eye @ x, x)
    assert_allclose(eye.adjoint_apply(x), x)
    assert eye.operator_norm == 1.0
    assert_allclose(eye.row_norms(), np.ones(3))


def test_apply_rejects_wrong_shape():
    B = LinearMap.from_dense(np.ones((2, 3)))
    with pytest.raises(InstanceError):
        B.apply(np.ones(2))
    with pytest.raises(InstanceError):
        B.adjoint_apply(np.ones(3))


def test_row_norms_match_for_dense_and_callbacks(rng):
    M = rng.standard_normal((4, 3))
    dense = LinearMap.from_dense(M)
    free = LinearMap.from_callbacks((4, 3), apply=lambda x: M @ x, adjoint_apply=lambda u: M.T @ u)
    assert_allclose(dense.row_norms(), np.linalg.norm(M, axis=1))
    assert_allclose(free.row_norms(), np.linalg.norm(M, axis=1))


def test_adjoint_mismatch_detects_a_wrong_adjoint(rng):
    M = rng.standard_normal((4, 4))
    good = LinearMap.from_dense(M)
    bad = LinearMap.from_callbacks((4, 4), apply=lambda x: M @ x, adjoint_apply=lambda u: M @ u,
                                   operator_norm=1.0, gram_norm=1.0)
    assert good.adjoint_mismatch() < 1e-12
    assert bad.adjoint_mismatch() > 1e-3


def test_as_linear_operator(rng):
    M = rng.standard_normal((3, 2))
    op = LinearMap.from_dense(M).as_linear_operator()
    x, u = rng.standard_normal(2), rng.standard_normal(3)
    assert_allclose(op.matvec(x), M @ x)
    assert_allclose(op.rmatvec(u), M.T @ u)


def test_zero_sized_map_has_zero_norms():
    B = LinearMap.from_dense(np.zeros((0, 3)))
    assert B.operator_norm == 0.0
    assert B.gram_norm == 0.0
