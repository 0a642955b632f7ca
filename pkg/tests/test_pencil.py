"""
Tests for the Hermitian generalized eigenvalue solvers
"""

import numpy as np
import pytest

from conefix.errors import DimensionMismatchError, DomainError
from conefix.wireless.pencil import (
    is_positive_definite,
    pencil_lambda_max,
    pencil_lambda_max_dense,
    pencil_residual,
    rayleigh_quotient,
)


def random_hpd(rng, size, complex_valued=True):
    h = rng.standard_normal((size, size))
    if complex_valued:
        h = h + 1j * rng.standard_normal((size, size))
    m = h @ h.conj().T + 0.1 * np.eye(size)
    return 0.5 * (m + m.conj().T)


def test_iterative_matches_dense():
    """Both solvers agree on random pairs with L <= 4"""
    rng = np.random.default_rng(0)
    for _ in range(50):
        size = int(rng.integers(1, 5))
        b = random_hpd(rng, size, complex_valued=bool(rng.integers(0, 2)))
        a = random_hpd(rng, size)
        lam_dense, v_dense = pencil_lambda_max_dense(b, a)
        lam_iter, v_iter = pencil_lambda_max(b, a, rng=np.random.default_rng(1))
        assert lam_iter == pytest.approx(lam_dense, rel=1e-9)
        assert np.linalg.norm(v_iter) == pytest.approx(1.0)
        assert pencil_residual(b, a, lam_iter, v_iter) < 1e-8
        assert rayleigh_quotient(b, a, v_dense) == pytest.approx(lam_dense, rel=1e-10)


def test_identity_pencil():
    b = np.diag([1.0, 3.0, 2.0])
    lam, v = pencil_lambda_max_dense(b, np.eye(3))
    assert lam == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(v), [0.0, 1.0, 0.0], atol=1e-12)


def test_largest_coordinate_is_real_positive():
    rng = np.random.default_rng(4)
    _, v = pencil_lambda_max_dense(random_hpd(rng, 3), random_hpd(rng, 3))
    pivot = v[np.argmax(np.abs(v))]
    assert abs(pivot.imag) < 1e-12
    assert pivot.real > 0


def test_rejects_non_hermitian_input():
    b = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        pencil_lambda_max(b, np.eye(2))
    with pytest.raises(DomainError):
        pencil_lambda_max_dense(b, np.eye(2))


def test_rejects_indefinite_a():
    a = np.diag([1.0, -1.0])
    assert not is_positive_definite(a)
    with pytest.raises(DomainError):
        pencil_lambda_max(np.eye(2), a)
    with pytest.raises(DomainError):
        pencil_lambda_max_dense(np.eye(2), a)


def test_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        pencil_lambda_max(np.eye(2), np.eye(3))
