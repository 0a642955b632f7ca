"""
Tests for mapping handles, asymptotic mappings and builtins
"""

import numpy as np
import pytest

from conefix.errors import DimensionMismatchError, DomainError, EvaluationError
from conefix.mappings import (
    MappingHandle,
    affine,
    affine_min,
    asymptotic_evaluate,
    builtin,
    evaluate,
    g,
    g_eps,
    linear,
    random_affine_min,
)


def test_builtin_values():
    """The one-dimensional builtins evaluate to their closed forms"""
    assert builtin("f1")([1.0])[0] == pytest.approx(1.0)
    assert builtin("f2")([3.0])[0] == pytest.approx(4.0)
    assert builtin("g")([1.5])[0] == pytest.approx(1.5)
    assert builtin("g")([4.0])[0] == pytest.approx(4.0 / (1.0 + np.exp(-2.0)))
    assert builtin("g-eps")([1.0])[0] == pytest.approx(1.001)


def test_builtin_parses_parameters():
    f = builtin("g-eps(1e-2)")
    assert f.name == "g-eps(0.01)"
    assert f([1.0])[0] == pytest.approx(1.01)
    assert builtin("G-EPS", eps=0.5)([0.0])[0] == pytest.approx(0.5)


def test_builtin_rejects_unknown_ids():
    with pytest.raises(DomainError):
        builtin("h")
    with pytest.raises(DomainError):
        builtin("f1(3)")
    with pytest.raises(DomainError):
        builtin("g-eps(abc)")
    with pytest.raises(DomainError):
        g_eps(0.0)


def test_flags_of_builtins():
    """g is monotone and concave but not positive; the affine family claims PC"""
    assert not g().flags.claims_pc
    assert not g().flags.claims_si
    assert builtin("f1").flags.claims_pc
    assert builtin("fey").flags.claims_si
    assert not builtin("fey").flags.claims_pc
    assert not linear(np.eye(2)).flags.positive


def test_evaluate_validates_input_and_output():
    f = builtin("f1")
    with pytest.raises(DimensionMismatchError):
        evaluate(f, [1.0, 2.0])
    with pytest.raises(DomainError):
        evaluate(f, [-1.0])

    bad = MappingHandle("nan", 1, lambda x: np.full(1, np.nan))
    with pytest.raises(EvaluationError):
        evaluate(bad, [1.0])

    wrong = MappingHandle("wrong", 2, lambda x: np.ones(3))
    with pytest.raises(DimensionMismatchError):
        evaluate(wrong, [1.0, 1.0])


def test_asymptotic_closed_form():
    result = asymptotic_evaluate(builtin("f1"), [4.0])
    assert result.closed_form
    assert result.converged
    assert result.value[0] == pytest.approx(2.0)


def test_asymptotic_numeric_affine():
    """Without a closed form the doubling schedule recovers M x"""
    m = np.array([[0.2, 0.3], [0.1, 0.4]])
    b = np.array([1.0, 2.0])
    handle = MappingHandle("affine-numeric", 2, lambda x: m @ x + b)
    x = np.array([1.0, 3.0])
    result = asymptotic_evaluate(handle, x)
    assert result.converged
    assert not result.closed_form
    np.testing.assert_allclose(result.value, m @ x, rtol=1e-6)
    np.testing.assert_allclose(handle.asymptotic_evaluator()(x), m @ x, rtol=1e-6)


def test_asymptotic_numeric_reports_exhausted_schedule():
    """sqrt growth never meets the relative criterion but tends to zero"""
    handle = MappingHandle("sqrt", 1, lambda x: np.sqrt(x) + 1.0)
    result = asymptotic_evaluate(handle, [1.0], p_max=1e8)
    assert not result.converged
    assert result.value[0] < 1e-3


def test_affine_family_asymptotics():
    m = np.array([[0.5, 0.1], [0.2, 0.3]])
    f = affine(m, [1.0, 1.0])
    np.testing.assert_allclose(f([1.0, 2.0]), m @ [1.0, 2.0] + 1.0)
    np.testing.assert_allclose(f.asymptotic_evaluator()(np.array([1.0, 2.0])), m @ [1.0, 2.0])

    h = affine_min([m, 2 * m], [[1.0, 1.0], [0.5, 3.0]])
    x = np.array([1.0, 1.0])
    np.testing.assert_allclose(h(x), np.minimum(m @ x + [1.0, 1.0], 2 * m @ x + [0.5, 3.0]))


def test_affine_min_rejects_invalid_pieces():
    with pytest.raises(DomainError):
        affine_min([], [])
    with pytest.raises(DomainError):
        affine_min([np.eye(2)], [[0.0, 1.0]])
    with pytest.raises(DomainError):
        linear([[1.0, -1.0], [0.0, 1.0]])


def test_random_affine_min_is_positive_and_contractive_asymptotically():
    rng = np.random.default_rng(3)
    f = random_affine_min(5, 3, rng)
    assert f.dimension == 5
    assert np.all(f(np.zeros(5)) > 0)
    # row sums below 0.9 bound the asymptotic growth
    y = f.asymptotic_evaluator()(np.ones(5))
    assert np.all(y <= 0.9 + 1e-12)
