"""
Tests for cone orderings, Thompson's metric and boxes
"""

import numpy as np
import pytest

from conefix.cone import (
    as_cone_vector,
    box_contains,
    box_corners,
    box_sample,
    box_thompson_diameter,
    compare,
    exp_iso,
    log_iso,
    make_box,
    thompson_distance,
    thompson_norm_bound,
    vector_norm,
)
from conefix.errors import DimensionMismatchError, DomainError
from conefix.models import OrderRelation


def test_as_cone_vector_is_read_only():
    """Cone vectors are immutable float copies"""
    x = as_cone_vector([1, 2, 3])
    assert x.dtype == np.float64
    with pytest.raises(ValueError):
        x[0] = 5.0


def test_as_cone_vector_rejects_invalid_input():
    with pytest.raises(DomainError):
        as_cone_vector([])
    with pytest.raises(DomainError):
        as_cone_vector([1.0, -0.5])
    with pytest.raises(DomainError):
        as_cone_vector([1.0, np.inf])
    with pytest.raises(DomainError):
        as_cone_vector([1.0, 0.0], strict=True)


def test_compare_classifies_every_relation():
    """Each order relation is recognised"""
    assert compare([1, 2], [1, 2]) == OrderRelation.EQUAL
    assert compare([1, 2], [2, 3]) == OrderRelation.STRONGLY_LESS
    assert compare([1, 2], [1, 3]) == OrderRelation.LESS
    assert compare([2, 3], [1, 2]) == OrderRelation.STRONGLY_GREATER
    assert compare([1, 3], [1, 2]) == OrderRelation.GREATER
    assert compare([1, 3], [2, 2]) == OrderRelation.INCOMPARABLE


def test_compare_reaches_every_relation():
    """Random pairs with coordinates in {0, 1, 2} hit each member of OrderRelation"""
    rng = np.random.default_rng(3)
    seen = {compare(rng.integers(0, 3, size=2), rng.integers(0, 3, size=2)) for _ in range(500)}
    assert seen == set(OrderRelation)


def test_compare_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        compare([1, 2], [1, 2, 3])


def test_thompson_distance_values():
    """d_T(x, 2x) = ln 2 and the metric is symmetric"""
    x = np.array([1.0, 3.0, 0.5])
    assert thompson_distance(x, 2 * x) == pytest.approx(np.log(2.0))
    assert thompson_distance(x, x) == 0.0
    y = np.array([2.0, 1.0, 4.0])
    assert thompson_distance(x, y) == pytest.approx(thompson_distance(y, x))
    assert thompson_distance(x, y) == pytest.approx(np.log(8.0))


def test_thompson_distance_needs_positive_vectors():
    with pytest.raises(DomainError):
        thompson_distance([1.0, 0.0], [1.0, 1.0])


def test_log_exp_isometry():
    """exp_iso inverts log_iso"""
    x = np.array([0.2, 5.0, 1.0])
    np.testing.assert_allclose(exp_iso(log_iso(x)), x)


def test_isometry_on_random_pairs():
    """|d_T(x, y) - ||ln x - ln y||_inf| stays at rounding level on 10^4 pairs"""
    rng = np.random.default_rng(7)
    for _ in range(10000):
        k = int(rng.integers(1, 51))
        x = np.exp(rng.uniform(-5, 5, k))
        y = np.exp(rng.uniform(-5, 5, k))
        sup = float(np.max(np.abs(log_iso(x) - log_iso(y))))
        assert abs(thompson_distance(x, y) - sup) <= 1e-12


@pytest.mark.parametrize("norm", ["linf", "l2", "l1"])
def test_norm_bound_holds(norm):
    """||x - y|| <= b(1 + 2 delta)(e^{d_T} - 1) with b bounding both norms"""
    rng = np.random.default_rng(11)
    for _ in range(2000):
        k = int(rng.integers(1, 51))
        x = rng.uniform(0.01, 10.0, k)
        y = rng.uniform(0.01, 10.0, k)
        b_hat = max(vector_norm(x, norm), vector_norm(y, norm))
        assert vector_norm(x - y, norm) <= thompson_norm_bound(x, y, b_hat, norm) * (1 + 1e-12)


def test_box_diameter_and_membership():
    box = make_box([0.5], [1.5])
    lambda0, d0 = box_thompson_diameter(box)
    assert lambda0 == pytest.approx(3.0)
    assert d0 == pytest.approx(np.log(3.0))
    assert box_contains(box, [1.0])
    assert not box_contains(box, [1.6])
    assert box_contains(box, [1.5 * (1 + 1e-12)], rel_slack=1e-9)


def test_make_box_rejects_bad_bounds():
    with pytest.raises(DomainError):
        make_box([1.0, 2.0], [2.0, 1.0])
    with pytest.raises(DomainError):
        make_box([0.0], [1.0])


def test_box_corners_and_samples():
    """All 2^k corners are listed, extremes first, and samples stay inside"""
    box = make_box([1.0, 1.0, 1.0], [2.0, 3.0, 4.0])
    corners = box_corners(box)
    assert len(corners) == 8
    np.testing.assert_array_equal(corners[0], box.lower)
    np.testing.assert_array_equal(corners[1], box.upper)
    assert len({tuple(c) for c in corners}) == 8

    points = box_sample(box, np.random.default_rng(0), 100)
    assert points.shape == (100, 3)
    assert all(box_contains(box, p) for p in points)
