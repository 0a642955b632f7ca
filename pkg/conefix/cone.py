"""
Cone geometry - orderings, Thompson's metric and the log/exp isometry

Vectors of the nonnegative cone are represented as read-only float64
numpy arrays produced by ``as_cone_vector``.
"""

import logging
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .models import ConeBox, NormId, OrderRelation


logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[float], np.ndarray, float]

# Monotone p-norms on the orthant all have normality constant one
NORMALITY_CONSTANTS = {
    NormId.L1: 1.0,
    NormId.L2: 1.0,
    NormId.LINF: 1.0,
}


def as_cone_vector(coords: ArrayLike, strict: bool = False) -> np.ndarray:
    """
    Validate coordinates and return them as an immutable cone vector.

    Args:
        coords: Scalar, sequence or array of coordinates
        strict: Require every coordinate to be strictly positive

    Returns:
        Read-only 1-D float64 array

    Raises:
        DomainError: If the vector is empty, non-finite or leaves the cone
    """
    x = np.array(coords, dtype=float).reshape(-1)
    if x.size == 0:
        raise DomainError("Cone vectors need at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"Non-finite coordinate in {x}")
    if strict:
        if not np.all(x > 0):
            raise DomainError(f"Vector is not strictly positive: {x}")
    elif not np.all(x >= 0):
        raise DomainError(f"Vector has a negative coordinate: {x}")
    x.setflags(write=False)
    return x


def parse_norm(norm: Union[str, NormId]) -> NormId:
    """
    Resolve a norm identifier.

    Raises:
        DomainError: If the identifier is not supported
    """
    if isinstance(norm, NormId):
        return norm
    try:
        return NormId(str(norm).lower())
    except ValueError:
        raise DomainError(f"Unsupported norm: {norm!r}")


def vector_norm(x: np.ndarray, norm: Union[str, NormId] = NormId.LINF) -> float:
    """Evaluate one of the supported norms."""
    norm_id = parse_norm(norm)
    if norm_id == NormId.L1:
        return float(np.sum(np.abs(x)))
    if norm_id == NormId.L2:
        return float(np.linalg.norm(x))
    return float(np.max(np.abs(x)))


def _check_same_dimension(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(
            f"Dimension mismatch: {x.shape[0]} vs {y.shape[0]}"
        )


def compare(x: ArrayLike, y: ArrayLike) -> OrderRelation:
    """
    Classify the pair (x, y) under the cone ordering.

    ``LESS`` means x <= y with x != y but not x << y; the GREATER variants
    mirror the LESS ones.

    Raises:
        DimensionMismatchError: If x and y differ in dimension
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_same_dimension(x, y)

    diff = y - x
    if np.all(diff == 0):
        return OrderRelation.EQUAL
    if np.all(diff > 0):
        return OrderRelation.STRONGLY_LESS
    if np.all(diff >= 0):
        return OrderRelation.LESS
    if np.all(diff < 0):
        return OrderRelation.STRONGLY_GREATER
    if np.all(diff <= 0):
        return OrderRelation.GREATER
    return OrderRelation.INCOMPARABLE


def leq(x: np.ndarray, y: np.ndarray) -> bool:
    """True iff x <= y componentwise."""
    return bool(np.all(np.asarray(x) <= np.asarray(y)))


def strongly_less(x: np.ndarray, y: np.ndarray) -> bool:
    """True iff x << y, i.e. every coordinate is strictly smaller."""
    return bool(np.all(np.asarray(x) < np.asarray(y)))


def thompson_distance(x: ArrayLike, y: ArrayLike) -> float:
    """
    Thompson's metric ln max{M(x,y), M(y,x)} with M(x,y) = max_i x[i]/y[i].

    Raises:
        DomainError: If a coordinate of x or y is not strictly positive
        DimensionMismatchError: If x and y differ in dimension
    """
    x = as_cone_vector(x, strict=True)
    y = as_cone_vector(y, strict=True)
    _check_same_dimension(x, y)
    ratio = max(np.max(x / y), np.max(y / x))
    return float(np.log(ratio))


def log_iso(x: ArrayLike) -> np.ndarray:
    """Componentwise logarithm, an isometry onto (R^k, sup norm)."""
    return np.log(as_cone_vector(x, strict=True))


def exp_iso(y: ArrayLike) -> np.ndarray:
    """Inverse of ``log_iso``."""
    y = np.array(y, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise DomainError(f"Non-finite coordinate in {y}")
    return as_cone_vector(np.exp(y), strict=True)


def make_box(lower: ArrayLike, upper: ArrayLike) -> ConeBox:
    """
    Build the order interval [lower, upper].

    Raises:
        DomainError: If lower is not strictly positive or lower <= upper fails
    """
    a = as_cone_vector(lower, strict=True)
    b = as_cone_vector(upper, strict=True)
    _check_same_dimension(a, b)
    if not np.all(a <= b):
        raise DomainError(f"Box lower bound {a} is not below upper bound {b}")
    return ConeBox(lower=a, upper=b)


def box_thompson_diameter(box: ConeBox) -> Tuple[float, float]:
    """
    Thompson diameter of an order interval.

    The maximum is attained at the corners along the coordinate with the
    largest ratio upper/lower.

    Args:
        box: The order interval

    Returns:
        (lambda0, d0) with lambda0 = max_i b[i]/a[i] and d0 = ln(lambda0)
    """
    lambda0 = float(np.max(box.upper / box.lower))
    return lambda0, float(np.log(lambda0))


def box_contains(box: ConeBox, x: np.ndarray, rel_slack: float = 0.0) -> bool:
    """True iff lower <= x <= upper, with optional relative slack."""
    x = np.asarray(x, dtype=float)
    lo = box.lower * (1.0 - rel_slack)
    hi = box.upper * (1.0 + rel_slack)
    return bool(np.all(x >= lo) and np.all(x <= hi))


def box_corners(box: ConeBox, limit: int = 256) -> List[np.ndarray]:
    """
    Corners of the box, truncated to ``limit`` entries in high dimension.

    The two extreme corners (lower and upper) always come first.
    """
    k = box.dimension
    corners = [box.lower, box.upper]
    for mask in range(1, min(2 ** k - 1, limit - 1)):
        bits = np.array([(mask >> i) & 1 for i in range(k)], dtype=bool)
        corners.append(np.where(bits, box.upper, box.lower))
    return corners


def box_sample(box: ConeBox, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n points uniformly from the box; returns an (n, k) array."""
    u = rng.random((n, box.dimension))
    return box.lower + u * (box.upper - box.lower)


def normality_delta(norm: Union[str, NormId]) -> float:
    """
    Normality constant of the nonnegative orthant for a monotone norm.

    Raises:
        DomainError: If the norm is not supported
    """
    return NORMALITY_CONSTANTS[parse_norm(norm)]


def thompson_norm_bound(x: ArrayLike, y: ArrayLike, b_hat: float,
                        norm: Union[str, NormId] = NormId.LINF) -> float:
    """
    Upper bound b(1 + 2 delta)(exp(d_T(x, y)) - 1) on ||x - y||.

    Args:
        x: Strictly positive vector
        y: Strictly positive vector
        b_hat: Common bound on ||x|| and ||y||
        norm: Norm in which the bound is stated

    Returns:
        The bound value
    """
    delta = normality_delta(norm)
    return b_hat * (1.0 + 2.0 * delta) * np.expm1(thompson_distance(x, y))
