"""
Mapping kit - SI/PC mapping handles, asymptotic mappings and builtins
"""

import logging
import re
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .cone import ArrayLike, as_cone_vector
from .errors import DimensionMismatchError, DomainError, EvaluationError
from .models import AsymptoticEvaluation, MappingFlags


logger = logging.getLogger(__name__)

# Constants
ASYMPTOTIC_P0 = 1.0
ASYMPTOTIC_TOL = 1e-9
ASYMPTOTIC_P_MAX = 1e12
DEFAULT_G_EPS = 1e-3

Evaluator = Callable[[np.ndarray], np.ndarray]


class MappingHandle:
    """
    A mapping f of the nonnegative cone R^k_+ together with its structural claims.

    The evaluator receives a 1-D float array of length ``dimension`` and must be
    pure. The flags are claims only; the checkers in ``conefix.checker`` test
    them by sampling.
    """

    def __init__(self, name: str, dimension: int, evaluator: Evaluator,
                 flags: Optional[MappingFlags] = None,
                 asymptotic: Optional[Evaluator] = None,
                 asymptotic_p0: float = ASYMPTOTIC_P0,
                 matrix: Optional[np.ndarray] = None):
        """
        Initialize a mapping handle.

        Args:
            name: Identifier used in logs and reports
            dimension: Cone dimension k
            evaluator: Callable computing f(x)
            flags: Structural claims (defaults to a PC mapping)
            asymptotic: Optional closed form of f_inf
            asymptotic_p0: First scale of the doubling schedule
            matrix: Optional nonnegative M with f_inf(x) = M x
        """
        if dimension < 1:
            raise DomainError(f"Mapping dimension must be positive, got {dimension}")
        self.name = name
        self.dimension = int(dimension)
        self.evaluator = evaluator
        self.flags = flags if flags is not None else MappingFlags()
        self.asymptotic = asymptotic
        self.asymptotic_p0 = asymptotic_p0
        self.matrix = matrix
        if matrix is not None and asymptotic is None:
            self.asymptotic = lambda x: matrix @ x

    def __call__(self, x: ArrayLike) -> np.ndarray:
        return evaluate(self, x)

    def __repr__(self) -> str:
        return f"MappingHandle({self.name!r}, k={self.dimension})"

    def asymptotic_evaluator(self) -> Evaluator:
        """Callable x -> f_inf(x), closed form when available."""
        if self.asymptotic is not None:
            return lambda x: np.asarray(self.asymptotic(np.asarray(x, dtype=float)), dtype=float)
        return lambda x: asymptotic_evaluate(self, x).value


def evaluate(f: MappingHandle, x: ArrayLike) -> np.ndarray:
    """
    Evaluate f at a point of the cone.

    Raises:
        DimensionMismatchError: If x does not live in R^k
        DomainError: If x leaves the cone
        EvaluationError: If the output is not finite
    """
    x = as_cone_vector(x)
    if x.shape[0] != f.dimension:
        raise DimensionMismatchError(
            f"{f.name} expects dimension {f.dimension}, got {x.shape[0]}"
        )
    y = np.asarray(f.evaluator(x), dtype=float).reshape(-1)
    if y.shape[0] != f.dimension:
        raise DimensionMismatchError(
            f"{f.name} returned dimension {y.shape[0]}, expected {f.dimension}"
        )
    if not np.all(np.isfinite(y)):
        raise EvaluationError(f"{f.name} produced a non-finite value at {x}")
    return y


def asymptotic_evaluate(f: MappingHandle, x: ArrayLike,
                        tol: float = ASYMPTOTIC_TOL,
                        p_max: float = ASYMPTOTIC_P_MAX,
                        p0: Optional[float] = None) -> AsymptoticEvaluation:
    """
    Evaluate the asymptotic mapping f_inf(x) = lim f(p x)/p.

    The closed form is used when the handle carries one. Otherwise f(p x)/p is
    evaluated for p = p0, 2 p0, ... until two successive values differ by less
    than tol relative to their sup norm, or p exceeds p_max.

    Args:
        f: Mapping handle
        x: Point of the cone
        tol: Relative change criterion in the sup norm
        p_max: Largest scale tried
        p0: First scale (defaults to the handle's ``asymptotic_p0``)

    Returns:
        AsymptoticEvaluation; ``converged`` is False when the schedule ran out
    """
    if tol <= 0:
        raise DomainError(f"Asymptotic tolerance must be positive, got {tol}")
    x = as_cone_vector(x)
    if x.shape[0] != f.dimension:
        raise DimensionMismatchError(
            f"{f.name} expects dimension {f.dimension}, got {x.shape[0]}"
        )
    if f.asymptotic is not None:
        value = np.asarray(f.asymptotic(x), dtype=float).reshape(-1)
        return AsymptoticEvaluation(value=value, converged=True, closed_form=True)

    p = f.asymptotic_p0 if p0 is None else p0
    previous = evaluate(f, p * x) / p
    while 2.0 * p <= p_max:
        p *= 2.0
        current = evaluate(f, p * x) / p
        scale = float(np.max(np.abs(current)))
        change = float(np.max(np.abs(current - previous)))
        if change == 0.0 or change <= tol * scale:
            return AsymptoticEvaluation(value=current, converged=True, scale=p)
        previous = current

    logger.debug(f"Asymptotic schedule of {f.name} exhausted at p={p:.3g}")
    return AsymptoticEvaluation(value=previous, converged=False, scale=p)


# ---------------------------------------------------------------------------
# Builtin mappings
# ---------------------------------------------------------------------------

def _g_values(x: np.ndarray) -> np.ndarray:
    # identity up to 2, then the logistic branch 4/(1 + e^(2 - x))
    return np.where(x <= 2.0, x, 4.0 / (1.0 + np.exp(2.0 - x)))


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


def f1() -> MappingHandle:
    """f1(x) = x/2 + 1/2 on R_+."""
    return MappingHandle("f1", 1, lambda x: 0.5 * x + 0.5,
                         asymptotic=lambda x: 0.5 * x)


def f2() -> MappingHandle:
    """f2(x) = x + 1 on R_+; PC but without a fixed point."""
    return MappingHandle("f2", 1, lambda x: x + 1.0, asymptotic=lambda x: 1.0 * x)


def g() -> MappingHandle:
    """
    Identity on [0, 2] glued to 4/(1 + e^(2 - x)) beyond 2.

    Concave and monotone, but g(0) = 0 so it is not a PC mapping. The
    iteration from x1 = 4 converges to 2 sublinearly.
    """
    flags = MappingFlags(monotone=True, scalable=False, concave=True, positive=False)
    return MappingHandle("g", 1, _g_values, flags=flags, asymptotic=_zero)


def g_eps(eps: float = DEFAULT_G_EPS) -> MappingHandle:
    """g shifted by a constant eps > 0, which makes it a PC mapping."""
    if not eps > 0:
        raise DomainError(f"g-eps needs eps > 0, got {eps}")
    return MappingHandle(f"g-eps({eps:g})", 1, lambda x: _g_values(x) + eps,
                         asymptotic=_zero)


def fey() -> MappingHandle:
    """4/(1 + e^(2 - x)): positive and SI, convex below the inflection at 2."""
    flags = MappingFlags(monotone=True, scalable=True, concave=False, positive=True)
    return MappingHandle("fey", 1, lambda x: 4.0 / (1.0 + np.exp(2.0 - x)),
                         flags=flags, asymptotic=_zero)


def _as_nonnegative_matrix(matrix: ArrayLike, name: str) -> np.ndarray:
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise DomainError(f"{name} must be finite and nonnegative")
    m.setflags(write=False)
    return m


def linear(matrix: ArrayLike, name: str = "linear") -> MappingHandle:
    """
    x -> M x for a nonnegative matrix M.

    Positively homogeneous, so it is its own asymptotic mapping. It maps 0 to
    0 and therefore does not claim positivity.
    """
    m = _as_nonnegative_matrix(matrix, "M")
    flags = MappingFlags(monotone=True, scalable=False, concave=True, positive=False)
    return MappingHandle(name, m.shape[0], lambda x: m @ x, flags=flags, matrix=m)


def affine(matrix: ArrayLike, offset: ArrayLike, name: str = "affine") -> MappingHandle:
    """x -> M x + b with M nonnegative and b >> 0."""
    m = _as_nonnegative_matrix(matrix, "M")
    b = as_cone_vector(offset, strict=True)
    if b.shape[0] != m.shape[0]:
        raise DimensionMismatchError(
            f"Offset has dimension {b.shape[0]}, matrix has {m.shape[0]}"
        )
    return MappingHandle(name, m.shape[0], lambda x: m @ x + b, matrix=m)


def affine_min(matrices: Sequence[ArrayLike], offsets: Sequence[ArrayLike],
               name: str = "affine-min") -> MappingHandle:
    """
    Coordinatewise minimum of finitely many positive affine mappings.

    f(x) = min_i (A_i x + b_i), f_inf(x) = min_i A_i x.

    Raises:
        DomainError: If no piece is given or a piece is not positive at 0
    """
    if len(matrices) == 0 or len(matrices) != len(offsets):
        raise DomainError("affine-min needs matching, nonempty lists of matrices and offsets")
    stack = np.stack([_as_nonnegative_matrix(a, f"A[{i}]") for i, a in enumerate(matrices)])
    try:
        shifts = np.stack([as_cone_vector(b, strict=True) for b in offsets])
    except DomainError as e:
        raise DomainError(f"affine-min pieces must be positive at 0: {e}")
    k = stack.shape[1]
    if shifts.shape[1] != k:
        raise DimensionMismatchError(f"Offsets have dimension {shifts.shape[1]}, matrices {k}")

    def evaluator(x: np.ndarray) -> np.ndarray:
        return np.min(stack @ x + shifts, axis=0)

    def asymptotic(x: np.ndarray) -> np.ndarray:
        return np.min(stack @ x, axis=0)

    return MappingHandle(name, k, evaluator, asymptotic=asymptotic)


def random_affine_min(k: int, pieces: int, rng: np.random.Generator,
                      row_sum: float = 0.9, offset_range=(0.1, 1.0)) -> MappingHandle:
    """
    Random positive affine-min instance.

    Every matrix is drawn with row sums in [0, row_sum], so row_sum < 1 gives
    a mapping with a fixed point and row_sum > 1 usually one without.

    Args:
        k: Dimension
        pieces: Number of affine pieces
        rng: Random generator
        row_sum: Upper bound on the row sums of each A_i
        offset_range: Interval the offset coordinates are drawn from
    """
    if k < 1 or pieces < 1:
        raise DomainError(f"Need k >= 1 and pieces >= 1, got k={k}, pieces={pieces}")
    matrices = []
    offsets = []
    for _ in range(pieces):
        a = rng.random((k, k))
        a *= row_sum * rng.random((k, 1)) / a.sum(axis=1, keepdims=True)
        matrices.append(a)
        offsets.append(rng.uniform(offset_range[0], offset_range[1], size=k))
    return affine_min(matrices, offsets, name=f"random-affine-min(k={k},m={pieces})")


BUILTINS: Dict[str, Callable[..., MappingHandle]] = {
    "f1": f1,
    "f2": f2,
    "g": g,
    "g-eps": g_eps,
    "fey": fey,
}

_BUILTIN_ID = re.compile(r"^\s*([a-z0-9-]+?)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def builtin(name: str, **params) -> MappingHandle:
    """
    Look up a builtin mapping by identifier.

    Accepts ``f1``, ``f2``, ``g``, ``g-eps`` (optionally written ``g-eps(1e-3)``)
    and ``fey``. ``affine-min`` takes ``matrices`` and ``offsets`` keywords.

    Raises:
        DomainError: If the identifier or its parameters are invalid
    """
    match = _BUILTIN_ID.match(name.lower())
    if not match:
        raise DomainError(f"Unknown mapping id: {name!r}")
    key, argument = match.group(1), match.group(2)

    if key == "affine-min":
        try:
            return affine_min(params["matrices"], params["offsets"])
        except KeyError:
            raise DomainError("affine-min needs 'matrices' and 'offsets'")
    if key not in BUILTINS:
        raise DomainError(f"Unknown mapping id: {name!r}")

    if key == "g-eps":
        eps = params.get("eps", DEFAULT_G_EPS)
        if argument:
            try:
                eps = float(argument)
            except ValueError:
                raise DomainError(f"Invalid eps in {name!r}")
        return g_eps(eps)
    if argument:
        raise DomainError(f"Mapping {key!r} takes no parameters")
    return BUILTINS[key]()
