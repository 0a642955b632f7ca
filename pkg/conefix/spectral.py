"""
Spectral radius of asymptotic mappings and fixed point feasibility
"""

import logging
from typing import Optional

import numpy as np

from .cone import ArrayLike, as_cone_vector
from .errors import DomainError
from .mappings import Evaluator, MappingHandle
from .models import FeasibilityResult, FeasibilityVerdict, SpectralRadiusEstimate


logger = logging.getLogger(__name__)

# Constants
SPECTRAL_TOL = 1e-8
SPECTRAL_MAX_ITER = 10000
DENSE_FALLBACK_MAX_K = 64


def spectral_radius(f_inf: Evaluator, x0: ArrayLike, tol: float = SPECTRAL_TOL,
                    max_iter: int = SPECTRAL_MAX_ITER) -> SpectralRadiusEstimate:
    """
    Nonlinear spectral radius of a monotone, positively homogeneous mapping.

    Each step evaluates y = f_inf(x) and brackets the radius between
    min_i y[i]/x[i] and max_i y[i]/x[i] over the support of x (the upper end
    is infinite while y leaves that support). The iterate is advanced with
    the shifted map x + f_inf(x), which has the same eigenvector and keeps
    periodic (bipartite) mappings from oscillating.

    Args:
        f_inf: Asymptotic mapping
        x0: Strictly positive start
        tol: Required bracket width
        max_iter: Iteration budget

    Returns:
        SpectralRadiusEstimate with the last bracket; ``converged`` is False
        when the budget ran out
    """
    if not tol > 0:
        raise DomainError(f"Spectral tolerance must be positive, got {tol}")
    x = np.array(as_cone_vector(x0, strict=True))
    x /= np.max(x)
    lo, hi, rho = 0.0, np.inf, 0.0

    for it in range(1, max_iter + 1):
        y = np.asarray(f_inf(x), dtype=float)
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise DomainError("Asymptotic mapping left the cone")
        if not np.any(y > 0):
            return SpectralRadiusEstimate(rho=0.0, lower=0.0, upper=0.0,
                                          iterations=it, converged=True)

        support = x > 0
        ratios = y[support] / x[support]
        lo = float(np.min(ratios))
        hi = np.inf if np.any(y[~support] > 0) else float(np.max(ratios))
        rho = min(max(float(np.max(y)), lo), hi)

        if hi - lo <= tol:
            v = x.copy()
            return SpectralRadiusEstimate(rho=rho, lower=lo, upper=hi, iterations=it,
                                          converged=True, eigvec=v)

        shifted = x + y
        x = shifted / np.max(shifted)

    logger.warning(f"Spectral radius did not converge in {max_iter} steps, bracket [{lo:.6g}, {hi:.6g}]")
    return SpectralRadiusEstimate(rho=rho, lower=lo, upper=hi, iterations=max_iter,
                                  converged=False, eigvec=x.copy())


def matrix_spectral_radius(matrix: ArrayLike, tol: float = SPECTRAL_TOL,
                           max_iter: int = SPECTRAL_MAX_ITER) -> SpectralRadiusEstimate:
    """
    Spectral radius of a nonnegative matrix.

    Power iteration with the Collatz-Wielandt bracket; if the bracket does not
    close (reducible matrices) a dense eigensolve is used for k <= 64.
    """
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise DomainError("Matrix has a negative entry")

    estimate = spectral_radius(lambda x: m @ x, np.ones(m.shape[0]), tol, max_iter)
    if estimate.converged or m.shape[0] > DENSE_FALLBACK_MAX_K:
        return estimate

    rho = float(np.max(np.abs(np.linalg.eigvals(m))))
    logger.info(f"Dense eigensolve fallback for k={m.shape[0]}: rho={rho:.10g}")
    return SpectralRadiusEstimate(rho=rho, lower=rho, upper=rho, iterations=estimate.iterations,
                                  converged=True, eigvec=None, method="dense")


def verdict_from_estimate(estimate: SpectralRadiusEstimate) -> FeasibilityVerdict:
    """Fixed point iff the bracket lies below one; none iff it starts at one or above."""
    if estimate.upper < 1.0:
        return FeasibilityVerdict.HAS_FIXED_POINT
    if estimate.lower >= 1.0:
        return FeasibilityVerdict.NO_FIXED_POINT
    return FeasibilityVerdict.INCONCLUSIVE


def feasibility_check(f: MappingHandle, tol: float = SPECTRAL_TOL,
                      max_iter: int = SPECTRAL_MAX_ITER,
                      x0: Optional[ArrayLike] = None) -> FeasibilityResult:
    """
    Decide whether an SI mapping has a fixed point via rho(f_inf) < 1.

    Handles with a closed-form asymptotic matrix go through
    matrix_spectral_radius, so reducible cases still get a tight bracket.

    Raises:
        DomainError: If the handle does not claim SI structure
    """
    if not f.flags.claims_si:
        raise DomainError(f"{f.name} does not claim to be a standard interference mapping")
    if f.matrix is not None and x0 is None:
        estimate = matrix_spectral_radius(f.matrix, tol, max_iter)
    else:
        start = np.ones(f.dimension) if x0 is None else x0
        estimate = spectral_radius(f.asymptotic_evaluator(), start, tol, max_iter)
    verdict = verdict_from_estimate(estimate)
    logger.info(f"Feasibility of {f.name}: {verdict.value} "
                f"(rho in [{estimate.lower:.10g}, {estimate.upper:.10g}])")
    return FeasibilityResult(verdict=verdict, estimate=estimate)
