"""
Largest generalized eigenvalue of a Hermitian positive definite pencil
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, eigh, solve_triangular

from ..errors import DimensionMismatchError, DomainError, PencilError


logger = logging.getLogger(__name__)

# Constants
PENCIL_TOL = 1e-12
PENCIL_MAX_ITER = 2000
PENCIL_RESTARTS = 1
HERMITIAN_TOL = 1e-12
DENSE_MAX_L = 8


def _check_pair(bm: np.ndarray, am: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    bm = np.asarray(bm)
    am = np.asarray(am)
    if bm.ndim != 2 or bm.shape[0] != bm.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {bm.shape}")
    if am.shape != bm.shape:
        raise DimensionMismatchError(f"Pencil matrices differ in shape: {bm.shape} vs {am.shape}")
    for name, m in (("B", bm), ("A", am)):
        if not np.all(np.isfinite(m)):
            raise DomainError(f"{name} has a non-finite entry")
        scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
            raise DomainError(f"{name} is not Hermitian")
    if not (np.iscomplexobj(bm) or np.iscomplexobj(am)):
        return bm.astype(float), am.astype(float)
    return bm.astype(complex), am.astype(complex)


def is_positive_definite(m: np.ndarray) -> bool:
    """True iff the Hermitian matrix m admits a Cholesky factorization."""
    try:
        cholesky(m, lower=True)
    except LinAlgError:
        return False
    return True


def pencil_lambda_max_dense(bm: np.ndarray, am: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Largest eigenvalue of B v = lambda A v by a dense Hermitian eigensolve.

    Returns:
        (lambda, v) with ||v||_2 = 1

    Raises:
        DomainError: If A is not positive definite
    """
    bm, am = _check_pair(bm, am)
    size = bm.shape[0]
    try:
        values, vectors = eigh(bm, am, subset_by_index=[size - 1, size - 1])
    except LinAlgError as e:
        raise DomainError(f"A is not positive definite: {e}")
    return float(values[0]), _normalize_phase(vectors[:, 0])


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    # unit norm, largest coordinate real and positive
    v = v / np.linalg.norm(v)
    pivot = v[np.argmax(np.abs(v))]
    return v * (np.abs(pivot) / pivot)


def _power_iteration(k: np.ndarray, w: np.ndarray, tol: float,
                     max_iter: int) -> Tuple[Optional[float], np.ndarray]:
    norm_k = max(float(np.linalg.norm(k, 2)), np.finfo(float).tiny)
    w = w / np.linalg.norm(w)
    for _ in range(max_iter):
        z = k @ w
        lam = float(np.real(np.vdot(w, z)))
        if np.linalg.norm(z - lam * w) <= tol * norm_k:
            return lam, w
        w = z / np.linalg.norm(z)
    return None, w


def pencil_lambda_max(bm: np.ndarray, am: np.ndarray, tol: float = PENCIL_TOL,
                      max_iter: int = PENCIL_MAX_ITER,
                      rng: Optional[np.random.Generator] = None) -> Tuple[float, np.ndarray]:
    """
    Largest eigenvalue of the pencil B v = lambda A v, A Hermitian positive definite.

    A = C C^H is factorized, the power method runs on K = C^-1 B C^-H with a
    Rayleigh quotient residual stopping rule, and v = C^-H w is normalized.
    A stalled run is restarted once from a random vector; after that the
    dense solver takes over for L <= 8.

    Args:
        bm: Hermitian positive definite matrix B
        am: Hermitian positive definite matrix A
        tol: Residual tolerance relative to ||K||
        max_iter: Power iterations per attempt
        rng: Generator for restarts

    Returns:
        (lambda, v) with ||v||_2 = 1

    Raises:
        DomainError: If A is not positive definite or the inputs are invalid
        PencilError: If the power method stalls and L > 8
    """
    bm, am = _check_pair(bm, am)
    size = bm.shape[0]
    try:
        c = cholesky(am, lower=True)
    except LinAlgError as e:
        raise DomainError(f"A is not positive definite: {e}")

    x = solve_triangular(c, bm, lower=True)
    k = solve_triangular(c, x.conj().T, lower=True)
    k = 0.5 * (k + k.conj().T)

    rng = rng if rng is not None else np.random.default_rng(0)
    lam, w = None, None
    restarts = -1
    while lam is None and restarts < PENCIL_RESTARTS:
        restarts += 1
        w0 = rng.standard_normal(size)
        if np.iscomplexobj(k):
            w0 = w0 + 1j * rng.standard_normal(size)
        lam, w = _power_iteration(k, w0, tol, max_iter)

    if lam is None:
        if size <= DENSE_MAX_L:
            logger.debug(f"Power method stalled on an L={size} pencil, using the dense solver")
            return pencil_lambda_max_dense(bm, am)
        raise PencilError(f"Power method did not converge in {max_iter} steps after {restarts} restart(s)")

    v = solve_triangular(c, w, lower=True, trans="C")
    return lam, _normalize_phase(v)


def pencil_residual(bm: np.ndarray, am: np.ndarray, lam: float, v: np.ndarray) -> float:
    """||B v - lambda A v|| relative to ||B||."""
    bm = np.asarray(bm)
    return float(np.linalg.norm(bm @ v - lam * (np.asarray(am) @ v)) / np.linalg.norm(bm, 2))


def rayleigh_quotient(bm: np.ndarray, am: np.ndarray, v: np.ndarray) -> float:
    """v^H B v / v^H A v."""
    return float(np.real(np.vdot(v, np.asarray(bm) @ v)) / np.real(np.vdot(v, np.asarray(am) @ v)))
