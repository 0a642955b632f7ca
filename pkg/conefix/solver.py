"""
Solver - fixed point iteration, convergence diagnostics and error bounds
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .cone import ArrayLike, as_cone_vector, parse_norm, strongly_less, thompson_distance, vector_norm
from .errors import DomainError, EvaluationError, NoValidEpsilonError
from .mappings import MappingHandle, evaluate
from .models import (
    ConvergenceClass,
    ConvergenceDiagnostics,
    IterationTrace,
    NormId,
    StepRecord,
    StopReason,
)


logger = logging.getLogger(__name__)

# Constants
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10000
DIVERGENCE_CEILING = 1e15
TAIL_TOLERANCE = 1e-3  # Margin below one separating geometric from sublinear rates
ERROR_TOLERANCE = 1e-9  # Errors above this count as "not yet converged"
MIN_DIAGNOSTIC_STEPS = 10
ZERO_ERROR_FLOOR = 64 * np.finfo(float).eps  # Errors below this times ||x*|| count as zero

TRACE_COLUMNS = ["n", "step_linf", "err_l2", "err_linf", "ratio_l2", "d_thompson", "lower_bound"]
RATIO_COLUMNS = ["n", "ratio_l2"]


def fixed_point_iterate(f: MappingHandle, x1: ArrayLike, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER,
                        reference: Optional[ArrayLike] = None,
                        ceiling: float = DIVERGENCE_CEILING) -> IterationTrace:
    """
    Run x_{n+1} = f(x_n) from x1.

    Stops when ||x_{n+1} - x_n||_inf <= tol * max(1, ||x_n||_inf), after
    max_iter steps, or when ||x_{n+1}||_inf exceeds the ceiling.

    Args:
        f: Mapping handle
        x1: Starting point
        tol: Relative step tolerance
        max_iter: Maximum number of steps
        reference: Optional fixed point used for the error columns
        ceiling: Divergence guard

    Returns:
        IterationTrace with one record per step

    Raises:
        EvaluationError: With the partial trace attached if f fails
    """
    if not tol > 0:
        raise DomainError(f"Iteration tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")

    x = as_cone_vector(x1)
    iterates = [x]
    stop_reason = StopReason.MAX_ITERS
    logger.debug(f"Iterating {f.name} from {x} (tol={tol:g}, max_iter={max_iter})")

    for n in range(1, max_iter + 1):
        try:
            y = evaluate(f, x)
        except EvaluationError as e:
            e.trace = annotate_trace(IterationTrace(iterates, StopReason.MAX_ITERS), reference)
            raise
        iterates.append(y)
        step = float(np.max(np.abs(y - x)))
        scale = max(1.0, float(np.max(np.abs(x))))
        x = y
        if float(np.max(np.abs(y))) > ceiling:
            stop_reason = StopReason.DIVERGENCE_GUARD
            logger.warning(f"Divergence guard fired for {f.name} after {n} steps")
            break
        if step <= tol * scale:
            stop_reason = StopReason.TOLERANCE_MET
            break

    trace = IterationTrace(iterates=iterates, stop_reason=stop_reason)
    logger.debug(f"{f.name}: {stop_reason.value} after {len(iterates) - 1} steps")
    return annotate_trace(trace, reference)


def annotate_trace(trace: IterationTrace, reference: Optional[ArrayLike] = None,
                   lower_bound: Optional[Sequence[float]] = None) -> IterationTrace:
    """
    (Re)compute the per-step records of a trace.

    Record n (n = 1, 2, ...) describes the step from x_n to x_{n+1}; its
    error columns measure x_{n+1} against the reference, its ratio is
    ||x_{n+1} - x*|| / ||x_n - x*|| and ``lower_bound[n - 1]`` is stored
    alongside when given.
    """
    points = np.array(trace.iterates)
    steps = np.diff(points, axis=0)
    step_l1 = np.sum(np.abs(steps), axis=1)
    step_l2 = np.linalg.norm(steps, axis=1)
    step_linf = np.max(np.abs(steps), axis=1) if len(steps) else np.zeros(0)

    err_l2 = err_linf = ratio = d_t = None
    if reference is not None:
        ref = as_cone_vector(reference)
        errors = points - ref
        e2 = np.linalg.norm(errors, axis=1)
        err_l2 = e2[1:]
        err_linf = np.max(np.abs(errors), axis=1)[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(e2[:-1] > 0, e2[1:] / np.where(e2[:-1] > 0, e2[:-1], 1.0), np.nan)
        if np.all(ref > 0) and np.all(points > 0):
            with np.errstate(divide="ignore"):
                logs = np.abs(np.log(points[1:]) - np.log(ref))
            d_t = np.max(logs, axis=1)

    records = []
    for i in range(len(steps)):
        records.append(StepRecord(
            n=i + 1,
            step_l1=float(step_l1[i]),
            step_l2=float(step_l2[i]),
            step_linf=float(step_linf[i]),
            err_l2=None if err_l2 is None else float(err_l2[i]),
            err_linf=None if err_linf is None else float(err_linf[i]),
            ratio_l2=None if ratio is None or np.isnan(ratio[i]) else float(ratio[i]),
            d_thompson=None if d_t is None else float(d_t[i]),
            lower_bound=None if lower_bound is None or i >= len(lower_bound) else float(lower_bound[i]),
        ))
    trace.records = records
    trace.reference = None if reference is None else as_cone_vector(reference)
    return trace


def truncate_trace(trace: IterationTrace, steps: int, stop_reason: StopReason) -> IterationTrace:
    """Keep the first ``steps`` steps of a trace."""
    clipped = IterationTrace(iterates=list(trace.iterates[:steps + 1]), stop_reason=stop_reason)
    return annotate_trace(clipped, trace.reference)


def first_tolerance_step(trace: IterationTrace, tol: float) -> Optional[int]:
    """First step n at which the relative stopping rule with ``tol`` holds."""
    for record in trace.records:
        scale = max(1.0, float(np.max(np.abs(trace.iterates[record.n - 1]))))
        if record.step_linf <= tol * scale:
            return record.n
    return None


def feasibility_probe(f: MappingHandle, x: ArrayLike) -> bool:
    """
    True iff f(x) <= x componentwise.

    For an SI mapping this guarantees a fixed point below x, and the iteration
    converges from any start.
    """
    x = as_cone_vector(x)
    return bool(np.all(evaluate(f, x) <= x))


def scalar_fixed_point(f: MappingHandle, lo: float, hi: float,
                       xtol: float = 1e-15) -> float:
    """
    Fixed point of a one-dimensional mapping by bracketing f(x) - x.

    Raises:
        DomainError: If the mapping is not scalar or [lo, hi] does not bracket a root
    """
    if f.dimension != 1:
        raise DomainError(f"Scalar fixed point needs k = 1, {f.name} has k = {f.dimension}")

    def residual(t: float) -> float:
        return float(evaluate(f, [t])[0]) - t

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0.0:
        return float(lo)
    if r_hi == 0.0:
        return float(hi)
    if np.sign(r_lo) == np.sign(r_hi):
        raise DomainError(f"[{lo}, {hi}] does not bracket a fixed point of {f.name}")
    return float(brentq(residual, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def _errors(trace: IterationTrace, reference: np.ndarray, norm: NormId) -> np.ndarray:
    points = np.array(trace.iterates[1:])
    diffs = points - reference
    if norm == NormId.L1:
        return np.sum(np.abs(diffs), axis=1)
    if norm == NormId.L2:
        return np.linalg.norm(diffs, axis=1)
    return np.max(np.abs(diffs), axis=1)


def convergence_diagnostics(trace: IterationTrace, x_star: ArrayLike,
                            norm: Union[str, NormId] = NormId.L2,
                            tail_tolerance: float = TAIL_TOLERANCE,
                            error_tolerance: float = ERROR_TOLERANCE) -> ConvergenceDiagnostics:
    """
    Classify the convergence of a trace against a known fixed point.

    The fitted factor c_hat is exp of the least-squares slope of ln(error_n)
    over the tail half of the usable records. Records are usable up to the
    first error that is zero at machine precision.

    Args:
        trace: Iteration trace with at least 10 steps
        x_star: Fixed point
        norm: Norm of the errors
        tail_tolerance: Margin below one for the geometric/sublinear split
        error_tolerance: Errors above this (times max(1, ||x*||)) are unconverged

    Returns:
        ConvergenceDiagnostics; ties are classified as inconclusive
    """
    norm_id = parse_norm(norm)
    ref = as_cone_vector(x_star)
    if len(trace.iterates) - 1 < MIN_DIAGNOSTIC_STEPS:
        raise DomainError(
            f"Diagnostics need at least {MIN_DIAGNOSTIC_STEPS} steps, got {len(trace.iterates) - 1}"
        )

    errors = _errors(trace, ref, norm_id)
    scale = max(1.0, vector_norm(ref, norm_id))
    zero = np.flatnonzero(errors <= ZERO_ERROR_FLOOR * scale)
    usable = errors[:zero[0]] if len(zero) else errors
    if len(usable) < 2:
        raise DomainError("Errors vanish before two usable records remain")

    start = len(usable) // 2
    tail = usable[start:]
    ns = np.arange(start + 1, len(usable) + 1, dtype=float)
    if len(tail) >= 2:
        slope = float(np.polyfit(ns, np.log(tail), 1)[0])
    else:
        slope = float(np.log(usable[-1] / usable[-2]))
    c_hat = float(np.exp(slope))

    ratios = tail[1:] / tail[:-1] if len(tail) >= 2 else usable[1:] / usable[:-1]
    ratio_limit = float(np.mean(ratios))

    still_large = float(errors[-1]) > error_tolerance * scale
    sublinear = ratio_limit > 1.0 - tail_tolerance and still_large
    geometric = c_hat < 1.0 - tail_tolerance
    if sublinear and not geometric:
        classification = ConvergenceClass.SUBLINEAR
    elif geometric and not sublinear:
        classification = ConvergenceClass.GEOMETRIC
    else:
        classification = ConvergenceClass.INCONCLUSIVE

    gamma = None
    if geometric:
        gamma = _envelope(usable, c_hat)
    logger.debug(f"Diagnostics: c_hat={c_hat:.6f}, ratio_limit={ratio_limit:.6f}, "
                 f"{classification.value}")
    return ConvergenceDiagnostics(c_hat=c_hat, ratio_limit=ratio_limit,
                                  classification=classification,
                                  fitted_steps=len(tail), gamma=gamma)


def _envelope(errors: np.ndarray, c_hat: float) -> float:
    ns = np.arange(1, len(errors) + 1, dtype=float)
    positive = errors > 0
    if not np.any(positive):
        return 0.0
    return float(np.exp(np.max(np.log(errors[positive]) - ns[positive] * np.log(c_hat))))


def geometric_envelope(trace: IterationTrace, x_star: ArrayLike, c_hat: float,
                       norm: Union[str, NormId] = NormId.L2) -> float:
    """
    Smallest gamma with ||x_{n+1} - x*|| <= gamma * c_hat^n on every record.

    Raises:
        DomainError: If c_hat is not in (0, 1)
    """
    if not 0.0 < c_hat < 1.0:
        raise DomainError(f"c_hat must lie in (0, 1), got {c_hat}")
    errors = _errors(trace, as_cone_vector(x_star), parse_norm(norm))
    return _envelope(errors, c_hat)


def thompson_banach_bound(c: float, trace: IterationTrace) -> List[float]:
    """
    A-priori bound c^n d_T(x_2, x_1) / (1 - c) on d_T(x_{n+1}, x*) per record.

    Valid when the iterates stay in a box on which f is a c-contraction.
    """
    if not 0.0 <= c < 1.0:
        raise DomainError(f"Contraction factor must lie in [0, 1), got {c}")
    if len(trace.iterates) < 2:
        return []
    d1 = thompson_distance(trace.iterates[1], trace.iterates[0])
    return [c ** record.n * d1 / (1.0 - c) for record in trace.records]


def error_lower_bound(rho: float, eps: float, v: ArrayLike,
                      norm: Union[str, NormId] = NormId.L2,
                      n_range: Iterable[int] = range(0, 100)) -> List[float]:
    """
    The sequence rho^n * eps * ||v|| bounding ||x_{n+1} - x*|| from below.

    Args:
        rho: Spectral radius of the asymptotic mapping, in (0, 1)
        eps: Largest eps with x1 <= x* - eps v (or x1 >= x* + eps v)
        v: Eigenvector of the asymptotic mapping
        norm: Norm of the errors
        n_range: Step indices

    Raises:
        DomainError: If a parameter is out of range
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    v = as_cone_vector(v)
    size = vector_norm(v, norm)
    if size == 0:
        raise DomainError("The eigenvector must be nonzero")
    return [rho ** n * eps * size for n in n_range]


def max_lower_bound_eps(x1: ArrayLike, x_star: ArrayLike, v: ArrayLike) -> Tuple[float, str]:
    """
    Largest eps such that x1 <= x* - eps v, or x1 >= x* + eps v.

    Returns:
        (eps, side) with side "below" or "above"

    Raises:
        NoValidEpsilonError: If x1 is neither << x* nor >> x*
    """
    x1 = as_cone_vector(x1)
    ref = as_cone_vector(x_star)
    v = as_cone_vector(v)
    support = v > 0
    if not np.any(support):
        raise NoValidEpsilonError("The eigenvector has no positive coordinate")
    if strongly_less(x1, ref):
        return float(np.min((ref - x1)[support] / v[support])), "below"
    if strongly_less(ref, x1):
        return float(np.min((x1 - ref)[support] / v[support])), "above"
    raise NoValidEpsilonError("x1 is neither strongly below nor strongly above the fixed point")


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _write_csv(path: Union[str, Path], header_lines: Sequence[str],
               columns: List[str], rows: Iterable[List[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")
    return path


def write_trace_csv(trace: IterationTrace, path: Union[str, Path],
                    header_lines: Sequence[str] = ()) -> Path:
    """
    Write the trace in the column layout
    ``n,step_linf,err_l2,err_linf,ratio_l2,d_thompson,lower_bound``.

    Absent values are written as empty cells.
    """
    rows = (
        [str(r.n), _cell(r.step_linf), _cell(r.err_l2), _cell(r.err_linf),
         _cell(r.ratio_l2), _cell(r.d_thompson), _cell(r.lower_bound)]
        for r in trace.records
    )
    return _write_csv(path, header_lines, TRACE_COLUMNS, rows)


def write_ratio_csv(trace: IterationTrace, path: Union[str, Path],
                    header_lines: Sequence[str] = ()) -> Path:
    """Write ``n,ratio_l2`` for the records that have a ratio."""
    rows = ([str(r.n), _cell(r.ratio_l2)] for r in trace.records if r.ratio_l2 is not None)
    return _write_csv(path, header_lines, RATIO_COLUMNS, rows)


def read_trace_csv(path: Union[str, Path]) -> List[dict]:
    """Read a trace CSV back as a list of dicts (empty cells become None)."""
    with open(path, newline="") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    rows = []
    for row in csv.DictReader(lines):
        rows.append({key: (None if value == "" else (int(value) if key == "n" else float(value)))
                     for key, value in row.items()})
    return rows

