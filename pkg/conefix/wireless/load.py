"""
OFDMA load coupling - scenarios, the load mapping and its asymptotic matrix
"""

import logging
from dataclasses import replace
from typing import List, Optional, Union

import numpy as np

from ..cone import as_cone_vector
from ..errors import NoValidEpsilonError, ScenarioError
from ..mappings import MappingHandle, evaluate
from ..models import (
    ConvergenceClass,
    FeasibilityResult,
    Layout,
    LoadExperimentResult,
    LoadScenario,
    MappingFlags,
    StopReason,
)
from ..solver import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    MIN_DIAGNOSTIC_STEPS,
    annotate_trace,
    convergence_diagnostics,
    error_lower_bound,
    first_tolerance_step,
    fixed_point_iterate,
    max_lower_bound_eps,
    truncate_trace,
)
from ..spectral import matrix_spectral_radius, spectral_radius, verdict_from_estimate
from .propagation import hata_urban_gain


logger = logging.getLogger(__name__)

# Constants (simulation parameters of the reference cellular setup)
RESOURCE_BLOCKS = 25
BANDWIDTH_HZ = 2e5
DEMAND_BPS = 1e6
TX_POWER_W = 1.6
NOISE_W = 6.2e-18
BS_SQUARE_M = 2000.0
USER_SQUARE_M = 2500.0
DEFAULT_STATIONS = 25
DEFAULT_USERS = 400

EMPTY_CELL_LOAD = 1e-12  # Constant load of a cell without users
REFERENCE_TOL_FACTOR = 1e-3  # The fixed point is resolved this much tighter than the trace


def grid_positions(k: int, side: float) -> np.ndarray:
    """
    k points on a regular grid of the centered square, half a spacing from
    the border. Incomplete last rows are filled left to right.
    """
    cols = int(np.ceil(np.sqrt(k)))
    rows = int(np.ceil(k / cols))
    xs = (np.arange(cols) + 0.5) * side / cols - side / 2.0
    ys = (np.arange(rows) + 0.5) * side / rows - side / 2.0
    grid = np.array([(x, y) for y in ys for x in xs])
    return grid[:k]


def compute_gains(bs_positions: np.ndarray, user_positions: np.ndarray,
                  freq_mhz: float, h_bs: float, h_user: float) -> np.ndarray:
    """Hata gains g[u, b] from the geometry."""
    distances = np.linalg.norm(user_positions[:, None, :] - bs_positions[None, :, :], axis=2)
    return hata_urban_gain(distances, freq_mhz, h_bs, h_user)


def generate_scenario(k: int = DEFAULT_STATIONS, users: int = DEFAULT_USERS, seed: int = 0,
                      layout: Union[str, Layout] = Layout.GRID,
                      freq_mhz: float = 900.0, h_bs: float = 30.0, h_user: float = 1.5,
                      resource_blocks: int = RESOURCE_BLOCKS,
                      bandwidth: float = BANDWIDTH_HZ,
                      demand: float = DEMAND_BPS,
                      power: float = TX_POWER_W,
                      sigma2: float = NOISE_W,
                      bs_side: float = BS_SQUARE_M,
                      user_side: float = USER_SQUARE_M) -> LoadScenario:
    """
    Generate a seeded load coupling scenario.

    Base stations are placed in a bs_side square (grid or i.i.d. uniform),
    users i.i.d. uniform in the concentric user_side square, and every user is
    served by the station with the lowest path loss.

    Raises:
        ScenarioError: On an unknown layout or invalid counts
    """
    if k < 1 or users < 1:
        raise ScenarioError(f"Need at least one station and one user, got k={k}, users={users}")
    try:
        layout = Layout(layout) if not isinstance(layout, Layout) else layout
    except ValueError:
        raise ScenarioError(f"Unknown layout: {layout!r}")

    rng = np.random.default_rng(seed)
    if layout == Layout.GRID:
        bs_positions = grid_positions(k, bs_side)
    else:
        bs_positions = rng.uniform(-bs_side / 2.0, bs_side / 2.0, size=(k, 2))
    user_positions = rng.uniform(-user_side / 2.0, user_side / 2.0, size=(users, 2))

    gain = compute_gains(bs_positions, user_positions, freq_mhz, h_bs, h_user)
    scenario = LoadScenario(
        bs_positions=bs_positions,
        user_positions=user_positions,
        assignment=np.argmax(gain, axis=1),
        gain=gain,
        power=np.full(k, float(power)),
        demand=np.full(users, float(demand)),
        sigma2=float(sigma2),
        resource_blocks=int(resource_blocks),
        bandwidth=float(bandwidth),
        freq_mhz=float(freq_mhz),
        h_bs=float(h_bs),
        h_user=float(h_user),
        layout=layout,
        seed=seed,
    )
    validate_scenario(scenario)
    empty = [b for b in range(k) if len(scenario.users_of(b)) == 0]
    logger.info(f"Generated load scenario: k={k}, users={users}, layout={layout.value}, "
                f"seed={seed}, empty cells={len(empty)}")
    return scenario


def validate_scenario(s: LoadScenario) -> None:
    """
    Raises:
        ScenarioError: If the arrays are inconsistent or a parameter is out of range
    """
    k, users = s.k, s.users
    if s.gain.shape != (users, k):
        raise ScenarioError(f"Gain matrix has shape {s.gain.shape}, expected {(users, k)}")
    if not np.all(s.gain > 0) or not np.all(np.isfinite(s.gain)):
        raise ScenarioError("Every gain must be positive and finite")
    if s.power.shape != (k,) or np.any(s.power <= 0):
        raise ScenarioError("Need one positive transmit power per station")
    if s.demand.shape != (users,) or np.any(s.demand <= 0):
        raise ScenarioError("Need one positive demand per user")
    if s.assignment.shape != (users,) or np.any((s.assignment < 0) | (s.assignment >= k)):
        raise ScenarioError("Assignment must map every user to a station")
    if not s.sigma2 > 0 or not s.bandwidth > 0 or s.resource_blocks < 1:
        raise ScenarioError("sigma2, bandwidth and resource blocks must be positive")


def load_mapping(s: LoadScenario) -> MappingHandle:
    """
    The load coupling mapping.

    f_b(x) = (1/R) sum_{u in U_b} d[u] / r_u(x) with the modified Shannon rate
    r_u(x) = B log2(1 + p[b] g[u,b] / (sum_{j != b} x[j] p[j] g[u,j] + sigma2)).
    A cell without users has the constant load 1e-12. The closed-form
    asymptotic mapping diag(p)^-1 M diag(p) x is attached.
    """
    validate_scenario(s)
    users = np.arange(s.users)
    serving = s.assignment
    weighted = s.gain * s.power  # p[j] g[u, j]
    signal = weighted[users, serving]
    cross = weighted.copy()
    cross[users, serving] = 0.0
    empty = np.bincount(serving, minlength=s.k) == 0
    scale = 1.0 / s.resource_blocks
    bits = s.demand * np.log(2.0) / s.bandwidth  # d[u] ln2 / B

    def evaluator(x: np.ndarray) -> np.ndarray:
        interference = cross @ x
        sinr = signal / (interference + s.sigma2)
        per_user = bits / np.log1p(sinr)
        loads = scale * np.bincount(serving, weights=per_user, minlength=s.k)
        loads[empty] = EMPTY_CELL_LOAD
        return loads

    similar = np.diag(1.0 / s.power) @ asymptotic_matrix(s) @ np.diag(s.power)
    return MappingHandle(f"load(k={s.k},seed={s.seed})", s.k, evaluator,
                         flags=MappingFlags(), matrix=similar)


def asymptotic_matrix(s: LoadScenario) -> np.ndarray:
    """
    M[i, b] = sum_{u in U_i} ln2 d[u] g[u, b] / (R B g[u, i]) for b != i, zero diagonal.
    """
    users = np.arange(s.users)
    own = s.gain[users, s.assignment]
    weights = (np.log(2.0) * s.demand / (s.resource_blocks * s.bandwidth * own))[:, None] * s.gain
    membership = np.zeros((s.users, s.k))
    membership[users, s.assignment] = 1.0
    m = membership.T @ weights
    np.fill_diagonal(m, 0.0)
    return m


def scale_demand(s: LoadScenario, alpha: float) -> LoadScenario:
    """Copy of the scenario with every demand multiplied by alpha."""
    if not alpha > 0:
        raise ScenarioError(f"Demand scale must be positive, got {alpha}")
    return replace(s, demand=s.demand * alpha)


def with_frequency(s: LoadScenario, freq_mhz: float) -> LoadScenario:
    """Copy of the scenario at another carrier frequency, gains recomputed."""
    gain = compute_gains(s.bs_positions, s.user_positions, freq_mhz, s.h_bs, s.h_user)
    return replace(s, gain=gain, freq_mhz=float(freq_mhz))


def overloaded_cells(loads: np.ndarray) -> List[int]:
    """Stations whose load exceeds one, i.e. with unserved demand."""
    return [int(b) for b in np.flatnonzero(np.asarray(loads) > 1.0)]


def run_load_experiment(s: LoadScenario, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> LoadExperimentResult:
    """
    Reproduce the load estimation experiment on one scenario.

    The feasibility verdict is computed from rho(M) first. The iteration then
    runs from x1 = f(0) regardless. For a feasible scenario the fixed point
    is resolved to a tighter tolerance than the reported trace, and the trace
    is annotated with errors and the lower bound rho^n eps ||v||.

    Args:
        s: Load scenario
        tol: Relative step tolerance of the reported trace
        max_iter: Maximum number of steps

    Returns:
        LoadExperimentResult
    """
    f = load_mapping(s)
    matrix = asymptotic_matrix(s)
    matrix_estimate = matrix_spectral_radius(matrix)
    feasibility = FeasibilityResult(verdict_from_estimate(matrix_estimate), matrix_estimate)
    estimate = spectral_radius(f.asymptotic_evaluator(), np.ones(s.k))
    rho = matrix_estimate.rho
    logger.info(f"Load scenario seed={s.seed}: rho(M)={rho:.10g}, {feasibility.verdict.value}")

    x1 = evaluate(f, np.zeros(s.k))
    result = LoadExperimentResult(trace=None, rho=rho, feasibility=feasibility, estimate=estimate)
    if not result.feasible:
        result.trace = fixed_point_iterate(f, x1, tol, max_iter)
        logger.warning(f"Scenario seed={s.seed} has no feasible load; "
                       f"iteration stopped by {result.trace.stop_reason.value}")
        return result

    full = fixed_point_iterate(f, x1, max(tol * REFERENCE_TOL_FACTOR, 1e-16), 2 * max_iter)
    x_star = full.final
    cut = first_tolerance_step(full, tol)
    if cut is None or cut > max_iter:
        trace = truncate_trace(full, min(max_iter, len(full.iterates) - 1), StopReason.MAX_ITERS)
    else:
        trace = truncate_trace(full, cut, StopReason.TOLERANCE_MET)

    lower_bound = None
    v = estimate.eigvec
    if v is not None and 0.0 < estimate.rho < 1.0:
        try:
            eps, side = max_lower_bound_eps(x1, x_star, v)
            result.epsilon = eps
            result.strictly_dominated = side == "below"
            lower_bound = error_lower_bound(estimate.rho, eps, v, "l2",
                                            range(1, trace.iterations + 1))
        except NoValidEpsilonError as e:
            logger.warning(f"No lower bound for seed={s.seed}: {e}")
    result.trace = annotate_trace(trace, as_cone_vector(x_star), lower_bound)

    if trace.iterations >= MIN_DIAGNOSTIC_STEPS:
        result.diagnostics = convergence_diagnostics(result.trace, x_star, "l2")
        if result.diagnostics.classification != ConvergenceClass.GEOMETRIC:
            logger.warning(f"Seed={s.seed} converged but was classified "
                           f"{result.diagnostics.classification.value}")
    overloaded = overloaded_cells(x_star)
    if overloaded:
        logger.info(f"Cells with load above one (unserved demand): {overloaded}")
    return result


def find_infeasible_scale(s: LoadScenario, factor: float = 2.0,
                          max_doublings: int = 40) -> Optional[float]:
    """Smallest power of ``factor`` scaling the demands until rho(M) >= 1."""
    alpha = 1.0
    rho = matrix_spectral_radius(asymptotic_matrix(s)).rho
    for _ in range(max_doublings):
        if rho >= 1.0:
            return alpha
        alpha *= factor
        rho *= factor
    return None
