"""
Uplink power control with base station assignment and receive beamforming
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, PencilError, ScenarioError
from ..mappings import MappingHandle
from ..models import (
    BeamformingSolution,
    FeasibilityVerdict,
    MappingFlags,
    PowerControlResult,
    PowerScenario,
)
from ..solver import fixed_point_iterate
from ..spectral import feasibility_check
from .pencil import DENSE_MAX_L, is_positive_definite, pencil_lambda_max, pencil_lambda_max_dense


logger = logging.getLogger(__name__)

# Constants
POWER_TOL = 1e-10
POWER_MAX_ITER = 10000
RIDGE_FACTOR = 1e-6
DEFAULT_NOISE = 0.1
REFERENCE_DISTANCE = 0.25
PATH_LOSS_EXPONENT = 3.0
PENCIL_METHODS = ("auto", "iterative", "dense")

PencilSolver = Callable[[np.ndarray, np.ndarray], Tuple[float, np.ndarray]]


def _hermitian(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def generate_power_scenario(k: int = 4, m: int = 2, antennas: int = 2, seed: int = 0,
                            gamma_spread: Tuple[float, float] = (0.5, 1.5),
                            sigma2: float = DEFAULT_NOISE,
                            p_bar: Optional[float] = None,
                            extra_candidate_prob: float = 0.5) -> PowerScenario:
    """
    Generate a seeded power control scenario.

    Users and stations are dropped uniformly in the unit square. Each
    covariance is R[u,b] = beta H H^H / L + ridge I, with H a complex Gaussian
    L x L matrix, beta = 1 / (1 + (dist/0.25)^3) and ridge = 1e-6 trace(H H^H) / L
    times beta. Every user may use its nearest station and each other station
    with probability ``extra_candidate_prob``.

    Args:
        k: Number of users (at least 2)
        m: Number of stations
        antennas: Antennas per station L
        seed: Random seed
        gamma_spread: Interval the SINR targets are drawn from
        sigma2: Noise power per antenna
        p_bar: Optional power cap
        extra_candidate_prob: Probability of admitting a non-nearest station
    """
    if antennas < 1 or m < 1 or k < 2:
        raise ScenarioError(f"Need L >= 1, m >= 1 and k >= 2, got L={antennas}, m={m}, k={k}")
    lo, hi = gamma_spread
    if not 0 < lo <= hi:
        raise ScenarioError(f"Invalid SINR target spread {gamma_spread}")

    rng = np.random.default_rng(seed)
    stations = rng.random((m, 2))
    users = rng.random((k, 2))
    distances = np.linalg.norm(users[:, None, :] - stations[None, :, :], axis=2)
    beta = 1.0 / (1.0 + (distances / REFERENCE_DISTANCE) ** PATH_LOSS_EXPONENT)

    covariances = {}
    for u in range(k):
        for b in range(m):
            h = (rng.standard_normal((antennas, antennas))
                 + 1j * rng.standard_normal((antennas, antennas))) / np.sqrt(2.0)
            gram = h @ h.conj().T
            ridge = RIDGE_FACTOR * float(np.real(np.trace(gram))) / antennas
            covariances[(u, b)] = _hermitian(beta[u, b] * (gram / antennas + ridge * np.eye(antennas)))

    candidates = []
    for u in range(k):
        nearest = int(np.argmin(distances[u]))
        chosen = [b for b in range(m) if b == nearest or rng.random() < extra_candidate_prob]
        candidates.append(chosen)

    scenario = PowerScenario(
        k=k, m=m, antennas=antennas,
        candidates=candidates,
        covariances=covariances,
        gamma=rng.uniform(lo, hi, size=k),
        sigma2=float(sigma2),
        p_bar=p_bar,
        seed=seed,
    )
    validate_power_scenario(scenario)
    logger.info(f"Generated power scenario: k={k}, m={m}, L={antennas}, seed={seed}")
    return scenario


def validate_power_scenario(s: PowerScenario) -> None:
    """
    Raises:
        ScenarioError: If the scenario violates a structural requirement
    """
    if s.k < 2:
        raise ScenarioError(f"Power control needs at least two users, got {s.k}")
    if len(s.candidates) != s.k or any(len(c) == 0 for c in s.candidates):
        raise ScenarioError("Every user needs a nonempty candidate set")
    if any(b < 0 or b >= s.m for c in s.candidates for b in c):
        raise ScenarioError("Candidate station index out of range")
    if np.asarray(s.gamma).shape != (s.k,) or np.any(np.asarray(s.gamma) <= 0):
        raise ScenarioError("Need one positive SINR target per user")
    if not s.sigma2 > 0:
        raise ScenarioError(f"Noise power must be positive, got {s.sigma2}")
    if s.p_bar is not None and not s.p_bar > 0:
        raise ScenarioError(f"Power cap must be positive, got {s.p_bar}")

    used = sorted({b for c in s.candidates for b in c})
    for b in used:
        for u in range(s.k):
            r = s.covariances.get((u, b))
            if r is None:
                raise ScenarioError(f"Missing covariance for user {u}, station {b}")
            r = np.asarray(r)
            if r.shape != (s.antennas, s.antennas):
                raise ScenarioError(f"Covariance ({u}, {b}) has shape {r.shape}")
            scale = max(float(np.max(np.abs(r))), np.finfo(float).tiny)
            if np.max(np.abs(r - r.conj().T)) > 1e-12 * scale:
                raise ScenarioError(f"Covariance ({u}, {b}) is not Hermitian")
            if not is_positive_definite(r):
                raise ScenarioError(f"Covariance ({u}, {b}) is not positive definite")

    if s.codebook is not None:
        if len(s.codebook) != s.k:
            raise ScenarioError("The codebook needs one entry per user")
        for u, words in enumerate(s.codebook):
            words = np.asarray(words)
            if words.ndim != 2 or words.shape[1] != s.antennas or words.shape[0] == 0:
                raise ScenarioError(f"Codebook of user {u} must be a nonempty (n, L) array")


def _pencil_solver(method: str, antennas: int) -> PencilSolver:
    if method not in PENCIL_METHODS:
        raise DomainError(f"Unknown pencil method {method!r}, expected one of {PENCIL_METHODS}")
    if method == "dense" or (method == "auto" and antennas <= DENSE_MAX_L):
        return pencil_lambda_max_dense
    return pencil_lambda_max


class _InterferenceModel:
    """Precomputed covariance stacks shared by the mapping and solution recovery."""

    def __init__(self, s: PowerScenario, pencil_method: str = "auto"):
        validate_power_scenario(s)
        self.s = s
        self.gamma = np.asarray(s.gamma, dtype=float)
        self.eye = np.eye(s.antennas)
        self.solve = _pencil_solver(pencil_method, s.antennas)
        stations = sorted({b for c in s.candidates for b in c})
        self.stacks = {b: np.stack([np.asarray(s.covariances[(j, b)]) for j in range(s.k)])
                       for b in stations}
        self.codebook = None if s.codebook is None else [np.asarray(w) for w in s.codebook]

    def interference(self, x: np.ndarray, u: int, b: int) -> np.ndarray:
        """A_{u,b}(x) = sum_{j != u} x[j] R[j,b] + sigma2 I."""
        weights = np.array(x, dtype=float)
        weights[u] = 0.0
        return np.tensordot(weights, self.stacks[b], axes=1) + self.s.sigma2 * self.eye

    def best_response(self, x: np.ndarray, u: int) -> Tuple[float, np.ndarray, int]:
        """
        Best station and beamformer of user u at power vector x.

        Returns:
            (lambda, v, b) maximizing v^H R v / v^H A v
        """
        best = (-np.inf, None, -1)
        for b in self.s.candidates[u]:
            a = self.interference(x, u, b)
            r = self.stacks[b][u]
            try:
                if self.codebook is None:
                    lam, v = self.solve(r, a)
                else:
                    lam, v = _codebook_lambda(r, a, self.codebook[u])
            except (DomainError, PencilError) as e:
                raise PencilError(str(e), pair=(u, b)) from e
            if lam > best[0]:
                best = (lam, v, b)
        return best

    def coordinate(self, x: np.ndarray, u: int) -> float:
        return float(self.gamma[u] / self.best_response(x, u)[0])


def _codebook_lambda(r: np.ndarray, a: np.ndarray, words: np.ndarray) -> Tuple[float, np.ndarray]:
    num = np.real(np.einsum("ni,ij,nj->n", words.conj(), r, words))
    den = np.real(np.einsum("ni,ij,nj->n", words.conj(), a, words))
    ratios = num / den
    i = int(np.argmax(ratios))
    return float(ratios[i]), words[i] / np.linalg.norm(words[i])


def interference_mapping(s: PowerScenario, pencil_method: str = "auto",
                         max_workers: int = 1) -> MappingHandle:
    """
    The power control interference mapping.

    f_u(x) = min_{b in B_u} gamma_u / lambda_max(R[u,b], A_{u,b}(x)), i.e. the
    least power giving user u its target SINR under the best station and
    beamformer. With a codebook the maximum runs over the codewords. The
    asymptotic mapping is evaluated numerically.

    Args:
        s: Power scenario
        pencil_method: "auto" (dense for L <= 8), "iterative" or "dense"
        max_workers: Threads evaluating users concurrently
    """
    model = _InterferenceModel(s, pencil_method)
    users = list(range(s.k))

    def evaluator(x: np.ndarray) -> np.ndarray:
        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as executor:
                return np.array(list(executor.map(lambda u: model.coordinate(x, u), users)))
        return np.array([model.coordinate(x, u) for u in users])

    return MappingHandle(f"interference(k={s.k},seed={s.seed})", s.k, evaluator,
                         flags=MappingFlags())


def capped_mapping(s: PowerScenario, p_bar: float, pencil_method: str = "auto",
                   max_workers: int = 1) -> MappingHandle:
    """min(f(x), p_bar) coordinatewise; its asymptotic mapping is zero."""
    if not p_bar > 0:
        raise DomainError(f"Power cap must be positive, got {p_bar}")
    f = interference_mapping(s, pencil_method, max_workers)

    def evaluator(x: np.ndarray) -> np.ndarray:
        return np.minimum(f.evaluator(x), p_bar)

    return MappingHandle(f"capped({p_bar:g},seed={s.seed})", s.k, evaluator,
                         flags=MappingFlags(), asymptotic=np.zeros_like)


def sinr(s: PowerScenario, x: np.ndarray, u: int, v: np.ndarray, b: int) -> float:
    """SINR x[u] v^H R[u,b] v / v^H A_{u,b}(x) v of user u at station b."""
    model = _InterferenceModel(s)
    return _sinr(model, np.asarray(x, dtype=float), u, v, b)


def _sinr(model: _InterferenceModel, x: np.ndarray, u: int, v: np.ndarray, b: int) -> float:
    r = model.stacks[b][u]
    a = model.interference(x, u, b)
    num = float(np.real(np.vdot(v, r @ v)))
    den = float(np.real(np.vdot(v, a @ v)))
    return x[u] * num / den


def recover_solution(s: PowerScenario, x: np.ndarray, p_bar: Optional[float] = None,
                     pencil_method: str = "auto") -> BeamformingSolution:
    """
    Best station and beamformer of every user at the power vector x.

    Users whose unconstrained power exceeds p_bar are flagged as capped.
    """
    model = _InterferenceModel(s, pencil_method)
    x = np.asarray(x, dtype=float)
    beamformers, stations, ratios, capped = [], [], [], []
    for u in range(s.k):
        lam, v, b = model.best_response(x, u)
        beamformers.append(v)
        stations.append(b)
        ratios.append(_sinr(model, x, u, v, b))
        capped.append(p_bar is not None and model.gamma[u] / lam > p_bar)
    return BeamformingSolution(beamformers=beamformers, stations=stations,
                               sinr=np.array(ratios), capped=capped)


def solve_power_control(s: PowerScenario, tol: float = POWER_TOL,
                        max_iter: int = POWER_MAX_ITER,
                        p_bar: Optional[float] = None,
                        pencil_method: str = "auto",
                        max_workers: int = 1) -> PowerControlResult:
    """
    Solve the power control problem through its fixed point characterization.

    The uncapped problem is solved only when rho(f_inf) < 1. The capped
    mapping (p_bar given, or set on the scenario) always has a fixed point.

    Args:
        s: Power scenario
        tol: Relative step tolerance
        max_iter: Maximum number of steps
        p_bar: Optional power cap overriding the scenario's
        pencil_method: Pencil solver selection
        max_workers: Threads evaluating users concurrently

    Returns:
        PowerControlResult; power and solution are None when infeasible
    """
    cap = p_bar if p_bar is not None else s.p_bar
    if cap is None:
        f = interference_mapping(s, pencil_method, max_workers)
    else:
        f = capped_mapping(s, cap, pencil_method, max_workers)

    feasibility = feasibility_check(f)
    if feasibility.verdict != FeasibilityVerdict.HAS_FIXED_POINT:
        logger.warning(f"Power control seed={s.seed} is {feasibility.verdict.value}: "
                       f"rho in [{feasibility.estimate.lower:.6g}, {feasibility.estimate.upper:.6g}]")
        return PowerControlResult(power=None, solution=None, trace=None, feasibility=feasibility)

    trace = fixed_point_iterate(f, np.zeros(s.k), tol, max_iter)
    if not trace.converged:
        logger.warning(f"Power iteration stopped by {trace.stop_reason.value}")
    x_star = trace.final
    solution = recover_solution(s, x_star, cap, pencil_method)

    gamma = np.asarray(s.gamma, dtype=float)
    free = [u for u in range(s.k) if not solution.capped[u]]
    max_error = None
    if free:
        max_error = float(np.max(np.abs(solution.sinr[free] / gamma[free] - 1.0)))
    if len(free) < s.k:
        logger.warning(f"Users at the power cap: {[u for u in range(s.k) if solution.capped[u]]}")
    logger.info(f"Power control seed={s.seed}: {trace.iterations} steps, "
                f"max SINR error {max_error}")
    return PowerControlResult(power=x_star, solution=solution, trace=trace,
                              feasibility=feasibility, max_sinr_error=max_error)


def interleave(values: np.ndarray) -> List[float]:
    """Flatten a complex array row-major as [re, im, re, im, ...]."""
    flat = np.asarray(values, dtype=complex).reshape(-1)
    return np.column_stack([flat.real, flat.imag]).reshape(-1).tolist()


def deinterleave(data: Sequence[float], shape: Tuple[int, ...]) -> np.ndarray:
    """Inverse of ``interleave``."""
    pairs = np.asarray(data, dtype=float).reshape(-1, 2)
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)


def solution_to_dict(solution: BeamformingSolution, power: np.ndarray) -> Dict[str, Any]:
    """Export per-user station, SINR, power and beamformer."""
    return {
        "users": [
            {
                "user": u,
                "b_star": int(solution.stations[u]),
                "sinr": float(solution.sinr[u]),
                "power": float(power[u]),
                "capped": bool(solution.capped[u]) if solution.capped else False,
                "beamformer": interleave(solution.beamformers[u]),
            }
            for u in range(len(solution.stations))
        ]
    }
