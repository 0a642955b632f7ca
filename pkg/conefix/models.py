"""
Data models for the conefix library
"""

from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Tuple
from enum import Enum

import numpy as np


class OrderRelation(Enum):
    """Relation between two vectors under the cone ordering"""
    EQUAL = "eq"
    STRONGLY_LESS = "strongly-less"
    LESS = "less"
    STRONGLY_GREATER = "strongly-greater"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


class NormId(Enum):
    """Supported monotone norms"""
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


class StopReason(Enum):
    """Why a fixed point iteration stopped"""
    TOLERANCE_MET = "tolerance-met"
    MAX_ITERS = "max-iters"
    DIVERGENCE_GUARD = "divergence-guard"


class PropertyVerdict(Enum):
    """Outcome of a randomized property check"""
    NO_VIOLATION_FOUND = "no-violation-found"
    VIOLATED = "violated"


class FeasibilityVerdict(Enum):
    """Existence of a fixed point as decided by the spectral radius"""
    HAS_FIXED_POINT = "has-fixed-point"
    NO_FIXED_POINT = "no-fixed-point"
    INCONCLUSIVE = "inconclusive"


class ConvergenceClass(Enum):
    """Empirical convergence classification of a trace"""
    SUBLINEAR = "sublinear"
    GEOMETRIC = "geometric"
    INCONCLUSIVE = "inconclusive"


class Layout(Enum):
    """Base station placement inside the deployment square"""
    GRID = "grid"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ConeBox:
    """
    Order interval U = {x : lower <= x <= upper} inside the open cone.
    """
    lower: np.ndarray
    upper: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])


@dataclass(frozen=True)
class MappingFlags:
    """Structural claims of a mapping; validated by the checkers, never trusted"""
    monotone: bool = True
    scalable: bool = True
    concave: bool = True
    positive: bool = True

    @property
    def claims_si(self) -> bool:
        return self.monotone and self.scalable and self.positive

    @property
    def claims_pc(self) -> bool:
        return self.concave and self.positive


@dataclass
class AsymptoticEvaluation:
    """Value of f_inf(x) and how it was obtained"""
    value: np.ndarray
    converged: bool
    closed_form: bool = False
    scale: float = 1.0


@dataclass
class Violation:
    """A single counterexample found by a property checker"""
    inputs: Dict[str, Any]
    magnitude: float


@dataclass
class PropertyReport:
    """
    Result of a randomized falsification run for one property.
    """
    property_id: str
    samples_tested: int
    violations: List[Violation] = field(default_factory=list)

    @property
    def verdict(self) -> PropertyVerdict:
        if self.violations:
            return PropertyVerdict.VIOLATED
        return PropertyVerdict.NO_VIOLATION_FOUND

    @property
    def worst_margin(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)


@dataclass
class StepRecord:
    """
    Per-step diagnostics of a fixed point run. Reference-dependent fields
    stay None when no reference point was supplied.
    """
    n: int
    step_l1: float
    step_l2: float
    step_linf: float
    err_l2: Optional[float] = None
    err_linf: Optional[float] = None
    ratio_l2: Optional[float] = None
    d_thompson: Optional[float] = None
    lower_bound: Optional[float] = None


@dataclass
class IterationTrace:
    """
    Full record of a fixed point run x_{n+1} = f(x_n).
    """
    iterates: List[np.ndarray]
    stop_reason: StopReason
    records: List[StepRecord] = field(default_factory=list)
    reference: Optional[np.ndarray] = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.stop_reason == StopReason.TOLERANCE_MET


@dataclass
class SpectralRadiusEstimate:
    """
    Nonlinear spectral radius with its Collatz-Wielandt bracket.
    """
    rho: float
    lower: float
    upper: float
    iterations: int
    converged: bool
    eigvec: Optional[np.ndarray] = None
    method: str = "power"

    @property
    def bracket(self) -> Tuple[float, float]:
        return (self.lower, self.upper)


@dataclass
class FeasibilityResult:
    """Fixed point existence verdict with the bracket it was decided on"""
    verdict: FeasibilityVerdict
    estimate: SpectralRadiusEstimate


@dataclass(frozen=True)
class ContractionCertificate:
    """
    Local c-Lipschitz contraction certificate in Thompson's metric on a box.
    """
    box: ConeBox
    mu: float
    lambda0: float
    c: float
    degenerate_box: bool = False


@dataclass
class ConvergenceDiagnostics:
    """Empirical rate analysis of a trace against a known fixed point"""
    c_hat: float
    ratio_limit: float
    classification: ConvergenceClass
    fitted_steps: int
    gamma: Optional[float] = None


@dataclass
class LoadScenario:
    """
    OFDMA load coupling instance. Gains are indexed gain[u, b].
    """
    bs_positions: np.ndarray
    user_positions: np.ndarray
    assignment: np.ndarray
    gain: np.ndarray
    power: np.ndarray
    demand: np.ndarray
    sigma2: float
    resource_blocks: int
    bandwidth: float
    freq_mhz: float = 900.0
    h_bs: float = 30.0
    h_user: float = 1.5
    layout: Layout = Layout.GRID
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return int(self.bs_positions.shape[0])

    @property
    def users(self) -> int:
        return int(self.user_positions.shape[0])

    def users_of(self, b: int) -> np.ndarray:
        """Indices of the users served by base station b."""
        return np.flatnonzero(self.assignment == b)


@dataclass
class LoadExperimentResult:
    """Outcome of a load estimation run"""
    trace: IterationTrace
    rho: float
    feasibility: FeasibilityResult
    estimate: SpectralRadiusEstimate
    diagnostics: Optional[ConvergenceDiagnostics] = None
    epsilon: Optional[float] = None
    strictly_dominated: bool = False

    @property
    def feasible(self) -> bool:
        return self.feasibility.verdict == FeasibilityVerdict.HAS_FIXED_POINT


@dataclass
class PowerScenario:
    """
    Uplink power control / beamforming instance.

    covariances[(u, b)] holds the L x L Hermitian positive definite matrix
    R_{u,b}; candidates[u] lists the admissible stations of user u.
    """
    k: int
    m: int
    antennas: int
    candidates: List[List[int]]
    covariances: Dict[Tuple[int, int], np.ndarray]
    gamma: np.ndarray
    sigma2: float
    p_bar: Optional[float] = None
    seed: Optional[int] = None
    codebook: Optional[List[np.ndarray]] = None


@dataclass
class BeamformingSolution:
    """Per-user receive beamformer, serving station and achieved SINR"""
    beamformers: List[np.ndarray]
    stations: List[int]
    sinr: np.ndarray
    capped: List[bool] = field(default_factory=list)


@dataclass
class PowerControlResult:
    """Outcome of a power control solve"""
    power: Optional[np.ndarray]
    solution: Optional[BeamformingSolution]
    trace: Optional[IterationTrace]
    feasibility: FeasibilityResult
    max_sinr_error: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.feasibility.verdict == FeasibilityVerdict.HAS_FIXED_POINT


@dataclass
class ExperimentConfig:
    """
    Parameters of one CLI command; file values are overridden by flags.
    """
    command: str
    mapping: Optional[str] = None
    scenario: Optional[str] = None
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    norm: str = "l2"
    box_lo: Optional[List[float]] = None
    box_hi: Optional[List[float]] = None
    mu: Optional[float] = None
    p_bar: Optional[float] = None
    out: str = "."
    seed: int = 0
    seeds: Optional[Tuple[int, int]] = None
    x1: Optional[float] = None
    eps: float = 1e-3
    freq_mhz: float = 900.0
    layout: str = "grid"
    users: int = 400
    stations: int = 25
    demand_scale: float = 1.0
    antennas: int = 2
    power_users: int = 4
    power_stations: int = 2
    gamma_spread: Tuple[float, float] = (0.5, 1.5)
    emit_scenario: Optional[str] = None
    workers: int = 4
    metadata: Dict[str, Any] = field(default_factory=dict)
