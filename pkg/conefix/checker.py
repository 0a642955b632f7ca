"""
PropertyChecker - randomized falsification of structural mapping claims

Every check draws samples, evaluates the mapping and records the
counterexamples it finds. A report without violations is evidence, not
proof.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .cone import box_contains, box_corners, box_sample, box_thompson_diameter, thompson_distance
from .errors import DomainError
from .mappings import Evaluator, MappingHandle, evaluate
from .models import ConeBox, PropertyReport, PropertyVerdict, Violation


logger = logging.getLogger(__name__)

# Constants
CHECK_SLACK = 1e-10  # Relative slack for floating point comparisons
DEFAULT_SAMPLES = 200
DEFAULT_LAMBDA_MAX = 4.0  # Upper end of the scaling factors drawn for lambda > 1
MAX_RECORDED_VIOLATIONS = 20

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def orthant_sampler(k: int, high: float = 10.0, zero_fraction: float = 0.1) -> Sampler:
    """
    Sampler over [0, high]^k that zeroes a fraction of the coordinates.

    Exact zeros exercise the boundary of the cone.
    """
    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        points = rng.uniform(0.0, high, size=(n, k))
        points[rng.random((n, k)) < zero_fraction] = 0.0
        return points
    return sample


def box_sampler(box: ConeBox) -> Sampler:
    """Sampler returning the corners of the box first, then uniform points."""
    corners = np.array(box_corners(box))

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        if n <= len(corners):
            return corners[:n].copy()
        return np.vstack([corners, box_sample(box, rng, n - len(corners))])
    return sample


def _exceeds(a: np.ndarray, b: np.ndarray, slack: float) -> np.ndarray:
    """Coordinates where a > b beyond the relative slack."""
    scale = np.maximum(np.abs(a), np.abs(b))
    return a - b > slack * scale


def _margin(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.finfo(float).tiny)
    return float(np.max((a - b) / scale))


class PropertyChecker:
    """
    Randomized checker for the structural claims of a mapping handle:
    1. Monotonicity, scalability and concavity
    2. Positivity and para-contraction in Thompson's metric
    3. c-concavity and the self-map property on a box
    4. Homogeneity of an asymptotic mapping
    """

    def __init__(self, seed: int = 0, slack: float = CHECK_SLACK,
                 max_workers: int = 1, lambda_max: float = DEFAULT_LAMBDA_MAX):
        """
        Initialize the PropertyChecker.

        Args:
            seed: Seed of the sample generator
            slack: Relative slack for floating point comparisons
            max_workers: Threads used to evaluate samples
            lambda_max: Largest scaling factor drawn for lambda > 1 checks
        """
        self.rng = np.random.default_rng(seed)
        self.slack = slack
        self.max_workers = max_workers
        self.lambda_max = lambda_max
        logger.info(f"PropertyChecker initialized with seed {seed}, {max_workers} worker(s)")

    def _map(self, fn: Callable[[Any], Any], items: Sequence[Any]) -> List[Any]:
        if self.max_workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                return list(executor.map(fn, items))
        return [fn(item) for item in items]

    def _evaluate_rows(self, f: MappingHandle, points: np.ndarray) -> np.ndarray:
        return np.array(self._map(lambda x: evaluate(f, x), list(points)))

    def _lambdas(self, n: int, upper: Optional[float] = None) -> np.ndarray:
        # uniform on (1, upper]
        upper = self.lambda_max if upper is None else upper
        return 1.0 + (upper - 1.0) * (1.0 - self.rng.random(n))

    def _report(self, property_id: str, samples: int,
                violations: List[Violation]) -> PropertyReport:
        violations.sort(key=lambda v: v.magnitude, reverse=True)
        report = PropertyReport(property_id=property_id, samples_tested=samples,
                                violations=violations[:MAX_RECORDED_VIOLATIONS])
        if violations:
            logger.info(f"{property_id}: {len(violations)}/{samples} samples violate "
                        f"(worst margin {report.worst_margin:.3g})")
        else:
            logger.debug(f"{property_id}: no violation in {samples} samples")
        return report

    def check_monotone(self, f: MappingHandle, sampler: Sampler,
                       n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """
        Test x <= y  =>  f(x) <= f(y) on ordered pairs.

        y is x plus a nonnegative increment that is zero on a random subset of
        coordinates, so both strict and boundary pairs are covered.
        """
        _check_count(n)
        xs = sampler(self.rng, n)
        steps = sampler(self.rng, n) * (self.rng.random(xs.shape) < 0.7)
        ys = xs + steps
        fx = self._evaluate_rows(f, xs)
        fy = self._evaluate_rows(f, ys)

        violations = []
        for x, y, a, b in zip(xs, ys, fx, fy):
            if np.any(_exceeds(a, b, self.slack)):
                violations.append(Violation({"x": x, "y": y}, _margin(a, b)))
        return self._report("monotone", n, violations)

    def check_scalable(self, f: MappingHandle, sampler: Sampler,
                       n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Test f(lambda x) << lambda f(x) for lambda > 1."""
        _check_count(n)
        xs = sampler(self.rng, n)
        lambdas = self._lambdas(n)
        scaled = self._evaluate_rows(f, xs * lambdas[:, None])
        base = self._evaluate_rows(f, xs) * lambdas[:, None]

        violations = []
        for x, lam, a, b in zip(xs, lambdas, scaled, base):
            # strict inequality, relaxed by the slack
            if np.any(a >= b * (1.0 + self.slack)):
                violations.append(Violation({"x": x, "lambda": lam}, _margin(a, b)))
        return self._report("scalable", n, violations)

    def check_concave(self, f: MappingHandle, sampler: Sampler,
                      n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Test f(t x + (1-t) y) >= t f(x) + (1-t) f(y) for t in (0, 1)."""
        _check_count(n)
        xs = sampler(self.rng, n)
        ys = sampler(self.rng, n)
        ts = 1.0 - self.rng.random(n)
        ts[ts == 1.0] = 0.5
        mids = ts[:, None] * xs + (1.0 - ts[:, None]) * ys
        fm = self._evaluate_rows(f, mids)
        chord = ts[:, None] * self._evaluate_rows(f, xs) + \
            (1.0 - ts[:, None]) * self._evaluate_rows(f, ys)

        violations = []
        for x, y, t, a, b in zip(xs, ys, ts, fm, chord):
            if np.any(_exceeds(b, a, self.slack)):
                violations.append(Violation({"x": x, "y": y, "t": t}, _margin(b, a)))
        return self._report("concave", n, violations)

    def check_positive(self, f: MappingHandle, sampler: Sampler,
                       n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Test f(x) >> 0 on the samples and at the origin."""
        _check_count(n)
        xs = np.vstack([np.zeros(f.dimension), sampler(self.rng, n)])
        values = self._evaluate_rows(f, xs)

        violations = []
        for x, y in zip(xs, values):
            if np.any(y <= 0.0):
                violations.append(Violation({"x": x}, float(-np.min(y))))
        return self._report("positive", len(xs), violations)

    def check_para_contraction(self, f: MappingHandle, sampler: Sampler,
                               n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """
        Test d_T(f(x), f(y)) < d_T(x, y) for distinct strictly positive pairs.

        Pairs closer than the slack, or with a zero coordinate, are skipped.
        """
        _check_count(n)
        xs = sampler(self.rng, n)
        ys = sampler(self.rng, n)
        keep = np.all(xs > 0, axis=1) & np.all(ys > 0, axis=1)
        xs, ys = xs[keep], ys[keep]
        fx = self._evaluate_rows(f, xs) if len(xs) else xs
        fy = self._evaluate_rows(f, ys) if len(ys) else ys

        violations = []
        tested = 0
        for x, y, a, b in zip(xs, ys, fx, fy):
            d_xy = thompson_distance(x, y)
            if d_xy <= self.slack:
                continue
            tested += 1
            if np.any(a <= 0) or np.any(b <= 0):
                violations.append(Violation({"x": x, "y": y}, float("inf")))
                continue
            d_f = thompson_distance(a, b)
            if d_f >= d_xy:
                violations.append(Violation({"x": x, "y": y}, d_f - d_xy))
        return self._report("para-contraction", tested, violations)

    def check_concavity_bound(self, f: MappingHandle, sampler: Sampler,
                              n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Test f(lambda x) <= lambda f(x) + (1 - lambda) f(0) for lambda > 1."""
        _check_count(n)
        xs = sampler(self.rng, n)
        lambdas = self._lambdas(n)
        f0 = evaluate(f, np.zeros(f.dimension))
        scaled = self._evaluate_rows(f, xs * lambdas[:, None])
        bound = lambdas[:, None] * self._evaluate_rows(f, xs) + (1.0 - lambdas[:, None]) * f0

        violations = []
        for x, lam, a, b in zip(xs, lambdas, scaled, bound):
            # the bound subtracts (lambda - 1) f(0), so compare against the unshifted scale
            scale = np.maximum(np.abs(a), lam * np.abs(f0))
            if np.any(a - b > self.slack * scale):
                violations.append(Violation({"x": x, "lambda": lam}, _margin(a, b)))
        return self._report("concavity-bound", n, violations)

    def check_c_concave(self, f: MappingHandle, box: ConeBox, c: float,
                        n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """
        Test f(lambda x) <= lambda^c f(x) for x in the box and lambda in (1, lambda0].

        The corners of the box are always tested, once at lambda0 and once at
        a random lambda. A box of Thompson diameter zero tests nothing.
        """
        if not 0.0 <= c < 1.0:
            raise DomainError(f"c must lie in [0, 1), got {c}")
        _check_count(n)
        lambda0, _ = box_thompson_diameter(box)
        if lambda0 <= 1.0:
            logger.debug("c-concavity check on a degenerate box is vacuous")
            return self._report("c-concave", 0, [])

        corners = np.array(box_corners(box))
        xs = np.vstack([corners, corners, box_sample(box, self.rng, n)])
        lambdas = np.concatenate([
            np.full(len(corners), lambda0),
            self._lambdas(len(corners) + n, lambda0),
        ])
        scaled = self._evaluate_rows(f, xs * lambdas[:, None])
        bound = lambdas[:, None] ** c * self._evaluate_rows(f, xs)

        violations = []
        for x, lam, a, b in zip(xs, lambdas, scaled, bound):
            if np.any(_exceeds(a, b, self.slack)):
                violations.append(Violation({"x": x, "lambda": lam}, _margin(a, b)))
        return self._report("c-concave", len(xs), violations)

    def check_contraction(self, f: MappingHandle, box: ConeBox, c: float,
                          n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Test d_T(f(x), f(y)) <= c d_T(x, y) on sampled pairs of the box."""
        _check_count(n)
        sample = box_sampler(box)
        xs = sample(self.rng, n)
        ys = box_sample(box, self.rng, len(xs))
        fx = self._evaluate_rows(f, xs)
        fy = self._evaluate_rows(f, ys)

        violations = []
        for x, y, a, b in zip(xs, ys, fx, fy):
            d_xy = thompson_distance(x, y)
            d_f = thompson_distance(a, b)
            if d_f > c * d_xy * (1.0 + self.slack) + self.slack:
                violations.append(Violation({"x": x, "y": y}, d_f - c * d_xy))
        return self._report("thompson-contraction", len(xs), violations)

    def check_homogeneity(self, f_inf: Evaluator, sampler: Sampler,
                          n: int = DEFAULT_SAMPLES, tol: float = 1e-9) -> PropertyReport:
        """Test f_inf(alpha x) = alpha f_inf(x) for alpha > 0 within tol."""
        _check_count(n)
        xs = sampler(self.rng, n)
        alphas = np.exp(self.rng.uniform(-3.0, 3.0, size=n))

        violations = []
        for x, alpha in zip(xs, alphas):
            lhs = np.asarray(f_inf(alpha * x), dtype=float)
            rhs = alpha * np.asarray(f_inf(x), dtype=float)
            gap = float(np.max(np.abs(lhs - rhs)))
            if gap > tol * max(1.0, float(np.max(np.abs(rhs)))):
                violations.append(Violation({"x": x, "alpha": alpha}, gap))
        return self._report("homogeneity", n, violations)

    def check_self_map(self, f: MappingHandle, box: ConeBox,
                       n: int = DEFAULT_SAMPLES) -> PropertyReport:
        """Report points of the box (corners first) whose image leaves the box."""
        _check_count(n)
        xs = box_sampler(box)(self.rng, n + 2)
        values = self._evaluate_rows(f, xs)

        violations = []
        for x, y in zip(xs, values):
            if not box_contains(box, y, rel_slack=self.slack):
                excursion = max(float(np.max((box.lower - y) / box.lower)),
                                float(np.max((y - box.upper) / box.upper)))
                violations.append(Violation({"x": x, "f(x)": y}, excursion))
        return self._report("self-map", len(xs), violations)

    def check_si(self, f: MappingHandle, sampler: Sampler,
                 n: int = DEFAULT_SAMPLES) -> List[PropertyReport]:
        """Run the checks behind the SI claim."""
        return [
            self.check_positive(f, sampler, n),
            self.check_monotone(f, sampler, n),
            self.check_scalable(f, sampler, n),
        ]

    def check_pc(self, f: MappingHandle, sampler: Sampler,
                 n: int = DEFAULT_SAMPLES) -> List[PropertyReport]:
        """Run the checks behind the PC claim."""
        return [
            self.check_positive(f, sampler, n),
            self.check_concave(f, sampler, n),
            self.check_concavity_bound(f, sampler, n),
        ]

    def summarize(self, reports: List[PropertyReport]) -> Dict[str, Any]:
        """
        Create a summary of multiple property reports.

        Args:
            reports: List of property reports

        Returns:
            Summary dictionary
        """
        violated = [r for r in reports if r.verdict == PropertyVerdict.VIOLATED]
        return {
            "total_checks": len(reports),
            "passed": len(reports) - len(violated),
            "violated": len(violated),
            "samples_tested": sum(r.samples_tested for r in reports),
            "violated_properties": [r.property_id for r in violated],
            "worst_margin": max((r.worst_margin for r in violated), default=0.0),
        }


def _check_count(n: int) -> None:
    if n < 1:
        raise DomainError(f"Sample count must be at least 1, got {n}")
