"""
ExperimentRunner - command bodies behind the CLI and concurrent seed sweeps
"""

import json
import logging
import re
import concurrent.futures
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from . import __version__
from .certificate import check_containment, compare_certificate_radius, contraction_certificate
from .cone import box_contains, make_box
from .errors import ConefixError, DomainError, ScenarioError
from .mappings import MappingHandle, builtin
from .models import (
    ExperimentConfig,
    FeasibilityVerdict,
    LoadScenario,
    PowerScenario,
)
from .solver import (
    MIN_DIAGNOSTIC_STEPS,
    annotate_trace,
    convergence_diagnostics,
    fixed_point_iterate,
    scalar_fixed_point,
    write_ratio_csv,
    write_trace_csv,
)
from .spectral import feasibility_check, matrix_spectral_radius
from .wireless.load import (
    asymptotic_matrix,
    generate_scenario,
    load_mapping,
    overloaded_cells,
    run_load_experiment,
    scale_demand,
)
from .wireless.power import (
    capped_mapping,
    generate_power_scenario,
    interference_mapping,
    solution_to_dict,
    solve_power_control,
)
from .wireless.scenario_io import Scenario, load_scenario, save_scenario


logger = logging.getLogger(__name__)

# Constants
DEMO_MAPPINGS = ("g", "g-eps", "f1", "f2")
DEMO_STARTS = {"g": 4.0, "g-eps": 4.0, "f1": 0.5, "f2": 0.0}
G_EPS_BRACKET = (2.0, 8.0)
SEEDED_COMMANDS = ("load-sim", "power-sim")
CONTAINMENT_SLACK = 1e-9

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_ERROR = "error"


def _plain(value: Any) -> Any:
    # JSON-ready copy; non-finite floats become null
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_summary_json(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Write a summary as sorted, indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(summary), indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", name).strip("_")


def _mapping_key(mapping_id: str) -> str:
    return mapping_id.split("(")[0].strip().lower()


class ExperimentRunner:
    """
    Runs the CLI commands on a validated ExperimentConfig.

    Every command returns a summary dict with a ``status`` of ``ok`` or
    ``infeasible`` and the paths of the files it wrote. Output files carry
    header comment lines with the version, the command line and the seed.
    """

    def __init__(self, config: ExperimentConfig, command_line: str = ""):
        """
        Initialize the runner.

        Args:
            config: Validated experiment configuration
            command_line: Command line recorded in output headers
        """
        self.config = config
        self.command_line = command_line or f"conefix {config.command}"
        self.out_dir = Path(config.out)
        logger.info(f"ExperimentRunner initialized for {config.command}, output in {self.out_dir}")

    # ------------------------------------------------------------------
    # Dispatch
    # ------------------------------------------------------------------

    def run(self) -> Dict[str, Any]:
        """Run the configured command, sweeping seeds when a range is set."""
        if self.config.seeds is not None and self.config.command in SEEDED_COMMANDS:
            lo, hi = self.config.seeds
            return self.sweep(range(lo, hi + 1))
        return self.run_seed(self.config.seed)

    def run_seed(self, seed: int, sweeping: bool = False) -> Dict[str, Any]:
        command = self.config.command
        if command == "demo1d":
            return self.demo1d()
        if command == "load-sim":
            return self.load_sim(seed, sweeping)
        if command == "power-sim":
            return self.power_sim(seed, sweeping)
        if command == "certify":
            return self.certify()
        if command == "spectral-radius":
            return self.spectral_radius()
        raise DomainError(f"Unknown command {command!r}")

    def sweep(self, seeds: Iterable[int]) -> Dict[str, Any]:
        """
        Run independent seeds concurrently, one set of output files per seed.

        Args:
            seeds: Seeds to run

        Returns:
            Summary with per-seed summaries (sorted by seed) and failures
        """
        seeds = list(seeds)
        results: Dict[int, Dict[str, Any]] = {}
        failures: Dict[int, str] = {}
        logger.info(f"Sweeping {len(seeds)} seed(s) with {self.config.workers} worker(s)")

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.config.workers) as executor:
            futures = {executor.submit(self.run_seed, seed, True): seed for seed in seeds}
            for future in concurrent.futures.as_completed(futures):
                seed = futures[future]
                try:
                    results[seed] = future.result()
                    logger.info(f"  seed {seed}: {results[seed]['status']}")
                except ConefixError as e:
                    failures[seed] = str(e)
                    logger.error(f"  seed {seed} failed: {e}")

        statuses = [results[seed]["status"] for seed in sorted(results)]
        if failures:
            status = STATUS_ERROR
        elif STATUS_INFEASIBLE in statuses:
            status = STATUS_INFEASIBLE
        else:
            status = STATUS_OK
        summary = {
            "command": self.config.command,
            "seeds": {str(seed): results[seed] for seed in sorted(results)},
            "failures": {str(seed): failures[seed] for seed in sorted(failures)},
            "runs": len(seeds),
            "infeasible": statuses.count(STATUS_INFEASIBLE),
            "status": status,
        }
        lo, hi = min(seeds), max(seeds)
        stem = self.config.command.replace("-", "_")
        summary["files"] = {"summary": str(self.out_dir / f"{stem}_seeds{lo}-{hi}_summary.json")}
        write_summary_json(summary, summary["files"]["summary"])
        return summary

    def header_lines(self, seed: Optional[int]) -> List[str]:
        return [f"conefix {__version__}", f"command: {self.command_line}", f"seed: {seed}"]

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def demo1d(self) -> Dict[str, Any]:
        """
        Iterate one of the one-dimensional example mappings.

        g is compared with its limit 2, g-eps with its fixed point found by
        bracketing, f1 with 1; f2 has no fixed point and gets no error columns.
        """
        cfg = self.config
        key = _mapping_key(cfg.mapping)
        if key not in DEMO_MAPPINGS:
            raise DomainError(f"demo1d supports {DEMO_MAPPINGS}, got {cfg.mapping!r}")
        f = builtin(cfg.mapping, eps=cfg.eps)
        x1 = DEMO_STARTS[key] if cfg.x1 is None else float(cfg.x1)

        reference = None
        if key == "g":
            reference = 2.0
        elif key == "g-eps":
            reference = scalar_fixed_point(f, *G_EPS_BRACKET)
        elif key == "f1":
            reference = 1.0

        trace = fixed_point_iterate(f, [x1], cfg.tol, cfg.max_iter,
                                    reference=None if reference is None else [reference])
        stem = f"demo1d_{_slug(f.name)}"
        files = {
            "trace": str(write_trace_csv(trace, self.out_dir / f"{stem}_trace.csv",
                                         self.header_lines(cfg.seed))),
            "ratio": str(write_ratio_csv(trace, self.out_dir / f"{stem}_ratio.csv",
                                         self.header_lines(cfg.seed))),
        }

        summary: Dict[str, Any] = {
            "command": "demo1d",
            "mapping": f.name,
            "x1": x1,
            "reference": reference,
            "iterations": trace.iterations,
            "stop_reason": trace.stop_reason,
            "final": float(trace.final[0]),
            "final_error": trace.records[-1].err_l2 if trace.records else None,
            "status": STATUS_OK,
        }
        if reference is not None and trace.iterations >= MIN_DIAGNOSTIC_STEPS:
            try:
                diagnostics = convergence_diagnostics(trace, [reference], cfg.norm)
                summary.update(c_hat=diagnostics.c_hat, ratio_limit=diagnostics.ratio_limit,
                               classification=diagnostics.classification)
            except DomainError as e:
                logger.warning(f"No diagnostics for {f.name}: {e}")
        summary["files"] = files
        return self._finish(summary, stem)

    def _load_scenario(self, seed: int) -> LoadScenario:
        cfg = self.config
        if cfg.scenario is not None:
            scenario = load_scenario(cfg.scenario)
            if not isinstance(scenario, LoadScenario):
                raise ScenarioError(f"{cfg.scenario} is not a load scenario")
        else:
            scenario = generate_scenario(k=cfg.stations, users=cfg.users, seed=seed,
                                         layout=cfg.layout, freq_mhz=cfg.freq_mhz)
        if cfg.demand_scale != 1.0:
            scenario = scale_demand(scenario, cfg.demand_scale)
        return scenario

    def _emit_path(self, seed: int, sweeping: bool) -> Optional[Path]:
        if self.config.emit_scenario is None:
            return None
        path = Path(self.config.emit_scenario)
        if sweeping:
            path = path.with_name(f"{path.stem}_seed{seed}{path.suffix}")
        return path

    def load_sim(self, seed: int, sweeping: bool = False) -> Dict[str, Any]:
        """Run the load estimation experiment and export trace, ratios and summary."""
        cfg = self.config
        scenario = self._load_scenario(seed)
        emit = self._emit_path(seed, sweeping)
        if emit is not None:
            save_scenario(scenario, emit)

        result = run_load_experiment(scenario, cfg.tol, cfg.max_iter)
        trace = result.trace
        stem = f"load_sim_seed{seed}"
        header = self.header_lines(seed)
        files = {
            "trace": str(write_trace_csv(trace, self.out_dir / f"{stem}_trace.csv", header)),
            "ratio": str(write_ratio_csv(trace, self.out_dir / f"{stem}_ratio.csv", header)),
        }
        if emit is not None:
            files["scenario"] = str(emit)

        bounds = [(r.lower_bound, r.err_l2) for r in trace.records
                  if r.lower_bound is not None and r.err_l2 is not None]
        summary: Dict[str, Any] = {
            "command": "load-sim",
            "seed": seed,
            "k": scenario.k,
            "users": scenario.users,
            "freq_mhz": scenario.freq_mhz,
            "rho": result.rho,
            "rho_bracket": list(result.feasibility.estimate.bracket),
            "verdict": result.feasibility.verdict,
            "feasible": result.feasible,
            "iterations": trace.iterations,
            "stop_reason": trace.stop_reason,
            "epsilon": result.epsilon,
            "strictly_dominated": result.strictly_dominated,
            "status": STATUS_OK if result.feasible else STATUS_INFEASIBLE,
        }
        if bounds:
            summary["lower_bound_dominated"] = all(lb <= err for lb, err in bounds)
        if result.diagnostics is not None:
            summary.update(c_hat=result.diagnostics.c_hat,
                           ratio_limit=result.diagnostics.ratio_limit,
                           classification=result.diagnostics.classification)
        if result.feasible:
            summary["overloaded_cells"] = overloaded_cells(trace.final)
        summary["files"] = files
        return self._finish(summary, stem)

    def _power_scenario(self, seed: int) -> PowerScenario:
        cfg = self.config
        if cfg.scenario is not None:
            scenario = load_scenario(cfg.scenario)
            if not isinstance(scenario, PowerScenario):
                raise ScenarioError(f"{cfg.scenario} is not a power scenario")
            return scenario
        return generate_power_scenario(k=cfg.power_users, m=cfg.power_stations,
                                       antennas=cfg.antennas, seed=seed,
                                       gamma_spread=cfg.gamma_spread, p_bar=cfg.p_bar)

    def power_sim(self, seed: int, sweeping: bool = False) -> Dict[str, Any]:
        """Solve power control and export the trace, the solution and a summary."""
        cfg = self.config
        scenario = self._power_scenario(seed)
        emit = self._emit_path(seed, sweeping)
        if emit is not None:
            save_scenario(scenario, emit)

        result = solve_power_control(scenario, cfg.tol, cfg.max_iter, p_bar=cfg.p_bar)
        cap = cfg.p_bar if cfg.p_bar is not None else scenario.p_bar
        stem = f"power_sim_seed{seed}"
        estimate = result.feasibility.estimate
        summary: Dict[str, Any] = {
            "command": "power-sim",
            "seed": seed,
            "users": scenario.k,
            "stations": scenario.m,
            "antennas": scenario.antennas,
            "p_bar": cap,
            "rho": estimate.rho,
            "rho_bracket": list(estimate.bracket),
            "verdict": result.feasibility.verdict,
            "feasible": result.feasible,
            "status": STATUS_OK if result.feasible else STATUS_INFEASIBLE,
        }
        files: Dict[str, str] = {}
        if emit is not None:
            files["scenario"] = str(emit)

        if result.feasible:
            # errors are measured against the limit of the run
            trace = annotate_trace(result.trace, result.power)
            header = self.header_lines(seed)
            files["trace"] = str(write_trace_csv(trace, self.out_dir / f"{stem}_trace.csv", header))
            solution_path = self.out_dir / f"{stem}_solution.json"
            write_summary_json(solution_to_dict(result.solution, result.power), solution_path)
            files["solution"] = str(solution_path)
            summary.update(
                iterations=trace.iterations,
                stop_reason=trace.stop_reason,
                power=result.power,
                max_sinr_error=result.max_sinr_error,
                capped_users=[u for u, capped in enumerate(result.solution.capped) if capped],
            )
        summary["files"] = files
        return self._finish(summary, stem)

    def resolve_mapping(self) -> Tuple[MappingHandle, Optional[Scenario]]:
        """The builtin or scenario mapping named by the configuration, with its scenario."""
        cfg = self.config
        if cfg.scenario is None:
            return builtin(cfg.mapping, eps=cfg.eps), None
        scenario = load_scenario(cfg.scenario)
        if isinstance(scenario, LoadScenario):
            if cfg.demand_scale != 1.0:
                scenario = scale_demand(scenario, cfg.demand_scale)
            return load_mapping(scenario), scenario
        cap = cfg.p_bar if cfg.p_bar is not None else scenario.p_bar
        if cap is not None:
            return capped_mapping(scenario, cap), scenario
        return interference_mapping(scenario), scenario

    def _box(self, dimension: int):
        lo = np.asarray(self.config.box_lo, dtype=float)
        hi = np.asarray(self.config.box_hi, dtype=float)
        if lo.shape[0] == 1 and dimension > 1:
            lo = np.full(dimension, lo[0])
            hi = np.full(dimension, hi[0])
        return make_box(lo, hi)

    def certify(self) -> Dict[str, Any]:
        """
        Issue a contraction certificate on the configured box.

        The certificate is compared with the spectral radius bracket when the
        fixed point of the mapping lies in the box.

        Raises:
            CertificateRefusedError: If the mapping does not claim PC structure
        """
        cfg = self.config
        f, _ = self.resolve_mapping()
        box = self._box(f.dimension)
        certificate = contraction_certificate(f, box, cfg.mu)
        containment = check_containment(f, box, seed=cfg.seed)

        summary: Dict[str, Any] = {
            "command": "certify",
            "mapping": f.name,
            "box_lo": box.lower,
            "box_hi": box.upper,
            "mu": certificate.mu,
            "lambda0": certificate.lambda0,
            "c": certificate.c,
            "degenerate_box": certificate.degenerate_box,
            "self_map": containment.verdict,
            "status": STATUS_OK,
        }
        try:
            feasibility = feasibility_check(f)
        except DomainError as e:
            logger.warning(f"No spectral radius for {f.name}: {e}")
            feasibility = None

        if feasibility is not None:
            estimate = feasibility.estimate
            summary.update(rho_lo=estimate.lower, rho=estimate.rho, rho_hi=estimate.upper,
                           verdict=feasibility.verdict)
            if feasibility.verdict == FeasibilityVerdict.HAS_FIXED_POINT:
                trace = fixed_point_iterate(f, box.lower, cfg.tol, cfg.max_iter)
                inside = box_contains(box, trace.final, rel_slack=CONTAINMENT_SLACK)
                summary["fixed_point_in_box"] = inside
                if inside:
                    comparison = compare_certificate_radius(certificate, estimate)
                    summary["c_ge_rho"] = comparison["satisfied"]
                    if not comparison["satisfied"]:
                        logger.warning(f"Certificate c={certificate.c:.6g} is below "
                                       f"rho >= {estimate.lower:.6g}")
        return self._finish(summary, f"certify_{_slug(f.name)}")

    def spectral_radius(self) -> Dict[str, Any]:
        """Bracket rho(f_inf) and report the fixed point verdict."""
        cfg = self.config
        f, scenario = self.resolve_mapping()
        feasibility = feasibility_check(f, tol=cfg.tol, max_iter=cfg.max_iter)
        estimate = feasibility.estimate
        summary: Dict[str, Any] = {
            "command": "spectral-radius",
            "mapping": f.name,
            "lo": estimate.lower,
            "rho": estimate.rho,
            "hi": estimate.upper,
            "converged": estimate.converged,
            "iterations": estimate.iterations,
            "verdict": feasibility.verdict,
            "status": (STATUS_INFEASIBLE if feasibility.verdict == FeasibilityVerdict.NO_FIXED_POINT
                       else STATUS_OK),
        }
        if isinstance(scenario, LoadScenario):
            summary["rho_matrix"] = matrix_spectral_radius(asymptotic_matrix(scenario)).rho
        return self._finish(summary, f"spectral_radius_{_slug(f.name)}")

    # ------------------------------------------------------------------
    # Output
    # ------------------------------------------------------------------

    def _finish(self, summary: Dict[str, Any], stem: str) -> Dict[str, Any]:
        files = summary.setdefault("files", {})
        files["summary"] = str(self.out_dir / f"{stem}_summary.json")
        summary["version"] = __version__
        summary["command_line"] = self.command_line
        write_summary_json(summary, files["summary"])
        return summary


def render_summary(summary: Dict[str, Any]) -> str:
    """Human-readable block for a command or sweep summary."""
    plain = _plain(summary)
    lines = ["=" * 60, f"CONEFIX {str(plain.get('command', '')).upper()} SUMMARY", "=" * 60]
    for key in sorted(plain):
        if key in ("seeds", "files", "command", "command_line", "version"):
            continue
        lines.append(f"{key}: {plain[key]}")
    for seed, result in plain.get("seeds", {}).items():
        lines.append(f"seed {seed}: {result.get('status')} "
                     f"(rho={result.get('rho')}, iterations={result.get('iterations')})")
    for name, path in plain.get("files", {}).items():
        lines.append(f"{name}: {path}")
    lines.append("=" * 60)
    return "\n".join(lines)
