"""
Command-line interface for conefix
"""

import sys
import shlex
import logging
import argparse
from typing import List, Optional

from .config import build_config, load_config
from .experiments import STATUS_ERROR, STATUS_INFEASIBLE, ExperimentRunner, render_summary


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def setup_logging(verbose: bool = False):
    """
    Setup logging configuration.

    Args:
        verbose: Whether to enable verbose logging
    """
    level = logging.DEBUG if verbose else logging.INFO

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def _common_parser() -> argparse.ArgumentParser:
    # flags default to None so that config file values survive
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='YAML file with default settings')
    common.add_argument('--tol', type=float, help='Relative step tolerance')
    common.add_argument('--max-iter', type=int, dest='max_iter', help='Iteration budget')
    common.add_argument('--norm', choices=['l1', 'l2', 'linf'], help='Norm of reported errors')
    common.add_argument('--seed', type=int, help='Random seed (default: 0)')
    common.add_argument('--out', type=str, help='Output directory (default: current directory)')
    common.add_argument('--workers', type=int, help='Parallel workers for seed sweeps (default: 4)')
    common.add_argument('--verbose', action='store_true', help='Enable verbose logging')
    return common


def _add_mapping_source(parser: argparse.ArgumentParser):
    parser.add_argument('--mapping', type=str,
                        help='Builtin mapping id (f1, f2, g, g-eps(1e-3), fey)')
    parser.add_argument('--scenario', type=str, help='Load or power scenario JSON file')
    parser.add_argument('--eps', type=float, help='Shift of g-eps (default: 1e-3)')
    parser.add_argument('--p-bar', type=float, dest='p_bar', help='Power cap for power scenarios')
    parser.add_argument('--demand-scale', type=float, dest='demand_scale',
                        help='Multiply every demand of a load scenario')


def _add_scenario_generation(parser: argparse.ArgumentParser):
    parser.add_argument('--scenario', type=str, help='Scenario JSON file instead of generating one')
    parser.add_argument('--seeds', type=str, help='Sweep seeds a..b concurrently')
    parser.add_argument('--emit-scenario', type=str, dest='emit_scenario',
                        help='Write the scenario used to this JSON file')


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser with one subcommand per experiment.
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog='conefix',
        description='conefix - fixed point analysis of interference mappings on the nonnegative cone',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Sublinear convergence of g from x1 = 4
  conefix demo1d --mapping g --x1 4

  # Contraction certificate of f1 on [1/2, 3/2] with mu = 1/3
  conefix certify --mapping f1 --box-lo 0.5 --box-hi 1.5 --mu 0.3333333333

  # Load estimation on the default cellular layout, seeds 0..19
  conefix load-sim --seeds 0..19 --out results/

  # Capped power control
  conefix power-sim --p-bar 10 --seed 3
        """
    )
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    demo = subparsers.add_parser('demo1d', parents=[common],
                                 help='Iterate a one-dimensional example mapping')
    demo.add_argument('--mapping', type=str, help='g, g-eps, f1 or f2 (default: g)')
    demo.add_argument('--x1', type=float, help='Starting point')
    demo.add_argument('--eps', type=float, help='Shift of g-eps (default: 1e-3)')

    load = subparsers.add_parser('load-sim', parents=[common],
                                 help='OFDMA load estimation experiment')
    _add_scenario_generation(load)
    load.add_argument('--users', type=int, help='Number of users (default: 400)')
    load.add_argument('--stations', type=int, help='Number of base stations (default: 25)')
    load.add_argument('--layout', choices=['grid', 'uniform'], help='Base station placement')
    load.add_argument('--freq-mhz', type=float, dest='freq_mhz', help='Carrier frequency')
    load.add_argument('--demand-scale', type=float, dest='demand_scale',
                      help='Multiply every demand')

    power = subparsers.add_parser('power-sim', parents=[common],
                                  help='Power control with assignment and beamforming')
    _add_scenario_generation(power)
    power.add_argument('--users', type=int, dest='power_users', help='Number of users (default: 4)')
    power.add_argument('--stations', type=int, dest='power_stations',
                       help='Number of base stations (default: 2)')
    power.add_argument('--antennas', type=int, help='Antennas per station (default: 2)')
    power.add_argument('--p-bar', type=float, dest='p_bar', help='Power cap')

    certify = subparsers.add_parser('certify', parents=[common],
                                    help='Local contraction certificate on a box')
    _add_mapping_source(certify)
    certify.add_argument('--box-lo', type=float, nargs='+', dest='box_lo', help='Lower box corner')
    certify.add_argument('--box-hi', type=float, nargs='+', dest='box_hi', help='Upper box corner')
    certify.add_argument('--mu', type=float, help='Override of the largest valid mu')

    spectral = subparsers.add_parser('spectral-radius', parents=[common],
                                     help='Spectral radius bracket and feasibility verdict')
    _add_mapping_source(spectral)

    return parser


def exit_status(summary: dict) -> int:
    """0 on success, 2 on an infeasible verdict, 1 on failed sweep runs."""
    if summary.get('status') == STATUS_ERROR:
        return EXIT_ERROR
    if summary.get('status') == STATUS_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    setup_logging(args.verbose)

    try:
        file_values = load_config(args.config) if args.config else {}
        overrides = {key: value for key, value in vars(args).items()
                     if key not in ('command', 'config', 'verbose')}
        config = build_config(args.command, file_values, overrides)

        command_line = " ".join(shlex.quote(part) for part in ['conefix'] + argv)
        runner = ExperimentRunner(config, command_line=command_line)
        summary = runner.run()
        print(render_summary(summary))
        return exit_status(summary)

    except Exception as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
