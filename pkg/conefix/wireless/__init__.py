"""
Wireless applications of interference mappings

- load: OFDMA load coupling with Hata path loss
- power: uplink power control with station assignment and receive beamforming
- pencil: Hermitian generalized eigenvalue solver used by the power mapping
- scenario_io: JSON scenario documents
"""

from .load import asymptotic_matrix, generate_scenario, load_mapping, run_load_experiment
from .pencil import pencil_lambda_max, pencil_lambda_max_dense
from .power import (
    capped_mapping,
    generate_power_scenario,
    interference_mapping,
    solve_power_control,
)
from .propagation import hata_urban_gain
from .scenario_io import load_scenario, save_scenario

__all__ = [
    "asymptotic_matrix",
    "generate_scenario",
    "load_mapping",
    "run_load_experiment",
    "pencil_lambda_max",
    "pencil_lambda_max_dense",
    "capped_mapping",
    "generate_power_scenario",
    "interference_mapping",
    "solve_power_control",
    "hata_urban_gain",
    "load_scenario",
    "save_scenario",
]
