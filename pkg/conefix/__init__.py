"""
conefix - fixed point analysis of interference mappings on the nonnegative cone

Thompson-metric geometry, standard interference and positive concave mappings,
fixed point iteration with convergence diagnostics, contraction certificates,
nonlinear spectral radius feasibility tests, and two wireless applications.

Modules:
- cone: cone order, Thompson's metric, boxes
- mappings / checker: mapping handles, builtins and randomized property checks
- solver / spectral / certificate: iteration, bounds, feasibility, certificates
- wireless: OFDMA load coupling and uplink power control
"""

__version__ = "0.1.0"

from .mappings import MappingHandle, builtin, evaluate
from .checker import PropertyChecker
from .solver import convergence_diagnostics, fixed_point_iterate
from .spectral import feasibility_check, spectral_radius
from .certificate import contraction_certificate
from .experiments import ExperimentRunner

__all__ = [
    "MappingHandle",
    "builtin",
    "evaluate",
    "PropertyChecker",
    "convergence_diagnostics",
    "fixed_point_iterate",
    "feasibility_check",
    "spectral_radius",
    "contraction_certificate",
    "ExperimentRunner",
]
