"""
Exceptions raised by conefix
"""

from typing import Optional, Tuple


class ConefixError(Exception):
    """Base class for all library errors"""


class DimensionMismatchError(ConefixError, ValueError):
    """Operands live in cones of different dimension"""


class DomainError(ConefixError, ValueError):
    """An argument is outside the domain of the operation"""


class EvaluationError(ConefixError, RuntimeError):
    """
    A mapping produced a non-finite value.

    When raised from inside a fixed point run, ``trace`` holds the
    iterates computed before the failure.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class CertificateRefusedError(ConefixError, ValueError):
    """No contraction certificate can be issued for the mapping"""


class NoValidEpsilonError(ConefixError, ValueError):
    """The starting point is neither strongly below nor strongly above x*"""


class PencilError(ConefixError, RuntimeError):
    """Generalized eigenvalue computation failed"""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        if pair is not None:
            message = f"{message} (user {pair[0]}, station {pair[1]})"
        super().__init__(message)
        self.pair = pair


class ScenarioError(ConefixError, ValueError):
    """Invalid scenario document, layout or experiment configuration"""
