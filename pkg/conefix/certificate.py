"""
Contraction certificates in Thompson's metric for PC mappings on a box
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from .checker import PropertyChecker, DEFAULT_SAMPLES
from .cone import box_thompson_diameter
from .errors import CertificateRefusedError, DomainError
from .mappings import MappingHandle, evaluate
from .models import ConeBox, ContractionCertificate, PropertyReport, SpectralRadiusEstimate


logger = logging.getLogger(__name__)

# Constants
RADIUS_SLACK = 1e-9  # Allowed shortfall of c below the lower spectral bracket


def contraction_curve(mu: float, lam: float) -> float:
    """
    c(lambda) = ln((1 - mu) lambda + mu) / ln(lambda).

    Increasing in lambda from 1 - mu (lambda -> 1+) towards 1 (lambda -> inf).

    Raises:
        DomainError: Unless 0 < mu < 1 and lambda > 1
    """
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    if not lam > 1.0:
        raise DomainError(f"lambda must exceed 1, got {lam}")
    return _curve(mu, lam)


def _curve(mu: float, lam: float) -> float:
    # log1p keeps the ratio accurate for lambda close to one
    return float(np.log1p((1.0 - mu) * (lam - 1.0)) / np.log1p(lam - 1.0))


def contraction_certificate(f: MappingHandle, box: ConeBox,
                            mu: Optional[float] = None) -> ContractionCertificate:
    """
    Issue a local contraction factor of f on the box.

    mu defaults to the largest value with f(0) >= mu f(x) on the box, which by
    monotonicity is min_i f(0)[i] / f(b)[i] with b the upper corner.

    Args:
        f: Mapping claiming PC structure
        box: Order interval [a, b]
        mu: Optional override, validated against f(0) >= mu f(b)

    Returns:
        ContractionCertificate; on a box with lambda0 = 1 the factor is 1 - mu
        and the certificate is marked degenerate

    Raises:
        CertificateRefusedError: If f does not claim PC structure or mu is invalid
    """
    if f.dimension != box.dimension:
        raise DomainError(f"{f.name} has dimension {f.dimension}, box has {box.dimension}")
    missing = [name for name, claimed in (("positive", f.flags.positive),
                                          ("concave", f.flags.concave),
                                          ("monotone", f.flags.monotone)) if not claimed]
    if missing:
        logger.warning(f"Certificate refused for {f.name}: not claimed {', '.join(missing)}")
        reason = "f(0) is not strictly positive" if "positive" in missing else "PC structure not claimed"
        raise CertificateRefusedError(
            f"{f.name} is not a positive concave mapping ({reason}; missing: {', '.join(missing)})"
        )

    f0 = evaluate(f, np.zeros(f.dimension))
    fb = evaluate(f, box.upper)
    if np.any(f0 <= 0):
        raise CertificateRefusedError(f"{f.name} is not positive at the origin: f(0) = {f0}")

    if mu is None:
        mu = float(np.min(f0 / fb))
        mu = min(mu, 1.0)
    else:
        if not 0.0 < mu <= 1.0:
            raise CertificateRefusedError(f"mu must lie in (0, 1], got {mu}")
        if np.any(f0 < mu * fb):
            raise CertificateRefusedError(
                f"mu={mu} violates f(0) >= mu f(b): f(0)={f0}, f(b)={fb}"
            )

    lambda0, _ = box_thompson_diameter(box)
    if lambda0 <= 1.0:
        certificate = ContractionCertificate(box=box, mu=mu, lambda0=lambda0,
                                             c=1.0 - mu, degenerate_box=True)
    elif mu >= 1.0:
        # constant mapping on the box
        certificate = ContractionCertificate(box=box, mu=mu, lambda0=lambda0, c=0.0)
    else:
        certificate = ContractionCertificate(box=box, mu=mu, lambda0=lambda0,
                                             c=_curve(mu, lambda0))
    logger.info(f"Certificate for {f.name}: mu={mu:.6g}, lambda0={lambda0:.6g}, c={certificate.c:.6g}")
    return certificate


def compare_certificate_radius(certificate: ContractionCertificate,
                               estimate: SpectralRadiusEstimate) -> Dict[str, Any]:
    """
    Compare a contraction factor with the spectral radius bracket.

    Any valid factor on a box holding the fixed point is at least rho.
    """
    return {
        "c": certificate.c,
        "rho_lo": estimate.lower,
        "rho_hi": estimate.upper,
        "satisfied": bool(certificate.c >= estimate.lower - RADIUS_SLACK),
    }


def check_containment(f: MappingHandle, box: ConeBox, n: int = DEFAULT_SAMPLES,
                      seed: int = 0) -> PropertyReport:
    """Sample whether f maps the box into itself."""
    return PropertyChecker(seed=seed).check_self_map(f, box, n)
