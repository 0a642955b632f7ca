"""
Tests for contraction certificates in Thompson's metric
"""

import numpy as np
import pytest

from conefix.certificate import (
    check_containment,
    compare_certificate_radius,
    contraction_certificate,
    contraction_curve,
)
from conefix.cone import make_box
from conefix.errors import CertificateRefusedError, DomainError
from conefix.mappings import MappingHandle, builtin
from conefix.models import PropertyVerdict, SpectralRadiusEstimate
from conefix.wireless.load import generate_scenario, load_mapping, run_load_experiment, scale_demand


def test_f1_certificate_with_given_mu():
    """ln(2/3 * 3 + 1/3) / ln 3 on [1/2, 3/2]"""
    certificate = contraction_certificate(builtin("f1"), make_box([0.5], [1.5]), mu=1.0 / 3.0)
    assert certificate.lambda0 == pytest.approx(3.0)
    assert certificate.c == pytest.approx(0.7712, abs=5e-4)
    assert not certificate.degenerate_box


def test_f1_certificate_with_maximal_mu():
    certificate = contraction_certificate(builtin("f1"), make_box([0.5], [1.5]))
    assert certificate.mu == pytest.approx(0.4)
    assert certificate.c == pytest.approx(np.log(2.2) / np.log(3.0))
    assert certificate.c < 0.7712


def test_certificate_refused_for_g():
    with pytest.raises(CertificateRefusedError) as excinfo:
        contraction_certificate(builtin("g"), make_box([1.0], [3.0]))
    assert "not strictly positive" in str(excinfo.value)


def test_certificate_refuses_invalid_mu():
    box = make_box([0.5], [1.5])
    with pytest.raises(CertificateRefusedError):
        contraction_certificate(builtin("f1"), box, mu=0.5)
    with pytest.raises(CertificateRefusedError):
        contraction_certificate(builtin("f1"), box, mu=0.0)


def test_certificate_dimension_mismatch():
    with pytest.raises(DomainError):
        contraction_certificate(builtin("f1"), make_box([1.0, 1.0], [2.0, 2.0]))


def test_degenerate_box():
    """A single point gives c = 1 - mu"""
    certificate = contraction_certificate(builtin("f1"), make_box([1.0], [1.0]))
    assert certificate.degenerate_box
    assert certificate.mu == pytest.approx(0.5)
    assert certificate.c == pytest.approx(0.5)


def test_constant_mapping_has_zero_factor():
    handle = MappingHandle("const", 2, lambda x: np.array([1.0, 2.0]))
    certificate = contraction_certificate(handle, make_box([1.0, 1.0], [4.0, 4.0]))
    assert certificate.mu == pytest.approx(1.0)
    assert certificate.c == 0.0


def test_contraction_curve_is_increasing():
    values = [contraction_curve(0.3, lam) for lam in (1.0001, 1.5, 3.0, 10.0, 1e6)]
    assert values[0] == pytest.approx(0.7, abs=1e-4)
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] < 1.0
    with pytest.raises(DomainError):
        contraction_curve(1.0, 2.0)
    with pytest.raises(DomainError):
        contraction_curve(0.5, 1.0)


def test_compare_certificate_radius():
    certificate = contraction_certificate(builtin("f1"), make_box([0.5], [1.5]))
    estimate = SpectralRadiusEstimate(rho=0.5, lower=0.5, upper=0.5, iterations=1, converged=True)
    comparison = compare_certificate_radius(certificate, estimate)
    assert comparison["satisfied"]
    assert comparison["rho_lo"] == 0.5

    tight = SpectralRadiusEstimate(rho=0.9, lower=0.9, upper=0.9, iterations=1, converged=True)
    assert not compare_certificate_radius(certificate, tight)["satisfied"]


def test_check_containment():
    f = builtin("f1")
    assert check_containment(f, make_box([0.5], [1.5])).verdict == PropertyVerdict.NO_VIOLATION_FOUND
    assert check_containment(f, make_box([0.1], [0.4])).verdict == PropertyVerdict.VIOLATED


@pytest.fixture(scope="module")
def load_runs():
    """Feasible small scenarios with their converged load runs"""
    runs = []
    for seed in range(50):
        scenario = scale_demand(generate_scenario(k=9, users=36, seed=seed), 0.5)
        result = run_load_experiment(scenario)
        assert result.feasible, seed
        assert result.trace.converged, seed
        runs.append((scenario, result))
    assert len(runs) == 50
    return runs


def test_certificate_dominates_spectral_radius(load_runs):
    """Any box holding the fixed point yields c >= rho(M)"""
    for scenario, result in load_runs:
        x_star = result.trace.reference
        certificate = contraction_certificate(load_mapping(scenario), make_box(x_star / 2.0, 2.0 * x_star))
        assert compare_certificate_radius(certificate, result.estimate)["satisfied"]
        assert certificate.c >= result.rho - 1e-9
        assert certificate.c < 1.0


def test_fitted_rate_sits_between_rho_and_one(load_runs):
    for _, result in load_runs:
        assert result.diagnostics is not None
        assert result.rho - 0.02 <= result.diagnostics.c_hat < 1.0


def test_lower_bound_holds_along_the_trace(load_runs):
    checked = 0
    for _, result in load_runs:
        for record in result.trace.records:
            if record.lower_bound is None or record.err_l2 is None:
                continue
            checked += 1
            assert record.lower_bound <= record.err_l2 * (1 + 1e-6) + 1e-14
    assert checked > 0
