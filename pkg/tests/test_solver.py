"""
Tests for fixed point iteration, diagnostics, bounds and CSV export
"""

import numpy as np
import pytest

from conefix.errors import DomainError, EvaluationError, NoValidEpsilonError
from conefix.mappings import MappingHandle, builtin, random_affine_min
from conefix.models import ConvergenceClass, StopReason
from conefix.solver import (
    TRACE_COLUMNS,
    convergence_diagnostics,
    error_lower_bound,
    feasibility_probe,
    first_tolerance_step,
    fixed_point_iterate,
    geometric_envelope,
    max_lower_bound_eps,
    read_trace_csv,
    scalar_fixed_point,
    thompson_banach_bound,
    truncate_trace,
    write_ratio_csv,
    write_trace_csv,
)


def test_g_converges_sublinearly():
    """From x1 = 4 the error of g stays above 1e-3 after 1e5 steps"""
    trace = fixed_point_iterate(builtin("g"), [4.0], tol=1e-16, max_iter=100000, reference=[2.0])
    assert trace.stop_reason == StopReason.MAX_ITERS
    assert trace.iterations == 100000
    assert trace.records[-1].err_l2 > 1e-3
    assert abs(trace.records[-1].ratio_l2 - 1.0) < 0.01

    diagnostics = convergence_diagnostics(trace, [2.0])
    assert diagnostics.classification == ConvergenceClass.SUBLINEAR
    assert diagnostics.ratio_limit == pytest.approx(1.0, abs=0.01)


def test_g_eps_converges_geometrically():
    """g + 1e-3 is below 1e-3 error by step 400 and at machine precision by 2500"""
    f = builtin("g-eps(1e-3)")
    x_star = scalar_fixed_point(f, 2.0, 8.0)
    assert x_star == pytest.approx(2.229, abs=0.01)

    trace = fixed_point_iterate(f, [4.0], tol=1e-16, max_iter=2500, reference=[x_star])
    assert trace.records[399].n == 400
    assert trace.records[399].err_l2 < 1e-3
    assert trace.records[-1].err_l2 <= 1e-13

    diagnostics = convergence_diagnostics(trace, [x_star])
    assert diagnostics.classification == ConvergenceClass.GEOMETRIC
    assert 0.9 < diagnostics.c_hat < 1.0
    assert diagnostics.gamma is not None


def test_f1_ratio_is_one_half():
    """The affine recursion halves the error at every step"""
    trace = fixed_point_iterate(builtin("f1"), [0.5], tol=1e-16, reference=[1.0])
    ratios = [r.ratio_l2 for r in trace.records if r.err_l2 > 1e-14]
    assert len(ratios) > 30
    assert all(ratio == pytest.approx(0.5) for ratio in ratios)
    assert trace.stop_reason == StopReason.TOLERANCE_MET


def test_record_indexing():
    """Record n measures x_{n+1} against the reference"""
    trace = fixed_point_iterate(builtin("f1"), [0.5], max_iter=3, reference=[1.0])
    assert [r.n for r in trace.records] == [1, 2, 3]
    assert trace.records[0].err_l2 == pytest.approx(0.25)
    assert trace.records[0].step_linf == pytest.approx(0.25)
    assert trace.records[2].err_l2 == pytest.approx(0.0625)
    assert trace.records[0].d_thompson == pytest.approx(np.log(4.0 / 3.0))
    assert trace.records[1].ratio_l2 == pytest.approx(0.5)


def test_divergence_guard_fires():
    trace = fixed_point_iterate(builtin("f2"), [0.0], max_iter=1000, ceiling=100.0)
    assert trace.stop_reason == StopReason.DIVERGENCE_GUARD
    assert trace.final[0] > 100.0
    assert trace.records[0].err_l2 is None


def test_iteration_parameters_are_validated():
    with pytest.raises(DomainError):
        fixed_point_iterate(builtin("f1"), [1.0], tol=0.0)
    with pytest.raises(DomainError):
        fixed_point_iterate(builtin("f1"), [1.0], max_iter=0)


def test_evaluation_error_carries_partial_trace():
    handle = MappingHandle("blows-up", 1,
                           lambda x: x + 1.0 if x[0] < 3.0 else np.full(1, np.inf))
    with pytest.raises(EvaluationError) as excinfo:
        fixed_point_iterate(handle, [0.0])
    assert excinfo.value.trace is not None
    assert excinfo.value.trace.iterations == 3


def test_truncate_and_first_tolerance_step():
    trace = fixed_point_iterate(builtin("f1"), [0.0], tol=1e-16, reference=[1.0])
    n = first_tolerance_step(trace, 1e-3)
    assert n is not None
    assert trace.records[n - 1].step_linf <= 1e-3
    clipped = truncate_trace(trace, n, StopReason.TOLERANCE_MET)
    assert clipped.iterations == n
    assert clipped.records[-1].err_l2 == pytest.approx(trace.records[n - 1].err_l2)


def test_feasibility_probe():
    f = builtin("f1")
    assert feasibility_probe(f, [1.0])
    assert feasibility_probe(f, [3.0])
    assert not feasibility_probe(f, [0.5])


def test_feasibility_condition_implies_convergence():
    """Whenever f(x) <= x holds somewhere, iteration converges from positive starts"""
    rng = np.random.default_rng(17)
    confirmed = 0
    for _ in range(50):
        k = int(rng.integers(1, 8))
        f = random_affine_min(k, int(rng.integers(1, 4)), rng, row_sum=float(rng.uniform(0.5, 1.2)))
        if not feasibility_probe(f, np.full(k, 10.0)):
            continue
        confirmed += 1
        trace = fixed_point_iterate(f, rng.uniform(0.1, 50.0, k), tol=1e-12, max_iter=200000)
        assert trace.converged, f.name
        assert np.all(np.abs(f(trace.final) - trace.final) <= 1e-9 * max(1.0, np.max(trace.final)))
    assert confirmed >= 20


def test_scalar_fixed_point_needs_a_bracket():
    with pytest.raises(DomainError):
        scalar_fixed_point(builtin("f1"), 2.0, 3.0)
    assert scalar_fixed_point(builtin("f1"), 0.0, 3.0) == pytest.approx(1.0)


def test_diagnostics_need_enough_steps():
    trace = fixed_point_iterate(builtin("f1"), [0.0], max_iter=5, reference=[1.0])
    with pytest.raises(DomainError):
        convergence_diagnostics(trace, [1.0])


def test_geometric_envelope_of_f1():
    trace = fixed_point_iterate(builtin("f1"), [0.5], max_iter=30, reference=[1.0])
    assert geometric_envelope(trace, [1.0], 0.5) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        geometric_envelope(trace, [1.0], 1.0)


def test_thompson_banach_bound():
    trace = fixed_point_iterate(builtin("f1"), [0.5], max_iter=10, reference=[1.0])
    bound = thompson_banach_bound(0.5, trace)
    d1 = np.log(0.75 / 0.5)
    assert len(bound) == trace.iterations
    assert bound[0] == pytest.approx(0.5 * d1 / 0.5)
    assert all(b >= r.d_thompson for b, r in zip(bound, trace.records))
    with pytest.raises(DomainError):
        thompson_banach_bound(1.0, trace)


def test_error_lower_bound_values():
    values = error_lower_bound(0.5, 2.0, [3.0, 4.0], "l2", range(0, 3))
    assert values == pytest.approx([10.0, 5.0, 2.5])
    with pytest.raises(DomainError):
        error_lower_bound(1.0, 1.0, [1.0])
    with pytest.raises(DomainError):
        error_lower_bound(0.5, 0.0, [1.0])


def test_max_lower_bound_eps():
    eps, side = max_lower_bound_eps([1.0, 1.0], [2.0, 3.0], [1.0, 2.0])
    assert side == "below"
    assert eps == pytest.approx(1.0)
    eps, side = max_lower_bound_eps([4.0, 5.0], [2.0, 3.0], [1.0, 4.0])
    assert side == "above"
    assert eps == pytest.approx(0.5)
    with pytest.raises(NoValidEpsilonError):
        max_lower_bound_eps([1.0, 4.0], [2.0, 3.0], [1.0, 1.0])


def test_trace_csv_layout(tmp_path):
    """Header comments, column order and empty cells for absent values"""
    trace = fixed_point_iterate(builtin("f1"), [0.5], max_iter=5, reference=[1.0])
    path = write_trace_csv(trace, tmp_path / "trace.csv", ["conefix test", "seed: 0"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# conefix test"
    assert lines[1] == "# seed: 0"
    assert lines[2] == ",".join(TRACE_COLUMNS)
    assert lines[3].endswith(",")

    rows = read_trace_csv(path)
    assert len(rows) == 5
    assert rows[0]["n"] == 1
    assert rows[0]["err_l2"] == pytest.approx(0.25)
    assert rows[0]["lower_bound"] is None


def test_csv_output_is_deterministic(tmp_path):
    trace = fixed_point_iterate(builtin("f1"), [0.5], max_iter=20, reference=[1.0])
    a = write_ratio_csv(trace, tmp_path / "a.csv", ["seed: 1"])
    b = write_ratio_csv(trace, tmp_path / "b.csv", ["seed: 1"])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[1] == "n,ratio_l2"
