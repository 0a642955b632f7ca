#!/usr/bin/env python3
"""
Example usage of conefix
"""

import logging

import numpy as np

from conefix import (
    builtin,
    contraction_certificate,
    convergence_diagnostics,
    feasibility_check,
    fixed_point_iterate,
)
from conefix.cone import make_box
from conefix.solver import scalar_fixed_point
from conefix.wireless import generate_scenario, run_load_experiment

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)


def main():
    """
    Walk through the one-dimensional examples, a certificate and a load run.
    """
    print("\n" + "=" * 60)
    print("conefix - Example Demonstration")
    print("=" * 60 + "\n")

    # g converges to 2 from x1 = 4, but slowly
    g = builtin("g")
    trace = fixed_point_iterate(g, [4.0], tol=1e-16, max_iter=20000, reference=[2.0])
    diagnostics = convergence_diagnostics(trace, [2.0])
    print(f"g:      error after {trace.iterations} steps = {trace.records[-1].err_l2:.3e} "
          f"({diagnostics.classification.value})")

    # shifting g by eps makes it a PC mapping with geometric convergence
    g_eps = builtin("g-eps(1e-3)")
    x_star = scalar_fixed_point(g_eps, 2.0, 8.0)
    trace = fixed_point_iterate(g_eps, [4.0], tol=1e-16, max_iter=2500, reference=[x_star])
    diagnostics = convergence_diagnostics(trace, [x_star])
    print(f"g-eps:  x* = {x_star:.6f}, c_hat = {diagnostics.c_hat:.4f} "
          f"({diagnostics.classification.value})")

    # contraction certificate of f1 on [1/2, 3/2]
    certificate = contraction_certificate(builtin("f1"), make_box([0.5], [1.5]), mu=1.0 / 3.0)
    print(f"f1:     c = {certificate.c:.4f} on [0.5, 1.5] (lambda0 = {certificate.lambda0:g})")

    # f2 has no fixed point: rho(f_inf) = 1
    verdict = feasibility_check(builtin("f2"))
    print(f"f2:     rho = {verdict.estimate.rho:.4f}, {verdict.verdict.value}")

    # load estimation on a small cellular layout
    scenario = generate_scenario(k=9, users=90, seed=0)
    result = run_load_experiment(scenario)

    print("\n" + "=" * 60)
    print("LOAD EXPERIMENT")
    print("=" * 60)
    print(f"\nrho(M):      {result.rho:.6f}")
    print(f"Verdict:     {result.feasibility.verdict.value}")
    print(f"Iterations:  {result.trace.iterations} ({result.trace.stop_reason.value})")
    if result.feasible:
        print(f"Loads:       {np.round(result.trace.final, 4)}")
    if result.diagnostics is not None:
        print(f"Fitted rate: {result.diagnostics.c_hat:.6f}")
    print("\n" + "=" * 60 + "\n")


if __name__ == '__main__':
    main()
