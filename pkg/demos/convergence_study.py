"""
Convergence against a fine Runge-Kutta reference
================================================

The midpoint discrete gradient gives a symmetric, second-order scheme. The
coordinate-increment gradient is not symmetric, so first order is all that
is guaranteed, although on this problem it also behaves close to second
order.
"""

import numpy as np

from iphsdg import ControlSchedule, DiscreteGradientMethod, build_gas_piston, integrate_trajectory
from iphsdg.discrete_gradient import COORDINATE_INCREMENT, MIDPOINT
from iphsdg.gas_piston import REFERENCE_U, REFERENCE_X0
from iphsdg.integrator import rk4_trajectory

sys = build_gas_piston()
sched = ControlSchedule(constant=REFERENCE_U)

# %%
# Reference state at t = 1 from classical RK4 with a tiny step
ref = rk4_trajectory(sys, REFERENCE_X0, sched, 1e-4, 10_000)[-1]

hs = np.array([0.04, 0.02, 0.01, 0.005])
for kind in (MIDPOINT, COORDINATE_INCREMENT):
    method = DiscreteGradientMethod(kind)
    err = np.array([
        np.linalg.norm(integrate_trajectory(sys, method, REFERENCE_X0, sched, h, int(round(1 / h))).states[-1] - ref)
        for h in hs
    ])
    rates = np.log2(err[:-1] / err[1:])
    print(kind)
    for h, e in zip(hs, err):
        print(f"   h = {h:<6} error {e:.3e}")
    print("   pairwise rates", np.round(rates, 2))
