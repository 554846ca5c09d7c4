import numpy as np
import pytest

from iphsdg.core import IphsSystem, ReversibleInternalTerm, SkewMatrix
from iphsdg.discrete_gradient import (
    COORDINATE_INCREMENT,
    KINDS,
    MEAN_VALUE,
    MIDPOINT,
    DiscreteGradientMethod,
    ScalarField,
)
from iphsdg.gas_piston import (
    REFERENCE_U,
    REFERENCE_X0,
    STATE_NAMES,
    build_gas_piston,
    closed_gas_piston,
    equilibrium_state,
)
from iphsdg.integrator import (
    ControlSchedule,
    balance_diagnostics,
    integrate_trajectory,
    rk4_reference_step,
    rk4_trajectory,
    step_iphs,
    step_skew_gradient,
)
from iphsdg.solver import SolverConfig, SolverError

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
QUARTIC = ScalarField(2, lambda x: float(x[0] ** 4 + x[1] ** 2), lambda x: np.array([4 * x[0] ** 3, 2 * x[1]]))

# single step of the reference scenario, midpoint discrete gradient, h = 0.01
GOLDEN_STEP = np.array([2.0089809303526889, 3.9990150478173785, 0.99901504781737838, -0.19699028765664847])


@pytest.mark.parametrize("kind", KINDS)
def test_harmonic_oscillator_stays_on_circle(kind):
    H = ScalarField.quadratic(np.eye(2))
    res = step_skew_gradient(J2, H, DiscreteGradientMethod(kind), [1.0, 0.0], 0.1)
    assert np.linalg.norm(res.x_next) == pytest.approx(1.0, abs=1e-10)


def test_zero_structure_matrix_is_identity_map():
    res = step_skew_gradient(np.zeros((2, 2)), QUARTIC, DiscreteGradientMethod(), [0.3, -0.7], 0.1)
    np.testing.assert_array_equal(res.x_next, [0.3, -0.7])


def test_quartic_energy_conserved_rk4_drifts():
    method = DiscreteGradientMethod(MIDPOINT)
    sys = IphsSystem(2, 1, QUARTIC, ScalarField.linear([0.0, 0.0]),
                     reversible_internal=[ReversibleInternalTerm(SkewMatrix(J2))])
    x = np.array([1.0, 0.0])
    xr = x.copy()
    H0 = QUARTIC(x)
    for _ in range(400):
        x = step_skew_gradient(J2, QUARTIC, method, x, 0.05).x_next
        xr = rk4_reference_step(sys, xr, np.zeros(1), 0.05)
    assert abs(QUARTIC(x) - H0) <= 1e-10
    assert abs(QUARTIC(xr) - H0) > 1e3 * abs(QUARTIC(x) - H0)


def test_iphs_step_reduces_to_skew_gradient_step():
    # an IPHS with one internal matrix, no dissipation and no ports is the plain scheme
    sys = IphsSystem(2, 1, QUARTIC, ScalarField.linear([0.0, 0.0]),
                     reversible_internal=[ReversibleInternalTerm(SkewMatrix(J2))])
    method = DiscreteGradientMethod(MIDPOINT)
    a = step_skew_gradient(J2, QUARTIC, method, [0.8, 0.2], 0.05)
    b = step_iphs(sys, method, [0.8, 0.2], [0.0], 0.05)
    np.testing.assert_array_equal(a.x_next, b.x_next)


def test_golden_single_step():
    res = step_iphs(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0, REFERENCE_U, 0.01)
    np.testing.assert_allclose(res.x_next, GOLDEN_STEP, rtol=0, atol=1e-11)
    assert abs(res.energy_residual) <= 1e-11
    assert res.entropy_production > 0


def test_equilibrium_is_a_fixed_point():
    x = equilibrium_state(10.0, 20.0)
    for kind in KINDS:
        res = step_iphs(build_gas_piston(), DiscreteGradientMethod(kind), x, REFERENCE_U, 0.05)
        np.testing.assert_allclose(res.x_next, x, atol=1e-11)


@pytest.mark.parametrize("kind", [MIDPOINT, COORDINATE_INCREMENT])
def test_single_step_trajectory(kind):
    traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(kind), REFERENCE_X0,
                                ControlSchedule(constant=REFERENCE_U), 0.01, 1)
    assert traj.states.shape == (2, 4)
    assert np.isnan(traj.energy_residual[0])
    assert traj.completed and traj.state_names == STATE_NAMES


def test_closed_system_conserves_energy():
    sys = closed_gas_piston()
    steps = 1000
    traj = integrate_trajectory(sys, DiscreteGradientMethod(), REFERENCE_X0,
                                ControlSchedule(constant=(0.0, 0.0)), 0.05, steps)
    H = traj.observables["H"]
    assert np.max(np.abs(H - H[0])) <= steps * 100 * traj.tolerance


def test_entropy_never_decreases_net_of_heat_flux():
    traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0,
                                ControlSchedule(constant=REFERENCE_U), 0.01, 2000)
    S = traj.observables["S"]
    flux = np.concatenate([[0.0], np.cumsum(traj.h * traj.entropy_flow[1:])])
    net = S - flux
    assert np.all(np.diff(net) >= -100 * traj.tolerance * (1 + np.abs(S[:-1])))


@pytest.mark.parametrize("h", [0.01, 0.05])
def test_newton_iterations_from_current_state(h):
    sys = build_gas_piston()
    method = DiscreteGradientMethod()
    traj = integrate_trajectory(sys, method, REFERENCE_X0, ControlSchedule(constant=REFERENCE_U), h,
                                int(round(5 / h)))
    assert traj.completed
    # each step solved again from guess x_k, as opposed to the extrapolated start
    worst = max(step_iphs(sys, method, x, REFERENCE_U, h).solver.iterations for x in traj.states[:-1])
    assert worst <= 8


def test_extrapolated_start_gives_same_states():
    sys = build_gas_piston()
    method = DiscreteGradientMethod()
    traj = integrate_trajectory(sys, method, REFERENCE_X0, ControlSchedule(constant=REFERENCE_U), 0.01, 50)
    for k in range(50):
        x_next = step_iphs(sys, method, traj.states[k], REFERENCE_U, 0.01).x_next
        np.testing.assert_allclose(x_next, traj.states[k + 1], rtol=0, atol=1e-11)


def test_volume_height_invariant():
    traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(MEAN_VALUE), REFERENCE_X0,
                                ControlSchedule(constant=REFERENCE_U), 0.02, 300)
    c = traj.states[:, 1] - traj.states[:, 2]
    assert np.ptp(c) <= 1e-12


def test_control_schedule_table_is_piecewise_constant():
    sched = ControlSchedule(table=[(0.0, (10.0, -10.0)), (1.0, (12.0, 0.0))])
    np.testing.assert_array_equal(sched(0, 0.0), [10, -10])
    np.testing.assert_array_equal(sched(99, 0.99), [10, -10])
    # 100 * 0.01 is not exactly 1.0 in floating point; the switch must still happen
    np.testing.assert_array_equal(sched(100, 100 * 0.01), [12, 0])
    with pytest.raises(ValueError):
        ControlSchedule(table=[(1.0, (1.0,)), (0.5, (2.0,))])
    with pytest.raises(ValueError):
        ControlSchedule()


def test_solver_failure_returns_partial_trajectory():
    cfg = SolverConfig(max_iterations=1, tolerance=1e-15)
    traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0,
                                ControlSchedule(constant=REFERENCE_U), 0.01, 10, cfg)
    assert not traj.completed
    assert traj.steps < 10
    with pytest.raises(SolverError):
        step_iphs(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0, REFERENCE_U, 0.01, cfg)


def test_invalid_arguments():
    sys = build_gas_piston()
    with pytest.raises(ValueError):
        step_iphs(sys, DiscreteGradientMethod(), REFERENCE_X0, REFERENCE_U, 0.0)
    with pytest.raises(ValueError):
        integrate_trajectory(sys, DiscreteGradientMethod(), REFERENCE_X0,
                             ControlSchedule(constant=REFERENCE_U), 0.01, 0)


def test_rk4_matches_discrete_gradient_at_second_order():
    sys = build_gas_piston()
    sched = ControlSchedule(constant=REFERENCE_U)
    ref = rk4_trajectory(sys, REFERENCE_X0, sched, 1e-3, 1000)[-1]
    errors = []
    for h in (0.02, 0.01):
        traj = integrate_trajectory(sys, DiscreteGradientMethod(), REFERENCE_X0, sched, h, int(round(1 / h)))
        errors.append(np.linalg.norm(traj.states[-1] - ref))
    assert 3.5 <= errors[0] / errors[1] <= 4.5


class TestBalanceDiagnostics:
    def test_reference_run_passes(self):
        traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0,
                                    ControlSchedule(constant=REFERENCE_U), 0.01, 200)
        report = balance_diagnostics(traj)
        assert report.passed
        assert report.min_entropy_production > 0
        assert abs(report.cumulative_energy_balance) <= 200 * 100 * traj.tolerance * (1 + abs(traj.observables["H"][0]))

    def test_inexact_gradient_is_flagged(self):
        traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(MEAN_VALUE, quadrature_order=1),
                                    REFERENCE_X0, ControlSchedule(constant=REFERENCE_U), 0.05, 40)
        assert not balance_diagnostics(traj).energy_ok

    def test_empty_trajectory_is_an_error(self):
        traj = integrate_trajectory(build_gas_piston(), DiscreteGradientMethod(), REFERENCE_X0,
                                    ControlSchedule(constant=REFERENCE_U), 0.01, 5,
                                    SolverConfig(max_iterations=1, tolerance=1e-15))
        assert traj.steps == 0
        report = balance_diagnostics(traj)
        assert report.error and not report.passed
