"""Acceptance suite: one test per criterion, each reported in the terminal summary.

Tolerances and runtime limits are the stated ones. Every test records its
measured values before asserting, so failures are reported with numbers.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from iphsdg.core import (
    DissipationTerm,
    DomainError,
    ReversibleInternalTerm,
    SkewMatrix,
    discrete_bracket,
    discrete_port_bracket,
    validate_structure,
)
from iphsdg.discrete_gradient import (
    COORDINATE_INCREMENT,
    KINDS,
    MEAN_VALUE,
    MIDPOINT,
    DiscreteGradientMethod,
    chain_rule_residual,
    numeric_gradient,
)
from iphsdg.gas_piston import (
    REFERENCE_U,
    REFERENCE_X0,
    GasPistonParams,
    build_gas_piston,
    closed_gas_piston,
)
from iphsdg.integrator import ControlSchedule, integrate_trajectory, rk4_reference_step, rk4_trajectory
from iphsdg.testing import random_iphs, random_polynomial_field

SEED = 12345
PARAMS = GasPistonParams()


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def independent_entropy_source(sys, method, x, z, u, h):
    """``h * (sum gamma b^2 + sum gamma_port b_port^2)`` rebuilt from the bracket functions."""
    gH = method(sys.H, x, z)
    gS = sys.S.gradient(x) if sys.S_is_linear else method(sys.S, x, z)
    mid = 0.5 * (x + z)
    total = 0.0
    for term in sys.dissipation:
        total += term.gamma(mid) * discrete_bracket(gS, term.J, gH) ** 2
    for port in sys.irreversible_ports:
        total += port.gamma_port(mid, u) * discrete_port_bracket(port.g, gS, gH, u, port.tau) ** 2
    return h * total


def balance_measures(sys, method, traj):
    """Worst relative energy residual, worst relative entropy production and
    worst relative mismatch against the independently rebuilt source."""
    H = traj.observables["H"][:-1]
    S = traj.observables["S"][:-1]
    e = traj.energy_residual[1:]
    s = traj.entropy_production[1:]
    src = np.array([
        independent_entropy_source(sys, method, traj.states[k], traj.states[k + 1], traj.inputs[k + 1], traj.h)
        for k in range(traj.steps)
    ])
    energy = float(np.max(np.abs(e) / (1.0 + np.abs(H))))
    entropy = float(np.min(s / (1.0 + np.abs(S))))
    mismatch = float(np.max(np.abs(s - src) / np.abs(src)))
    return energy, entropy, mismatch


@criterion(1, "discrete chain rule on random polynomial fields")
def test_chain_rule(request):
    rng = np.random.default_rng(SEED)
    methods = {
        MIDPOINT: DiscreteGradientMethod(MIDPOINT),
        COORDINATE_INCREMENT: DiscreteGradientMethod(COORDINATE_INCREMENT),
        MEAN_VALUE: DiscreteGradientMethod(MEAN_VALUE, quadrature_order=3),
    }
    worst = dict.fromkeys(methods, 0.0)
    start = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(1, 7))
        f = random_polynomial_field(rng, n, int(rng.integers(1, 5)))
        x, x2 = rng.uniform(-2, 2, n), rng.uniform(-2, 2, n)
        scale = max(1.0, abs(f(x)), abs(f(x2)))
        for kind, method in methods.items():
            worst[kind] = max(worst[kind], chain_rule_residual(method, f, x, x2) / scale)
    elapsed = time.perf_counter() - start
    detail(request, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f} s")
    assert max(worst.values()) <= 1e-10
    assert elapsed < 1.0


@criterion(2, "consistency at coincident points and agreement with finite differences")
def test_consistency(request):
    rng = np.random.default_rng(SEED + 1)
    exact = True
    worst = 0.0
    start = time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(1, 7))
        f = random_polynomial_field(rng, n, int(rng.integers(1, 5)))
        x = rng.uniform(-2, 2, n)
        g = f.gradient(x)
        for kind in KINDS:
            dg = DiscreteGradientMethod(kind)(f, x, x)
            exact &= bool(np.array_equal(dg, g))
            worst = max(worst, float(np.linalg.norm(dg - numeric_gradient(f.value, x))) / max(1.0, np.linalg.norm(g)))
    elapsed = time.perf_counter() - start
    detail(request, f"exact {exact}, worst finite-difference gap {worst:.1e}, {elapsed:.2f} s")
    assert exact
    assert worst <= 1e-6
    assert elapsed < 1.0


@criterion(3, "closed gas piston conserves energy; RK4 drifts more")
def test_energy_conservation(request):
    sys = closed_gas_piston(PARAMS)
    h, steps = 0.05, 10_000
    start = time.perf_counter()
    traj = integrate_trajectory(sys, DiscreteGradientMethod(), REFERENCE_X0, ControlSchedule(constant=(0.0, 0.0)),
                                h, steps)
    H = traj.observables["H"]
    drift = float(np.max(np.abs(H - H[0])))
    elapsed = time.perf_counter() - start

    # RK4 at the same step; a departure from the domain counts as unbounded drift
    x = np.array(REFERENCE_X0)
    rk_drift = 0.0
    left_domain = None
    u = np.zeros(2)
    for k in range(steps):
        try:
            x = rk4_reference_step(sys, x, u, h)
            sys.check_domain(x)
        except DomainError:
            left_domain = k
            rk_drift = np.inf
            break
        rk_drift = max(rk_drift, abs(sys.H(x) - H[0]))
    note = f", RK4 left the domain at step {left_domain}" if left_domain is not None else ""
    detail(request, f"steps {traj.steps}, drift {drift:.1e} (bound {1e-8 * (1 + abs(H[0])):.1e}), "
                    f"RK4 drift {rk_drift:.1e}{note}, {elapsed:.2f} s")
    assert traj.completed
    assert drift <= 1e-8 * (1 + abs(H[0]))
    assert rk_drift > drift
    assert elapsed < 10.0


@pytest.fixture(scope="module")
def reference_run():
    """Reference scenario at h = 0.01: 2000 timed steps, then continued to t = 50."""
    sys = build_gas_piston(PARAMS)
    method = DiscreteGradientMethod()
    sched = ControlSchedule(constant=REFERENCE_U)
    start = time.perf_counter()
    first = integrate_trajectory(sys, method, REFERENCE_X0, sched, 0.01, 2000)
    elapsed = time.perf_counter() - start
    rest = integrate_trajectory(sys, method, first.states[-1], sched, 0.01, 3000)
    return sys, method, first, rest, elapsed


@criterion(4, "discrete energy balance on the reference scenario")
def test_energy_balance(request, reference_run):
    sys, method, traj, _, elapsed = reference_run
    e = traj.energy_residual[1:]
    rel = float(np.max(np.abs(e) / (1.0 + np.abs(traj.observables["H"][:-1]))))
    detail(request, f"steps {traj.steps}, worst relative residual {rel:.1e}, {elapsed:.2f} s")
    assert traj.completed and traj.steps == 2000
    assert rel <= 1e-9
    assert elapsed < 10.0


@criterion(5, "entropy production nonnegative and equal to the bracket source")
def test_entropy_production(request, reference_run):
    sys, method, traj, _, _ = reference_run
    _, entropy, mismatch = balance_measures(sys, method, traj)
    detail(request, f"min relative production {entropy:.1e}, worst relative mismatch {mismatch:.1e}")
    assert entropy >= -1e-9
    assert mismatch <= 1e-8


@criterion(6, "equilibrium T = 10, P = 20, v = 0 reached by t = 50")
def test_equilibrium(request, reference_run):
    sys, _, first, rest, _ = reference_run
    t_final = first.times[-1] + rest.times[-1]
    T, P, v = (float(rest.observables[k][-1]) for k in ("T", "P", "v"))
    detail(request, f"t = {t_final:g}: T {T:.4f}, P {P:.4f}, |v| {abs(v):.1e}")
    assert rest.completed
    assert 9.9 <= T <= 10.1
    assert 19.8 <= P <= 20.2
    assert abs(v) <= 0.01


@criterion(7, "V - A q is exactly invariant")
def test_linear_invariant(request, reference_run):
    _, _, first, rest, _ = reference_run
    states = np.vstack([first.states, rest.states[1:]])
    c = states[:, 1] - PARAMS.A * states[:, 2]
    drift = float(np.max(np.abs(c - c[0])))
    detail(request, f"{len(states) - 1} steps, drift {drift:.1e}")
    assert drift <= 1e-12


@criterion(8, "convergence order against an RK4 reference at t = 1")
def test_convergence_order(request):
    sys = build_gas_piston(PARAMS)
    sched = ControlSchedule(constant=REFERENCE_U)
    start = time.perf_counter()
    ref = rk4_trajectory(sys, REFERENCE_X0, sched, 1e-4, 10_000)[-1]
    hs = np.array([0.04, 0.02, 0.01, 0.005])
    orders = {}
    text = []
    for kind in (MIDPOINT, COORDINATE_INCREMENT):
        method = DiscreteGradientMethod(kind)
        errors = np.array([
            np.linalg.norm(integrate_trajectory(sys, method, REFERENCE_X0, sched, h, int(round(1 / h))).states[-1] - ref)
            for h in hs
        ])
        pairwise = np.log2(errors[:-1] / errors[1:])
        fitted = np.polyfit(np.log(hs), np.log(errors), 1)[0]
        # observed order: rate between the two finest step sizes
        orders[kind] = float(pairwise[-1])
        text.append(f"{kind} pairwise {' '.join(f'{p:.2f}' for p in pairwise)} (fit {fitted:.2f})")
    elapsed = time.perf_counter() - start
    detail(request, "; ".join(text) + f", {elapsed:.1f} s")
    assert orders[MIDPOINT] >= 1.9
    assert orders[COORDINATE_INCREMENT] >= 0.9
    assert elapsed < 30.0


@criterion(9, "energy and entropy balances on 50 random IPHS")
def test_random_systems(request):
    rng = np.random.default_rng(SEED)
    method = DiscreteGradientMethod()
    worst_energy, worst_entropy, worst_mismatch = 0.0, np.inf, 0.0
    incomplete = 0
    start = time.perf_counter()
    for _ in range(50):
        sys = random_iphs(rng)
        x0 = rng.uniform(-1, 1, sys.n)
        u = rng.uniform(-1, 1, sys.m)
        traj = integrate_trajectory(sys, method, x0, ControlSchedule(constant=u), 0.01, 100)
        incomplete += not traj.completed
        if traj.steps:
            e, s, mm = balance_measures(sys, method, traj)
            worst_energy = max(worst_energy, e)
            worst_entropy = min(worst_entropy, s)
            worst_mismatch = max(worst_mismatch, mm)
    elapsed = time.perf_counter() - start
    detail(request, f"incomplete {incomplete}, worst energy {worst_energy:.1e}, min entropy {worst_entropy:.1e}, "
                    f"worst mismatch {worst_mismatch:.1e}, {elapsed:.1f} s")
    assert incomplete == 0
    assert worst_energy <= 1e-9
    assert worst_entropy >= -1e-9
    assert worst_mismatch <= 1e-8
    assert elapsed < 60.0


@criterion(10, "structural validation accepts the model and rejects corrupted variants")
def test_structural_validation(request):
    sys = build_gas_piston(PARAMS)
    samples = [np.array(REFERENCE_X0), np.array([1.0, 0.5, 0.5, 0.2]), np.array([3.0, 8.0, 2.0, -1.0])]
    friction = sys.dissipation[0]

    bad_J = friction.J.entries.copy()
    bad_J[3, 0] = 0.5
    variants = {
        "non-skew J": (replace(sys, dissipation=[DissipationTerm(SkewMatrix(bad_J, check=False), friction.gamma)]),
                       "skew_symmetry"),
        "dS not in ker M": (replace(sys, reversible_internal=[ReversibleInternalTerm(friction.J)]), "casimir"),
        "negative gamma": (replace(sys, dissipation=[DissipationTerm(friction.J, lambda x: -1.0)]), "positivity"),
    }
    good = validate_structure(sys, samples, inputs=[REFERENCE_U])
    caught = {name: not validate_structure(v, samples, inputs=[REFERENCE_U]).checks[check]
              for name, (v, check) in variants.items()}
    detail(request, f"model passes {good.passed}; " + ", ".join(f"{k} rejected {v}" for k, v in caught.items()))
    assert good.passed
    assert all(caught.values())
