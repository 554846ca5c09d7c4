import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iphsdg.core import DomainError, discrete_bracket
from iphsdg.gas_piston import (
    REFERENCE_U,
    GasPistonParams,
    build_gas_piston,
    closed_gas_piston,
    equilibrium_state,
    hamiltonian,
    internal_energy,
    pressure,
    temperature,
)

P0 = GasPistonParams()


def test_internal_energy_values():
    assert internal_energy(0.0, 8.0) == pytest.approx(0.25, rel=1e-14)
    assert internal_energy(1.5 * math.log(2.0), 1.0) == pytest.approx(2.0, rel=1e-14)


def test_temperature_and_pressure():
    assert temperature(0.0, 1.0) == pytest.approx(2 / 3, rel=1e-14)
    assert pressure(0.0, 1.0) == pytest.approx(2 / 3, rel=1e-14)


def test_volume_must_be_positive():
    with pytest.raises(DomainError):
        internal_energy(0.0, 0.0)
    with pytest.raises(DomainError):
        internal_energy(0.0, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 5), st.floats(0.05, 50))
def test_ideal_gas_law(S, V):
    assert pressure(S, V) * V == pytest.approx(P0.N0 * P0.R * temperature(S, V), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 5), st.floats(0.05, 50), st.floats(-2, 2), st.floats(-5, 5))
def test_friction_bracket_is_velocity(S, V, q, p):
    sys = build_gas_piston()
    x = np.array([S, V, q, p])
    b = discrete_bracket(sys.S.gradient(x), sys.dissipation[0].J, sys.H.gradient(x))
    assert b == pytest.approx(p / P0.m, abs=1e-15)


def test_gradient_matches_finite_differences():
    from iphsdg.discrete_gradient import numeric_gradient

    H = hamiltonian(P0)
    x = np.array([2.0, 4.0, 1.0, 0.3])
    np.testing.assert_allclose(H.gradient(x), numeric_gradient(H.value, x, 1e-6), rtol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 5), st.floats(0.1, 20), st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3))
def test_accurate_increment_matches_plain_difference(S, V, dS, dV):
    H = hamiltonian(P0)
    x = np.array([S, V, 1.0, 0.5])
    x2 = x + np.array([dS, dV, 1e-4, -1e-4])
    plain = H.value(x2) - H.value(x)
    assert H.difference(x, x2) == pytest.approx(plain, abs=1e-13 * (1 + abs(H.value(x))))


def test_equilibrium_state():
    x = equilibrium_state(10.0, 20.0)
    assert temperature(x[0], x[1]) == pytest.approx(10.0, rel=1e-13)
    assert pressure(x[0], x[1]) == pytest.approx(20.0, rel=1e-13)
    assert x[1] == pytest.approx(0.5)
    assert x[3] == 0.0


def test_structure_of_model():
    sys = build_gas_piston()
    assert sys.n == 4 and sys.m == 2
    assert len(sys.dissipation) == 1 and len(sys.irreversible_ports) == 1
    # V - A q is conserved by the internal coupling
    M = sys.M_total
    np.testing.assert_array_equal(np.array([0.0, 1.0, -P0.A, 0.0]) @ M, 0.0)


def test_zero_friction_omits_dissipation():
    sys = build_gas_piston(P0.with_overrides(mu=0.0))
    assert len(sys.dissipation) == 0


def test_closed_model_has_no_ports():
    sys = closed_gas_piston()
    assert not sys.irreversible_ports and not sys.reversible_ports and not sys.dissipation


def test_parameter_validation():
    with pytest.raises(ValueError):
        GasPistonParams(m=0.0)
    with pytest.raises(ValueError):
        GasPistonParams(mu=-0.1)
    with pytest.raises(ValueError):
        P0.with_overrides(mass=2.0)


def test_domain_guard():
    sys = build_gas_piston()
    assert sys.domain_guard(np.array([2.0, 4.0, 1.0, 0.0]))
    assert not sys.domain_guard(np.array([2.0, 0.0, 1.0, 0.0]))
    assert not sys.domain_guard(np.array([2.0, 4.0, np.nan, 0.0]))


def test_heat_port_coefficient_positive():
    sys = build_gas_piston()
    gam = sys.irreversible_ports[0].gamma_port(np.array([2.0, 4.0, 1.0, 0.0]), np.array(REFERENCE_U))
    assert gam > 0
