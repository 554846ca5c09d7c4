"""Perfect gas in a cylinder closed by a heavy piston.

State ``x = (S, V, q, p)``: gas entropy, gas volume, piston height and piston
momentum. Inputs ``u = (u1, u2)``: thermostat temperature and external force.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import (
    DissipationTerm,
    DomainError,
    IphsSystem,
    IrreversiblePort,
    ReversibleInternalTerm,
    ReversiblePort,
    SkewMatrix,
)
from .discrete_gradient import ScalarField

MODEL_NAME = "gas_piston"
STATE_NAMES = ("S", "V", "q", "p")
INPUT_NAMES = ("u1", "u2")

# initial state and controls of the reference scenario
REFERENCE_X0 = (2.0, 4.0, 1.0, 0.0)
REFERENCE_U = (10.0, -10.0)


@dataclass(frozen=True)
class GasPistonParams:
    m: float = 1.0
    A: float = 1.0
    g_grav: float = 10.0
    mu: float = 0.5
    lambda_e: float = 1.0
    c: float = 1.5
    N0: float = 1.0
    R: float = 1.0
    U_ref: float = 1.0
    V_ref: float = 1.0
    S_ref: float = 0.0

    def __post_init__(self):
        for name in ("m", "A", "lambda_e", "c", "N0", "R", "U_ref", "V_ref"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gas-piston parameter {name} must be positive, got {getattr(self, name)}")
        if not self.mu >= 0:
            raise ValueError(f"friction coefficient mu must be nonnegative, got {self.mu}")

    def with_overrides(self, **kw) -> "GasPistonParams":
        unknown = set(kw) - set(asdict(self))
        if unknown:
            raise ValueError(f"unknown gas-piston parameters: {sorted(unknown)}")
        return replace(self, **kw)


def internal_energy(S: float, V: float, p: GasPistonParams = GasPistonParams()) -> float:
    """``U_ref exp((S - S_ref) / (c N0 R)) (V_ref / V)^(1/c)``."""
    if not V > 0:
        raise DomainError(f"gas volume must be positive, got {V}")
    return p.U_ref * math.exp((S - p.S_ref) / (p.c * p.N0 * p.R)) * (p.V_ref / V) ** (1.0 / p.c)


def temperature(S: float, V: float, p: GasPistonParams = GasPistonParams()) -> float:
    """``dU/dS``."""
    return internal_energy(S, V, p) / (p.c * p.N0 * p.R)


def pressure(S: float, V: float, p: GasPistonParams = GasPistonParams()) -> float:
    """``-dU/dV``."""
    return internal_energy(S, V, p) / (p.c * V)


def hamiltonian(p: GasPistonParams) -> ScalarField:
    cNR = p.c * p.N0 * p.R
    m, mg = p.m, p.m * p.g_grav

    def value(x):
        return internal_energy(x[0], x[1], p) + x[3] * x[3] / (2.0 * m) + mg * x[2]

    def gradient(x):
        U = internal_energy(x[0], x[1], p)
        return np.array([U / cNR, -U / (p.c * x[1]), mg, x[3] / m])

    def difference(x, x2):
        if not x2[1] > 0:
            raise DomainError(f"gas volume must be positive, got {x2[1]}")
        log_ratio = (x2[0] - x[0]) / cNR - math.log1p((x2[1] - x[1]) / x[1]) / p.c
        dU = internal_energy(x[0], x[1], p) * math.expm1(log_ratio)
        return dU + (x2[3] - x[3]) * (x2[3] + x[3]) / (2.0 * m) + mg * (x2[2] - x[2])

    return ScalarField(4, value, gradient, difference)


def _in_domain(x) -> bool:
    # positive volume; a sum of Python floats is non-finite iff some entry is
    return bool(x[1] > 0) and math.isfinite(sum(x.tolist()))


def build_gas_piston(
    params: GasPistonParams = GasPistonParams(),
    heat_port: bool = True,
    force_port: bool = True,
) -> IphsSystem:
    """Gas-piston IPHS.

    Friction enters as the dissipation term ``(mu / T) {S,H}_J J dH`` with
    ``{S,H}_J = v``; it is omitted when ``mu == 0`` since its coefficient must
    be strictly positive. The heat port couples to the S row with coefficient
    ``lambda_e / (T u1^2)`` and ``tau = (1, 0)``; the force port acts on the
    momentum row reversibly.
    """
    p = params
    H = hamiltonian(p)
    S = ScalarField.linear([1.0, 0.0, 0.0, 0.0])

    J = np.zeros((4, 4))
    J[0, 3], J[3, 0] = 1.0, -1.0
    M = np.zeros((4, 4))
    M[1, 3], M[3, 1] = p.A, -p.A
    M[2, 3], M[3, 2] = 1.0, -1.0

    def T_of(x):
        return temperature(x[0], x[1], p)

    dissipation = []
    if p.mu > 0:
        dissipation.append(DissipationTerm(SkewMatrix(J), lambda x: p.mu / T_of(x)))

    ports = []
    if heat_port:
        g = np.zeros((4, 2))
        g[0, 0] = 1.0
        ports.append(
            IrreversiblePort(g, lambda x, u: p.lambda_e / (T_of(x) * u[0] * u[0]), np.array([1.0, 0.0]))
        )
    rev_ports = []
    if force_port:
        gS = np.zeros((4, 2))
        gS[3, 1] = 1.0
        rev_ports.append(ReversiblePort(gS, np.zeros(2)))

    observables = {
        "T": T_of,
        "P": lambda x: pressure(x[0], x[1], p),
        "v": lambda x: x[3] / p.m,
    }
    return IphsSystem(
        n=4,
        m=2,
        H=H,
        S=S,
        S_is_linear=True,
        dissipation=dissipation,
        reversible_internal=[ReversibleInternalTerm(SkewMatrix(M))],
        irreversible_ports=ports,
        reversible_ports=rev_ports,
        domain_guard=_in_domain,
        observables=observables,
        name=MODEL_NAME,
        state_names=STATE_NAMES,
    )


def closed_gas_piston(params: GasPistonParams = GasPistonParams()) -> IphsSystem:
    """Frictionless piston with no thermostat and no external force."""
    return build_gas_piston(replace(params, mu=0.0), heat_port=False, force_port=False)


def equilibrium_state(
    T: float, P: float, q: float = 1.0, params: GasPistonParams = GasPistonParams()
) -> np.ndarray:
    """State with temperature ``T``, pressure ``P`` and the piston at rest.

    From ``P V = N0 R T`` and ``U = c N0 R T``, inverting the internal energy
    law for ``S``.
    """
    p = params
    V = p.N0 * p.R * T / P
    U = p.c * p.N0 * p.R * T
    S = p.S_ref + p.c * p.N0 * p.R * (math.log(U / p.U_ref) - math.log((p.V_ref / V) ** (1.0 / p.c)))
    return np.array([S, V, q, 0.0])
