"""Irreversible port-Hamiltonian systems with constant structure matrices.

The state equation is

    dx/dt = sum_i gamma_i(x) {S,H}_{J_i} J_i dH
          + sum_a M_a dH
          + sum_j gamma_port_j(x,u) {S_tot,H_tot}_j g_j u
          + sum_b gS_b u

with output

    y = sum_j gamma_port_j(x,u) {S_tot,H_tot}_j g_j^T dH + sum_b gS_b^T dH,

where ``{S,H}_J = dS^T J dH`` and the port bracket of an irreversible port
with input matrix ``g`` and entropy weights ``tau`` is
``(g^T dS)^T u - tau^T (g^T dH)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .discrete_gradient import ScalarField

SKEW_TOL = 1e-14


class DomainError(ValueError):
    """State outside the admissible domain of a system."""


@dataclass(frozen=True)
class SkewMatrix:
    """Constant skew-symmetric structure matrix.

    Construction checks ``A + A^T = 0``; pass ``check=False`` only to build
    deliberately corrupted systems for :func:`validate_structure`.
    """

    entries: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"structure matrix must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.check and self.skew_defect > SKEW_TOL:
            raise ValueError(f"matrix is not skew-symmetric (defect {self.skew_defect:.2e})")

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def skew_defect(self) -> float:
        return float(np.max(np.abs(self.entries + self.entries.T), initial=0.0))

    def __matmul__(self, other):
        return self.entries @ other


def _as_skew(J) -> SkewMatrix:
    return J if isinstance(J, SkewMatrix) else SkewMatrix(J)


@dataclass(frozen=True)
class DissipationTerm:
    J: SkewMatrix
    gamma: Callable[[np.ndarray], float]

    def __post_init__(self):
        object.__setattr__(self, "J", _as_skew(self.J))


@dataclass(frozen=True)
class ReversibleInternalTerm:
    M: SkewMatrix

    def __post_init__(self):
        object.__setattr__(self, "M", _as_skew(self.M))


@dataclass(frozen=True)
class IrreversiblePort:
    g: np.ndarray
    gamma_port: Callable[[np.ndarray, np.ndarray], float]
    tau: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.atleast_2d(np.array(self.g, dtype=float)))
        object.__setattr__(self, "tau", np.array(self.tau, dtype=float).ravel())


@dataclass(frozen=True)
class ReversiblePort:
    g_S: np.ndarray
    tau: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.atleast_2d(np.array(self.g_S, dtype=float))
        tau = np.zeros(g.shape[1]) if self.tau is None else np.array(self.tau, dtype=float).ravel()
        object.__setattr__(self, "g_S", g)
        object.__setattr__(self, "tau", tau)


def _always(x) -> bool:
    return True


@dataclass(frozen=True)
class IphsSystem:
    n: int
    m: int
    H: ScalarField
    S: ScalarField
    S_is_linear: bool = True
    dissipation: Sequence[DissipationTerm] = ()
    reversible_internal: Sequence[ReversibleInternalTerm] = ()
    irreversible_ports: Sequence[IrreversiblePort] = ()
    reversible_ports: Sequence[ReversiblePort] = ()
    domain_guard: Callable[[np.ndarray], bool] = _always
    observables: Mapping[str, Callable[[np.ndarray], float]] = field(default_factory=dict)
    name: str = "iphs"
    state_names: Sequence[str] = ()

    def __post_init__(self):
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(f"x{i + 1}" for i in range(self.n)))
        if len(self.state_names) != self.n:
            raise ValueError(f"expected {self.n} state names, got {len(self.state_names)}")
        for attr in ("dissipation", "reversible_internal", "irreversible_ports", "reversible_ports"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        n, m = self.n, self.m
        if self.H.dimension != n or self.S.dimension != n:
            raise ValueError("H and S must be fields on the state space")
        for term in self.dissipation:
            if term.J.dimension != n:
                raise ValueError(f"dissipation matrix has dimension {term.J.dimension}, expected {n}")
        for term in self.reversible_internal:
            if term.M.dimension != n:
                raise ValueError(f"internal matrix has dimension {term.M.dimension}, expected {n}")
        for port in self.irreversible_ports:
            if port.g.shape != (n, m) or port.tau.shape != (m,):
                raise ValueError(f"irreversible port shapes {port.g.shape}/{port.tau.shape}, expected ({n}, {m})/({m},)")
        for port in self.reversible_ports:
            if port.g_S.shape != (n, m) or port.tau.shape != (m,):
                raise ValueError(f"reversible port shapes {port.g_S.shape}/{port.tau.shape}, expected ({n}, {m})/({m},)")

    @cached_property
    def M_total(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for term in self.reversible_internal:
            out = out + term.M.entries
        return out

    @cached_property
    def gS_total(self) -> np.ndarray:
        out = np.zeros((self.n, self.m))
        for port in self.reversible_ports:
            out = out + port.g_S
        return out

    @cached_property
    def reversible_tau_map(self) -> np.ndarray:
        """``sum_b gS_b tau_b^T``; entropy flow through reversible ports is ``dH^T`` of this."""
        out = np.zeros(self.n)
        for port in self.reversible_ports:
            out = out + port.g_S @ port.tau
        return out

    def check_domain(self, x) -> None:
        if not self.domain_guard(x):
            raise DomainError(f"state {np.asarray(x)} outside the admissible domain of {self.name}")

    def without_ports(self) -> "IphsSystem":
        """Same internal structure, no ports; inputs become irrelevant."""
        return IphsSystem(
            self.n, self.m, self.H, self.S, self.S_is_linear,
            self.dissipation, self.reversible_internal, (), (),
            self.domain_guard, self.observables, self.name + "_closed", self.state_names,
        )


def discrete_bracket(gS, J, gH) -> float:
    """``gS^T J gH`` for precomputed (discrete) gradients of ``S`` and ``H``."""
    Jm = J.entries if isinstance(J, SkewMatrix) else np.asarray(J, dtype=float)
    gS = np.asarray(gS, dtype=float)
    gH = np.asarray(gH, dtype=float)
    if Jm.shape != (len(gS), len(gH)):
        raise ValueError(f"bracket dimension mismatch: {Jm.shape} vs {len(gS)}, {len(gH)}")
    return float(gS @ (Jm @ gH))


def discrete_port_bracket(g, gS, gH, u, tau) -> float:
    """``(g^T gS)^T u - tau^T (g^T gH)``."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    gS = np.asarray(gS, dtype=float)
    gH = np.asarray(gH, dtype=float)
    u = np.asarray(u, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if g.shape != (len(gS), len(u)) or len(gH) != len(gS) or len(tau) != len(u):
        raise ValueError(
            f"port bracket dimension mismatch: g {g.shape}, gS {gS.shape}, gH {gH.shape}, "
            f"u {u.shape}, tau {tau.shape}"
        )
    return float((g.T @ gS) @ u - tau @ (g.T @ gH))


@dataclass
class FlowTerms:
    """Right-hand side, output and entropy bookkeeping for a given gradient pair."""

    dx: np.ndarray
    y: np.ndarray
    entropy_flow: float
    entropy_source: float
    brackets: list
    port_brackets: list


def flow_terms(sys: IphsSystem, gS, gH, x_gamma, u) -> FlowTerms:
    """Assemble the IPHS vector field from gradients ``gS``, ``gH``.

    The dissipation coefficients are evaluated at ``x_gamma``. With exact
    gradients this is the continuous vector field; with discrete gradients
    and ``x_gamma`` the midpoint it is the discrete-gradient scheme.

    ``entropy_flow`` is ``sum_j tau_j^T y_j`` over the per-port output
    contributions ``y_j``; ``entropy_source`` is the sum of squared brackets
    weighted by the positive coefficients.
    """
    dx = sys.M_total.dot(gH)
    if sys.reversible_ports:
        dx += sys.gS_total @ u
        y = sys.gS_total.T @ gH
        entropy_flow = float(sys.reversible_tau_map @ gH)
    else:
        y = np.zeros(sys.m)
        entropy_flow = 0.0
    source = 0.0
    brackets = []
    for term in sys.dissipation:
        JgH = term.J.entries @ gH
        b = float(gS @ JgH)
        gamma = term.gamma(x_gamma)
        dx += (gamma * b) * JgH
        source += gamma * b * b
        brackets.append(b)
    port_brackets = []
    for port in sys.irreversible_ports:
        gTgH = port.g.T @ gH
        b = float((port.g.T @ gS) @ u - port.tau @ gTgH)
        gamma = port.gamma_port(x_gamma, u)
        dx += (gamma * b) * (port.g @ u)
        yj = (gamma * b) * gTgH
        y += yj
        entropy_flow += float(port.tau @ yj)
        source += gamma * b * b
        port_brackets.append(b)
    return FlowTerms(dx, y, entropy_flow, source, brackets, port_brackets)


def continuous_rhs(sys: IphsSystem, x, u):
    """Return ``(dx/dt, y)`` of the continuous system at state ``x``, input ``u``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (sys.n,) or u.shape != (sys.m,):
        raise ValueError(f"expected x of shape ({sys.n},) and u of shape ({sys.m},)")
    sys.check_domain(x)
    gS = np.asarray(sys.S.gradient(x), float)
    gH = np.asarray(sys.H.gradient(x), float)
    terms = flow_terms(sys, gS, gH, x, u)
    return terms.dx, terms.y


@dataclass
class ValidationReport:
    """Itemized structural checks; ``worst`` holds the largest violation per check."""

    checks: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def record(self, name: str, ok: bool, worst: float, detail: str = ""):
        self.checks[name] = self.checks.get(name, True) and bool(ok)
        self.worst[name] = max(self.worst.get(name, 0.0), float(worst))
        if detail and not ok:
            self.details.setdefault(name, detail)

    def summary(self) -> str:
        lines = []
        for name, ok in self.checks.items():
            lines.append(f"{'PASS' if ok else 'FAIL'} {name} (worst {self.worst[name]:.3e})")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {k: {"ok": v, "worst": self.worst[k], "detail": self.details.get(k, "")}
                       for k, v in self.checks.items()},
        }


def validate_structure(
    sys: IphsSystem,
    samples,
    inputs=None,
    tol: float = 1e-12,
) -> ValidationReport:
    """Check skew-symmetry, the Casimir and reversible-port conditions and the
    positivity of every dissipation coefficient at the sample states.

    ``inputs`` are the input vectors used for the port coefficients (default:
    a vector of ones). Nothing is raised; failures are reported.
    """
    report = ValidationReport()
    samples = [np.asarray(s, dtype=float) for s in samples]
    inputs = [np.ones(sys.m)] if inputs is None else [np.asarray(u, dtype=float) for u in inputs]

    for i, term in enumerate(sys.dissipation):
        d = term.J.skew_defect
        report.record("skew_symmetry", d <= SKEW_TOL, d, f"dissipation matrix {i}")
    for a, term in enumerate(sys.reversible_internal):
        d = term.M.skew_defect
        report.record("skew_symmetry", d <= SKEW_TOL, d, f"internal matrix {a}")
    if "skew_symmetry" not in report.checks:
        report.record("skew_symmetry", True, 0.0)

    grads = [np.asarray(sys.S.gradient(x), float) for x in samples]
    report.record("casimir", True, 0.0)
    report.record("reversible_ports", True, 0.0)
    report.record("positivity", True, 0.0)
    for x, dS in zip(samples, grads):
        scale = 1.0 + np.linalg.norm(dS)
        for a, term in enumerate(sys.reversible_internal):
            v = float(np.max(np.abs(dS @ term.M.entries)))
            report.record("casimir", v <= tol * scale, v, f"dS^T M_{a} != 0 at {x}")
        for b, port in enumerate(sys.reversible_ports):
            v = max(float(np.max(np.abs(dS @ port.g_S))), float(np.max(np.abs(port.tau), initial=0.0)))
            report.record("reversible_ports", v <= tol * scale, v, f"reversible port {b} exchanges entropy")
        for i, term in enumerate(sys.dissipation):
            gam = term.gamma(x)
            report.record("positivity", gam > 0, max(0.0, -gam), f"gamma_{i}({x}) = {gam}")
        for j, port in enumerate(sys.irreversible_ports):
            for u in inputs:
                gam = port.gamma_port(x, u)
                report.record("positivity", gam > 0, max(0.0, -gam), f"gamma_port_{j}({x}, {u}) = {gam}")

    if sys.S_is_linear and len(grads) > 1:
        drift = max(float(np.max(np.abs(g - grads[0]))) for g in grads)
        report.record("linear_entropy", drift <= tol * (1.0 + np.linalg.norm(grads[0])), drift,
                      "gradient of S varies although S is declared linear")
    return report
