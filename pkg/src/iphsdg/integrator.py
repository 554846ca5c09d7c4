"""Discrete-gradient time stepping for skew-gradient systems and IPHS."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import DomainError, IphsSystem, SkewMatrix, continuous_rhs, flow_terms
from .discrete_gradient import DiscreteGradientMethod, ScalarField
from .solver import SolveOutcome, SolverConfig, SolverError, solve_step

BALANCE_FACTOR = 100.0


@dataclass
class StepResult:
    x_next: np.ndarray
    y: np.ndarray
    solver: SolveOutcome
    energy_residual: float
    entropy_production: float
    # h * (sum of weighted squared discrete brackets), computed from the brackets
    entropy_source: float = 0.0
    entropy_flow: float = 0.0


def _as_matrix(J):
    return J.entries if isinstance(J, SkewMatrix) else np.asarray(J, dtype=float)


def step_skew_gradient(
    J,
    H: ScalarField,
    method: DiscreteGradientMethod,
    x,
    h: float,
    solver: SolverConfig = SolverConfig(),
) -> StepResult:
    """One step of ``(x' - x) / h = J dg(x, x')`` for constant skew ``J``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    Jm = _as_matrix(J)
    x = np.asarray(x, dtype=float)
    outcome = solve_step(lambda z: Jm @ method(H, x, z), x, h, solver)
    if not outcome.converged:
        raise SolverError(outcome)
    z = outcome.root
    return StepResult(z, np.zeros(0), outcome, H.value(z) - H.value(x), 0.0)


def discrete_flow(sys: IphsSystem, method: DiscreteGradientMethod, x, z, u, gS=None):
    """Discrete-gradient right-hand side between ``x`` and the candidate ``z``.

    ``gS`` may be passed in when ``S`` is linear, since it is then constant.
    """
    gH = method(sys.H, x, z)
    if gS is None:
        gS = np.asarray(sys.S.gradient(x), float) if sys.S_is_linear else method(sys.S, x, z)
    mid = 0.5 * (x + z) if sys.dissipation or sys.irreversible_ports else None
    return flow_terms(sys, gS, gH, mid, u)


def step_iphs(
    sys: IphsSystem,
    method: DiscreteGradientMethod,
    x,
    u,
    h: float,
    solver: SolverConfig = SolverConfig(),
    guess=None,
) -> StepResult:
    """One step of the discrete-gradient IPHS scheme with input ``u`` held fixed.

    Dissipation coefficients are evaluated at the midpoint ``(x + x') / 2``;
    all brackets and the output use the discrete gradients at ``(x, x')``.

    The solver starts at ``guess`` (default ``x``); if that fails it restarts
    at ``x``, then at an explicit Euler predictor.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (sys.n,) or u.shape != (sys.m,):
        raise ValueError(f"expected x of shape ({sys.n},) and u of shape ({sys.m},)")
    sys.check_domain(x)

    gS = np.asarray(sys.S.gradient(x), float) if sys.S_is_linear else None

    def rhs(z):
        if not sys.domain_guard(z):
            raise DomainError("iterate outside the domain")
        return discrete_flow(sys, method, x, z, u, gS).dx

    def admissible(z):
        return sys.domain_guard(z) and sys.domain_guard(0.5 * (x + z))

    if guess is not None and not admissible(np.asarray(guess, dtype=float)):
        guess = None
    outcome = solve_step(rhs, x, h, solver, admissible, guess)
    if not outcome.converged and guess is not None:
        outcome = solve_step(rhs, x, h, solver, admissible)
    if not outcome.converged:
        # fast transients can defeat the start at x
        predictor = x + h * continuous_rhs(sys, x, u)[0]
        if admissible(predictor):
            retry = solve_step(rhs, x, h, solver, admissible, predictor)
            if retry.converged:
                outcome = retry
    if not outcome.converged:
        raise SolverError(outcome)
    z = outcome.root
    sys.check_domain(z)
    terms = discrete_flow(sys, method, x, z, u, gS)
    energy = sys.H.value(z) - sys.H.value(x) - h * float(terms.y @ u)
    entropy = sys.S.value(z) - sys.S.value(x) - h * terms.entropy_flow
    return StepResult(z, terms.y, outcome, energy, entropy, h * terms.entropy_source, terms.entropy_flow)


def rk4_reference_step(sys: IphsSystem, x, u, h: float) -> np.ndarray:
    """Classical Runge-Kutta step of the continuous system with ``u`` frozen."""
    x = np.asarray(x, dtype=float)
    if h == 0:
        return x.copy()
    k1 = continuous_rhs(sys, x, u)[0]
    k2 = continuous_rhs(sys, x + 0.5 * h * k1, u)[0]
    k3 = continuous_rhs(sys, x + 0.5 * h * k2, u)[0]
    k4 = continuous_rhs(sys, x + h * k3, u)[0]
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_trajectory(sys: IphsSystem, x0, schedule, h: float, steps: int) -> np.ndarray:
    """States ``(steps + 1, n)`` of repeated :func:`rk4_reference_step`."""
    out = np.empty((steps + 1, sys.n))
    out[0] = x0
    for k in range(steps):
        out[k + 1] = rk4_reference_step(sys, out[k], _input(schedule, k, k * h, sys.m), h)
    return out


class ControlSchedule:
    """Piecewise-constant input ``u(t)``; the value at the start of a step is
    held over the whole step.

    Either a constant vector or a table of ``(t_i, u_i)`` rows, where ``u_i``
    applies from ``t_i`` until the next row.
    """

    def __init__(self, constant=None, table=None):
        if (constant is None) == (table is None):
            raise ValueError("give exactly one of a constant input or a table")
        self.constant = None if constant is None else tuple(float(v) for v in np.ravel(constant))
        self.table = None
        if constant is not None:
            self.times = np.array([-np.inf])
            self.values = np.atleast_2d(np.asarray(constant, dtype=float))
        else:
            rows = [(float(t), np.asarray(v, dtype=float)) for t, v in table]
            if not rows:
                raise ValueError("empty control table")
            times = np.array([t for t, _ in rows])
            if np.any(np.diff(times) <= 0):
                raise ValueError("control table times must be strictly increasing")
            self.table = [(t, tuple(float(c) for c in v)) for t, v in rows]
            self.times = times
            self.values = np.array([v for _, v in rows])
            self.times[0] = -np.inf

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def __call__(self, k: int, t: float) -> np.ndarray:
        # small slack so that t = k*h rounding does not skip a switch time
        i = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.values[max(i, 0)].copy()


def _input(schedule, k, t, m):
    u = np.asarray(schedule(k, t), dtype=float)
    if u.shape != (m,):
        raise ValueError(f"control schedule returned shape {u.shape}, expected ({m},)")
    return u


@dataclass
class Trajectory:
    """Record of a run.

    Every per-step array has ``steps + 1`` entries: entry ``k + 1`` describes
    the step from state ``k`` to state ``k + 1`` and entry 0 is NaN.
    """

    h: float
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    energy_residual: np.ndarray
    entropy_production: np.ndarray
    entropy_source: np.ndarray
    entropy_flow: np.ndarray
    iterations: np.ndarray
    residual_norm: np.ndarray
    observables: dict = field(default_factory=dict)
    tolerance: float = SolverConfig().tolerance
    failure: Optional[str] = None
    state_names: tuple = ()

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def completed(self) -> bool:
        return self.failure is None


def integrate_trajectory(
    sys: IphsSystem,
    method: DiscreteGradientMethod,
    x0,
    schedule: Callable[[int, float], np.ndarray],
    h: float,
    steps: int,
    solver: SolverConfig = SolverConfig(),
) -> Trajectory:
    """Apply :func:`step_iphs` ``steps`` times with ``u_k = schedule(k, k h)``.

    A solver failure or domain violation stops the run; the states computed so
    far are returned and ``failure`` carries the reason.
    """
    if int(steps) < 1:
        raise ValueError("steps must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    sys.check_domain(x0)
    steps = int(steps)
    n, m = sys.n, sys.m
    states = np.full((steps + 1, n), np.nan)
    inputs = np.full((steps + 1, m), np.nan)
    outputs = np.full((steps + 1, m), np.nan)
    per_step = {k: np.full(steps + 1, np.nan) for k in
                ("energy_residual", "entropy_production", "entropy_source", "entropy_flow",
                 "iterations", "residual_norm")}
    states[0] = x0
    failure = None
    done = 0
    x = x0
    for k in range(steps):
        u = _input(schedule, k, k * h, m)
        # start from the quadratic extrapolation of the last three states
        if k >= 2:
            guess = 3.0 * (x - states[k - 1]) + states[k - 2]
        elif k == 1:
            guess = 2.0 * x - states[0]
        else:
            guess = None
        try:
            res = step_iphs(sys, method, x, u, h, solver, guess)
        except (SolverError, DomainError) as exc:
            failure = f"step {k}: {exc}"
            break
        x = res.x_next
        states[k + 1] = x
        inputs[k + 1] = u
        outputs[k + 1] = res.y
        per_step["energy_residual"][k + 1] = res.energy_residual
        per_step["entropy_production"][k + 1] = res.entropy_production
        per_step["entropy_source"][k + 1] = res.entropy_source
        per_step["entropy_flow"][k + 1] = res.entropy_flow
        per_step["iterations"][k + 1] = res.solver.iterations
        per_step["residual_norm"][k + 1] = res.solver.residual_norm
        done = k + 1

    keep = slice(0, done + 1)
    states = states[keep]
    obs = {
        "H": np.array([sys.H.value(s) for s in states]),
        "S": np.array([sys.S.value(s) for s in states]),
    }
    for name, fun in sys.observables.items():
        obs[name] = np.array([fun(s) for s in states])
    return Trajectory(
        h=h,
        times=h * np.arange(done + 1),
        states=states,
        inputs=inputs[keep],
        outputs=outputs[keep],
        observables=obs,
        tolerance=solver.tolerance,
        failure=failure,
        state_names=tuple(sys.state_names),
        **{k: v[keep] for k, v in per_step.items()},
    )


@dataclass
class BalanceReport:
    steps: int
    max_abs_energy_residual: float
    max_rel_energy_residual: float
    min_entropy_production: float
    min_rel_entropy_production: float
    max_entropy_mismatch: float
    cumulative_energy_balance: float
    cumulative_entropy_production: float
    energy_threshold: float
    entropy_threshold: float
    error: Optional[str] = None

    @property
    def energy_ok(self) -> bool:
        return self.error is None and self.max_rel_energy_residual <= self.energy_threshold

    @property
    def entropy_ok(self) -> bool:
        return self.error is None and self.min_rel_entropy_production >= -self.entropy_threshold

    @property
    def passed(self) -> bool:
        return self.energy_ok and self.entropy_ok

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out.update(energy_ok=self.energy_ok, entropy_ok=self.entropy_ok, passed=self.passed)
        return out


def balance_diagnostics(
    traj: Trajectory,
    energy_threshold: Optional[float] = None,
    entropy_threshold: Optional[float] = None,
) -> BalanceReport:
    """Summarize the discrete energy and entropy balances of a run.

    Relative quantities are scaled by ``1 + |H(x_k)|`` and ``1 + |S(x_k)|``.
    Thresholds default to ``100 * solver tolerance``. Values come from the
    recorded H and S evaluations, not from solver residuals.
    """
    thr_e = BALANCE_FACTOR * traj.tolerance if energy_threshold is None else energy_threshold
    thr_s = BALANCE_FACTOR * traj.tolerance if entropy_threshold is None else entropy_threshold
    if traj.steps < 1:
        nan = float("nan")
        return BalanceReport(0, nan, nan, nan, nan, nan, nan, nan, thr_e, thr_s,
                             error="trajectory has no steps")
    H = traj.observables["H"]
    S = traj.observables["S"]
    e = traj.energy_residual[1:]
    s = traj.entropy_production[1:]
    supplied = traj.h * np.einsum("ij,ij->i", traj.outputs[1:], traj.inputs[1:])
    cum_energy = float(H[-1] - H[0] - supplied.sum())
    return BalanceReport(
        steps=traj.steps,
        max_abs_energy_residual=float(np.max(np.abs(e))),
        max_rel_energy_residual=float(np.max(np.abs(e) / (1.0 + np.abs(H[:-1])))),
        min_entropy_production=float(np.min(s)),
        min_rel_entropy_production=float(np.min(s / (1.0 + np.abs(S[:-1])))),
        max_entropy_mismatch=float(np.max(np.abs(s - traj.entropy_source[1:]))),
        cumulative_energy_balance=cum_energy,
        cumulative_entropy_production=float(np.sum(s)),
        energy_threshold=thr_e,
        entropy_threshold=thr_s,
        error=traj.failure,
    )
