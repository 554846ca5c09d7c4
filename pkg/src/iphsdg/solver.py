"""Nonlinear solvers for the implicit step equation ``z = x + h * Phi(x, z)``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg.lapack import dgetrf as _getrf, dgetrs as _getrs

NEWTON_FD = "newton_fd"
FIXED_POINT = "fixed_point"
MAX_HALVINGS = 20
PIVOT_FLOOR = 1e-14
# residuals already this far below the tolerance are not polished
POLISH_BELOW = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    method: str = NEWTON_FD
    tolerance: float = 1e-12
    max_iterations: int = 50
    fd_step: float = 1e-7

    def __post_init__(self):
        if self.method not in (NEWTON_FD, FIXED_POINT):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class SolveOutcome:
    root: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    message: str = ""


class SolverError(RuntimeError):
    """Raised by steppers when the implicit solve does not converge."""

    def __init__(self, outcome: SolveOutcome):
        super().__init__(
            f"nonlinear solve failed after {outcome.iterations} iterations "
            f"(residual {outcome.residual_norm:.3e}): {outcome.message}"
        )
        self.outcome = outcome


def _safe_eval(fun, z):
    try:
        r = np.asarray(fun(z), dtype=float)
    except (ValueError, ArithmeticError):
        return None
    if not np.isfinite(r).all():
        return None
    return r


def _threshold(cfg: SolverConfig, z) -> float:
    return cfg.tolerance * (1.0 + _norm(z))


def _norm(v) -> float:
    return math.sqrt(float(v.dot(v)))


def _fd_factor(residual, z, r, fd_step):
    """LU factors of the forward-difference Jacobian at ``z``, or an error message."""
    n = len(z)
    jac = np.empty((len(r), n))
    # power-of-two increments; divide by the increment actually represented
    steps = np.exp2(np.round(np.log2(fd_step * (1.0 + np.abs(z)))))
    zp = z.copy()
    for j in range(n):
        zp[j] = z[j] + steps[j]
        dz = zp[j] - z[j]
        rp = _safe_eval(residual, zp)
        if rp is None:
            # step backwards if the forward point leaves the domain
            zp[j] = z[j] - steps[j]
            dz = zp[j] - z[j]
            rp = _safe_eval(residual, zp)
            if rp is None:
                return None, "residual not finite in Jacobian"
        jac[:, j] = (rp - r) / dz
        zp[j] = z[j]
    scale = max(float(np.abs(jac).max()), 1.0)
    # raw LAPACK: the wrappers' checks and warnings dominate at this size
    lu, piv, info = _getrf(jac)
    if info < 0 or float(np.abs(lu.diagonal()).min()) < PIVOT_FLOOR * scale:
        return None, "singular Jacobian"
    return (lu, piv), ""


def _polish(residual, z, r, norm, factors, admissible):
    trial = z - _getrs(*factors, r)[0]
    if admissible is None or admissible(trial):
        rt = _safe_eval(residual, trial)
        if rt is not None:
            nt = _norm(rt)
            if nt < norm:
                return trial, nt
    return z, norm


def solve_newton_fd(
    residual: Callable[[np.ndarray], np.ndarray],
    guess,
    cfg: SolverConfig = SolverConfig(),
    admissible: Optional[Callable[[np.ndarray], bool]] = None,
) -> SolveOutcome:
    """Damped Newton iteration with a forward-difference Jacobian.

    Each Newton direction is scaled by successive halvings (at most 20) until
    the residual norm decreases and the trial point is ``admissible``. A
    residual evaluation that raises or returns non-finite values counts as a
    rejected trial point.

    Once the residual test passes, one more step with the last factorization
    is taken if it lowers the residual (it is not counted as an iteration),
    unless the residual is already far below the tolerance.
    This costs a single residual evaluation and keeps the returned root close
    to round-off even when the last full step only just met the tolerance.
    """
    z = np.array(guess, dtype=float)
    r = _safe_eval(residual, z)
    if r is None:
        return SolveOutcome(z, np.inf, 0, False, "residual not finite at initial guess")
    norm = _norm(r)
    factors = None
    for it in range(1, int(cfg.max_iterations) + 1):
        if norm <= _threshold(cfg, z):
            if factors is not None and norm > POLISH_BELOW * _threshold(cfg, z):
                z, norm = _polish(residual, z, r, norm, factors, admissible)
            return SolveOutcome(z, norm, it - 1, True)
        factors, message = _fd_factor(residual, z, r, cfg.fd_step)
        if factors is None:
            return SolveOutcome(z, norm, it, False, message)
        direction = -_getrs(*factors, r)[0]

        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = z + alpha * direction
            if admissible is None or admissible(trial):
                rt = _safe_eval(residual, trial)
                if rt is not None:
                    nt = _norm(rt)
                    if nt < norm or nt <= _threshold(cfg, trial):
                        break
            alpha *= 0.5
        else:
            return SolveOutcome(z, norm, it, False, "line search failed")
        z, r, norm = trial, rt, nt
    converged = norm <= _threshold(cfg, z)
    return SolveOutcome(
        z, norm, int(cfg.max_iterations), converged, "" if converged else "max iterations"
    )


def solve_fixed_point(
    mapping: Callable[[np.ndarray], np.ndarray],
    guess,
    cfg: SolverConfig = SolverConfig(),
) -> SolveOutcome:
    """Plain iteration ``z <- mapping(z)`` until ``|mapping(z) - z|`` is small."""
    z = np.array(guess, dtype=float)
    updates = 0
    while True:
        nxt = _safe_eval(mapping, z)
        if nxt is None:
            return SolveOutcome(z, np.inf, updates, False, "map not finite")
        norm = _norm(nxt - z)
        if norm <= _threshold(cfg, z):
            return SolveOutcome(nxt, norm, updates, True)
        if updates >= int(cfg.max_iterations):
            return SolveOutcome(z, norm, updates, False, "max iterations")
        z = nxt
        updates += 1


def solve_step(
    rhs: Callable[[np.ndarray], np.ndarray],
    x,
    h: float,
    cfg: SolverConfig = SolverConfig(),
    admissible: Optional[Callable[[np.ndarray], bool]] = None,
    guess=None,
) -> SolveOutcome:
    """Solve ``z = x + h * rhs(z)`` with the configured method, starting at
    ``guess`` (default ``x``).
    """
    x = np.asarray(x, dtype=float)
    start = x if guess is None else np.asarray(guess, dtype=float)
    if cfg.method == NEWTON_FD:
        return solve_newton_fd(lambda z: z - x - h * rhs(z), start, cfg, admissible)
    return solve_fixed_point(lambda z: x + h * rhs(z), start, cfg)
