"""Discrete-gradient integrators for irreversible port-Hamiltonian systems."""
from .core import (
    DissipationTerm,
    DomainError,
    IphsSystem,
    IrreversiblePort,
    ReversibleInternalTerm,
    ReversiblePort,
    SkewMatrix,
    continuous_rhs,
    discrete_bracket,
    discrete_port_bracket,
    validate_structure,
)
from .discrete_gradient import (
    DiscreteGradientMethod,
    ScalarField,
    chain_rule_residual,
    coordinate_increment_gradient,
    mean_value_gradient,
    midpoint_gradient,
    numeric_gradient,
)
from .gas_piston import GasPistonParams, build_gas_piston, closed_gas_piston
from .integrator import (
    ControlSchedule,
    StepResult,
    Trajectory,
    balance_diagnostics,
    integrate_trajectory,
    rk4_reference_step,
    step_iphs,
    step_skew_gradient,
)
from .solver import SolveOutcome, SolverConfig, SolverError, solve_fixed_point, solve_newton_fd

__version__ = "0.1.0"
