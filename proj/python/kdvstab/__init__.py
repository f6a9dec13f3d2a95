"""Gramian-based boundary feedback for the KdV equation on (0, L).

The heavy lifting lives in the C++ extension; this package re-exports the
main operations: discretization, Gramian assembly (quadrature and Sylvester
routes), closed-loop simulation (static trajectory-sense and dynamic
feedback), finite-time staging, and critical-length diagnostics.
"""

from ._kdvstab import (  # noqa: F401
    ConfigError,
    CriticalEntry,
    CriticalSet,
    Generator,
    Gramian,
    Grid,
    LoopOptions,
    NumericalError,
    PropagatorConfig,
    RunReport,
    Schedule,
    ScheduleFamily,
    TraceSeries,
    Trajectory,
    admissibility_constant,
    assemble_quadrature,
    assemble_sylvester,
    build_generator,
    build_grid,
    build_schedule,
    decay_report,
    default_dt,
    enumerate_critical_lengths,
    interpolation_bound_check,
    invert,
    is_critical,
    lyapunov_residual,
    nonlinear_cross,
    nonlinear_self,
    propagate,
    simulate_dynamic,
    simulate_linear,
    simulate_static,
    step_linear,
    uncontrollable_mode_probe,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
