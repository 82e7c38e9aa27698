"""Belief-adaptive first-order optimizers with a deterministic benchmark.

The package implements three optimizers behind one step contract -- a
belief-adaptive method whose denominator tracks the squared deviation of
each gradient from its own moving-average prediction, Adam, and heavy-ball
SGD -- together with analytic 2-D test problems, a fully recorded run
executor, mechanistic diagnostics (curvature-case table, EMA separation,
sign-descent angle), and empirical probes of the sublinear-regret and
noisy-gradient convergence trends.  A small CLI (``beliefbench``) exposes
runs, benchmark grids, and probes as stable CSV/JSON artifacts.
"""

from .core import (
    DimensionMismatch,
    InvalidBox,
    InvalidConfig,
    NonConvexStream,
    NonFiniteResult,
    OptimizerConfig,
    RngStream,
    UnknownProblem,
    gaussian_noise,
)
from .diagnostics import (
    ConvergenceProbe,
    EmaStats,
    RegretLedger,
    SignDescentReport,
    alternating_abs_stream,
    alternating_drive,
    constant_drive,
    ema_steady_state,
    finite_diff_grad,
    fixed_quadratic_stream,
    nonconvex_probe,
    offline_box_minimizer,
    regret_probe,
    sign_descent_angle,
    table1_case_check,
    table1_report,
    zero_stream,
)
from .optim import (
    OPTIMIZER_KINDS,
    OptimizerState,
    StepResult,
    adabelief_step,
    adam_step,
    corrected_moments,
    make_optimizer,
    sgd_step,
    step,
)
from .problems import (
    BUILTIN_PROBLEMS,
    LossStream,
    Problem,
    builtin_problem,
    project_box,
    sample_gradient,
)
from .runner import (
    BENCH_STARTS,
    RunSpec,
    TrajectoryRecord,
    bench_config,
    bench_spec,
    first_hit_step,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "DimensionMismatch",
    "NonFiniteResult",
    "InvalidConfig",
    "InvalidBox",
    "UnknownProblem",
    "NonConvexStream",
    # core
    "OptimizerConfig",
    "RngStream",
    "gaussian_noise",
    # optimizers
    "OPTIMIZER_KINDS",
    "OptimizerState",
    "StepResult",
    "make_optimizer",
    "adabelief_step",
    "adam_step",
    "sgd_step",
    "step",
    "corrected_moments",
    # problems
    "BUILTIN_PROBLEMS",
    "Problem",
    "LossStream",
    "builtin_problem",
    "project_box",
    "sample_gradient",
    # runner
    "RunSpec",
    "TrajectoryRecord",
    "run",
    "first_hit_step",
    "BENCH_STARTS",
    "bench_config",
    "bench_spec",
    # diagnostics
    "EmaStats",
    "constant_drive",
    "alternating_drive",
    "ema_steady_state",
    "table1_case_check",
    "table1_report",
    "SignDescentReport",
    "sign_descent_angle",
    "RegretLedger",
    "regret_probe",
    "offline_box_minimizer",
    "fixed_quadratic_stream",
    "alternating_abs_stream",
    "zero_stream",
    "ConvergenceProbe",
    "nonconvex_probe",
    "finite_diff_grad",
]
