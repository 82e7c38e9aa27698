"""Single-run executor: optimizer x problem for T steps, fully recorded.

``run`` is a pure function of its spec: same spec, same seed, bit-identical
trajectory.  Each iteration samples a (possibly noisy) gradient at the
current iterate, applies one optimizer step, optionally projects onto the
problem's feasible box, and records the new iterate, its objective value,
the consumed gradient norm, and the applied displacement.

Divergence policy: the first non-finite gradient, update, or iterate aborts
the run at the offending step.  The trajectory is truncated there and
tagged, never clamped; instability in a benchmark is signal, not noise to
hide.

The module also pins the benchmark protocol used by the comparison grid:
one start point per built-in problem plus the low-momentum hyperparameter
variant for ``l1_skew`` (all smoothing constants 0.3, the regime where the
squared-mean term dominates gradient variance and a sign-like update is
visibly distinguishable from a gradient-like one).  These constants are
fixed so that checked-in outputs stay stable; change them and every golden
file changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .core import InvalidConfig, NonFiniteResult, OptimizerConfig, RngStream, as_vector
from .optim import make_optimizer, step
from .problems import (
    LossStream,
    Problem,
    builtin_problem,
    project_box,
    sample_gradient,
    validate_box,
)

__all__ = [
    "RunSpec",
    "TrajectoryRecord",
    "run",
    "first_hit_step",
    "BENCH_STARTS",
    "bench_config",
    "bench_spec",
]

# Start points for the comparison grid, one per built-in problem.  The L1
# and L2 "inseparable" objectives start on their shallow valley line
# (x + y = 0), mirroring the near-axis start of the separable one.
BENCH_STARTS = {
    "l1_separable": (-10.0, 0.1),
    "l1_inseparable": (-5.0, 5.0),
    "l2_inseparable": (-2.0, 2.0),
    "l1_skew": (-10.0, 0.1),
    "beale": (-4.0, -4.0),
    "rosenbrock": (-2.0, 5.0),
}

# l1_skew runs the low-smoothing variant; everything else uses defaults.
_SKEW_OVERRIDES = dict(beta1=0.3, beta2=0.3, momentum=0.3)


def bench_config(problem_name: str, base: OptimizerConfig | None = None) -> OptimizerConfig:
    """Benchmark-protocol hyperparameters for one problem."""
    cfg = base if base is not None else OptimizerConfig()
    if problem_name == "l1_skew":
        cfg = replace(cfg, **_SKEW_OVERRIDES)
    return cfg


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one trajectory.

    ``problem`` is a built-in name or a Problem instance.  ``sigma > 0``
    adds Gaussian gradient noise seeded by ``seed``.  ``project=True``
    clips each iterate into the problem's feasible box (which must then be
    present).
    """

    problem: Union[str, Problem]
    optimizer: str
    start: tuple
    steps: int
    config: OptimizerConfig = OptimizerConfig()
    seed: int = 0
    sigma: float = 0.0
    project: bool = False
    convergence_radius: float = 1e-2

    def resolve_problem(self) -> Problem:
        if isinstance(self.problem, str):
            return builtin_problem(self.problem)
        return self.problem

    def validate(self) -> Problem:
        prob = self.resolve_problem()
        if self.steps < 1:
            raise InvalidConfig(f"steps must be >= 1, got {self.steps}")
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise InvalidConfig(f"sigma must be >= 0, got {self.sigma}")
        if self.convergence_radius <= 0:
            raise InvalidConfig("convergence_radius must be > 0")
        as_vector(self.start, dim=prob.dim)
        if self.project and prob.feasible_box is None:
            raise InvalidConfig("project=True requires a problem with a feasible box")
        return prob


@dataclass
class TrajectoryRecord:
    """Per-step log of one run.

    Row t (1-based) holds the iterate after step t, its objective value,
    the norm of the gradient consumed by step t, and the displacement
    applied by step t (pre-projection).  A diverged run has fewer than
    ``steps_requested`` rows and ``diverged_at`` names the aborted step.
    """

    problem_name: str
    optimizer: str
    thetas: np.ndarray        # (n, d)
    values: np.ndarray        # (n,)
    grad_norms: np.ndarray    # (n,)
    updates: np.ndarray       # (n, d)
    steps_requested: int
    first_hit: Optional[int] = None
    diverged: bool = False
    diverged_at: Optional[int] = None

    @property
    def steps_completed(self) -> int:
        return self.thetas.shape[0]

    def final_theta(self) -> np.ndarray:
        return self.thetas[-1]


def bench_spec(problem_name: str, optimizer: str, steps: int = 50_000,
               seed: int = 0, convergence_radius: float = 1e-2) -> RunSpec:
    """RunSpec following the pinned benchmark protocol."""
    return RunSpec(
        problem=problem_name,
        optimizer=optimizer,
        start=BENCH_STARTS[problem_name],
        steps=steps,
        config=bench_config(problem_name),
        seed=seed,
        convergence_radius=convergence_radius,
    )


def run(spec: RunSpec) -> TrajectoryRecord:
    """Execute one run; deterministic given the spec (including its seed)."""
    prob = spec.validate()
    d = prob.dim
    theta = as_vector(spec.start, dim=d)
    state = make_optimizer(spec.optimizer, spec.config, d)

    if spec.sigma > 0.0:
        stream = LossStream(prob, mode="gaussian", sigma=spec.sigma,
                            rng=RngStream(spec.seed))
    else:
        stream = LossStream(prob, mode="deterministic")

    box = validate_box(prob.feasible_box, d) if spec.project else None
    optimum = prob.optimum
    radius = spec.convergence_radius

    T = spec.steps
    thetas = np.empty((T, d))
    values = np.empty(T)
    grad_norms = np.empty(T)
    updates = np.empty((T, d))
    first_hit = None
    diverged_at = None

    n = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(1, T + 1):
            try:
                g, _ = sample_gradient(stream, theta, t)
                result = step(state, theta, g)
            except NonFiniteResult:
                diverged_at = t
                break
            theta = result.new_params
            if box is not None:
                theta = project_box(theta, box)
            if not np.isfinite(theta).all():
                diverged_at = t
                break
            thetas[n] = theta
            values[n] = prob.value(theta)
            grad_norms[n] = math.sqrt(float(g @ g))
            updates[n] = result.update
            n += 1
            if first_hit is None and optimum is not None:
                if math.sqrt(float((theta - optimum) @ (theta - optimum))) <= radius:
                    first_hit = t

    return TrajectoryRecord(
        problem_name=prob.name,
        optimizer=spec.optimizer,
        thetas=thetas[:n].copy(),
        values=values[:n].copy(),
        grad_norms=grad_norms[:n].copy(),
        updates=updates[:n].copy(),
        steps_requested=T,
        first_hit=first_hit,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
    )


def first_hit_step(traj: TrajectoryRecord, optimum, delta: float) -> Optional[int]:
    """Smallest recorded step t with ||theta_t - optimum||_2 <= delta."""
    if delta <= 0:
        raise InvalidConfig("delta must be > 0")
    if traj.steps_completed == 0:
        return None
    optimum = as_vector(optimum, dim=traj.thetas.shape[1])
    dist = np.sqrt(((traj.thetas - optimum) ** 2).sum(axis=1))
    idx = np.nonzero(dist <= delta)[0]
    return int(idx[0]) + 1 if idx.size else None
