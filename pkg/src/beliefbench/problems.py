"""Analytic 2-D test objectives, loss streams, and box projection.

Built-in problems (stable CLI-facing names):

===================  ====================================  ==============
name                 f(x, y)                               minimizer
===================  ====================================  ==============
``l1_separable``     ``|x| + |y|``                         (0, 0)
``l1_inseparable``   ``|x + y| + |x - y| / 10``            (0, 0)
``l2_inseparable``   ``(x + y)^2 + (x - y)^2 / 10``        (0, 0)
``l1_skew``          ``|x| / 10 + |y|``                    (0, 0)
``beale``            sum of three bilinear residuals^2     (3, 0.5)
``rosenbrock``       ``(1 - x)^2 + 100 (y - x^2)^2``       (1, 1)
===================  ====================================  ==============

The L1 objectives are non-smooth; at a kink the reported subgradient uses
``sign(0) = 0``, which keeps the zero set a fixed point and leaves an
unbiased zero-mean gradient under symmetric oscillation around a kink.

A :class:`LossStream` wraps a problem as a gradient oracle in one of three
modes: ``deterministic`` (exact gradients), ``gaussian`` (exact gradient
plus i.i.d. N(0, sigma^2) noise whose draw at step t is a pure function of
(seed, t)), or ``online`` (a fresh loss per step, for regret experiments).

For an axis-aligned box and any diagonal metric, the metric-weighted
projection onto the box coincides with the plain coordinate-wise clip
(each coordinate minimizes its own weighted squared distance
independently, and each 1-D minimizer is the clipped value regardless of
its positive weight).  ``project_box`` therefore implements the clip and
is the correct projection for every diagonally preconditioned step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    InvalidBox,
    InvalidConfig,
    NonFiniteResult,
    RngStream,
    UnknownProblem,
    as_vector,
)

__all__ = [
    "Problem",
    "LossStream",
    "BUILTIN_PROBLEMS",
    "builtin_problem",
    "validate_box",
    "project_box",
    "sample_gradient",
]


@dataclass(frozen=True)
class Problem:
    """An objective with an exact (sub)gradient oracle.

    ``value`` and ``gradient`` must be deterministic and finite on the
    feasible box (when one is given).  ``optimum`` and ``min_value`` are
    optional metadata for convergence accounting.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    optimum: Optional[np.ndarray] = None
    min_value: float = 0.0
    feasible_box: Optional[np.ndarray] = None


def _sign(z: float) -> float:
    # subgradient convention at kinks: sign(0) = 0
    return float(np.sign(z))


def _l1_separable() -> Problem:
    def value(p):
        return abs(p[0]) + abs(p[1])

    def gradient(p):
        return np.array([_sign(p[0]), _sign(p[1])])

    return Problem("l1_separable", 2, value, gradient, optimum=np.zeros(2))


def _l1_inseparable() -> Problem:
    def value(p):
        return abs(p[0] + p[1]) + abs(p[0] - p[1]) / 10.0

    def gradient(p):
        su, sv = _sign(p[0] + p[1]), _sign(p[0] - p[1])
        return np.array([su + sv / 10.0, su - sv / 10.0])

    return Problem("l1_inseparable", 2, value, gradient, optimum=np.zeros(2))


def _l2_inseparable() -> Problem:
    def value(p):
        return (p[0] + p[1]) ** 2 + (p[0] - p[1]) ** 2 / 10.0

    def gradient(p):
        u, v = p[0] + p[1], p[0] - p[1]
        return np.array([2.0 * u + 0.2 * v, 2.0 * u - 0.2 * v])

    return Problem("l2_inseparable", 2, value, gradient, optimum=np.zeros(2))


def _l1_skew() -> Problem:
    def value(p):
        return abs(p[0]) / 10.0 + abs(p[1])

    def gradient(p):
        return np.array([_sign(p[0]) / 10.0, _sign(p[1])])

    return Problem("l1_skew", 2, value, gradient, optimum=np.zeros(2))


def _beale() -> Problem:
    def residuals(p):
        x, y = p[0], p[1]
        return (
            1.5 - x + x * y,
            2.25 - x + x * y * y,
            2.625 - x + x * y ** 3,
        )

    def value(p):
        r1, r2, r3 = residuals(p)
        return r1 * r1 + r2 * r2 + r3 * r3

    def gradient(p):
        x, y = p[0], p[1]
        r1, r2, r3 = residuals(p)
        gx = 2.0 * r1 * (y - 1.0) + 2.0 * r2 * (y * y - 1.0) + 2.0 * r3 * (y ** 3 - 1.0)
        gy = 2.0 * r1 * x + 4.0 * r2 * x * y + 6.0 * r3 * x * y * y
        return np.array([gx, gy])

    return Problem("beale", 2, value, gradient, optimum=np.array([3.0, 0.5]))


def _rosenbrock() -> Problem:
    def value(p):
        x, y = p[0], p[1]
        return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2

    def gradient(p):
        x, y = p[0], p[1]
        return np.array(
            [-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)]
        )

    return Problem("rosenbrock", 2, value, gradient, optimum=np.array([1.0, 1.0]))


_FACTORIES = {
    "l1_separable": _l1_separable,
    "l1_inseparable": _l1_inseparable,
    "l2_inseparable": _l2_inseparable,
    "l1_skew": _l1_skew,
    "beale": _beale,
    "rosenbrock": _rosenbrock,
}

BUILTIN_PROBLEMS = tuple(_FACTORIES)


def builtin_problem(name: str) -> Problem:
    """Return a built-in problem by its stable name."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise UnknownProblem(
            f"unknown problem {name!r}; expected one of {BUILTIN_PROBLEMS}"
        ) from None
    return factory()


def validate_box(box, dim: int | None = None) -> np.ndarray:
    """Coerce to a (d, 2) array of [lo, hi] rows with lo <= hi everywhere."""
    arr = np.asarray(box, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidBox(f"box must have shape (d, 2), got {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidBox(f"box has {arr.shape[0]} rows, expected {dim}")
    if np.isnan(arr).any() or (arr[:, 0] > arr[:, 1]).any():
        raise InvalidBox("box requires lo <= hi in every coordinate")
    return arr


def project_box(y, box) -> np.ndarray:
    """Coordinate-wise clip of ``y`` into the box (see module notes on why
    this equals the metric-weighted projection for diagonal metrics)."""
    y = np.asarray(y, dtype=np.float64)
    arr = validate_box(box, dim=y.size)
    return np.clip(y, arr[:, 0], arr[:, 1])


_STREAM_MODES = ("deterministic", "gaussian", "online")


@dataclass
class LossStream:
    """A per-step gradient oracle over a base problem.

    gaussian mode returns ``gradient(theta) + zeta_t`` with
    ``zeta_t ~ N(0, sigma^2 I)`` drawn from the counter block addressed by
    the step index, so repeated queries at the same step are identical.
    online mode ignores the base problem's oracle and evaluates
    ``losses(t)`` instead.
    """

    problem: Problem
    mode: str = "deterministic"
    sigma: float = 0.0
    rng: Optional[RngStream] = None
    losses: Optional[Callable[[int], Problem]] = None

    def __post_init__(self):
        if self.mode not in _STREAM_MODES:
            raise InvalidConfig(
                f"mode must be one of {_STREAM_MODES}, got {self.mode!r}"
            )
        if self.mode == "gaussian":
            if self.sigma < 0:
                raise InvalidConfig(f"sigma must be >= 0, got {self.sigma}")
            if self.rng is None and self.sigma > 0:
                raise InvalidConfig("gaussian mode with sigma > 0 needs an RngStream")
        if self.mode == "online" and self.losses is None:
            raise InvalidConfig("online mode needs a losses(t) callable")


def sample_gradient(stream: LossStream, theta, t: int) -> tuple[np.ndarray, float]:
    """(gradient, loss value) observed at step ``t`` for iterate ``theta``.

    The loss value is returned alongside the gradient so regret accounting
    does not need a second oracle query.
    """
    theta = as_vector(theta, dim=stream.problem.dim)
    if t < 1:
        raise InvalidConfig(f"step index must be >= 1, got {t}")
    if stream.mode == "online":
        loss = stream.losses(t)
        return np.asarray(loss.gradient(theta), dtype=np.float64), float(loss.value(theta))

    g = np.asarray(stream.problem.gradient(theta), dtype=np.float64)
    f = float(stream.problem.value(theta))
    if stream.mode == "gaussian" and stream.sigma > 0.0:
        g = g + stream.rng.normals_at(t, theta.size) * stream.sigma
    if not np.isfinite(g).all():
        raise NonFiniteResult("gradient oracle produced a non-finite entry")
    return g, f
