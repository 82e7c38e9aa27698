"""Optimizer state machines: belief-adaptive steps, Adam, and SGD momentum.

All three optimizers share one step contract: given the current parameters
and a gradient, advance the internal accumulators and return the new
parameters together with the applied displacement.  All operations are
element-wise on float64 vectors.

The belief-adaptive optimizer ("adabelief") differs from Adam only in its
second accumulator: Adam tracks ``v_t``, an EMA of ``g_t^2``; adabelief
tracks ``s_t``, an EMA of the squared deviation of the gradient from its
own EMA prediction, with a small epsilon added every step so the
accumulator is bounded below::

    m_t = beta1 * m_{t-1} + (1 - beta1) * g_t
    s_t = beta2 * s_{t-1} + (1 - beta2) * (g_t - m_t)^2 + eps

Note the deviation uses the freshly updated ``m_t``, not ``m_{t-1}``; the
two conventions give different numbers and this library deliberately uses
the fresh value.  With the optional AMSGrad flag the denominator uses the
running element-wise maximum of ``s_t``, which makes it non-decreasing over
the run (the monotonicity that the sublinear-regret analysis of these
methods assumes).  Bias correction divides each EMA by ``1 - beta^t``.  The
displacement is::

    -lr_t * m_hat / (sqrt(s_hat) + eps)        (adabelief; Adam with v_hat)
    -lr_t * velocity                            (SGD, heavy-ball form)

so epsilon appears twice in adabelief: inside the ``s`` recursion and added
to the square-rooted denominator.

Weight decay supports both conventions: coupled decay adds
``weight_decay * params`` to the gradient before the EMAs; decoupled decay
subtracts ``lr_t * weight_decay * params`` after the adaptive step.
SGD momentum uses the heavy-ball recursion ``velocity = mu * velocity + g``
(the common framework default); the EMA form ``mu*v + (1-mu)*g`` is not
implemented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    DimensionMismatch,
    InvalidConfig,
    NonFiniteResult,
    OptimizerConfig,
)

__all__ = [
    "OPTIMIZER_KINDS",
    "OptimizerState",
    "StepResult",
    "make_optimizer",
    "adabelief_step",
    "adam_step",
    "sgd_step",
    "step",
    "corrected_moments",
]

OPTIMIZER_KINDS = ("adabelief", "adam", "sgd")


class StepResult(NamedTuple):
    """Outcome of one optimizer step.

    ``new_params == old_params + update`` exactly; any feasible-set
    projection is the caller's responsibility and happens afterwards.
    ``update`` includes decoupled weight decay when enabled.
    """

    new_params: np.ndarray
    update: np.ndarray
    effective_lr: float


@dataclass
class OptimizerState:
    """Per-run accumulators for one optimizer on one parameter vector.

    ``second`` holds v (EMA of g^2) for Adam and s (EMA of (g - m)^2, plus
    the per-step epsilon) for adabelief; it is unused for SGD.
    ``second_max`` is the AMSGrad running maximum, allocated only when the
    config enables it.  ``t`` starts at 0 and becomes 1 on the first step,
    which is the exponent used in the bias-correction factors.
    """

    kind: str
    config: OptimizerConfig
    m: np.ndarray
    second: np.ndarray
    second_max: np.ndarray | None = None
    velocity: np.ndarray | None = None
    t: int = 0

    @property
    def dim(self) -> int:
        return self.m.size


def make_optimizer(kind: str, config: OptimizerConfig, d: int) -> OptimizerState:
    """Zero-initialized state of dimension ``d`` for the given optimizer."""
    if kind not in OPTIMIZER_KINDS:
        raise InvalidConfig(f"unknown optimizer kind {kind!r}; expected one of {OPTIMIZER_KINDS}")
    if not isinstance(config, OptimizerConfig):
        raise InvalidConfig("config must be an OptimizerConfig")
    if not isinstance(d, int) or d < 1:
        raise InvalidConfig(f"dimension must be an integer >= 1, got {d!r}")
    def zeros():
        return np.zeros(d, dtype=np.float64)

    return OptimizerState(
        kind=kind,
        config=config,
        m=zeros(),
        second=zeros(),
        second_max=zeros() if (config.amsgrad and kind != "sgd") else None,
        velocity=zeros() if kind == "sgd" else None,
    )


def _check_inputs(state: OptimizerState, kind: str, params, grad):
    if state.kind != kind:
        raise InvalidConfig(f"state is for {state.kind!r}, not {kind!r}")
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != (state.dim,) or grad.shape != (state.dim,):
        raise DimensionMismatch(
            f"params/grad must have shape ({state.dim},), got {params.shape} and {grad.shape}"
        )
    if not np.isfinite(grad).all():
        raise NonFiniteResult("gradient contains non-finite entries")
    return params, grad


def _coupled_decay(cfg: OptimizerConfig, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if cfg.weight_decay > 0.0 and not cfg.decoupled_weight_decay:
        return grad + cfg.weight_decay * params
    return grad


def _finish(params, update, lr) -> StepResult:
    new_params = params + update
    if not (np.isfinite(update).all() and np.isfinite(new_params).all()):
        raise NonFiniteResult("optimizer step produced a non-finite entry")
    return StepResult(new_params, update, lr)


def adabelief_step(state: OptimizerState, params, grad) -> StepResult:
    """One belief-adaptive step (optionally AMSGrad, optionally de-biased)."""
    params, g = _check_inputs(state, "adabelief", params, grad)
    cfg = state.config
    g = _coupled_decay(cfg, params, g)

    state.t += 1
    t = state.t
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    diff = g - m  # fresh m, per the statement order above
    s = cfg.beta2 * state.second + (1.0 - cfg.beta2) * diff * diff + cfg.epsilon
    state.m = m
    state.second = s

    if cfg.amsgrad:
        np.maximum(state.second_max, s, out=state.second_max)
        s_used = state.second_max
    else:
        s_used = s

    if cfg.bias_correction:
        m_hat = m / (1.0 - cfg.beta1 ** t)
        s_hat = s_used / (1.0 - cfg.beta2 ** t)
    else:
        m_hat, s_hat = m, s_used

    lr = cfg.effective_lr(t)
    update = -lr * m_hat / (np.sqrt(s_hat) + cfg.epsilon)
    if cfg.decoupled_weight_decay and cfg.weight_decay > 0.0:
        update = update - lr * cfg.weight_decay * params
    return _finish(params, update, lr)


def adam_step(state: OptimizerState, params, grad) -> StepResult:
    """One Adam step (optionally AMSGrad, optionally de-biased)."""
    params, g = _check_inputs(state, "adam", params, grad)
    cfg = state.config
    g = _coupled_decay(cfg, params, g)

    state.t += 1
    t = state.t
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.second + (1.0 - cfg.beta2) * g * g
    state.m = m
    state.second = v

    if cfg.amsgrad:
        np.maximum(state.second_max, v, out=state.second_max)
        v_used = state.second_max
    else:
        v_used = v

    if cfg.bias_correction:
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v_used / (1.0 - cfg.beta2 ** t)
    else:
        m_hat, v_hat = m, v_used

    lr = cfg.effective_lr(t)
    update = -lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    if cfg.decoupled_weight_decay and cfg.weight_decay > 0.0:
        update = update - lr * cfg.weight_decay * params
    return _finish(params, update, lr)


def sgd_step(state: OptimizerState, params, grad) -> StepResult:
    """One heavy-ball SGD step: velocity = mu*velocity + g."""
    params, g = _check_inputs(state, "sgd", params, grad)
    cfg = state.config
    g = _coupled_decay(cfg, params, g)

    state.t += 1
    state.velocity = cfg.momentum * state.velocity + g

    lr = cfg.effective_lr(state.t)
    update = -lr * state.velocity
    if cfg.decoupled_weight_decay and cfg.weight_decay > 0.0:
        update = update - lr * cfg.weight_decay * params
    return _finish(params, update, lr)


_STEP_FNS = {"adabelief": adabelief_step, "adam": adam_step, "sgd": sgd_step}


def step(state: OptimizerState, params, grad) -> StepResult:
    """Dispatch to the step function matching ``state.kind``."""
    return _STEP_FNS[state.kind](state, params, grad)


def corrected_moments(state: OptimizerState) -> tuple[np.ndarray, np.ndarray]:
    """Bias-corrected (m_hat, second_hat) snapshots of a stepped state.

    For AMSGrad states the second moment is the running maximum, i.e. the
    quantity the update actually divides by.  Requires at least one step.
    """
    if state.t < 1:
        raise InvalidConfig("state has not taken a step yet")
    if state.kind == "sgd":
        raise InvalidConfig("SGD has no second-moment accumulator")
    second = state.second_max if state.config.amsgrad else state.second
    if state.config.bias_correction:
        return (
            state.m / (1.0 - state.config.beta1 ** state.t),
            second / (1.0 - state.config.beta2 ** state.t),
        )
    return state.m.copy(), second.copy()
