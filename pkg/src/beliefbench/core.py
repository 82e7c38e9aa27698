"""Shared numeric types, optimizer configuration, and deterministic randomness.

Everything in this library works on dense 64-bit float vectors ("parameter
vectors").  A parameter vector is a plain 1-D ``numpy.ndarray`` of dtype
float64 with at least one entry; the helpers in this module validate shapes
and guard against silent NaN/Inf propagation, raising typed errors instead.

Randomness contract
-------------------
All stochastic features draw from :class:`RngStream`, which is built on the
Philox4x64 counter-based bit generator (numpy's implementation) combined
with the Box-Muller transform for Gaussian variates:

    u1 = (r0 + 1) * 2**-64        in (0, 1]
    u2 = r1 * 2**-64              in [0, 1)
    z0 = sqrt(-2 ln u1) * cos(2 pi u2)
    z1 = sqrt(-2 ln u1) * sin(2 pi u2)

where r0, r1 are consecutive raw 64-bit outputs.  The generator and the
transform are fixed: identical (seed, stream) pairs produce identical draw
sequences in every run.  Do not change either silently; reproducibility of
checked-in benchmark outputs depends on them.  Streams are splittable
(`split`) so parallel runs with distinct sub-streams stay reproducible and
order-independent, and Gaussian blocks can be addressed by a block index
(`normals_at`) so per-step noise is a pure function of the step counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionMismatch",
    "NonFiniteResult",
    "InvalidConfig",
    "InvalidBox",
    "UnknownProblem",
    "NonConvexStream",
    "as_vector",
    "add",
    "sub",
    "mul",
    "div",
    "scale",
    "sqrt",
    "elementwise_max",
    "OptimizerConfig",
    "RngStream",
    "gaussian_noise",
]


class DimensionMismatch(ValueError):
    """Two vectors that must share a length do not."""


class NonFiniteResult(ArithmeticError):
    """An operation produced (or would produce) NaN or infinity."""


class InvalidConfig(ValueError):
    """An optimizer hyperparameter is outside its legal range."""


class InvalidBox(ValueError):
    """A feasible box has a lower bound above its upper bound."""


class UnknownProblem(ValueError):
    """A problem name is not one of the built-in identifiers."""


class NonConvexStream(ValueError):
    """A loss stream handed to a convex-only probe is declared non-convex.

    Convexity is not checked beyond construction; this error exists so the
    probe API can state its precondition explicitly.
    """


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 array of length >= 1.

    Raises DimensionMismatch for wrong shape/length and NonFiniteResult if
    any entry is NaN or infinite.
    """
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if arr.size < 1:
        raise DimensionMismatch("parameter vector must have length >= 1")
    if dim is not None and arr.size != dim:
        raise DimensionMismatch(
            f"expected vector of length {dim}, got {arr.size}"
        )
    if not np.isfinite(arr).all():
        raise NonFiniteResult("vector contains NaN or infinite entries")
    return arr


def _paired(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def _finite(out: np.ndarray) -> np.ndarray:
    if not np.isfinite(out).all():
        raise NonFiniteResult("operation produced a non-finite entry")
    return out


def add(a, b) -> np.ndarray:
    """Element-wise a + b."""
    a, b = _paired(a, b)
    return _finite(a + b)


def sub(a, b) -> np.ndarray:
    """Element-wise a - b."""
    a, b = _paired(a, b)
    return _finite(a - b)


def mul(a, b) -> np.ndarray:
    """Element-wise a * b."""
    a, b = _paired(a, b)
    return _finite(a * b)


def div(a, b) -> np.ndarray:
    """Element-wise a / b; any zero denominator entry is an error."""
    a, b = _paired(a, b)
    if (b == 0.0).any():
        raise NonFiniteResult("division by zero entry")
    with np.errstate(over="ignore"):
        return _finite(a / b)


def scale(a, c: float) -> np.ndarray:
    """c * a for a scalar c."""
    a = np.asarray(a, dtype=np.float64)
    return _finite(a * float(c))


def sqrt(a) -> np.ndarray:
    """Element-wise square root; negative entries are an error."""
    a = np.asarray(a, dtype=np.float64)
    if (a < 0.0).any():
        raise NonFiniteResult("square root of a negative entry")
    return _finite(np.sqrt(a))


def elementwise_max(a, b) -> np.ndarray:
    """Element-wise maximum of two vectors."""
    a, b = _paired(a, b)
    return _finite(np.maximum(a, b))


_LR_SCHEDULES = ("constant", "inverse_sqrt")


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters shared by all optimizers.

    ``momentum`` only affects SGD.  ``lr_schedule="inverse_sqrt"`` makes the
    effective rate at step t equal ``learning_rate / sqrt(t)`` with t
    starting at 1.  When ``weight_decay > 0``, exactly one of the coupled
    (gradient-side) or decoupled (parameter-side) conventions is active,
    selected by ``decoupled_weight_decay``.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    decoupled_weight_decay: bool = False
    amsgrad: bool = False
    bias_correction: bool = True
    lr_schedule: str = "constant"
    momentum: float = 0.9

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidConfig(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.beta1 < 1.0:
            raise InvalidConfig(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise InvalidConfig(f"beta2 must be in [0, 1), got {self.beta2}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidConfig(f"epsilon must be > 0, got {self.epsilon}")
        if not (self.weight_decay >= 0 and math.isfinite(self.weight_decay)):
            raise InvalidConfig(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidConfig(f"momentum must be in [0, 1), got {self.momentum}")
        if self.lr_schedule not in _LR_SCHEDULES:
            raise InvalidConfig(
                f"lr_schedule must be one of {_LR_SCHEDULES}, got {self.lr_schedule!r}"
            )

    def effective_lr(self, t: int) -> float:
        """Learning rate applied at step t (t >= 1)."""
        if t < 1:
            raise InvalidConfig(f"step counter must be >= 1, got {t}")
        if self.lr_schedule == "inverse_sqrt":
            return self.learning_rate / math.sqrt(t)
        return self.learning_rate


_TWO64 = 2.0 ** -64
_MIX = np.uint64(0x9E3779B97F4A7C15)  # splitmix64 increment


def _mix64(x: int) -> int:
    # splitmix64 finalizer; used only to derive child stream ids
    x = np.uint64(x)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return int(x)


class RngStream:
    """Deterministic, splittable Gaussian source (Philox4x64 + Box-Muller).

    A stream is addressed by ``(seed, stream)``; both are 64-bit values fed
    to Philox as its key.  ``normals`` draws sequentially (each call consumes
    whole Box-Muller pairs; an odd tail draw is discarded, never cached).
    ``normals_at`` draws from a counter block addressed by an integer index,
    independent of any sequential position: the same ``(block, n)`` always
    yields the same values, which is how per-step gradient noise is made a
    pure function of the step counter.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        self._bg = self._philox()

    def _philox(self, block: int = 0) -> np.random.Philox:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        # block index lives in the high counter word: every block has 2**192
        # Philox states of headroom, so blocks never overlap.
        counter = np.array([0, 0, 0, block], dtype=np.uint64)
        return np.random.Philox(counter=counter, key=key)

    def split(self, index: int) -> "RngStream":
        """Derive an independent child stream; children never collide."""
        child = _mix64(self.stream ^ _mix64(index + 1))
        return RngStream(self.seed, child)

    @staticmethod
    def _box_muller(raw: np.ndarray) -> np.ndarray:
        r0 = raw[0::2].astype(np.float64)
        r1 = raw[1::2].astype(np.float64)
        u1 = (r0 + 1.0) * _TWO64
        u2 = r1 * _TWO64
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(raw.size, dtype=np.float64)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard-normal draws from the sequential stream."""
        if n < 0:
            raise ValueError("n must be >= 0")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        pairs = (n + 1) // 2
        raw = self._bg.random_raw(2 * pairs)
        return self._box_muller(raw)[:n]

    def normals_at(self, block: int, n: int) -> np.ndarray:
        """``n`` standard-normal draws from the addressed counter block."""
        if block < 0:
            raise ValueError("block index must be >= 0")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        pairs = (n + 1) // 2
        raw = self._philox(block).random_raw(2 * pairs)
        return self._box_muller(raw)[:n]


def gaussian_noise(rng: RngStream, d: int, sigma: float) -> np.ndarray:
    """Vector of d independent N(0, sigma^2) draws; sigma=0 gives zeros.

    The sigma=0 case does not consume any stream state, so noise-free and
    zero-variance configurations are bit-identical.
    """
    if d < 1:
        raise DimensionMismatch("d must be >= 1")
    if sigma < 0 or not math.isfinite(sigma):
        raise InvalidConfig(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return np.zeros(d, dtype=np.float64)
    return rng.normals(d) * sigma
