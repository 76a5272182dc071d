"""Deterministic sanctions dynamics.

Two opponents X and Y apply sanction pressures ``x_n`` and ``y_n``. Each
opponent answers the other's most recent escalation with its cross-gain::

    x[n+1] = x[n] + alpha * (y[n] - y[n-1])
    y[n+1] = y[n] + beta  * (x[n] - x[n-1])

In increment form ``v[n] = x[n] - x[n-1]``, ``w[n] = y[n] - y[n-1]`` this is
``v[n+1] = alpha * w[n]``, ``w[n+1] = beta * v[n]``, so every increment is
multiplied by the total gain ``q = alpha * beta`` every two stages.

The discrete Osipov-Lanchester attrition model is included as a baseline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from sancdyn.errors import DivergenceError, ParameterError

DEFAULT_TOLERANCE = 1e-9


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


def _check_stage(value: int) -> int:
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise ParameterError(f"stage must be a non-negative integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class ModelParams:
    """Cross-gains of the two opponents. Both must be strictly positive."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = _check_finite(name, getattr(self, name))
            if value <= 0.0:
                raise ParameterError(f"{name} must be > 0 (positive cross-gain), got {value!r}")
            object.__setattr__(self, name, value)
        if not math.isfinite(self.alpha * self.beta):
            raise ParameterError("total gain alpha*beta overflows")

    @property
    def gain(self) -> float:
        return self.alpha * self.beta

    def swapped(self) -> ModelParams:
        return ModelParams(self.beta, self.alpha)


@dataclass(frozen=True)
class PressureState:
    """Two consecutive pressure samples per opponent, at stages ``stage-1`` and ``stage``."""

    x_prev: float
    x_curr: float
    y_prev: float
    y_curr: float
    stage: int = 1

    def __post_init__(self):
        for name in ("x_prev", "x_curr", "y_prev", "y_curr"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "stage", _check_stage(self.stage))

    @classmethod
    def from_samples(cls, x0, x1, y0, y1) -> PressureState:
        """State at stage 1 from the samples ``x0, x1, y0, y1``."""
        return cls(x0, x1, y0, y1, stage=1)

    def increments(self) -> IncrementState:
        return IncrementState(self.x_curr - self.x_prev, self.y_curr - self.y_prev, self.stage)


@dataclass(frozen=True)
class IncrementState:
    """Pressure increments ``v = x[n] - x[n-1]`` and ``w = y[n] - y[n-1]``."""

    v: float
    w: float
    stage: int = 1

    def __post_init__(self):
        object.__setattr__(self, "v", _check_finite("v", self.v))
        object.__setattr__(self, "w", _check_finite("w", self.w))
        object.__setattr__(self, "stage", _check_stage(self.stage))


class Stability(str, enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    stability: Stability
    gain: float
    tolerance: float

    @property
    def is_stable(self) -> bool:
        return self.stability is Stability.STABLE


@dataclass(frozen=True)
class Trajectory:
    """Per-stage records ``(n, x, y, v, w)`` stored column-wise.

    ``params`` is whatever generated the path (``ModelParams`` or
    ``StochasticParams``). When the run was cut short because the next stage
    was not representable, ``overflow_stage`` holds that stage index.
    """

    n: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    w: np.ndarray
    params: object = None
    overflow_stage: int | None = None

    def __post_init__(self):
        cols = [np.asarray(getattr(self, k), dtype=float) for k in ("x", "y", "v", "w")]
        n = np.asarray(self.n, dtype=np.int64)
        if any(c.shape != n.shape for c in cols) or n.ndim != 1 or n.size == 0:
            raise ParameterError("trajectory columns must be 1-d and of equal non-zero length")
        if n.size > 1 and not np.all(np.diff(n) == 1):
            raise ParameterError("trajectory stages must be consecutive integers")
        object.__setattr__(self, "n", n)
        for k, c in zip(("x", "y", "v", "w"), cols):
            c.setflags(write=False)
            object.__setattr__(self, k, c)
        n.setflags(write=False)

    def __len__(self):
        return int(self.n.size)

    @property
    def truncated(self) -> bool:
        return self.overflow_stage is not None

    def records(self) -> Iterator[tuple[int, float, float, float, float]]:
        for i in range(len(self)):
            yield (int(self.n[i]), float(self.x[i]), float(self.y[i]),
                   float(self.v[i]), float(self.w[i]))

    def at(self, stage: int) -> tuple[int, float, float, float, float]:
        i = stage - int(self.n[0])
        if not 0 <= i < len(self):
            raise IndexError(f"stage {stage} not in trajectory")
        return (stage, float(self.x[i]), float(self.y[i]), float(self.v[i]), float(self.w[i]))


def total_gain(params: ModelParams) -> float:
    return params.alpha * params.beta


def classify_stability(gain: float, tolerance: float = DEFAULT_TOLERANCE) -> StabilityVerdict:
    """Trichotomy of a gain against 1 with a marginal band of half-width ``tolerance``."""
    gain = float(gain)
    tolerance = float(tolerance)
    if not gain >= 0.0:
        raise ParameterError(f"gain must be >= 0, got {gain!r}")
    if not tolerance >= 0.0:
        raise ParameterError(f"tolerance must be >= 0, got {tolerance!r}")
    if gain < 1.0 - tolerance:
        stability = Stability.STABLE
    elif gain > 1.0 + tolerance:
        stability = Stability.UNSTABLE
    else:
        stability = Stability.MARGINAL
    return StabilityVerdict(stability, gain, tolerance)


def step_pressures(state: PressureState, params: ModelParams) -> PressureState:
    x_next = state.x_curr + params.alpha * (state.y_curr - state.y_prev)
    y_next = state.y_curr + params.beta * (state.x_curr - state.x_prev)
    return PressureState(state.x_curr, x_next, state.y_curr, y_next, state.stage + 1)


def step_increments(state: IncrementState, params: ModelParams) -> IncrementState:
    return IncrementState(params.alpha * state.w, params.beta * state.v, state.stage + 1)


def decoupled_step(increment: float, gain: float) -> float:
    """Increment two stages later: ``v[n+1] = q * v[n-1]``."""
    if not gain > 0.0:
        raise ParameterError(f"gain must be > 0, got {gain!r}")
    return gain * increment


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def simulate_deterministic(initial: PressureState, params: ModelParams, steps: int) -> Trajectory:
    """Iterate the pressure recurrence for ``steps`` stages.

    The increments are carried alongside the pressures, so ``y[n] - y[n-1]``
    enters the update as the exact product that produced it rather than a
    difference of two large, nearly equal pressures. Stored pressures are
    the running sums of the stored increments.
    """
    if isinstance(steps, bool) or int(steps) != steps or steps < 0:
        raise ParameterError(f"steps must be a non-negative integer, got {steps!r}")
    steps = int(steps)
    alpha, beta = params.alpha, params.beta

    x, y = initial.x_curr, initial.y_curr
    v, w = x - initial.x_prev, y - initial.y_prev
    if not _finite(v, w):
        raise ParameterError("initial increments overflow")
    stage = initial.stage
    rows = [(stage, x, y, v, w)]
    overflow = None
    for _ in range(steps):
        v, w = alpha * w, beta * v
        x, y = x + v, y + w
        stage += 1
        if not _finite(x, y, v, w):
            overflow = stage
            break
        rows.append((stage, x, y, v, w))
    return _trajectory_from_rows(rows, params, overflow)


def _trajectory_from_rows(rows, params, overflow) -> Trajectory:
    n, x, y, v, w = zip(*rows)
    return Trajectory(np.array(n), np.array(x), np.array(y), np.array(v), np.array(w),
                      params=params, overflow_stage=overflow)


def closed_form_increments(v1: float, w1: float, params: ModelParams, stage: int) -> tuple[float, float]:
    """Increments ``(v, w)`` at ``stage`` without iterating, from the stage-1 increments.

    Odd stages ``2k+1`` carry ``q**k * (v1, w1)``; even stages ``2k+2`` carry
    ``q**k * (alpha*w1, beta*v1)``.
    """
    if isinstance(stage, bool) or int(stage) != stage or stage < 1:
        raise ParameterError(f"stage must be an integer >= 1, got {stage!r}")
    stage = int(stage)
    q = total_gain(params)
    if stage % 2 == 1:
        scale = q ** ((stage - 1) // 2)
        return scale * v1, scale * w1
    scale = q ** ((stage - 2) // 2)
    return scale * (params.alpha * w1), scale * (params.beta * v1)


def cumulative_limit(initial: PressureState, params: ModelParams) -> tuple[float, float]:
    """Limits of ``x[n]`` and ``y[n]`` as ``n -> inf``; requires ``q < 1``.

    Summing the two geometric increment series gives
    ``x_inf = x1 + (alpha*w1 + q*v1) / (1 - q)`` and its mirror for ``y``.
    """
    q = total_gain(params)
    if q >= 1.0:
        raise DivergenceError(f"total gain q={q!r} >= 1: pressures have no finite limit")
    v1 = initial.x_curr - initial.x_prev
    w1 = initial.y_curr - initial.y_prev
    x_inf = initial.x_curr + (params.alpha * w1 + q * v1) / (1.0 - q)
    y_inf = initial.y_curr + (params.beta * v1 + q * w1) / (1.0 - q)
    return x_inf, y_inf


# -- Osipov-Lanchester baseline ---------------------------------------------

@dataclass(frozen=True)
class LanchesterState:
    """Force levels of opponents R and G and the sampling interval ``dt``."""

    r: float
    g: float
    dt: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "r", _check_finite("r", self.r))
        object.__setattr__(self, "g", _check_finite("g", self.g))
        dt = _check_finite("dt", self.dt)
        if dt <= 0.0:
            raise ParameterError(f"dt must be > 0, got {dt!r}")
        object.__setattr__(self, "dt", dt)


@dataclass(frozen=True)
class LanchesterTrajectory:
    n: np.ndarray
    r: np.ndarray
    g: np.ndarray
    params: ModelParams
    dt: float
    overflow_stage: int | None = None

    def __len__(self):
        return int(self.n.size)

    @property
    def truncated(self) -> bool:
        return self.overflow_stage is not None

    def records(self):
        for i in range(len(self)):
            yield int(self.n[i]), float(self.r[i]), float(self.g[i])


def lanchester_step(state: LanchesterState, params: ModelParams) -> LanchesterState:
    """Euler step of the attrition model; ``alpha``, ``beta`` act as firing intensities."""
    r = state.r - params.alpha * state.dt * state.g
    g = state.g - params.beta * state.dt * state.r
    return LanchesterState(r, g, state.dt)


def simulate_lanchester(initial: LanchesterState, params: ModelParams, steps: int) -> LanchesterTrajectory:
    if isinstance(steps, bool) or int(steps) != steps or steps < 0:
        raise ParameterError(f"steps must be a non-negative integer, got {steps!r}")
    state = initial
    rows = [(0, state.r, state.g)]
    overflow = None
    for n in range(1, int(steps) + 1):
        r = state.r - params.alpha * state.dt * state.g
        g = state.g - params.beta * state.dt * state.r
        if not _finite(r, g):
            overflow = n
            break
        state = LanchesterState(r, g, state.dt)
        rows.append((n, r, g))
    n, r, g = (np.array(c) for c in zip(*rows))
    return LanchesterTrajectory(n.astype(np.int64), r, g, params, initial.dt, overflow)
