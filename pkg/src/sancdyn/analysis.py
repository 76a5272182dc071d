"""Stability regions over the gain plane, growth-rate estimates, and
empirical-vs-analytic checks of the averaged gain."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from sancdyn.dynamics import (
    DEFAULT_TOLERANCE,
    IncrementState,
    ModelParams,
    Stability,
    StabilityVerdict,
    Trajectory,
    classify_stability,
    total_gain,
)
from sancdyn.errors import ConfigurationError, EstimationError, ParameterError
from sancdyn.noise import NoiseSpec
from sancdyn.stochastic import (
    MonteCarloReport,
    StochasticParams,
    averaged_gain,
    monte_carlo_ms_growth,
)

MIN_GROWTH_STAGES = 10
TRANSIENT_FRACTION = 0.2


class SweepMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    MEAN_SQUARE = "mean-square"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityGrid:
    """Verdicts on the product grid ``alpha_axis x beta_axis``.

    ``gains[i, j]`` is ``q`` (deterministic) or ``qbar`` (mean-square) at
    ``(alpha_axis[i], beta_axis[j])``; ``labels`` holds the verdict names.
    """

    alpha_axis: np.ndarray
    beta_axis: np.ndarray
    gains: np.ndarray
    labels: np.ndarray
    mode: SweepMode
    noise: NoiseSpec | None = None
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def shape(self) -> tuple[int, int]:
        return self.gains.shape

    @property
    def stable_mask(self) -> np.ndarray:
        return self.labels == Stability.STABLE.value

    def verdict(self, i: int, j: int) -> StabilityVerdict:
        return StabilityVerdict(Stability(self.labels[i, j]), float(self.gains[i, j]), self.tolerance)

    def counts(self) -> dict[str, int]:
        return {s.value: int(np.count_nonzero(self.labels == s.value)) for s in Stability}

    def cells(self) -> Iterator[tuple[float, float, float, str]]:
        """Row-major ``(alpha, beta, gain, verdict)`` records."""
        for i, a in enumerate(self.alpha_axis):
            for j, b in enumerate(self.beta_axis):
                yield float(a), float(b), float(self.gains[i, j]), str(self.labels[i, j])

    def stabilizing_alphas(self, j: int) -> np.ndarray:
        """Alphas on the grid that give a Stable verdict against ``beta_axis[j]``."""
        return self.alpha_axis[self.stable_mask[:, j]]


def _check_axis(name: str, axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(axis)) or np.any(axis <= 0.0):
        raise ParameterError(f"{name} values must be finite and > 0")
    if np.any(np.diff(axis) <= 0.0):
        raise ParameterError(f"{name} must be strictly increasing")
    return axis


def sweep_stability_region(alpha_axis, beta_axis, mode: SweepMode | str = SweepMode.DETERMINISTIC,
                           noise: NoiseSpec | None = None,
                           tolerance: float = DEFAULT_TOLERANCE) -> StabilityGrid:
    """Classify every grid cell analytically.

    Cell values use the same floating-point expressions as
    :func:`total_gain` and :func:`averaged_gain`, so the grid is bit-for-bit
    the image of the pointwise classifiers.
    """
    mode = SweepMode(mode)
    a = _check_axis("alpha_axis", alpha_axis)
    b = _check_axis("beta_axis", beta_axis)
    if mode is SweepMode.MEAN_SQUARE:
        if noise is None:
            raise ConfigurationError("mean-square sweep requires a noise specification")
        gains = np.multiply.outer(a * a + noise.var_x, b * b + noise.var_y)
    else:
        gains = np.multiply.outer(a, b)
    tolerance = float(tolerance)
    if not tolerance >= 0.0:
        raise ParameterError(f"tolerance must be >= 0, got {tolerance!r}")
    labels = np.full(gains.shape, Stability.MARGINAL.value, dtype="<U8")
    labels[gains < 1.0 - tolerance] = Stability.STABLE.value
    labels[gains > 1.0 + tolerance] = Stability.UNSTABLE.value
    return StabilityGrid(a, b, gains, labels, mode, noise if mode is SweepMode.MEAN_SQUARE else None, tolerance)


def parse_axis(text: str) -> np.ndarray:
    """``start:stop:count``, inclusive and linearly spaced."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"axis {text!r} is not of the form start:stop:count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise ParameterError(f"axis {text!r} is not of the form start:stop:count") from None
    if count < 1 or (count == 1 and start != stop):
        raise ParameterError(f"axis {text!r}: count must be >= 1 (and 1 only when start == stop)")
    return np.linspace(start, stop, count)


# -- growth rates -------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEstimate:
    lyapunov: float
    analytic: float
    residual: float
    stages_used: int


def _reference_rate(params) -> float:
    # Per-stage log growth of the root-mean-square increment; for noiseless
    # gains this is 0.5 * ln q.
    if isinstance(params, ModelParams):
        return 0.5 * math.log(total_gain(params))
    if isinstance(params, StochasticParams):
        return 0.25 * math.log(averaged_gain(params))
    raise ParameterError("trajectory carries no model parameters to compare against")


def estimate_growth_rate(trajectory: Trajectory) -> GrowthEstimate:
    """Least-squares slope of ``ln|v_n|`` against ``n``.

    The first 20% of stages are dropped as transient and only one parity
    class of stages is fitted (the one with more non-zero increments,
    preferring the parity of the first stage on ties).
    """
    length = len(trajectory)
    if length < MIN_GROWTH_STAGES:
        raise EstimationError(f"need at least {MIN_GROWTH_STAGES} stages, got {length}")
    start = int(math.floor(TRANSIENT_FRACTION * length))
    pos = np.arange(start, length)
    v = trajectory.v[start:]
    best = None
    for parity in (0, 1):
        sel = (pos % 2 == parity) & (v != 0.0)
        if best is None or np.count_nonzero(sel) > np.count_nonzero(best):
            best = sel
    if np.count_nonzero(best) < 2:
        raise EstimationError("increments are zero: growth rate undefined")
    n = trajectory.n[start:][best].astype(float)
    logv = np.log(np.abs(v[best]))
    n_c = n - n.mean()
    slope = float(np.dot(n_c, logv - logv.mean()) / np.dot(n_c, n_c))
    analytic = _reference_rate(trajectory.params)
    return GrowthEstimate(slope, analytic, abs(slope - analytic), int(n.size))


# -- empirical vs analytic ----------------------------------------------------

@dataclass(frozen=True)
class MonteCarloConfig:
    n_trajectories: int
    horizon: int = 11
    seed: int = 0
    initial: IncrementState = field(default_factory=lambda: IncrementState(1.0, 1.0))
    workers: int = 1


@dataclass(frozen=True)
class Comparison:
    analytic_qbar: float
    empirical_ratio: float
    ci_low: float
    ci_high: float
    agreement: bool
    report: MonteCarloReport


def compare_empirical_analytic(params: StochasticParams, mc_config: MonteCarloConfig) -> Comparison:
    report = monte_carlo_ms_growth(params, mc_config.n_trajectories, mc_config.horizon,
                                   mc_config.seed, mc_config.initial, mc_config.workers)
    return Comparison(report.analytic_qbar, report.empirical_ms_ratio, report.ci_low,
                      report.ci_high, report.contains_analytic, report)


def verify_cell(grid: StabilityGrid, i: int, j: int, mc_config: MonteCarloConfig) -> Comparison:
    """Monte Carlo check of one mean-square grid cell."""
    if grid.mode is not SweepMode.MEAN_SQUARE:
        raise ConfigurationError("Monte Carlo verification applies to mean-square grids only")
    params = StochasticParams(ModelParams(grid.alpha_axis[i], grid.beta_axis[j]), grid.noise)
    return compare_empirical_analytic(params, mc_config)
