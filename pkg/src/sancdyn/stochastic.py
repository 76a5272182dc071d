"""Randomly perturbed cross-gains and mean-square stability.

Each stage the gains are ``alpha + xi_n`` and ``beta + eta_n`` with
independent zero-mean perturbations. Because the perturbations are fresh at
every stage, ``E v[n+1]^2 = qbar * E v[n-1]^2`` with the averaged gain
``qbar = (alpha^2 + sigma_x^2) * (beta^2 + sigma_y^2)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from sancdyn.dynamics import (
    DEFAULT_TOLERANCE,
    IncrementState,
    ModelParams,
    PressureState,
    StabilityVerdict,
    Trajectory,
    _trajectory_from_rows,
    classify_stability,
)
from sancdyn.errors import EstimationError, ParameterError
from sancdyn.noise import ETA, XI, NoiseSpec, RandomSource, noise_draws

CONFIDENCE = 0.99
BOOTSTRAP_BELOW = 1000
BOOTSTRAP_RESAMPLES = 2000
_CHUNK = 1 << 16
_BOOTSTRAP_KEY = 0x626F6F74


@dataclass(frozen=True)
class StochasticParams:
    base: ModelParams
    noise: NoiseSpec

    @classmethod
    def of(cls, alpha, beta, sigma_x=0.0, sigma_y=0.0, distribution="gaussian") -> StochasticParams:
        return cls(ModelParams(alpha, beta), NoiseSpec(sigma_x, sigma_y, distribution))

    @property
    def alpha(self) -> float:
        return self.base.alpha

    @property
    def beta(self) -> float:
        return self.base.beta


@dataclass(frozen=True)
class MonteCarloReport:
    n_trajectories: int
    horizon: int
    empirical_ms_ratio: float
    ci_low: float
    ci_high: float
    analytic_qbar: float
    verdict: StabilityVerdict
    master_seed: int
    ci_method: str
    # E[v_n^2] estimates for stages 1..horizon
    stage_mean_squares: tuple[float, ...] = ()

    @property
    def contains_analytic(self) -> bool:
        return _in_interval(self.analytic_qbar, self.ci_low, self.ci_high)


def _in_interval(value, low, high, rel=1e-12):
    # rel absorbs rounding when the interval has collapsed to a point
    return low * (1.0 - rel) <= value <= high * (1.0 + rel)


def averaged_gain(params: StochasticParams) -> float:
    a, b = params.alpha, params.beta
    return (a * a + params.noise.var_x) * (b * b + params.noise.var_y)


def min_achievable_gain(noise: NoiseSpec) -> float:
    """Infimum of the averaged gain over all positive cross-gains.

    Mean-square stability can be reached by some choice of gains iff this
    is below 1.
    """
    return noise.var_x * noise.var_y


def classify_mean_square(params: StochasticParams, tolerance: float = DEFAULT_TOLERANCE) -> StabilityVerdict:
    return classify_stability(averaged_gain(params), tolerance)


def step_stochastic(state: IncrementState, params: StochasticParams, rng: RandomSource) -> IncrementState:
    xi, eta = rng.draw(params.noise)
    return IncrementState((params.alpha + xi) * state.w, (params.beta + eta) * state.v, state.stage + 1)


def simulate_stochastic(initial, params: StochasticParams, steps: int, rng: RandomSource,
                        anchors: tuple[float, float] = (0.0, 0.0)) -> Trajectory:
    """One sample path.

    ``initial`` is an :class:`IncrementState` (pressures are then rebuilt as
    running sums starting from ``anchors``, the pressures at the initial
    stage) or a :class:`PressureState`. With zero noise the result equals
    :func:`~sancdyn.dynamics.simulate_deterministic` exactly.
    """
    if isinstance(steps, bool) or int(steps) != steps or steps < 0:
        raise ParameterError(f"steps must be a non-negative integer, got {steps!r}")
    steps = int(steps)
    if isinstance(initial, PressureState):
        x, y = initial.x_curr, initial.y_curr
        v, w = x - initial.x_prev, y - initial.y_prev
    else:
        x, y = float(anchors[0]), float(anchors[1])
        v, w = initial.v, initial.w
    stage = initial.stage
    alpha, beta = params.alpha, params.beta
    xi, eta = rng.draw_block(params.noise, steps)

    rows = [(stage, x, y, v, w)]
    overflow = None
    for k in range(steps):
        v, w = (alpha + float(xi[k])) * w, (beta + float(eta[k])) * v
        x, y = x + v, y + w
        stage += 1
        if not all(math.isfinite(t) for t in (x, y, v, w)):
            overflow = stage
            break
        rows.append((stage, x, y, v, w))
    return _trajectory_from_rows(rows, params, overflow)


def _squared_increments(params, initial, master_seed, lo, hi, horizon):
    """``v^2`` at stages 1..horizon for trajectories ``lo..hi-1`` (rows)."""
    streams = np.arange(lo, hi, dtype=np.uint64)
    noise = params.noise
    v = np.full(hi - lo, initial.v)
    w = np.full(hi - lo, initial.w)
    out = np.empty((hi - lo, horizon))
    out[:, 0] = v * v
    with np.errstate(over="ignore", invalid="ignore"):
        for d in range(horizon - 1):
            xi = noise_draws(master_seed, streams, d, XI, noise.sigma_x, noise.distribution)
            eta = noise_draws(master_seed, streams, d, ETA, noise.sigma_y, noise.distribution)
            v, w = (params.alpha + xi) * w, (params.beta + eta) * v
            out[:, d + 1] = v * v
    return out


def _slope_weights(k: int) -> np.ndarray:
    x = np.arange(k, dtype=float)
    x -= x.mean()
    return x / np.dot(x, x)


def monte_carlo_ms_growth(params: StochasticParams, n_trajectories: int, horizon: int,
                          rng: RandomSource | int, initial: IncrementState | None = None,
                          workers: int = 1) -> MonteCarloReport:
    """Estimate the two-stage growth factor of ``E v^2`` by simulation.

    Trajectory ``i`` is driven by stream ``i`` of the master seed. The
    estimate is ``exp(slope)`` of a least-squares line through
    ``log mean(v^2)`` on one parity class of stages (those of ``v_1``, or of
    ``v_2`` when ``v_1 == 0``), against the two-stage index. The 99%
    interval is a delta-method normal interval on the log scale, or a
    percentile bootstrap over trajectories below 1000 trajectories.
    ``workers`` only changes scheduling, never the result.
    """
    if isinstance(n_trajectories, bool) or int(n_trajectories) != n_trajectories or n_trajectories < 2:
        raise ParameterError(f"n_trajectories must be an integer >= 2, got {n_trajectories!r}")
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 3 or horizon % 2 == 0:
        raise ParameterError(f"horizon must be an odd integer >= 3, got {horizon!r}")
    n_trajectories, horizon = int(n_trajectories), int(horizon)
    master_seed = rng.master_seed if isinstance(rng, RandomSource) else RandomSource(rng).master_seed
    initial = initial or IncrementState(1.0, 1.0)

    bounds = [(lo, min(lo + _CHUNK, n_trajectories)) for lo in range(0, n_trajectories, _CHUNK)]

    def job(b):
        return _squared_increments(params, initial, master_seed, b[0], b[1], horizon)

    if workers and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(job, bounds))
    else:
        blocks = [job(b) for b in bounds]
    sq = np.concatenate(blocks, axis=0)

    if initial.v != 0.0:
        cols = np.arange(0, horizon, 2)
    else:
        cols = np.arange(1, horizon, 2)
    sample = sq[:, cols]
    if sample.shape[1] < 2:
        raise EstimationError("horizon too short for the non-zero parity class")
    if not np.all(np.isfinite(sq)):
        raise EstimationError("squared increments overflowed; shorten the horizon")
    means = sample.mean(axis=0)
    if np.any(means == 0.0):
        raise EstimationError("all trajectories are exactly zero on the parity class")

    c = _slope_weights(len(cols))
    slope = float(np.dot(c, np.log(means)))
    ratio = math.exp(slope)
    z = float(ndtri(0.5 + CONFIDENCE / 2.0))

    if n_trajectories < BOOTSTRAP_BELOW:
        method = "bootstrap"
        boot = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_BOOTSTRAP_KEY,)))
        idx = boot.integers(0, n_trajectories, size=(BOOTSTRAP_RESAMPLES, n_trajectories))
        bmeans = sample[idx].mean(axis=1)
        with np.errstate(divide="ignore"):
            bslopes = np.log(bmeans) @ c
        bslopes = np.where(np.isfinite(bslopes), bslopes, -np.inf)
        tail = (1.0 - CONFIDENCE) / 2.0
        lo_s, hi_s = np.quantile(bslopes, [tail, 1.0 - tail])
        ci_low = min(math.exp(lo_s), ratio)
        ci_high = max(math.exp(hi_s), ratio)
    else:
        method = "normal"
        grad = c / means
        cov = np.atleast_2d(np.cov(sample, rowvar=False))
        var = float(grad @ cov @ grad) / n_trajectories
        se = math.sqrt(max(var, 0.0))
        ci_low = math.exp(slope - z * se)
        ci_high = math.exp(slope + z * se)

    qbar = averaged_gain(params)
    return MonteCarloReport(
        n_trajectories=n_trajectories,
        horizon=horizon,
        empirical_ms_ratio=ratio,
        ci_low=ci_low,
        ci_high=ci_high,
        analytic_qbar=qbar,
        verdict=classify_stability(qbar),
        master_seed=master_seed,
        ci_method=method,
        stage_mean_squares=tuple(float(m) for m in sq.mean(axis=0)),
    )
