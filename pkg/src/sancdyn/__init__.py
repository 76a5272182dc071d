"""Iterated sanctions / counter-sanctions dynamics: simulation and stability analysis."""

from sancdyn.errors import (
    ConfigurationError,
    DivergenceError,
    EstimationError,
    ParameterError,
    SancdynError,
    ScenarioError,
)
from sancdyn.dynamics import (
    IncrementState,
    LanchesterState,
    LanchesterTrajectory,
    ModelParams,
    PressureState,
    Stability,
    StabilityVerdict,
    Trajectory,
    classify_stability,
    closed_form_increments,
    cumulative_limit,
    decoupled_step,
    lanchester_step,
    simulate_deterministic,
    simulate_lanchester,
    step_increments,
    step_pressures,
    total_gain,
)
from sancdyn.noise import Distribution, NoiseSpec, RandomSource
from sancdyn.stochastic import (
    MonteCarloReport,
    StochasticParams,
    averaged_gain,
    classify_mean_square,
    min_achievable_gain,
    monte_carlo_ms_growth,
    simulate_stochastic,
    step_stochastic,
)
from sancdyn.analysis import (
    Comparison,
    GrowthEstimate,
    MonteCarloConfig,
    StabilityGrid,
    SweepMode,
    compare_empirical_analytic,
    estimate_growth_rate,
    sweep_stability_region,
)

__version__ = "0.1.0"
