"""Scenario documents: a single JSON object with a ``model`` discriminator.

Example::

    {"model": "stochastic", "alpha": 0.8, "beta": 0.8,
     "x0": 0, "x1": 1, "y0": 0, "y1": 1,
     "sigma_x": 0.3, "sigma_y": 0.3, "distribution": "gaussian",
     "steps": 10, "seed": 42, "trajectories": 200000}
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from sancdyn.dynamics import LanchesterState, ModelParams, PressureState
from sancdyn.errors import ScenarioError
from sancdyn.noise import MAX_SEED, Distribution, NoiseSpec
from sancdyn.stochastic import StochasticParams

MODELS = ("deterministic", "stochastic", "lanchester")

_PRESSURES = ("x0", "x1", "y0", "y1")
REQUIRED = {
    "deterministic": ("alpha", "beta", *_PRESSURES, "steps"),
    "stochastic": ("alpha", "beta", *_PRESSURES, "sigma_x", "sigma_y", "distribution", "steps", "seed"),
    "lanchester": ("alpha", "beta", "r0", "g0", "dt", "steps"),
}
OPTIONAL = {
    "deterministic": (),
    "stochastic": ("trajectories",),
    "lanchester": (),
}


@dataclass(frozen=True)
class Scenario:
    model: str
    alpha: float
    beta: float
    steps: int
    x0: float | None = None
    x1: float | None = None
    y0: float | None = None
    y1: float | None = None
    r0: float | None = None
    g0: float | None = None
    dt: float | None = None
    sigma_x: float | None = None
    sigma_y: float | None = None
    distribution: str | None = None
    seed: int | None = None
    trajectories: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> Scenario:
        if not isinstance(doc, dict):
            raise ScenarioError(None, "scenario must be a JSON object")
        model = doc.get("model")
        if model is None:
            raise ScenarioError("model", f"missing required field; expected one of {', '.join(MODELS)}")
        if model not in MODELS:
            raise ScenarioError("model", f"unknown model {model!r}; expected one of {', '.join(MODELS)}")
        allowed = {"model", *REQUIRED[model], *OPTIONAL[model]}
        for key in doc:
            if key not in allowed:
                raise ScenarioError(key, f"unknown field for model {model!r}")
        for key in REQUIRED[model]:
            if key not in doc:
                raise ScenarioError(key, f"missing required field for model {model!r}")

        values = {"model": model}
        for key, raw in doc.items():
            if key != "model":
                values[key] = _CHECKS[key](key, raw)
        return cls(**values)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def with_overrides(self, **overrides) -> Scenario:
        """Flag-over-file precedence; ``None`` values are ignored."""
        doc = self.to_dict()
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return Scenario.from_dict(doc)

    # -- domain views --

    def model_params(self) -> ModelParams:
        return ModelParams(self.alpha, self.beta)

    def pressure_state(self) -> PressureState:
        return PressureState.from_samples(self.x0, self.x1, self.y0, self.y1)

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.sigma_x, self.sigma_y, Distribution(self.distribution))

    def stochastic_params(self) -> StochasticParams:
        return StochasticParams(self.model_params(), self.noise())

    def lanchester_state(self) -> LanchesterState:
        return LanchesterState(self.r0, self.g0, self.dt)


def _real(key, raw) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ScenarioError(key, f"must be a number, got {raw!r}")
    value = float(raw)
    if not math.isfinite(value):
        raise ScenarioError(key, f"must be finite, got {raw!r}")
    return value


def _positive(key, raw) -> float:
    value = _real(key, raw)
    if value <= 0.0:
        rule = "positive cross-gain" if key in ("alpha", "beta") else "positive"
        raise ScenarioError(key, f"must be > 0 ({rule}), got {raw!r}")
    return value


def _non_negative(key, raw) -> float:
    value = _real(key, raw)
    if value < 0.0:
        raise ScenarioError(key, f"must be >= 0, got {raw!r}")
    return value


def _count(key, raw) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ScenarioError(key, f"must be an integer, got {raw!r}")
    if raw < 1:
        raise ScenarioError(key, f"must be a positive integer, got {raw!r}")
    return raw


def _seed(key, raw) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ScenarioError(key, f"must be an integer, got {raw!r}")
    if not 0 <= raw <= MAX_SEED:
        raise ScenarioError(key, f"must be an unsigned 64-bit integer, got {raw!r}")
    return raw


def _distribution(key, raw) -> str:
    names = [d.value for d in Distribution]
    if raw not in names:
        raise ScenarioError(key, f"must be one of {', '.join(names)}, got {raw!r}")
    return raw


_CHECKS = {
    "alpha": _positive, "beta": _positive,
    "x0": _real, "x1": _real, "y0": _real, "y1": _real,
    "r0": _real, "g0": _real, "dt": _positive,
    "sigma_x": _non_negative, "sigma_y": _non_negative,
    "distribution": _distribution,
    "steps": _count, "trajectories": _count, "seed": _seed,
}


def _no_duplicates(pairs):
    doc = {}
    for key, value in pairs:
        if key in doc:
            raise ScenarioError(key, "duplicate field")
        doc[key] = value
    return doc


def parse_scenario(text: bytes | str) -> Scenario:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError(None, f"not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates,
                         parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioError(None, f"malformed JSON: {exc}") from None
    return Scenario.from_dict(doc)


def _reject_constant(name):
    raise ScenarioError(None, f"non-finite number {name} is not allowed")
