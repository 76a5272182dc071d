"""Zero-mean gain perturbations and reproducible random streams.

Every noise value is a pure function of ``(master_seed, stream_index,
draw_index, channel)``: the master seed is expanded once through
``numpy.random.SeedSequence`` into per-channel keys, and each draw is a
SplitMix64 output at the requested counter. A stream can therefore be
evaluated for a single path or for a whole batch of streams at once, and
the values never depend on how the batch was split up.

The X and Y perturbations use separate channels (separate keys), so they
are independent streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from sancdyn.errors import ParameterError

XI, ETA = 0, 1

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53
_SQRT3 = math.sqrt(3.0)
MAX_SEED = 2 ** 64 - 1


class Distribution(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NoiseSpec:
    """Standard deviations of the X and Y gain perturbations."""

    sigma_x: float = 0.0
    sigma_y: float = 0.0
    distribution: Distribution = Distribution.GAUSSIAN

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value >= 0.0):
                raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)
        try:
            object.__setattr__(self, "distribution", Distribution(self.distribution))
        except ValueError:
            raise ParameterError(f"unknown distribution {self.distribution!r}") from None

    @property
    def var_x(self) -> float:
        return self.sigma_x * self.sigma_x

    @property
    def var_y(self) -> float:
        return self.sigma_y * self.sigma_y

    @property
    def noiseless(self) -> bool:
        return self.sigma_x == 0.0 and self.sigma_y == 0.0


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


@lru_cache(maxsize=256)
def _channel_keys(master_seed: int) -> np.ndarray:
    return np.random.SeedSequence(master_seed).generate_state(2, dtype=np.uint64)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform_draws(master_seed: int, streams, draw_index, channel: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1).

    ``streams`` and ``draw_index`` broadcast against each other.
    """
    key = _channel_keys(_check_seed(master_seed))[channel]
    streams = np.asarray(streams, dtype=np.uint64)
    counter = np.asarray(draw_index, dtype=np.uint64) + np.uint64(1)
    with np.errstate(over="ignore"):
        state = _mix((streams * _GAMMA) ^ key)
        z = _mix(state + counter * _GAMMA)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def noise_draws(master_seed: int, streams, draw_index, channel: int,
                sigma: float, distribution: Distribution) -> np.ndarray:
    """Zero-mean perturbations with standard deviation ``sigma``, one per stream."""
    u = uniform_draws(master_seed, streams, draw_index, channel)
    if distribution is Distribution.GAUSSIAN:
        return sigma * ndtri(u)
    return (sigma * _SQRT3) * (2.0 * u - 1.0)


@dataclass
class RandomSource:
    """One random stream identified by ``(master_seed, stream_index)``.

    Mutable: each call to :meth:`draw` consumes the next counter value, so a
    source should be owned by a single execution context.
    """

    master_seed: int
    stream_index: int = 0
    position: int = field(default=0, compare=False)

    def __post_init__(self):
        self.master_seed = _check_seed(self.master_seed)
        if isinstance(self.stream_index, bool) or int(self.stream_index) != self.stream_index \
                or not 0 <= self.stream_index <= MAX_SEED:
            raise ParameterError(f"stream_index must be a non-negative integer, got {self.stream_index!r}")
        self.stream_index = int(self.stream_index)

    def draw(self, noise: NoiseSpec) -> tuple[float, float]:
        """Next ``(xi, eta)`` pair."""
        xi, eta = self.draw_block(noise, 1)
        return float(xi[0]), float(eta[0])

    def draw_block(self, noise: NoiseSpec, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``count`` pairs as two arrays."""
        d = np.arange(self.position, self.position + count, dtype=np.uint64)
        xi = noise_draws(self.master_seed, self.stream_index, d, XI, noise.sigma_x, noise.distribution)
        eta = noise_draws(self.master_seed, self.stream_index, d, ETA, noise.sigma_y, noise.distribution)
        self.position += count
        return xi, eta

    def spawn(self, stream_index: int) -> RandomSource:
        """Fresh source on another stream of the same master seed."""
        return RandomSource(self.master_seed, stream_index)
