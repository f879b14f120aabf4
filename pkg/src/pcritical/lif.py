"""Current-based leaky-integrate-and-fire populations and spike rasters.

The update is exponential Euler with decay factors precomputed from the
time constants.  Within one step the previous state is decayed first, the
new input is added to the synaptic current, the current is added to the
membrane potential, and the threshold is tested last.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

NEVER = -np.inf  # last-spike sentinel for neurons that have not fired yet


@dataclass(frozen=True)
class LifParams:
    """Neuron-model constants. Times are in milliseconds."""

    tau_v: float = 30.0
    tau_i: float = 1.0
    v_reset: float = 0.0
    v_th: float = 1.0
    t_refrac: float = 2.0
    dt: float = 1.0

    def __post_init__(self):
        if not self.tau_v > 0:
            raise ValueError(f"tau_v must be positive, got {self.tau_v}")
        if self.tau_i < 0:
            raise ValueError(f"tau_i must be non-negative, got {self.tau_i}")
        if not self.v_th > self.v_reset:
            raise ValueError(f"v_th ({self.v_th}) must exceed v_reset ({self.v_reset})")
        if self.t_refrac < 0:
            raise ValueError(f"t_refrac must be non-negative, got {self.t_refrac}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @classmethod
    def fixed(cls, **overrides) -> "LifParams":
        """Defaults for the 8-bit weight mode, where the threshold is 256."""
        return cls(**{"v_th": 256.0, **overrides})

    @property
    def decay_v(self) -> float:
        return float(np.exp(-self.dt / self.tau_v))

    @property
    def decay_i(self) -> float:
        # tau_i == 0: the current does not persist between steps
        if self.tau_i == 0:
            return 0.0
        return float(np.exp(-self.dt / self.tau_i))

    def with_threshold_factor(self, factor: float) -> "LifParams":
        return replace(self, v_th=self.v_th * factor)


@dataclass
class PopulationState:
    v: np.ndarray
    i: np.ndarray
    refrac_remaining: np.ndarray
    t_last_spike: np.ndarray

    @classmethod
    def rest(cls, n: int, params: LifParams | None = None) -> "PopulationState":
        v_reset = 0.0 if params is None else params.v_reset
        return cls(
            v=np.full(n, v_reset, dtype=np.float64),
            i=np.zeros(n, dtype=np.float64),
            refrac_remaining=np.zeros(n, dtype=np.float64),
            t_last_spike=np.full(n, NEVER, dtype=np.float64),
        )

    @property
    def size(self) -> int:
        return self.v.shape[-1]

    def copy(self) -> "PopulationState":
        return PopulationState(self.v.copy(), self.i.copy(),
                               self.refrac_remaining.copy(), self.t_last_spike.copy())


def step_population(state: PopulationState, weighted_input, params: LifParams,
                    t: float | None = None) -> tuple[PopulationState, np.ndarray]:
    """Advance a population by one step, in place.

    Args:
        state: population state; its arrays are updated in place and the
            same object is returned.
        weighted_input: per-neuron current increment for this step.
        params: neuron constants.
        t: current time in ms, used to record ``t_last_spike``.  When None
            the last-spike record is left untouched.

    Returns:
        ``(state, spikes)`` where ``spikes`` is a boolean vector.

    Works on any leading batch shape as long as ``weighted_input`` matches
    the state arrays.
    """
    x = np.asarray(weighted_input, dtype=np.float64)
    if x.shape != state.v.shape:
        raise ValueError(
            f"input shape {x.shape} does not match population shape {state.v.shape}")

    refractory = state.refrac_remaining > 0
    active = ~refractory

    state.i *= params.decay_i
    state.i += np.where(active, x, 0.0)
    v = state.v * params.decay_v + state.i
    spikes = active & (v >= params.v_th)
    v[refractory | spikes] = params.v_reset
    state.v = v

    state.refrac_remaining = np.where(
        refractory, np.maximum(state.refrac_remaining - params.dt, 0.0), state.refrac_remaining)
    state.refrac_remaining[spikes] = params.t_refrac
    if t is not None:
        state.t_last_spike[spikes] = t
    return state, spikes


@dataclass
class SpikeRaster:
    """Binary spike activity, stored densely as ``(duration, n_neurons)``.

    One row per 1 ms timestep, so a neuron can fire at most once per step.
    """

    dense: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.dense = np.asarray(self.dense, dtype=bool)
        if self.dense.ndim != 2:
            raise ValueError("raster must be a 2-D (time, neuron) array")

    @classmethod
    def empty(cls, n_neurons: int, duration: int) -> "SpikeRaster":
        return cls(np.zeros((int(duration), int(n_neurons)), dtype=bool))

    @classmethod
    def from_events(cls, n_neurons: int, duration: int,
                    events: Iterable[tuple[int, int]]) -> "SpikeRaster":
        raster = cls.empty(n_neurons, duration)
        ev = np.asarray(list(events), dtype=np.int64).reshape(-1, 2)
        if len(ev):
            idx, times = ev[:, 0], ev[:, 1]
            if idx.min() < 0 or idx.max() >= n_neurons:
                raise ValueError("neuron index out of range")
            if times.min() < 0 or times.max() >= duration:
                raise ValueError("event time outside [0, duration)")
            raster.dense[times, idx] = True
        return raster

    @property
    def duration(self) -> int:
        return self.dense.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.dense.shape[1]

    @property
    def events(self) -> list[tuple[int, int]]:
        """Sorted ``(neuron_index, time_ms)`` pairs, ordered by time."""
        times, idx = np.nonzero(self.dense)
        return list(zip(idx.tolist(), times.tolist()))

    def count(self) -> int:
        return int(self.dense.sum())

    def counts_per_step(self) -> np.ndarray:
        return self.dense.sum(axis=1)

    def select(self, neurons) -> "SpikeRaster":
        return SpikeRaster(self.dense[:, neurons])

    def window(self, start: int, stop: int | None = None) -> "SpikeRaster":
        return SpikeRaster(self.dense[start:stop])

    def __eq__(self, other):
        if not isinstance(other, SpikeRaster):
            return NotImplemented
        return self.dense.shape == other.dense.shape and bool(np.array_equal(self.dense, other.dense))


def poisson_raster(n_neurons: int, rate: float, duration: int, seed: int) -> SpikeRaster:
    """Independent Bernoulli spikes per neuron and 1 ms step, p = min(1, rate/1000)."""
    if rate < 0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    rng = np.random.default_rng(seed)
    p = min(1.0, rate / 1000.0)
    return SpikeRaster(rng.random((int(duration), int(n_neurons))) < p)
