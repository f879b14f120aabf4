"""P-CRITICAL paired-neuron plasticity.

Each excitatory reservoir neuron ``i`` owns a paired LIF neuron that receives
``sum_j |w_ij| * spike_j``, i.e. the activity of i's post-synaptic targets
weighted by the (live) outgoing weights.  When the paired neuron fires, every
positive outgoing weight of ``i`` is depressed by
``alpha * exp(-|t_i - t_j| / tau_trace)``.  Every nonzero positive weight also
grows by ``beta`` each step, and magnitudes are clipped to ``[0, 1]``.
Inhibitory rows are never touched.

Two weight representations are supported: float magnitudes in ``[0, 1]`` and
an 8-bit mode (sign + magnitude in ``[0, 255]``) that emulates the
neuromorphic chip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lif import LifParams, PopulationState, step_population
from .topology import ReservoirTopology, Synapses

FLOAT = "float"
FIXED8 = "fixed8"
QMAX = 255
QSCALE = 256


@dataclass(frozen=True)
class PCriticalParams:
    alpha: float = 1e-2
    beta: float = 1e-5
    tau_trace: float = 5.0
    paired_lif: LifParams = LifParams(tau_v=5.0, tau_i=0.0)
    paired_vth_factor: float = 1.01
    mode: str = FLOAT
    weight_floor: float = 0.0  # >0 re-seeds pruned synapses; off by default

    def __post_init__(self):
        if not self.alpha > self.beta > 0:
            raise ValueError(f"need alpha > beta > 0, got alpha={self.alpha}, beta={self.beta}")
        if not self.tau_trace > 0:
            raise ValueError("tau_trace must be positive")
        if self.mode not in (FLOAT, FIXED8):
            raise ValueError(f"mode must be {FLOAT!r} or {FIXED8!r}, got {self.mode!r}")

    @classmethod
    def fixed(cls, **overrides) -> "PCriticalParams":
        """8-bit defaults: alpha=2 and beta=0.25 LSB, threshold 256."""
        kw = dict(alpha=2.0, beta=0.25, mode=FIXED8,
                  paired_lif=LifParams(tau_v=5.0, tau_i=0.0, v_th=256.0))
        kw.update(overrides)
        return cls(**kw)

    @property
    def paired_params(self) -> LifParams:
        return self.paired_lif.with_threshold_factor(self.paired_vth_factor)


@dataclass
class PCriticalState:
    paired: PopulationState
    excitatory_index: np.ndarray
    growth_accumulator: float = 0.0  # fixed mode only


@dataclass
class QuantizedWeights:
    """Sign + 8-bit magnitude per synapse, with the same edge order as ``Synapses``."""

    n: int
    pre: np.ndarray
    post: np.ndarray
    magnitude: np.ndarray
    sign: np.ndarray = field(repr=False)

    @classmethod
    def from_synapses(cls, syn: Synapses) -> "QuantizedWeights":
        return cls(syn.n, syn.pre.copy(), syn.post.copy(),
                   quantize(np.abs(syn.weight)), np.where(syn.weight < 0, -1, 1).astype(np.int8))

    def signed(self) -> np.ndarray:
        return self.sign * self.magnitude.astype(np.int64)

    def to_synapses(self) -> Synapses:
        """Dequantized float view (``q / 256``)."""
        return Synapses(self.n, self.pre.copy(), self.post.copy(),
                        self.sign * dequantize(self.magnitude))

    def copy(self) -> "QuantizedWeights":
        return QuantizedWeights(self.n, self.pre.copy(), self.post.copy(),
                                self.magnitude.copy(), self.sign.copy())


def quantize(w):
    """Map magnitudes in ``[0, 1]`` to integers in ``[0, 255]`` (saturating at 1.0)."""
    w = np.asarray(w, dtype=np.float64)
    if np.any((w < 0) | (w > 1)):
        raise ValueError("magnitudes must lie in [0, 1]")
    q = np.minimum(QMAX, np.rint(w * QSCALE)).astype(np.int32)
    return int(q) if q.ndim == 0 else q


def dequantize(q):
    out = np.asarray(q, dtype=np.float64) / QSCALE
    return float(out) if out.ndim == 0 else out


def init_paired(topology: ReservoirTopology, params: PCriticalParams = PCriticalParams()) -> PCriticalState:
    exc = topology.excitatory_index
    return PCriticalState(PopulationState.rest(len(exc), params.paired_lif), exc)


def _paired_drive(pre, post, magnitude, reservoir_spikes, state: PCriticalState, n: int) -> np.ndarray:
    s = np.asarray(reservoir_spikes, dtype=bool)
    hit = s[post]
    drive = np.bincount(pre[hit], weights=magnitude[hit], minlength=n)
    return drive[state.excitatory_index]


def _trace_factor(pre, post, t_last) -> np.ndarray:
    ti, tj = t_last[pre], t_last[post]
    both = np.isfinite(ti) & np.isfinite(tj)
    out = np.zeros(len(pre))
    out[both] = np.abs(ti[both] - tj[both])
    return both, out


def _depression_targets(pre, paired_spikes, state: PCriticalState, n: int) -> np.ndarray:
    fired = np.zeros(n, dtype=bool)
    fired[state.excitatory_index[paired_spikes]] = True
    return fired[pre]


def pcritical_step(synapses: Synapses, reservoir_spikes, t_last, state: PCriticalState,
                   params: PCriticalParams = PCriticalParams(), t: float | None = None) -> np.ndarray:
    """One float-mode plasticity step; updates ``synapses.weight`` in place.

    Args:
        synapses: reservoir weights as an edge list.
        reservoir_spikes: boolean reservoir spike vector at the current step.
        t_last: last spike time of every reservoir neuron, already updated
            for this step (``-inf`` for neurons that never fired).
        state: paired population, advanced in place.
        params: learning constants.
        t: current time, recorded as the paired neurons' last spike.

    Returns:
        Boolean spike vector of the paired population.
    """
    w = synapses.weight
    excit = w > 0
    _, paired_spikes = step_population(
        state.paired,
        _paired_drive(synapses.pre, synapses.post, np.abs(w), reservoir_spikes, state, synapses.n),
        params.paired_params, t)

    delta = np.where(excit, params.beta, 0.0)
    if paired_spikes.any():
        hit = excit & _depression_targets(synapses.pre, paired_spikes, state, synapses.n)
        idx = np.flatnonzero(hit)
        both, dt = _trace_factor(synapses.pre[idx], synapses.post[idx], np.asarray(t_last))
        dep = np.where(both, params.alpha * np.exp(-dt / params.tau_trace), 0.0)
        new = (w[idx] - dep) + params.beta
        delta[idx] = 0.0
        w[idx] = new
    w += delta
    if params.weight_floor > 0:
        pos_rows = _excitatory_rows(synapses.pre, state, synapses.n)
        w[pos_rows & (w <= 0)] = params.weight_floor
    np.clip(w, -1.0, 1.0, out=w)
    # excitatory synapses that fell below zero are pruned, never flipped
    w[excit & (w < 0)] = 0.0
    return paired_spikes


def _excitatory_rows(pre, state: PCriticalState, n: int) -> np.ndarray:
    rows = np.zeros(n, dtype=bool)
    rows[state.excitatory_index] = True
    return rows[pre]


def pcritical_step_fixed(q: QuantizedWeights, reservoir_spikes, t_last, state: PCriticalState,
                         params: PCriticalParams = PCriticalParams.fixed(),
                         t: float | None = None) -> np.ndarray:
    """One 8-bit plasticity step; updates ``q.magnitude`` in place.

    Depression subtracts ``round(alpha * exp(-dt / tau))`` LSBs, at least one
    whenever both neurons have fired.  Growth of ``beta`` LSB per step is
    accumulated globally and applied in whole LSBs (0.25 -> +1 every 4 steps).
    Only nonzero excitatory magnitudes grow; zero means pruned.
    """
    mag = q.magnitude
    excit = (q.sign > 0) & (mag > 0)
    _, paired_spikes = step_population(
        state.paired,
        _paired_drive(q.pre, q.post, mag.astype(np.float64), reservoir_spikes, state, q.n),
        params.paired_params, t)

    new = mag.astype(np.int64)
    if paired_spikes.any():
        hit = excit & _depression_targets(q.pre, paired_spikes, state, q.n)
        idx = np.flatnonzero(hit)
        both, dt = _trace_factor(q.pre[idx], q.post[idx], np.asarray(t_last))
        dep = np.rint(params.alpha * np.exp(-dt / params.tau_trace)).astype(np.int64)
        dep = np.where(both, np.maximum(dep, 1), 0)
        new[idx] -= dep

    state.growth_accumulator += params.beta
    inc = int(np.floor(state.growth_accumulator))
    state.growth_accumulator -= inc
    if inc:
        new[excit] += inc
    if params.weight_floor > 0:
        floor_q = max(1, quantize(min(params.weight_floor, 1.0)))
        rows = _excitatory_rows(q.pre, state, q.n)
        new[rows & (new <= 0)] = floor_q
    q.magnitude = np.clip(new, 0, QMAX).astype(mag.dtype)
    return paired_spikes
