"""Step-by-step liquid-state-machine simulation.

Per step: recurrent drive from the previous step's spikes plus mapped input
spikes, reservoir LIF update, then (optionally) the P-CRITICAL update.  The
plasticity step sees the reservoir spikes of the current step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lif import LifParams, PopulationState, SpikeRaster, step_population
from .plasticity import (FIXED8, QSCALE, PCriticalParams, QuantizedWeights, init_paired,
                         pcritical_step, pcritical_step_fixed)
from .topology import InputMap, ReservoirTopology, Synapses


@dataclass
class RunResult:
    spikes: SpikeRaster
    input_mask: np.ndarray = field(repr=False)  # (T, n) reservoir neurons hit by input
    mean_weight: np.ndarray = field(repr=False)
    paired_spike_count: np.ndarray = field(repr=False)
    synapses: Synapses = field(repr=False)
    quantized: QuantizedWeights | None = field(default=None, repr=False)
    snapshots: list = field(default_factory=list, repr=False)

    @property
    def self_induced(self) -> SpikeRaster:
        return SpikeRaster(self.spikes.dense & ~self.input_mask)


def mean_excitatory_weight(weights, excitatory_pre) -> float:
    """Mean of nonzero excitatory magnitudes (pruned synapses excluded)."""
    w = np.abs(np.asarray(weights, dtype=np.float64))[excitatory_pre]
    w = w[w > 0]
    return float(w.mean()) if w.size else 0.0


def simulate(topology: ReservoirTopology, input_map: InputMap, input_raster,
             lif: LifParams | None = None, plasticity: PCriticalParams | None = None,
             synapses: Synapses | QuantizedWeights | None = None,
             snapshot_every: int | None = None,
             state: PopulationState | None = None) -> RunResult:
    """Drive a reservoir with an input raster.

    Args:
        topology: reservoir; its weights are used unless ``synapses`` is given.
        input_map: input projection.
        input_raster: ``SpikeRaster`` (or dense bool array) of shape
            ``(T, n_inputs)``.
        lif: reservoir neuron constants; defaults follow the weight mode.
        plasticity: P-CRITICAL constants, or None for a frozen reservoir.
        synapses: starting weights (float ``Synapses`` or ``QuantizedWeights``),
            e.g. to continue a previous run.
        snapshot_every: record a weight snapshot every this many steps.
        state: reservoir state to continue from.
    """
    dense_in = input_raster.dense if isinstance(input_raster, SpikeRaster) else np.asarray(input_raster, bool)
    T = dense_in.shape[0]
    n = topology.n
    fixed = plasticity is not None and plasticity.mode == FIXED8
    if isinstance(synapses, QuantizedWeights):
        fixed = True
    if lif is None:
        lif = LifParams.fixed() if fixed else LifParams()
    unit = QSCALE if fixed else 1.0

    if fixed:
        q = synapses.copy() if isinstance(synapses, QuantizedWeights) else \
            QuantizedWeights.from_synapses(synapses or topology.synapses())
        pre, post = q.pre, q.post
        syn = None
    else:
        syn = (synapses or topology.synapses()).copy()
        pre, post = syn.pre, syn.post
        q = None
    exc_pre = topology.excitatory_mask[pre]

    res = state.copy() if state is not None else PopulationState.rest(n, lif)
    pstate = init_paired(topology, plasticity) if plasticity is not None else None

    input_mask = input_map.map_raster(dense_in)
    input_drive = input_map.drive(dense_in) * unit

    out = np.zeros((T, n), dtype=bool)
    mean_w = np.zeros(T)
    paired_count = np.zeros(T, dtype=np.int64)
    snapshots = []
    prev = np.zeros(n, dtype=bool)
    for t in range(T):
        w_signed = q.signed().astype(np.float64) if fixed else syn.weight
        hit = prev[pre]
        drive = np.bincount(post[hit], weights=w_signed[hit], minlength=n) + input_drive[t]
        _, spikes = step_population(res, drive, lif, t)
        if plasticity is not None:
            if fixed:
                ps = pcritical_step_fixed(q, spikes, res.t_last_spike, pstate, plasticity, t)
            else:
                ps = pcritical_step(syn, spikes, res.t_last_spike, pstate, plasticity, t)
            paired_count[t] = ps.sum()
        out[t] = spikes
        prev = spikes
        if fixed:
            mean_w[t] = mean_excitatory_weight(q.magnitude, exc_pre) / QSCALE
        else:
            mean_w[t] = mean_excitatory_weight(syn.weight, exc_pre)
        if snapshot_every and (t + 1) % snapshot_every == 0:
            snapshots.append((t + 1, q.to_synapses() if fixed else syn.copy()))

    final = q.to_synapses() if fixed else syn
    return RunResult(SpikeRaster(out), input_mask, mean_w, paired_count, final, q, snapshots)


def simulate_batch(topology: ReservoirTopology, weights, input_map: InputMap,
                   inputs: np.ndarray, lif: LifParams = LifParams()) -> np.ndarray:
    """Run a frozen reservoir on a batch of independent samples.

    ``inputs`` has shape ``(B, T, n_inputs)``; every sample starts from rest.
    Returns reservoir spikes of shape ``(B, T, n)``.
    """
    if isinstance(weights, Synapses):
        weights = weights.to_matrix()
    w_t = sp.csr_matrix(weights, dtype=np.float64).T.tocsr()
    inputs = np.asarray(inputs, dtype=bool)
    B, T, _ = inputs.shape
    n = topology.n
    state = PopulationState.rest(n, lif)
    state = PopulationState(*(np.broadcast_to(a, (B, n)).copy() for a in
                              (state.v, state.i, state.refrac_remaining, state.t_last_spike)))
    out = np.zeros((B, T, n), dtype=bool)
    prev = np.zeros((B, n))
    for t in range(T):
        drive = (w_t @ prev.T).T + input_map.drive(inputs[:, t])
        _, spikes = step_population(state, drive, lif)
        out[:, t] = spikes
        prev = spikes.astype(np.float64)
    return out
