"""Leaky integrate-and-fire neurons, step by step.

Run with ``python demos/01_lif_neurons.py``.
"""

# %% A single neuron under constant drive
import numpy as np

from pcritical.lif import LifParams, PopulationState, poisson_raster, step_population

params = LifParams()  # tau_v=30 ms, tau_i=1 ms, v_th=1, 2 ms refractory
state = PopulationState.rest(1, params)
spike_times = []
for t in range(200):
    _, spikes = step_population(state, np.array([0.1]), params, t)
    if spikes[0]:
        spike_times.append(t)
print("spike times under drive 0.1:", spike_times[:6], "...")
print("inter-spike interval:", np.diff(spike_times)[:5])

# %% Poisson input trains
raster = poisson_raster(170, rate=40.0, duration=1000, seed=0)
print(f"170 inputs at 40 Hz for 1 s: {raster.count()} spikes (expected 6800)")
