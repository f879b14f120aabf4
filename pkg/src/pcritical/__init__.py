"""Spiking reservoirs with P-CRITICAL branching-factor autoregulation."""

__version__ = "0.1.0"

from .lif import LifParams, PopulationState, SpikeRaster, poisson_raster, step_population
from .plasticity import (PCriticalParams, PCriticalState, QuantizedWeights, dequantize,
                         init_paired, pcritical_step, pcritical_step_fixed, quantize)
from .reservoir import RunResult, simulate, simulate_batch
from .topology import (InputMap, ReservoirTopology, Synapses, TopologyParams, build_input_map,
                       build_positions, connection_probability, normalized_laplacian_spectrum,
                       sample_reservoir, search_topology_params, spectral_radius,
                       spectral_radius_normalize, spectrum_kl)

__all__ = [
    "LifParams", "PopulationState", "SpikeRaster", "poisson_raster", "step_population",
    "PCriticalParams", "PCriticalState", "QuantizedWeights", "dequantize", "init_paired",
    "pcritical_step", "pcritical_step_fixed", "quantize",
    "RunResult", "simulate", "simulate_batch",
    "InputMap", "ReservoirTopology", "Synapses", "TopologyParams", "build_input_map",
    "build_positions", "connection_probability", "normalized_laplacian_spectrum",
    "sample_reservoir", "search_topology_params", "spectral_radius", "spectral_radius_normalize",
    "spectrum_kl",
]
