"""Small-world reservoir topology, spectral radius and eigenspectrum matching."""

# %% Grid positions and distance-dependent wiring
from pcritical.topology import (TopologyParams, build_input_map, normalized_laplacian_spectrum,
                                reference_spectrum, sample_reservoir, search_topology_params,
                                spectral_radius, spectral_radius_normalize, spectrum_kl)

params = TopologyParams()  # 512 neurons in 8x8x8, groups of 4 per axis
topo = sample_reservoir(params, seed=0)
print(f"{topo.weights.nnz} synapses, {(~topo.excitatory_mask).sum()} inhibitory neurons")
print("mean out-degree:", topo.weights.nnz / topo.n)

# %% Echo-state style normalization
rho = spectral_radius(topo.weights)
w = spectral_radius_normalize(topo.weights)
print(f"rho(|W|) = {rho:.3f} -> {spectral_radius(w):.6f} after normalization")

# %% Input projection: 64 inputs, two reservoir targets each
imap = build_input_map(64, topo.n, fan_out=2, seed=0)
print("input 0 drives neurons", imap.targets[0])

# %% Normalized-Laplacian spectrum and a short random search
spec = normalized_laplacian_spectrum(topo.weights)
print("spectrum range:", spec.min(), spec.max())
other = normalized_laplacian_spectrum(sample_reservoir(params, seed=1).weights)
print("KL to a second draw with the same parameters:", round(spectrum_kl(spec, other), 4))
best = search_topology_params(reference_spectrum(), budget=5, seed=0)
b = best.params
print(f"best of 5 random candidates: s={b.s:.1f} p={b.p:.0f} C={b.C:.3f} lam={b.lam:.0f}, "
      f"KL {best.score:.4f}")
