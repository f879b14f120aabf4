"""8-bit weight mode next to float mode on the same reservoir and drive."""

# %%
import numpy as np

from pcritical.lif import poisson_raster
from pcritical.plasticity import PCriticalParams, dequantize, quantize
from pcritical.reservoir import simulate
from pcritical.topology import TopologyParams, build_input_map, sample_reservoir

print("quantize 0.5 ->", quantize(0.5), "; dequantize(128) ->", dequantize(128))

topo = sample_reservoir(TopologyParams(), seed=0)
imap = build_input_map(170, topo.n, seed=0)
drive = poisson_raster(170, 20.0, 3000, seed=0)

flt = simulate(topo, imap, drive, plasticity=PCriticalParams())
fix = simulate(topo, imap, drive, plasticity=PCriticalParams.fixed())

# %% Default 8-bit constants grow by 0.25 LSB per step, far above the float beta
for name, res in (("float", flt), ("fixed8", fix)):
    print(f"{name:6s}: mean weight {res.mean_weight[-1]:.4f}, "
          f"{res.spikes.count() / topo.n / 3:.1f} Hz per neuron")

# %% A growth rate matched to the float beta (1e-5 * 256 LSB per step)
matched = simulate(topo, imap, drive, plasticity=PCriticalParams.fixed(beta=1e-5 * 256))
print(f"fixed8 with matched beta: mean weight {matched.mean_weight[-1]:.4f}")
print("magnitudes stay in", np.min(fix.quantized.magnitude), "...", np.max(fix.quantized.magnitude))
