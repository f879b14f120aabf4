"""Branching factor and Poincare plot of self-induced activity."""

# %%
import tempfile

import numpy as np

from pcritical.config import ExperimentConfig
from pcritical.experiments import run_branching, run_poincare

out = tempfile.mkdtemp()
br = run_branching(ExperimentConfig.default("branching", seeds=[0], output_dir=out))
g, loc = br.summary(0)
print(f"after 2500 ms: global sigma {g:.3f}, topology-aware sigma {loc:.3f}")

# %% Poincare: consecutive 5 ms counts after the adaptation window
pc = run_poincare(ExperimentConfig.default("poincare", seeds=[0], output_dir=out))
fit = pc.per_seed[0]["fit"]
print(f"slope {fit.slope:.3f} over {len(fit.pairs)} pairs")

# %% The same reservoir with every weight forced to 1 and no plasticity
ctrl = run_poincare(ExperimentConfig.default(
    "poincare", seeds=[0], output_dir=out, plasticity={"enabled": False},
    reservoir={"force_magnitude": 1.0}))
d = ctrl.per_seed[0]
print(f"supercritical control: {d['rate_hz']:.0f} Hz per neuron, saturated={d['saturated']}, "
      f"slope {d['fit'].slope:.3f}")
print("mean pair count:", np.mean(fit.pairs, axis=0))
