"""Reservoir features and a batch-normalized softmax readout on a synthetic task.

Three reservoirs share the topology and input map: the untuned random one,
one normalized by its spectral radius, and one tuned by P-CRITICAL.
"""

# %%
import tempfile

from pcritical.config import ExperimentConfig
from pcritical.experiments import run_classify

cfg = ExperimentConfig.default("classify", seeds=[0, 1], output_dir=tempfile.mkdtemp())
res = run_classify(cfg)
for cond in cfg.readout.conditions:
    print(f"{cond:10s} test accuracy {res.mean(cond):.3f} +- {res.std(cond):.3f}")
