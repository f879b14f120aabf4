"""P-CRITICAL regulates the mean weight against the input rate.

Higher input rates push the reservoir harder, the paired neurons fire more
often, and the converged excitatory weight settles lower.
"""

# %%
import tempfile

from pcritical.config import ExperimentConfig
from pcritical.experiments import run_freq_sweep

cfg = ExperimentConfig.default("freq-sweep", seeds=[0], output_dir=tempfile.mkdtemp())
res = run_freq_sweep(cfg)
for rate in res.rates:
    print(f"{rate:4.0f} Hz -> converged mean weight {res.converged[(0, rate)]:.4f}")
print("strictly decreasing:", res.decreasing(0))
print("per-step trajectories written to", cfg.output_dir)
