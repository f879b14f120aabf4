"""Branching-factor estimators and activity statistics.

All functions are pure and work on saved rasters.  Steps where an estimator
divides by zero are marked undefined (NaN value, ``defined == False``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lif import SpikeRaster
from .plasticity import QSCALE, QuantizedWeights
from .topology import InputMap, Synapses

GLOBAL = "global"
TOPOLOGY_AWARE = "topology_aware"


@dataclass
class BranchingSeries:
    values: np.ndarray  # NaN where undefined
    method: str
    smoothed: bool = False

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def mean(self, start: int = 0) -> float:
        """Time average over defined steps from ``start`` on (NaN if none)."""
        v = self.values[start:]
        v = v[~np.isnan(v)]
        return float(v.mean()) if v.size else float("nan")

    def __len__(self):
        return len(self.values)


@dataclass
class PoincareFit:
    pairs: np.ndarray  # (n_bins - 1, 2)
    slope: float
    intercept: float
    counts: np.ndarray


def _dense(raster) -> np.ndarray:
    return raster.dense if isinstance(raster, SpikeRaster) else np.asarray(raster, dtype=bool)


def self_induced(reservoir_raster, input_raster, input_map: InputMap) -> SpikeRaster:
    """Remove reservoir spikes that coincide with a mapped input spike."""
    res = _dense(reservoir_raster)
    inp = _dense(input_raster)
    if inp.shape[0] != res.shape[0]:
        raise ValueError(f"durations differ: reservoir {res.shape[0]}, input {inp.shape[0]}")
    if inp.shape[1] != input_map.n_inputs or res.shape[1] != input_map.n_reservoir:
        raise ValueError("raster widths do not match the input map")
    return SpikeRaster(res & ~input_map.map_raster(inp))


def branching_global(raster) -> BranchingSeries:
    """sigma(t) = total(t + 1) / total(t); length ``T - 1``."""
    counts = _dense(raster).sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(counts[:-1] > 0, counts[1:] / counts[:-1], np.nan)
    return BranchingSeries(values, GLOBAL)


def _adjacency_matrix(adjacency, n: int) -> sp.csr_matrix:
    if sp.issparse(adjacency) or isinstance(adjacency, np.ndarray):
        a = sp.csr_matrix(adjacency)
    else:
        rows = np.concatenate([np.full(len(t), i) for i, t in enumerate(adjacency)] or [np.zeros(0)])
        cols = np.concatenate([np.asarray(t) for t in adjacency] or [np.zeros(0)])
        a = sp.csr_matrix((np.ones(len(rows)), (rows.astype(int), cols.astype(int))), shape=(n, n))
    if a.shape != (n, n):
        raise ValueError(f"adjacency shape {a.shape} does not match {n} neurons")
    return (a != 0).astype(np.float64).tocsr()


def branching_local(raster, adjacency) -> BranchingSeries:
    """Topology-aware estimate: mean over neurons spiking at t of their targets spiking at t+1.

    ``adjacency`` is a matrix with ``A[i, j] != 0`` for a synapse i -> j, or a
    list of post-synaptic target index arrays.  A post-synaptic spike shared by
    several spiking pre-synaptic neurons is counted once for each of them.
    """
    s = _dense(raster).astype(np.float64)
    a = _adjacency_matrix(adjacency, s.shape[1])
    post_hits = (a @ s[1:].T).T  # (T-1, n): targets of i firing at t+1
    n_pre = s[:-1].sum(axis=1)
    total = np.einsum("tn,tn->t", s[:-1], post_hits)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(n_pre > 0, total / n_pre, np.nan)
    return BranchingSeries(values, TOPOLOGY_AWARE)


def gaussian_smooth(series, sigma: float = 0.7):
    """Gaussian filter that skips undefined (NaN) samples.

    The kernel is truncated at 4 sigma and renormalized over the samples that
    are both in range and defined, so edges and gaps do not bias the result.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    is_series = isinstance(series, BranchingSeries)
    x = np.asarray(series.values if is_series else series, dtype=np.float64)
    radius = int(np.ceil(4 * sigma))
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    ok = ~np.isnan(x)
    num = np.convolve(np.where(ok, x, 0.0), k, mode="same")
    den = np.convolve(ok.astype(np.float64), k, mode="same")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / den, np.nan)
    if is_series:
        return BranchingSeries(out, series.method, smoothed=True)
    return out


def bin_counts(raster, bin_ms: int) -> np.ndarray:
    counts = _dense(raster).sum(axis=1) if not np.ndim(raster) == 1 else np.asarray(raster)
    n_bins = len(counts) // bin_ms
    return counts[: n_bins * bin_ms].reshape(n_bins, bin_ms).sum(axis=1)


def poincare(raster, bin_ms: int = 5) -> PoincareFit:
    """Consecutive binned counts ``(c_k, c_k+1)`` and their least-squares line.

    Accepts a raster or a 1-D per-step count series.  If the counts have no
    spread (constant activity) the slope is the ratio of means, which is 1 on
    the diagonal.
    """
    if bin_ms < 1:
        raise ValueError("bin_ms must be >= 1")
    counts = bin_counts(raster, int(bin_ms))
    if len(counts) < 3:
        raise ValueError(f"need at least 3 bins, got {len(counts)}")
    if np.count_nonzero(counts) < 3:
        raise ValueError("fewer than 3 nonzero bins: activity is too sparse for a fit")
    x = counts[:-1].astype(np.float64)
    y = counts[1:].astype(np.float64)
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx == 0:
        slope = y.mean() / x.mean()
    else:
        slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    return PoincareFit(np.stack([x, y], axis=1), float(slope), intercept, counts)


def _snapshot_magnitudes(snap, excitatory_mask):
    if isinstance(snap, tuple) and len(snap) == 2 and not isinstance(snap[0], np.ndarray):
        snap = snap[1]  # (timestep, weights)
    if isinstance(snap, QuantizedWeights):
        return snap.magnitude[snap.sign > 0] / QSCALE
    if isinstance(snap, Synapses):
        w = snap.weight
        if excitatory_mask is not None:
            return np.abs(w[np.asarray(excitatory_mask)[snap.pre]])
        return w[w > 0]
    if sp.issparse(snap):
        coo = snap.tocoo()
        if excitatory_mask is not None:
            return np.abs(coo.data[np.asarray(excitatory_mask)[coo.row]])
        return coo.data[coo.data > 0]
    w = np.asarray(snap, dtype=np.float64)
    if excitatory_mask is not None and w.ndim == 2:
        return np.abs(w[np.asarray(excitatory_mask)])
    return w[w > 0]


def mean_weight_series(snapshots, excitatory_mask=None) -> np.ndarray:
    """Mean nonzero excitatory magnitude per snapshot; 8-bit snapshots in q/256 units."""
    if len(snapshots) == 0:
        raise ValueError("need at least one snapshot")
    out = []
    for snap in snapshots:
        m = np.asarray(_snapshot_magnitudes(snap, excitatory_mask), dtype=np.float64)
        m = m[m > 0]
        out.append(m.mean() if m.size else 0.0)
    return np.asarray(out)
