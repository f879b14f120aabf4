"""Canned experiments: weight autoregulation, branching, Poincare, classification
and topology search.  Each writes plot-ready CSVs plus ``manifest.json`` into
the configured output directory and returns its results in memory.
"""

from __future__ import annotations

import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (branching_global, branching_local, gaussian_smooth, poincare)
from .config import ExperimentConfig
from .events import EventStream, load_events, save_csv, synthetic_task
from .lif import SpikeRaster, poisson_raster
from .readout import bin_spikes, evaluate, train_readout
from .reservoir import RunResult, simulate, simulate_batch
from .topology import (InputMap, ReservoirTopology, build_input_map, normalized_laplacian_spectrum,
                       read_spectrum_csv, reference_spectrum, sample_reservoir,
                       search_topology_params, spectral_radius, spectrum_kl, write_spectrum_csv)

log = logging.getLogger(__name__)


def derive_seed(seed: int, *tags) -> int:
    """Independent sub-seed for a (seed, tag, ...) combination."""
    key = [zlib.crc32(str(t).encode()) for t in tags]
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=key).generate_state(1)[0])


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if np.isnan(x) else repr(float(x))
    return str(x)


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.output_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {path}: {err}") from err
    return path


def write_manifest(cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    path = _out_dir(cfg) / "manifest.json"
    manifest = {"artifact": "pcritical", "version": __version__, "kind": cfg.kind,
                "seeds": list(cfg.seeds), "config": cfg.to_dict()}
    if extra:
        manifest["results"] = extra
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _map(fn, items, workers: int):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# shared setup

def build_reservoir(cfg: ExperimentConfig, seed: int) -> tuple[ReservoirTopology, InputMap]:
    topo = sample_reservoir(cfg.topology, derive_seed(seed, "topology"))
    if cfg.reservoir.force_magnitude is not None:
        w = topo.weights.copy()
        w.data = np.sign(w.data) * cfg.reservoir.force_magnitude
        topo = topo.with_weights(w)
    if cfg.reservoir.normalize:
        topo = topo.with_weights(topo.weights / spectral_radius(topo.weights))
    imap = build_input_map(cfg.input.n_inputs, cfg.topology.n, cfg.input.fan_out, cfg.w_input,
                           derive_seed(seed, "input_map"))
    return topo, imap


def drive_raster(cfg: ExperimentConfig, seed: int, rate: float | None = None) -> SpikeRaster:
    """Input for a continuous run: the event file concatenated, or Poisson noise."""
    if cfg.input.event_file:
        stream = load_events(cfg.input.event_file)
        if stream.n_inputs != cfg.input.n_inputs:
            raise ValueError(f"{cfg.input.event_file}: {stream.n_inputs} inputs, "
                             f"config expects {cfg.input.n_inputs}")
        raster = stream.concatenate(cfg.input.gap_ms)
        return raster.window(0, cfg.input.duration_ms)
    rate = cfg.input.rates[0] if rate is None else rate
    return poisson_raster(cfg.input.n_inputs, rate, cfg.input.duration_ms,
                          derive_seed(seed, "poisson", rate))


def _run(cfg: ExperimentConfig, topo, imap, raster) -> RunResult:
    return simulate(topo, imap, raster, lif=cfg.lif_params(), plasticity=cfg.pcritical_params())


# frequency sweep

@dataclass
class FreqSweepResult:
    rates: list[float]
    trajectories: dict = field(default_factory=dict)  # (seed, rate) -> mean weight per step
    converged: dict = field(default_factory=dict)     # (seed, rate) -> scalar

    def decreasing(self, seed: int) -> bool:
        w = [self.converged[(seed, r)] for r in sorted(self.rates)]
        return all(a > b for a, b in zip(w, w[1:]))


def _freq_sweep_seed(args):
    cfg, seed = args
    topo, imap = build_reservoir(cfg, seed)
    out = {}
    for rate in cfg.input.rates:
        res = _run(cfg, topo, imap, drive_raster(cfg, seed, rate))
        out[rate] = res.mean_weight
    return seed, out


def run_freq_sweep(cfg: ExperimentConfig) -> FreqSweepResult:
    """Mean excitatory weight over time for each Poisson input rate and seed."""
    if not cfg.input.rates:
        raise ValueError("freq-sweep needs at least one input rate")
    out_dir = _out_dir(cfg)
    result = FreqSweepResult(list(cfg.input.rates))
    for seed, per_rate in _map(_freq_sweep_seed, [(cfg, s) for s in cfg.seeds], cfg.workers):
        for rate, traj in per_rate.items():
            tail = max(1, int(round(len(traj) * cfg.analysis.converged_fraction)))
            result.trajectories[(seed, rate)] = traj
            result.converged[(seed, rate)] = float(traj[-tail:].mean())

    rows = [(seed, rate, t, w) for (seed, rate), traj in result.trajectories.items()
            for t, w in enumerate(traj.tolist())]
    save_csv(out_dir / "freq_sweep.csv", ("seed", "rate_hz", "t_ms", "mean_weight"), rows, _fmt)
    summary = [(seed, rate, w) for (seed, rate), w in result.converged.items()]
    save_csv(out_dir / "freq_sweep_summary.csv", ("seed", "rate_hz", "converged_mean_weight"),
             summary, _fmt)
    write_manifest(cfg, {"decreasing_per_seed": {str(s): result.decreasing(s) for s in cfg.seeds}})
    return result


# branching

@dataclass
class BranchingResult:
    per_seed: dict = field(default_factory=dict)  # seed -> dict of series / summaries

    def summary(self, seed: int) -> tuple[float, float]:
        d = self.per_seed[seed]
        return d["mean_global"], d["mean_local"]


def branching_analysis(cfg: ExperimentConfig, topo: ReservoirTopology, res: RunResult) -> dict:
    exc = topo.excitatory_index
    si = res.self_induced.select(exc)
    adjacency = topo.weights[exc][:, exc]
    sigma = cfg.analysis.smooth_sigma
    g = gaussian_smooth(branching_global(si), sigma)
    loc = gaussian_smooth(branching_local(si, adjacency), sigma)
    start = cfg.analysis.adapt_ms
    return {
        "input_sum": res.input_mask.sum(axis=1),
        "self_induced_sum": res.self_induced.counts_per_step(),
        "global": g, "local": loc,
        "mean_global": g.mean(start), "mean_local": loc.mean(start),
    }


def _branching_seed(args):
    cfg, seed = args
    topo, imap = build_reservoir(cfg, seed)
    res = _run(cfg, topo, imap, drive_raster(cfg, seed))
    return seed, branching_analysis(cfg, topo, res)


def run_branching(cfg: ExperimentConfig) -> BranchingResult:
    """Global and topology-aware branching estimates over self-induced activity."""
    out_dir = _out_dir(cfg)
    result = BranchingResult()
    summary = []
    for seed, d in _map(_branching_seed, [(cfg, s) for s in cfg.seeds], cfg.workers):
        result.per_seed[seed] = d
        g, loc = d["global"].values, d["local"].values
        rows = []
        for t in range(len(d["input_sum"])):
            gv = g[t] if t < len(g) else np.nan
            lv = loc[t] if t < len(loc) else np.nan
            rows.append((t, int(d["input_sum"][t]), int(d["self_induced_sum"][t]),
                         gv, not np.isnan(gv), lv, not np.isnan(lv)))
        save_csv(out_dir / f"branching_seed{seed}.csv",
                 ("t_ms", "input_sum", "self_induced_sum", "sigma_global", "global_defined",
                  "sigma_local", "local_defined"), rows, _fmt)
        summary.append((seed, d["mean_global"], d["mean_local"]))
    save_csv(out_dir / "branching_summary.csv", ("seed", "mean_sigma_global", "mean_sigma_local"),
             summary, _fmt)
    write_manifest(cfg, {"summary": [list(r) for r in summary]})
    return result


# Poincare

@dataclass
class PoincareResult:
    per_seed: dict = field(default_factory=dict)  # seed -> dict(fit, rate_hz, saturated)


def _poincare_seed(args):
    cfg, seed = args
    topo, imap = build_reservoir(cfg, seed)
    res = _run(cfg, topo, imap, drive_raster(cfg, seed))
    window = res.self_induced.window(cfg.analysis.adapt_ms)
    rate_hz = window.count() / max(window.duration, 1) / topo.n * 1000.0
    lif = cfg.lif
    max_rate = 1000.0 / (lif.t_refrac + lif.dt)
    saturated = rate_hz >= cfg.analysis.saturation_fraction * max_rate
    fit = poincare(window, cfg.analysis.poincare_bin_ms)
    return seed, {"fit": fit, "rate_hz": rate_hz, "saturated": bool(saturated)}


def run_poincare(cfg: ExperimentConfig) -> PoincareResult:
    """Binned self-induced counts after the adaptation window, and their slope."""
    out_dir = _out_dir(cfg)
    result = PoincareResult()
    summary = []
    for seed, d in _map(_poincare_seed, [(cfg, s) for s in cfg.seeds], cfg.workers):
        result.per_seed[seed] = d
        fit = d["fit"]
        save_csv(out_dir / f"poincare_seed{seed}.csv", ("bin", "count_t", "count_t1"),
                 [(k, int(a), int(b)) for k, (a, b) in enumerate(fit.pairs.tolist())], _fmt)
        summary.append((seed, fit.slope, fit.intercept, d["rate_hz"], d["saturated"]))
    save_csv(out_dir / "poincare_summary.csv",
             ("seed", "slope", "intercept", "self_induced_rate_hz", "saturated"), summary, _fmt)
    write_manifest(cfg, {"summary": [list(r) for r in summary]})
    return result


# classification

@dataclass
class ClassifyResult:
    accuracy: dict = field(default_factory=dict)        # (condition, seed) -> test accuracy
    train_accuracy: dict = field(default_factory=dict)

    def mean(self, condition: str) -> float:
        return float(np.mean([a for (c, _), a in self.accuracy.items() if c == condition]))

    def std(self, condition: str) -> float:
        return float(np.std([a for (c, _), a in self.accuracy.items() if c == condition]))


def load_task(cfg: ExperimentConfig) -> EventStream:
    if cfg.input.event_file:
        stream = load_events(cfg.input.event_file)
    else:
        t = cfg.task
        stream = synthetic_task(t.n_classes, t.n_per_class, cfg.input.n_inputs, t.sample_ms,
                                seed=t.seed, base_rate=t.base_rate, peak_rate=t.peak_rate,
                                active_fraction=t.active_fraction, segment_ms=t.segment_ms,
                                jitter_ms=t.jitter_ms)
    if any(s.label is None for s in stream.samples):
        raise ValueError("classification needs a label on every sample")
    if stream.n_inputs != cfg.input.n_inputs:
        raise ValueError(f"event stream has {stream.n_inputs} inputs, config expects {cfg.input.n_inputs}")
    return stream


def _classify_seed(args):
    cfg, seed, stream = args
    labels = stream.labels.copy()
    if cfg.task.shuffle_labels:
        labels = np.random.default_rng(derive_seed(seed, "shuffle")).permutation(labels)
    n_classes = int(stream.labels.max()) + 1
    n_train = int(round(cfg.readout.train_fraction * len(labels)))
    inputs = stream.padded()
    n_bins = inputs.shape[1] // cfg.readout.bin_ms

    topo, imap = build_reservoir(cfg, seed)
    base = topo.synapses()
    float_lif = cfg.lif
    weights = {}
    for cond in cfg.readout.conditions:
        if cond == "random":
            weights[cond] = base
        elif cond == "normalized":
            syn = base.copy()
            syn.weight = syn.weight / spectral_radius(topo.weights)
            weights[cond] = syn
        elif cond == "pcritical":
            train_stream = EventStream(stream.n_inputs, stream.samples[:n_train])
            adapt = train_stream.concatenate(cfg.input.gap_ms).window(0, cfg.readout.adapt_ms)
            params = cfg.pcritical_params() or cfg.plasticity.params(cfg.lif_params())
            res = simulate(topo, imap, adapt, lif=cfg.lif_params(), plasticity=params)
            weights[cond] = res.synapses  # dequantized in 8-bit mode
        else:
            raise ValueError(f"unknown classify condition {cond!r}")

    out = {}
    for cond, syn in weights.items():
        spikes = simulate_batch(topo, syn, imap, inputs, float_lif)
        feats = bin_spikes(spikes, cfg.readout.bin_ms, n_bins)
        r = cfg.readout
        model = train_readout(feats[:n_train], labels[:n_train], epochs=r.epochs,
                              batch_size=r.batch_size, lr=r.lr, amsgrad=r.amsgrad,
                              seed=derive_seed(seed, "readout"), weight_decay=r.weight_decay,
                              n_classes=n_classes)
        out[cond] = (evaluate(model, feats[:n_train], labels[:n_train]),
                     evaluate(model, feats[n_train:], labels[n_train:]))
    return seed, out


def run_classify(cfg: ExperimentConfig) -> ClassifyResult:
    """Random vs spectral-radius-normalized vs P-CRITICAL reservoirs on one task.

    All conditions of a seed share the same topology, input map and samples.
    """
    out_dir = _out_dir(cfg)
    stream = load_task(cfg)
    result = ClassifyResult()
    rows = []
    for seed, per_cond in _map(_classify_seed, [(cfg, s, stream) for s in cfg.seeds], cfg.workers):
        for cond, (train_acc, test_acc) in per_cond.items():
            result.accuracy[(cond, seed)] = test_acc
            result.train_accuracy[(cond, seed)] = train_acc
            rows.append((seed, cond, train_acc, test_acc))
    save_csv(out_dir / "classify.csv", ("seed", "condition", "train_accuracy", "test_accuracy"),
             rows, _fmt)
    summary = [(c, result.mean(c), result.std(c)) for c in cfg.readout.conditions]
    save_csv(out_dir / "classify_summary.csv", ("condition", "mean_accuracy", "std_accuracy"),
             summary, _fmt)
    write_manifest(cfg, {"summary": [list(r) for r in summary]})
    return result


# topology search

def run_topology_search(cfg: ExperimentConfig):
    out_dir = _out_dir(cfg)
    if cfg.search.reference_file:
        ref = read_spectrum_csv(cfg.search.reference_file)
    else:
        ref = reference_spectrum()
    seed = cfg.seeds[0] if cfg.seeds else 0
    best = search_topology_params(ref, cfg.search.space(), cfg.search.budget, seed,
                                  base=cfg.topology, n_bins=cfg.search.n_bins)
    rows = [(k, d["s"], d["p"], d["C"], d["lam"], kl) for k, (d, kl) in enumerate(best.trials)]
    save_csv(out_dir / "topology_search.csv", ("trial", "s", "p", "C", "lam", "kl"), rows, _fmt)
    best_topo = sample_reservoir(best.params, derive_seed(seed, "best"))
    write_spectrum_csv(out_dir / "best_spectrum.csv", normalized_laplacian_spectrum(best_topo.weights))
    write_manifest(cfg, {"best": {"s": best.params.s, "p": best.params.p, "C": best.params.C,
                                  "lam": best.params.lam, "kl": best.score}})
    return best


def self_match_kl(params, seed_a: int, seed_b: int, n_bins: int = 50) -> float:
    """KL between spectra of two reservoirs drawn with the same parameters."""
    a = normalized_laplacian_spectrum(sample_reservoir(params, seed_a).weights)
    b = normalized_laplacian_spectrum(sample_reservoir(params, seed_b).weights)
    return spectrum_kl(a, b, n_bins)


RUNNERS = {
    "freq-sweep": run_freq_sweep,
    "branching": run_branching,
    "poincare": run_poincare,
    "classify": run_classify,
    "topology-search": run_topology_search,
}


def run(cfg: ExperimentConfig):
    log.info("running %s with seeds %s into %s", cfg.kind, cfg.seeds, cfg.output_dir)
    return RUNNERS[cfg.kind](cfg)
