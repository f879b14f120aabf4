"""Experiment configuration.

Configs are TOML files with optional sections ``[topology]``, ``[lif]``,
``[plasticity]``, ``[reservoir]``, ``[input]``, ``[analysis]``,
``[readout]``, ``[task]`` and ``[search]``; top-level keys are ``kind``,
``seeds``, ``output_dir`` and ``workers``.  Anything left out takes the
default for the experiment kind.  ``lif.v_th`` is given in float units and
is scaled by 256 in 8-bit mode.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .lif import LifParams
from .plasticity import FIXED8, FLOAT, QSCALE, PCriticalParams
from .topology import DEFAULT_SEARCH_SPACE, TopologyParams

KINDS = ("freq-sweep", "branching", "poincare", "classify", "topology-search")


@dataclass
class PlasticityConfig:
    enabled: bool = True
    mode: str = FLOAT
    alpha: float | None = None  # None: mode default (1e-2 float, 2 LSB fixed)
    beta: float | None = None   # None: mode default (1e-5 float, 0.25 LSB fixed)
    tau_trace: float = 5.0
    paired_tau_v: float = 5.0
    paired_tau_i: float = 0.0
    paired_t_refrac: float = 2.0
    paired_vth_factor: float = 1.01
    weight_floor: float = 0.0

    def params(self, lif: LifParams) -> PCriticalParams:
        fixed = self.mode == FIXED8
        alpha = self.alpha if self.alpha is not None else (2.0 if fixed else 1e-2)
        beta = self.beta if self.beta is not None else (0.25 if fixed else 1e-5)
        paired = replace(lif, tau_v=self.paired_tau_v, tau_i=self.paired_tau_i,
                         t_refrac=self.paired_t_refrac)
        return PCriticalParams(alpha=alpha, beta=beta, tau_trace=self.tau_trace, paired_lif=paired,
                               paired_vth_factor=self.paired_vth_factor, mode=self.mode,
                               weight_floor=self.weight_floor)


@dataclass
class ReservoirConfig:
    normalize: bool = False             # divide W by rho(|W|) before running
    force_magnitude: float | None = None  # set every |w| to this value (supercritical control)


@dataclass
class InputConfig:
    rates: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0, 50.0])
    duration_ms: int = 2000
    n_inputs: int = 170
    fan_out: int = 1
    w_input_factor: float = 5.0  # input weight as a multiple of v_th
    event_file: str | None = None
    gap_ms: int = 0


@dataclass
class AnalysisConfig:
    adapt_ms: int = 2500
    smooth_sigma: float = 0.7
    poincare_bin_ms: int = 5
    converged_fraction: float = 0.25  # freq-sweep: average over the final fraction
    saturation_fraction: float = 0.5  # of the refractory-limited maximum rate


@dataclass
class ReadoutConfig:
    bin_ms: int = 60
    epochs: int = 30
    batch_size: int = 32
    lr: float = 1e-3
    amsgrad: bool = False
    weight_decay: float = 0.0
    train_fraction: float = 0.7
    adapt_ms: int = 5000  # plasticity run on the training stream before features are taken
    conditions: list[str] = field(default_factory=lambda: ["random", "normalized", "pcritical"])


@dataclass
class TaskConfig:
    n_classes: int = 4
    n_per_class: int = 60
    sample_ms: int = 300
    base_rate: float = 5.0
    peak_rate: float = 25.0
    active_fraction: float = 0.25
    segment_ms: int = 50
    jitter_ms: int = 10
    shuffle_labels: bool = False
    seed: int = 1000


@dataclass
class SearchConfig:
    budget: int = 20
    reference_file: str | None = None
    n_bins: int = 50
    s: tuple[float, float] = DEFAULT_SEARCH_SPACE["s"]
    p: tuple[float, float] = DEFAULT_SEARCH_SPACE["p"]
    C: tuple[float, float] = DEFAULT_SEARCH_SPACE["C"]
    lam: tuple[float, float] = DEFAULT_SEARCH_SPACE["lam"]

    def space(self) -> dict:
        return {"s": tuple(self.s), "p": tuple(self.p), "C": tuple(self.C), "lam": tuple(self.lam)}


_KIND_INPUT = {
    "freq-sweep": dict(n_inputs=170, fan_out=1, duration_ms=2000),
    "branching": dict(n_inputs=64, fan_out=2, duration_ms=5000, rates=[20.0]),
    "poincare": dict(n_inputs=64, fan_out=2, duration_ms=5000, rates=[20.0]),
    "classify": dict(n_inputs=64, fan_out=2),
    "topology-search": dict(),
}

_SECTIONS = {
    "topology": TopologyParams, "lif": LifParams, "plasticity": PlasticityConfig,
    "reservoir": ReservoirConfig, "input": InputConfig, "analysis": AnalysisConfig,
    "readout": ReadoutConfig, "task": TaskConfig, "search": SearchConfig,
}


@dataclass
class ExperimentConfig:
    kind: str = "freq-sweep"
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = "results"
    workers: int = 1
    topology: TopologyParams = field(default_factory=TopologyParams)
    lif: LifParams = field(default_factory=LifParams)
    plasticity: PlasticityConfig = field(default_factory=PlasticityConfig)
    reservoir: ReservoirConfig = field(default_factory=ReservoirConfig)
    input: InputConfig = field(default_factory=InputConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")

    @classmethod
    def default(cls, kind: str, **overrides) -> "ExperimentConfig":
        return cls.from_dict({"kind": kind, **overrides})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        kind = data.get("kind", "freq-sweep")
        if kind not in KINDS:
            raise ValueError(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
        kw = {}
        for key in ("kind", "seeds", "output_dir", "workers"):
            if key in data:
                kw[key] = data.pop(key)
        for name, klass in _SECTIONS.items():
            section = data.pop(name, {})
            if isinstance(section, (TopologyParams, LifParams)) or not isinstance(section, dict):
                kw[name] = section
                continue
            if name == "input":
                section = {**_KIND_INPUT[kind], **section}
            valid = {f.name for f in fields(klass)}
            unknown = set(section) - valid
            if unknown:
                raise ValueError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
            section = {k: tuple(v) if isinstance(v, list) and k in _TUPLE_KEYS else v
                       for k, v in section.items()}
            kw[name] = klass(**section)
        if data:
            raise ValueError(f"unknown top-level key(s): {', '.join(sorted(data))}")
        if "seeds" in kw:
            kw["seeds"] = [int(s) for s in kw["seeds"]]
        return cls(**kw)

    @classmethod
    def load(cls, path, kind: str | None = None) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        if kind is not None:
            if data.get("kind", kind) != kind:
                raise ValueError(f"{path}: config kind {data['kind']!r} does not match {kind!r}")
            data["kind"] = kind
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    # resolved parameter objects

    @property
    def fixed(self) -> bool:
        return self.plasticity.mode == FIXED8

    def lif_params(self) -> LifParams:
        """Reservoir neuron constants in the units of the weight mode."""
        return replace(self.lif, v_th=self.lif.v_th * QSCALE) if self.fixed else self.lif

    def pcritical_params(self) -> PCriticalParams | None:
        if not self.plasticity.enabled:
            return None
        return self.plasticity.params(self.lif_params())

    @property
    def w_input(self) -> float:
        """Input weight in float units (the simulator rescales it in 8-bit mode)."""
        return self.input.w_input_factor * self.lif.v_th


_TUPLE_KEYS = {"w_exc_range", "w_inh_range", "shape", "j", "s", "p", "C", "lam"}
