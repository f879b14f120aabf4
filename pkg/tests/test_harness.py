import json
import subprocess
import sys

import numpy as np
import pytest

from pcritical import __version__
from pcritical.cli import main
from pcritical.config import ExperimentConfig
from pcritical.experiments import (derive_seed, run, run_branching, run_classify, run_freq_sweep,
                                   run_poincare)
from pcritical.lif import LifParams
from pcritical.plasticity import FIXED8
from pcritical.topology import TopologyParams


def small(kind, tmp_path, **kw):
    base = {"kind": kind, "seeds": [0], "output_dir": str(tmp_path / kind)}
    return ExperimentConfig.from_dict({**base, **kw})


def read_outputs(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


# configuration

def test_defaults_follow_appendix_constants():
    cfg = ExperimentConfig.default("freq-sweep")
    assert cfg.lif == LifParams(tau_v=30, tau_i=1, v_reset=0, v_th=1.0, t_refrac=2, dt=1)
    assert cfg.topology == TopologyParams(s=40, p=1460, C=0.11, lam=635)
    p = cfg.pcritical_params()
    assert (p.alpha, p.beta, p.paired_lif.tau_v, p.paired_lif.tau_i) == (1e-2, 1e-5, 5.0, 0.0)
    assert cfg.readout.bin_ms == 60 and cfg.readout.lr == 1e-3
    assert cfg.input.n_inputs == 170 and cfg.input.fan_out == 1


def test_fixed_mode_config():
    cfg = ExperimentConfig.from_dict({"plasticity": {"mode": FIXED8}})
    p = cfg.pcritical_params()
    assert (p.alpha, p.beta, p.mode) == (2.0, 0.25, FIXED8)
    assert cfg.lif_params().v_th == 256.0


def test_toml_load(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "branching"\nseeds = [3, 4]\n[input]\nrates = [15.0]\n'
                    '[topology]\nw_exc_range = [0.1, 0.4]\n')
    cfg = ExperimentConfig.load(path)
    assert cfg.kind == "branching" and cfg.seeds == [3, 4]
    assert cfg.input.rates == [15.0] and cfg.input.fan_out == 2
    assert cfg.topology.w_exc_range == (0.1, 0.4)
    with pytest.raises(ValueError, match="does not match"):
        ExperimentConfig.load(path, kind="poincare")


@pytest.mark.parametrize("data", [{"kind": "nope"}, {"bogus": 1}, {"input": {"ratez": [1]}}])
def test_config_rejects_unknown(data):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(data)


def test_derive_seed_independent():
    assert derive_seed(0, "a") == derive_seed(0, "a")
    assert len({derive_seed(0, "a"), derive_seed(0, "b"), derive_seed(1, "a")}) == 3


# experiments at small scale

def test_freq_sweep_outputs_and_manifest(tmp_path):
    cfg = small("freq-sweep", tmp_path, input={"rates": [10.0, 50.0], "duration_ms": 300})
    res = run_freq_sweep(cfg)
    assert set(res.converged) == {(0, 10.0), (0, 50.0)}
    out = tmp_path / "freq-sweep"
    lines = (out / "freq_sweep.csv").read_text().splitlines()
    assert lines[0] == "seed,rate_hz,t_ms,mean_weight" and len(lines) == 1 + 600
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["version"] == __version__ and manifest["seeds"] == [0]
    assert manifest["config"]["input"]["rates"] == [10.0, 50.0]


def test_freq_sweep_zero_rate_grows_by_beta(tmp_path):
    cfg = small("freq-sweep", tmp_path, input={"rates": [0.0], "duration_ms": 50})
    traj = run_freq_sweep(cfg).trajectories[(0, 0.0)]
    assert np.allclose(np.diff(traj), 1e-5, atol=1e-12)


def test_freq_sweep_rejects_empty_rates(tmp_path):
    with pytest.raises(ValueError):
        run_freq_sweep(small("freq-sweep", tmp_path, input={"rates": []}))


def test_branching_baseline_without_plasticity(tmp_path):
    cfg = small("branching", tmp_path, plasticity={"enabled": False},
                reservoir={"normalize": True}, input={"duration_ms": 400},
                analysis={"adapt_ms": 100})
    res = run_branching(cfg)
    d = res.per_seed[0]
    assert len(d["global"]) == 399 and d["global"].smoothed
    header = (tmp_path / "branching" / "branching_seed0.csv").read_text().splitlines()[0]
    assert header == ("t_ms,input_sum,self_induced_sum,sigma_global,global_defined,"
                      "sigma_local,local_defined")


def test_poincare_rejects_silent_reservoir(tmp_path):
    cfg = small("poincare", tmp_path, input={"rates": [0.0], "duration_ms": 200},
                analysis={"adapt_ms": 100})
    with pytest.raises(ValueError, match="nonzero bins"):
        run_poincare(cfg)


def test_classify_single_class_is_trivial(tmp_path):
    cfg = small("classify", tmp_path, task={"n_classes": 1, "n_per_class": 12, "sample_ms": 120},
                readout={"epochs": 2, "adapt_ms": 300})
    res = run_classify(cfg)
    assert all(a == 1.0 for a in res.accuracy.values())
    assert set(c for c, _ in res.accuracy) == {"random", "normalized", "pcritical"}


def test_event_file_drives_experiment(tmp_path):
    assert main(["gen-events", str(tmp_path / "ev.csv"), "--per-class", "3", "--duration", "120"]) == 0
    cfg = small("classify", tmp_path, input={"event_file": str(tmp_path / "ev.csv")},
                readout={"epochs": 1, "adapt_ms": 200, "conditions": ["random"]})
    res = run_classify(cfg)
    assert list(res.accuracy) == [("random", 0)]


def test_run_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        cfg = small("poincare", tmp_path / str(k), input={"duration_ms": 600},
                    analysis={"adapt_ms": 300})
        run(cfg)
        outs.append(read_outputs(tmp_path / str(k) / "poincare"))
    assert outs[0].keys() == outs[1].keys()
    for name in outs[0]:
        if name != "manifest.json":
            assert outs[0][name] == outs[1][name], name


# command line

def test_cli_runs_and_overrides(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[input]\nrates = [20.0]\nduration_ms = 100\n')
    code = main(["freq-sweep", "--config", str(cfg), "--output", str(tmp_path / "o"),
                 "--seeds", "1-2", "--mode", "fixed8"])
    assert code == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["seeds"] == [1, 2]
    assert manifest["config"]["plasticity"]["mode"] == FIXED8


def test_cli_error_exit_codes(tmp_path, capsys):
    assert main(["branching", "--config", str(tmp_path / "missing.toml")]) != 0
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("[input]\nwat = 1\n")
    assert main(["poincare", "--config", str(bad)]) != 0
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code != 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pcritical", "gen-events", str(tmp_path / "e.csv"),
                           "--per-class", "1"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "pcritical", "classify", "--config", "/nonexistent"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
