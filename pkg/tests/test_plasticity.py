import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcritical.lif import NEVER
from pcritical.plasticity import (FIXED8, QMAX, PCriticalParams, QuantizedWeights, dequantize,
                                  init_paired, pcritical_step, pcritical_step_fixed, quantize)
from pcritical.topology import TopologyParams, sample_reservoir

from conftest import make_topology


def two_neuron(w01, w10=0.0, excitatory=(True, True)):
    return make_topology([[0.0, w01], [w10, 0.0]], excitatory)


def test_growth_without_paired_spike():
    topo = two_neuron(0.3)
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    ps = pcritical_step(syn, np.zeros(2, bool), np.full(2, NEVER), st_, p, t=0)
    assert not ps.any()
    assert syn.weight[0] == 0.3 + 1e-5
    assert syn.weight[0] == pytest.approx(0.30001, rel=1e-12)


def test_depression_on_paired_spike():
    topo = two_neuron(0.5)
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    st_.paired.v[0] = 1.0  # 1.0 * e^(-1/5) + 0.5 crosses 1.01
    t_last = np.array([5.0, 5.0])  # dt_ij = 0
    ps = pcritical_step(syn, np.array([False, True]), t_last, st_, p, t=5)
    assert ps.tolist() == [True, False]
    assert syn.weight[0] == (0.5 - 0.01 * 1.0) + 1e-5
    assert syn.weight[0] == pytest.approx(0.49001, rel=1e-12)


def test_depression_uses_spike_time_difference():
    topo = two_neuron(0.5)
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    st_.paired.v[0] = 1.0
    pcritical_step(syn, np.array([False, True]), np.array([2.0, 5.0]), st_, p, t=5)
    assert syn.weight[0] == pytest.approx(0.5 - 0.01 * np.exp(-3 / 5) + 1e-5, rel=1e-14)


def test_never_spiked_guard():
    topo = two_neuron(0.5)
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    st_.paired.v[0] = 1.0
    ps = pcritical_step(syn, np.array([False, True]), np.array([NEVER, 5.0]), st_, p, t=5)
    assert ps[0]
    assert syn.weight[0] == 0.5 + 1e-5


def test_inhibitory_rows_untouched():
    topo = two_neuron(0.4, -0.2, excitatory=(True, False))
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    assert len(st_.excitatory_index) == 1
    rng = np.random.default_rng(0)
    t_last = np.full(2, NEVER)
    for t in range(200):
        s = rng.random(2) < 0.5
        t_last[s] = t
        pcritical_step(syn, s, t_last, st_, p, t)
    assert syn.weight[syn.pre == 1][0] == -0.2


def test_paired_population_size():
    assert len(init_paired(make_topology(np.ones((3, 3)) - np.eye(3))).excitatory_index) == 3
    topo = sample_reservoir(TopologyParams(), seed=0)
    st_ = init_paired(topo)
    assert st_.paired.size == 410


def test_paired_neuron_without_outgoing_weight_gets_no_input():
    topo = two_neuron(0.0, 0.9)
    syn = topo.synapses()
    p = PCriticalParams()
    st_ = init_paired(topo, p)
    for t in range(5):
        pcritical_step(syn, np.array([True, True]), np.full(2, float(t)), st_, p, t)
    assert st_.paired.v[0] == 0.0


def test_paired_threshold_scaled():
    p = PCriticalParams()
    assert p.paired_params.v_th == pytest.approx(1.01)
    assert PCriticalParams.fixed().paired_params.v_th == pytest.approx(256 * 1.01)


def test_params_require_alpha_above_beta():
    with pytest.raises(ValueError):
        PCriticalParams(alpha=1e-5, beta=1e-2)
    with pytest.raises(ValueError):
        PCriticalParams(beta=0.0)
    with pytest.raises(ValueError):
        PCriticalParams(mode="int4")


def test_growth_clips_at_one():
    topo = two_neuron(1.0 - 5e-6)
    syn = topo.synapses()
    p = PCriticalParams()
    pcritical_step(syn, np.zeros(2, bool), np.full(2, NEVER), init_paired(topo, p), p, 0)
    assert syn.weight[0] == 1.0


def test_quantize_values():
    assert quantize(0.0) == 0
    assert quantize(0.5) == 128
    assert quantize(1.0) == 255
    with pytest.raises(ValueError):
        quantize(1.5)


@given(st.floats(0, 1))
def test_quantize_roundtrip_error(w):
    err = abs(dequantize(quantize(w)) - w)
    assert err <= 1 / 512 or (w > 255.5 / 256 and err <= 1 / 256)


def fixed_setup(mag):
    topo = two_neuron(mag / 256)
    q = QuantizedWeights.from_synapses(topo.synapses())
    assert q.magnitude[0] == mag
    p = PCriticalParams.fixed()
    return topo, q, p, init_paired(topo, p)


def test_fixed_growth_accumulator():
    _, q, p, st_ = fixed_setup(100)
    for t in range(3):
        pcritical_step_fixed(q, np.zeros(2, bool), np.full(2, NEVER), st_, p, t)
        assert q.magnitude[0] == 100
    pcritical_step_fixed(q, np.zeros(2, bool), np.full(2, NEVER), st_, p, 3)
    assert q.magnitude[0] == 101


def test_fixed_depression():
    _, q, p, st_ = fixed_setup(100)
    st_.paired.v[0] = 256.0 * 1.2
    ps = pcritical_step_fixed(q, np.array([False, True]), np.array([5.0, 5.0]), st_, p, 5)
    assert ps[0]
    assert q.magnitude[0] == 98  # accumulator is at 0.25, no whole LSB yet


def test_fixed_depression_minimum_one_lsb():
    _, q, p, st_ = fixed_setup(100)
    st_.paired.v[0] = 256.0 * 1.2
    pcritical_step_fixed(q, np.array([False, True]), np.array([0.0, 40.0]), st_, p, 40)
    assert q.magnitude[0] == 99


def test_fixed_zero_stays_pruned():
    topo = make_topology([[0, 0.3, 0.0], [0, 0, 0], [0, 0, 0]])
    q = QuantizedWeights.from_synapses(topo.synapses())
    q.magnitude[:] = 0
    p = PCriticalParams.fixed()
    st_ = init_paired(topo, p)
    for t in range(40):
        pcritical_step_fixed(q, np.zeros(3, bool), np.full(3, NEVER), st_, p, t)
    assert np.all(q.magnitude == 0)


def test_fixed_defaults():
    p = PCriticalParams.fixed()
    assert (p.alpha, p.beta, p.mode) == (2.0, 0.25, FIXED8)


def random_network(rng, n):
    w = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.5)
    np.fill_diagonal(w, 0)
    exc = rng.random(n) < 0.7
    w[~exc] *= -1
    return make_topology(w, exc)


@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 12), st.floats(0.05, 0.9))
@settings(max_examples=25, deadline=None)
def test_float_fuzz_sign_and_bounds(seed, n, rate):
    rng = np.random.default_rng(seed)
    topo = random_network(rng, n)
    syn = topo.synapses()
    sign0 = np.sign(syn.weight)
    inh = syn.weight < 0
    inh_w = syn.weight[inh].copy()
    p = PCriticalParams(alpha=float(rng.uniform(0.01, 0.5)), beta=float(rng.uniform(1e-5, 5e-3)))
    st_ = init_paired(topo, p)
    t_last = np.full(n, NEVER)
    for t in range(300):
        s = rng.random(n) < rate
        t_last[s] = t
        pcritical_step(syn, s, t_last, st_, p, t)
        assert np.all(np.abs(syn.weight) <= 1)
        assert np.all(syn.weight[sign0 > 0] >= 0)
    assert np.array_equal(syn.weight[inh], inh_w)


@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 12), st.floats(0.05, 0.9))
@settings(max_examples=25, deadline=None)
def test_fixed_fuzz_sign_and_bounds(seed, n, rate):
    rng = np.random.default_rng(seed)
    topo = random_network(rng, n)
    q = QuantizedWeights.from_synapses(topo.synapses())
    sign0 = q.sign.copy()
    inh_q = q.magnitude[q.sign < 0].copy()
    p = PCriticalParams.fixed(alpha=float(rng.uniform(1, 20)), beta=float(rng.uniform(0.01, 0.9)))
    st_ = init_paired(topo, p)
    t_last = np.full(n, NEVER)
    for t in range(300):
        s = rng.random(n) < rate
        t_last[s] = t
        pcritical_step_fixed(q, s, t_last, st_, p, t)
        assert np.all((q.magnitude >= 0) & (q.magnitude <= QMAX))
    assert np.array_equal(q.sign, sign0)
    assert np.array_equal(q.magnitude[q.sign < 0], inh_q)
