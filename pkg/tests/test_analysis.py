import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcritical.analysis import (GLOBAL, TOPOLOGY_AWARE, bin_counts, branching_global,
                                branching_local, gaussian_smooth, mean_weight_series, poincare,
                                self_induced)
from pcritical.lif import SpikeRaster
from pcritical.plasticity import QuantizedWeights
from pcritical.topology import InputMap, Synapses


def raster_with_counts(counts, n=8):
    dense = np.zeros((len(counts), n), dtype=bool)
    for t, c in enumerate(counts):
        dense[t, :c] = True
    return SpikeRaster(dense)


def test_self_induced_removes_coincident_spikes():
    rng = np.random.default_rng(5)
    res = rng.random((10, 5)) < 0.5
    inp = rng.random((10, 3)) < 0.4
    imap = InputMap(np.array([[4], [0], [2]]), 5.0, 5)
    out = self_induced(res, inp, imap)
    forced = {(imap.targets[k, 0], t) for t, k in zip(*np.nonzero(inp))}
    brute = {(i, t) for t, i in zip(*np.nonzero(res))} - forced
    assert set(out.events) == brute
    assert out.count() == res.sum() - len({(i, t) for t, i in zip(*np.nonzero(res))} & forced)


def test_self_induced_identities():
    rng = np.random.default_rng(1)
    r = SpikeRaster(rng.random((20, 4)) < 0.3)
    ident = InputMap(np.arange(4)[:, None], 5.0, 4)
    assert self_induced(r, np.zeros((20, 4), bool), ident) == r
    assert self_induced(r, r, ident).count() == 0
    with pytest.raises(ValueError):
        self_induced(r, np.zeros((19, 4), bool), ident)


def test_global_constant_is_one():
    s = branching_global(raster_with_counts([4] * 6))
    assert s.method == GLOBAL
    assert np.all(s.values == 1.0)


def test_global_ratios():
    s = branching_global(raster_with_counts([2, 4, 4, 2]))
    assert s.values.tolist() == [2.0, 1.0, 0.5]


def test_global_silent_step_undefined():
    s = branching_global(raster_with_counts([2, 0, 3]))
    assert s.values[0] == 0.0
    assert np.isnan(s.values[1]) and not s.defined[1]


CHAIN = [[1], [2], []]


def local_at_0(adj, spikes_t, spikes_t1):
    dense = np.zeros((2, 3), dtype=bool)
    dense[0, spikes_t] = True
    dense[1, spikes_t1] = True
    return branching_local(dense, adj).values[0]


def test_local_chain():
    assert local_at_0(CHAIN, [0], [1]) == 1.0


def test_local_fan_out():
    assert local_at_0([[1, 2], [], []], [0], [1, 2]) == 2.0


def test_local_fan_in_double_counts():
    assert local_at_0([[2], [2], []], [0, 1], [2]) == 1.0
    # the global estimate on the same raster is 0.5
    assert branching_global(np.array([[1, 1, 0], [0, 0, 1]], bool)).values[0] == 0.5


def test_local_accepts_matrix():
    a = np.zeros((3, 3))
    a[0, 1] = 0.3
    a[1, 2] = -0.2
    assert local_at_0(a, [0], [1]) == 1.0
    s = branching_local(np.zeros((3, 3), bool), a)
    assert s.method == TOPOLOGY_AWARE and np.all(np.isnan(s.values))


def brute_local(dense, targets):
    out = []
    for t in range(len(dense) - 1):
        pre = np.flatnonzero(dense[t])
        if len(pre) == 0:
            out.append(np.nan)
            continue
        out.append(np.mean([sum(dense[t + 1, j] for j in targets[i]) for i in pre]))
    return np.array(out)


def random_graph(rng, n=10, density=0.3):
    return [np.flatnonzero((rng.random(n) < density) & (np.arange(n) != i)) for i in range(n)]


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_local_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    targets = random_graph(rng)
    dense = rng.random((30, 10)) < 0.3
    np.testing.assert_allclose(branching_local(dense, targets).values, brute_local(dense, targets))


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_local_not_below_global_for_caused_activity(seed):
    # every spike at t+1 is a target of some spike at t: shared targets are
    # counted once per spiking pre-neuron, so the local estimate overshoots
    rng = np.random.default_rng(seed)
    targets = random_graph(rng, density=0.4)
    dense = np.zeros((40, 10), dtype=bool)
    dense[0, rng.choice(10, 3, replace=False)] = True
    for t in range(39):
        reach = np.zeros(10, bool)
        for i in np.flatnonzero(dense[t]):
            reach[targets[i]] = True
        dense[t + 1] = reach & (rng.random(10) < 0.7)
    g = branching_global(dense).values
    loc = branching_local(dense, targets).values
    ok = ~np.isnan(g)
    assert np.all(loc[ok] >= g[ok] - 1e-12)


def test_smooth_constant_unchanged():
    assert np.allclose(gaussian_smooth(np.full(20, 0.9)), 0.9)


def test_smooth_impulse_center_weight():
    x = np.zeros(21)
    x[10] = 1.0
    k = np.exp(-0.5 * (np.arange(-3, 4) / 0.7) ** 2)  # truncated at ceil(4 * 0.7) = 3
    out = gaussian_smooth(x, 0.7)
    assert out[10] == pytest.approx(1.0 / k.sum(), rel=1e-12)
    assert out[11] == pytest.approx(k[4] / k.sum(), rel=1e-12)


def test_smooth_preserves_mean():
    # zero-padded ends: the mean is preserved exactly away from the edges
    x = np.zeros(60)
    x[10:50] = np.random.default_rng(2).random(40)
    assert gaussian_smooth(x).mean() == pytest.approx(x.mean(), abs=1e-9)


def test_smooth_skips_gaps():
    x = np.array([1.0, np.nan, 1.0, 1.0])
    out = gaussian_smooth(x)
    assert np.allclose(out, 1.0)
    s = gaussian_smooth(branching_global(raster_with_counts([2, 4, 4, 2])))
    assert s.smoothed and s.method == GLOBAL
    with pytest.raises(ValueError):
        gaussian_smooth(x, 0.0)


def test_poincare_constant():
    fit = poincare(np.full(50, 3), bin_ms=5)
    assert fit.slope == 1.0
    assert np.all(fit.pairs[:, 0] == fit.pairs[:, 1])


def test_poincare_alternating():
    fit = poincare(np.array([10, 5, 10, 5]), bin_ms=1)
    assert fit.pairs.tolist() == [[10, 5], [5, 10], [10, 5]]
    assert fit.slope == pytest.approx(-1.0, rel=1e-12)
    assert fit.intercept == pytest.approx(15.0, rel=1e-12)


def test_poincare_pair_count():
    r = SpikeRaster(np.random.default_rng(0).random((2500, 20)) < 0.05)
    fit = poincare(r, bin_ms=5)
    assert len(fit.counts) == 500 and len(fit.pairs) == 499


def test_poincare_rejects():
    with pytest.raises(ValueError):
        poincare(np.ones(10), bin_ms=5)
    with pytest.raises(ValueError):
        poincare(np.zeros(100), bin_ms=5)
    with pytest.raises(ValueError):
        poincare(np.ones(100), bin_ms=0)


def test_bin_counts():
    assert bin_counts(np.arange(7), 3).tolist() == [3, 12]


def test_mean_weight_series():
    assert mean_weight_series([np.array([0.4])]).tolist() == [0.4]
    assert mean_weight_series([np.array([0.2, 0.4, 0.0])])[0] == pytest.approx(0.3)
    syn = Synapses(3, np.array([0, 0, 1]), np.array([1, 2, 2]), np.array([0.2, 0.4, -0.3]))
    exc = np.array([True, False, False])
    assert mean_weight_series([(5, syn)], exc)[0] == pytest.approx(0.3)
    q = QuantizedWeights(3, syn.pre, syn.post, np.array([64, 0, 200]), np.array([1, 1, -1]))
    assert mean_weight_series([q])[0] == 0.25
    with pytest.raises(ValueError):
        mean_weight_series([])
