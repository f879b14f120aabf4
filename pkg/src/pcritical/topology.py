"""Distance-based small-world reservoirs on a gapped 3-D grid.

Neurons sit on a Cartesian mesh with spacing ``s``; an extra gap ``p`` is
inserted after every ``j`` neurons along each axis, which splits the grid
into mini-reservoirs.  Each ordered pair is connected with probability
``C * exp(-D / lambda)``.

Weight matrices follow the convention ``W[i, j]`` = synapse from neuron ``i``
(pre) to neuron ``j`` (post), so a spike vector ``s`` drives ``s @ W``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class TopologyParams:
    n: int = 512
    j: int | tuple[int, int, int] = 4
    s: float = 40.0
    p: float = 1460.0
    C: float = 0.11
    lam: float = 635.0
    inhib_fraction: float = 0.2
    w_exc_range: tuple[float, float] = (0.2, 0.5)
    w_inh_range: tuple[float, float] = (0.1, 0.3)
    shape: tuple[int, int, int] | None = None  # per-axis neuron counts

    def __post_init__(self):
        if not 0 <= self.C <= 1:
            raise ValueError(f"C must lie in [0, 1], got {self.C}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.s > 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if self.p < 0:
            raise ValueError(f"p must be non-negative, got {self.p}")
        if not 0 <= self.inhib_fraction < 1:
            raise ValueError(f"inhib_fraction must lie in [0, 1), got {self.inhib_fraction}")
        for name in ("w_exc_range", "w_inh_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi <= 1:
                raise ValueError(f"{name} must satisfy 0 <= low < high <= 1, got {(lo, hi)}")

    @property
    def n_inhibitory(self) -> int:
        return int(np.floor(self.inhib_fraction * self.n))

    def to_dict(self) -> dict:
        return asdict(self)


def _grid_shape(n: int, j, shape) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    jv = tuple(int(x) for x in np.broadcast_to(np.asarray(j), (3,)))
    if any(x < 1 for x in jv):
        raise ValueError(f"group size must be >= 1, got {j}")
    if shape is None:
        if np.ndim(j) and len(set(jv)) > 1:
            raise ValueError("a per-axis group size needs an explicit per-axis shape")
        side = int(round(n ** (1 / 3)))
        if side ** 3 != n:
            raise ValueError(f"{n} neurons cannot be arranged in a cube; pass shape explicitly")
        shape = (side, side, side)
    shape = tuple(int(x) for x in shape)
    if len(shape) != 3 or int(np.prod(shape)) != n:
        raise ValueError(f"shape {shape} does not hold {n} neurons")
    for axis, (count, group) in enumerate(zip(shape, jv)):
        if count % group:
            raise ValueError(f"axis {axis}: {count} neurons is not a multiple of group size {group}")
    return shape, jv


def build_positions(n: int, j=4, s: float = 40.0, p: float = 1460.0,
                    shape: tuple[int, int, int] | None = None) -> np.ndarray:
    """Return an ``(n, 3)`` array of neuron coordinates, C-ordered over (x, y, z)."""
    shape, jv = _grid_shape(n, j, shape)
    axes = [np.arange(count) * s + (np.arange(count) // group) * p
            for count, group in zip(shape, jv)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1).astype(np.float64)


def connection_probability(d, C: float = 0.11, lam: float = 635.0):
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    out = C * np.exp(-d / lam)
    return float(out) if out.ndim == 0 else out


@dataclass
class Synapses:
    """Mutable edge-list form of ``W_R``; the simulator works on this."""

    n: int
    pre: np.ndarray
    post: np.ndarray
    weight: np.ndarray

    def copy(self) -> "Synapses":
        return Synapses(self.n, self.pre.copy(), self.post.copy(), self.weight.copy())

    def to_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weight, (self.pre, self.post)), shape=(self.n, self.n))

    def __len__(self):
        return len(self.weight)


@dataclass
class ReservoirTopology:
    positions: np.ndarray
    weights: sp.csr_matrix
    excitatory_mask: np.ndarray
    params: TopologyParams | None = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def excitatory_index(self) -> np.ndarray:
        return np.flatnonzero(self.excitatory_mask)

    def synapses(self) -> Synapses:
        coo = self.weights.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return Synapses(self.n, coo.row[order].astype(np.int64), coo.col[order].astype(np.int64),
                        coo.data[order].astype(np.float64))

    def with_weights(self, weights) -> "ReservoirTopology":
        if isinstance(weights, Synapses):
            weights = weights.to_matrix()
        return replace(self, weights=sp.csr_matrix(weights))

    def post_targets(self) -> list[np.ndarray]:
        w = self.weights.tocsr()
        return [w.indices[w.indptr[i]:w.indptr[i + 1]] for i in range(self.n)]


def sample_reservoir(params: TopologyParams = TopologyParams(), seed: int = 0) -> ReservoirTopology:
    """Draw a signed small-world reservoir.

    Inhibitory neurons are ``floor(inhib_fraction * n)`` neurons chosen without
    replacement.  Every ordered pair ``a != b`` is an independent Bernoulli
    trial; weights are uniform in the excitatory or inhibitory range, and rows
    of inhibitory neurons are negated.
    """
    rng = np.random.default_rng(seed)
    n = params.n
    pos = build_positions(n, params.j, params.s, params.p, params.shape)

    excitatory = np.ones(n, dtype=bool)
    excitatory[rng.choice(n, size=params.n_inhibitory, replace=False)] = False

    pres, posts = [], []
    block = max(1, 2 ** 22 // max(n, 1))
    for start in range(0, n, block):
        stop = min(n, start + block)
        prob = connection_probability(cdist(pos[start:stop], pos), params.C, params.lam)
        hit = rng.random(prob.shape) < prob
        hit[np.arange(stop - start), np.arange(start, stop)] = False
        r, c = np.nonzero(hit)
        pres.append(r + start)
        posts.append(c)
    pre = np.concatenate(pres) if pres else np.zeros(0, dtype=np.int64)
    post = np.concatenate(posts) if posts else np.zeros(0, dtype=np.int64)

    exc_pre = excitatory[pre]
    lo = np.where(exc_pre, params.w_exc_range[0], params.w_inh_range[0])
    hi = np.where(exc_pre, params.w_exc_range[1], params.w_inh_range[1])
    w = rng.uniform(lo, hi) if len(pre) else np.zeros(0)
    w = np.where(exc_pre, w, -w)

    weights = sp.csr_matrix((w, (pre, post)), shape=(n, n))
    weights.sort_indices()
    return ReservoirTopology(pos, weights, excitatory, params)


@dataclass
class InputMap:
    """Fixed input projection: input ``k`` drives reservoir neurons ``targets[k]``."""

    targets: np.ndarray  # (n_inputs, fan_out)
    w_input: float
    n_reservoir: int

    @property
    def n_inputs(self) -> int:
        return self.targets.shape[0]

    @property
    def fan_out(self) -> int:
        return self.targets.shape[1]

    def drive(self, input_spikes) -> np.ndarray:
        """Current injected into the reservoir for an input spike vector (or batch)."""
        x = np.asarray(input_spikes, dtype=np.float64)
        out = np.zeros(x.shape[:-1] + (self.n_reservoir,))
        for col in range(self.fan_out):
            out[..., self.targets[:, col]] += x * self.w_input
        return out

    def map_raster(self, dense_input) -> np.ndarray:
        """Boolean ``(T, n_reservoir)`` mask of reservoir neurons hit by an input spike."""
        x = np.asarray(dense_input, dtype=bool)
        out = np.zeros(x.shape[:-1] + (self.n_reservoir,), dtype=bool)
        for col in range(self.fan_out):
            out[..., self.targets[:, col]] |= x
        return out

    def matrix(self) -> np.ndarray:
        """Dense ``W_I`` with shape ``(n_inputs, n_reservoir)``."""
        w = np.zeros((self.n_inputs, self.n_reservoir))
        rows = np.repeat(np.arange(self.n_inputs), self.fan_out)
        w[rows, self.targets.ravel()] = self.w_input
        return w


def build_input_map(n_inputs: int, n_reservoir: int, fan_out: int = 1,
                    w_input: float = 5.0, seed: int = 0) -> InputMap:
    """Random one-to-``fan_out`` input projection with disjoint target sets."""
    if fan_out < 1:
        raise ValueError(f"fan_out must be >= 1, got {fan_out}")
    if n_inputs * fan_out > n_reservoir:
        raise ValueError(
            f"{n_inputs} inputs x fan_out {fan_out} exceeds {n_reservoir} reservoir neurons")
    rng = np.random.default_rng(seed)
    targets = rng.permutation(n_reservoir)[: n_inputs * fan_out].reshape(n_inputs, fan_out)
    return InputMap(targets, float(w_input), int(n_reservoir))


def _dense_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a)))) if a.size else 0.0


def spectral_radius(W, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Spectral radius of the entrywise absolute value of ``W``.

    Small matrices (n <= 64) use a dense eigensolver.  Larger ones use power
    iteration on ``|W| + I``; the shift keeps the Perron root dominant for
    periodic graphs.  If the iteration stalls, ARPACK takes over.
    """
    a = abs(sp.csr_matrix(W)) if sp.issparse(W) else np.abs(np.asarray(W, dtype=np.float64))
    n = a.shape[0]
    if n <= 64:
        return _dense_radius(a.toarray() if sp.issparse(a) else a)

    x = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x + x
        new = float(np.linalg.norm(y))
        if new == 0:
            return 0.0
        x = y / new
        if abs(new - lam) <= tol * new:
            # norm ratio can plateau early on reducible matrices; confirm with the
            # Rayleigh-like quotient on the converged vector
            r = float(x @ (a @ x)) / float(x @ x)
            if abs(r - (new - 1)) <= 1e-9 * max(new - 1, 1e-300):
                return max(new - 1.0, 0.0)
        lam = new

    from scipy.sparse.linalg import eigs
    vals = eigs(sp.csr_matrix(a), k=1, which="LM", return_eigenvectors=False, maxiter=max_iter)
    return float(np.abs(vals[0]))


def spectral_radius_normalize(W):
    """Divide ``W`` by the spectral radius of ``|W|``; signs are preserved."""
    rho = spectral_radius(W)
    if rho == 0:
        raise ValueError("cannot normalize: |W| has spectral radius 0")
    return W / rho


def normalized_laplacian_spectrum(W) -> np.ndarray:
    """Eigenvalues of ``I - D^-1/2 A D^-1/2`` for the binarized, undirected graph.

    Isolated vertices get ``L_ii = 0``.  Values are sorted ascending and
    clipped to ``[0, 2]`` to remove round-off.
    """
    a = sp.csr_matrix(W) if sp.issparse(W) else sp.csr_matrix(np.asarray(W))
    a = (a != 0).astype(np.float64)
    a = ((a + a.T) > 0).astype(np.float64).tolil()
    a.setdiag(0)
    a = a.toarray()
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    inv_sqrt[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    lap = np.diag((deg > 0).astype(np.float64)) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    vals = np.linalg.eigvalsh(lap)
    return np.clip(np.sort(vals), 0.0, 2.0)


def spectrum_kl(spec_a, spec_b, n_bins: int = 50, smoothing: float = 1.0) -> float:
    """KL(a || b) between eigenvalue histograms over [0, 2] with add-``smoothing`` counts."""
    a = np.asarray(spec_a, dtype=np.float64)
    b = np.asarray(spec_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("spectra must be nonempty")
    edges = np.linspace(0.0, 2.0, n_bins + 1)
    pa = np.histogram(np.clip(a, 0, 2), edges)[0] + smoothing
    pb = np.histogram(np.clip(b, 0, 2), edges)[0] + smoothing
    pa = pa / pa.sum()
    pb = pb / pb.sum()
    return float(np.sum(pa * np.log(pa / pb)))


DEFAULT_SEARCH_SPACE = {
    "s": (10.0, 200.0),
    "p": (0.0, 3000.0),
    "C": (0.01, 0.5),
    "lam": (100.0, 2000.0),
}


@dataclass
class SearchResult:
    params: TopologyParams
    score: float
    trials: list[tuple[dict, float]] = field(default_factory=list)


def search_topology_params(reference_spectrum, search_space: dict | None = None,
                           budget: int = 20, seed: int = 0,
                           base: TopologyParams = TopologyParams(),
                           n_bins: int = 50) -> SearchResult:
    """Random search over {s, p, C, lam} minimising spectrum KL to a reference.

    ``n`` and ``j`` stay fixed at the values in ``base``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    space = dict(DEFAULT_SEARCH_SPACE if search_space is None else search_space)
    rng = np.random.default_rng(seed)
    best = None
    trials = []
    for _ in range(budget):
        draw = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in sorted(space.items())}
        cand = replace(base, **draw)
        topo = sample_reservoir(cand, seed=int(rng.integers(2 ** 31)))
        score = spectrum_kl(reference_spectrum, normalized_laplacian_spectrum(topo.weights), n_bins)
        trials.append((draw, score))
        if best is None or score < best.score:
            best = SearchResult(cand, score)
    best.trials = trials
    return best


# CSV I/O

def write_spectrum_csv(path, spectrum) -> None:
    with open(path, "w", newline="") as fh:
        for v in np.asarray(spectrum, dtype=np.float64).tolist():
            fh.write(f"{v!r}\n")


def read_spectrum_csv(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line.split(",")[0]))
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from err
    return np.asarray(values)


def reference_spectrum() -> np.ndarray:
    """Bundled spectrum of a default-parameter reservoir (seed 0)."""
    ref = resources.files("pcritical") / "data" / "reference_spectrum.csv"
    with resources.as_file(ref) as path:
        return read_spectrum_csv(path)


def write_edge_list(path, weights, timestep: int | None = None, append: bool = False) -> None:
    """Write ``pre,post,weight`` rows; a ``timestep`` column is prepended when given."""
    if isinstance(weights, Synapses):
        pre, post, w = weights.pre, weights.post, weights.weight
    else:
        coo = sp.coo_matrix(weights)
        pre, post, w = coo.row, coo.col, coo.data
    new_file = not append or not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a" if append else "w", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow((["timestep"] if timestep is not None else []) + ["pre", "post", "weight"])
        for a, b, c in zip(pre.tolist(), post.tolist(), np.asarray(w, dtype=np.float64).tolist()):
            writer.writerow(([timestep] if timestep is not None else []) + [a, b, repr(c)])


def read_edge_list(path, n: int) -> sp.csr_matrix:
    pre, post, w = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            pre.append(int(row["pre"]))
            post.append(int(row["post"]))
            w.append(float(row["weight"]))
    return sp.csr_matrix((w, (pre, post)), shape=(n, n))
