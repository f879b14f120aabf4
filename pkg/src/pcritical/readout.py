"""Time-binned spike-count features and a batch-normalized softmax readout.

The readout is ``softmax(bn(x) @ W + b)`` trained with cross-entropy and
Adam (optionally AMSGrad, optionally decoupled weight decay).  Gradients are
written out by hand, including the batch-norm backward pass.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .lif import SpikeRaster

BN_EPS = 1e-5
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
PARAM_NAMES = ("gamma", "shift", "W", "b")


def bin_spikes(raster, bin_ms: int = 60, n_bins: int | None = None) -> np.ndarray:
    """Spike counts per (neuron, bin), flattened neuron-major.

    ``raster`` may be a ``SpikeRaster``, a ``(T, n)`` array, or a batch
    ``(B, T, n)``.  Samples shorter than ``n_bins * bin_ms`` are zero-padded
    on the right and longer ones truncated.  Returns ``(n * n_bins,)`` or
    ``(B, n * n_bins)``.
    """
    if bin_ms < 1:
        raise ValueError("bin_ms must be >= 1")
    x = raster.dense if isinstance(raster, SpikeRaster) else np.asarray(raster)
    single = x.ndim == 2
    if single:
        x = x[None]
    B, T, n = x.shape
    if n_bins is None:
        n_bins = T // bin_ms
    span = n_bins * bin_ms
    padded = np.zeros((B, span, n), dtype=np.int64)
    keep = min(T, span)
    padded[:, :keep] = x[:, :keep]
    counts = padded.reshape(B, n_bins, bin_ms, n).sum(axis=2)  # (B, bins, n)
    feats = counts.transpose(0, 2, 1).reshape(B, n * n_bins)
    return feats[0] if single else feats


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(labels)), labels].mean())


@dataclass
class ReadoutModel:
    gamma: np.ndarray
    shift: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    W: np.ndarray
    b: np.ndarray
    momentum: float = 0.1
    amsgrad: bool = False
    learn_bn_affine: bool = True
    use_bias: bool = True
    step: int = 0
    moments: dict = field(default_factory=dict, repr=False)

    @classmethod
    def init(cls, n_features: int, n_classes: int, seed: int = 0, **kw) -> "ReadoutModel":
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(n_features)
        model = cls(
            gamma=np.ones(n_features), shift=np.zeros(n_features),
            running_mean=np.zeros(n_features), running_var=np.ones(n_features),
            W=rng.uniform(-bound, bound, (n_features, n_classes)),
            b=rng.uniform(-bound, bound, n_classes), **kw)
        if not model.use_bias:
            model.b[:] = 0.0
        return model

    @property
    def n_classes(self) -> int:
        return self.W.shape[1]

    def normalize(self, x, training: bool = False):
        """Apply batch norm. In training mode the batch statistics are used and
        the running averages are updated."""
        x = np.asarray(x, dtype=np.float64)
        if training:
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mu
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mu, var = self.running_mean, self.running_var
        return self.gamma * (x - mu) / np.sqrt(var + BN_EPS) + self.shift

    def logits(self, x, training: bool = False) -> np.ndarray:
        return self.normalize(x, training) @ self.W + self.b

    def predict_proba(self, x) -> np.ndarray:
        return softmax(self.logits(x))

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)  # ties -> lowest class index

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def loss_and_grads(self, x, labels) -> tuple[float, dict]:
        """Training-mode loss and gradients w.r.t. gamma, shift, W and b.

        Does not touch the running statistics.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(labels)
        m = len(x)
        mu = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mu) * inv_std
        h = self.gamma * xhat + self.shift
        z = h @ self.W + self.b
        loss = cross_entropy(z, y)

        dz = softmax(z)
        dz[np.arange(m), y] -= 1.0
        dz /= m
        grads = {"W": h.T @ dz, "b": dz.sum(axis=0)}
        dh = dz @ self.W.T
        grads["gamma"] = (dh * xhat).sum(axis=0)
        grads["shift"] = dh.sum(axis=0)
        if not self.learn_bn_affine:
            grads["gamma"] = np.zeros_like(self.gamma)
            grads["shift"] = np.zeros_like(self.shift)
        if not self.use_bias:
            grads["b"] = np.zeros_like(self.b)
        return loss, grads

    def adam_update(self, grads: dict, lr: float, weight_decay: float = 0.0) -> None:
        b1, b2 = ADAM_BETAS
        self.step += 1
        for name in PARAM_NAMES:
            p = getattr(self, name)
            g = grads[name]
            if name not in self.moments:
                self.moments[name] = {"m": np.zeros_like(p), "v": np.zeros_like(p), "vmax": np.zeros_like(p)}
            mom = self.moments[name]
            mom["m"] = b1 * mom["m"] + (1 - b1) * g
            mom["v"] = b2 * mom["v"] + (1 - b2) * g * g
            if self.amsgrad:
                mom["vmax"] = np.maximum(mom["vmax"], mom["v"])
                v = mom["vmax"]
            else:
                v = mom["v"]
            m_hat = mom["m"] / (1 - b1 ** self.step)
            v_hat = v / (1 - b2 ** self.step)
            if weight_decay and name == "W":
                p -= lr * weight_decay * p
            p -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)

    def save(self, path) -> None:
        arrays = {name: getattr(self, name) for name in PARAM_NAMES + ("running_mean", "running_var")}
        for name, mom in self.moments.items():
            for key, val in mom.items():
                arrays[f"moment.{name}.{key}"] = val
        meta = np.array([self.momentum, float(self.amsgrad), float(self.learn_bn_affine),
                         float(self.use_bias), float(self.step)])
        np.savez(path, _meta=meta, **arrays)

    @classmethod
    def load(cls, path) -> "ReadoutModel":
        with np.load(path) as data:
            momentum, amsgrad, affine, bias, step = data["_meta"]
            model = cls(data["gamma"], data["shift"], data["running_mean"], data["running_var"],
                        data["W"], data["b"], momentum=float(momentum), amsgrad=bool(amsgrad),
                        learn_bn_affine=bool(affine), use_bias=bool(bias), step=int(step))
            for key in data.files:
                if key.startswith("moment."):
                    _, name, part = key.split(".")
                    model.moments.setdefault(name, {})[part] = data[key]
        return model


def train_readout(features, labels, epochs: int = 10, batch_size: int = 32, lr: float = 1e-3,
                  amsgrad: bool = False, seed: int = 0, weight_decay: float = 0.0,
                  n_classes: int | None = None, model: ReadoutModel | None = None,
                  learn_bn_affine: bool = True, use_bias: bool = True) -> ReadoutModel:
    """Minibatch Adam on softmax cross-entropy; deterministic given ``seed``.

    Raises:
        FloatingPointError: if the loss becomes non-finite.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    rng = np.random.default_rng(seed)
    if model is None:
        model = ReadoutModel.init(x.shape[1], n_classes, seed=int(rng.integers(2 ** 31)),
                                  amsgrad=amsgrad, learn_bn_affine=learn_bn_affine, use_bias=use_bias)
    for epoch in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            idx = order[start:start + batch_size]
            if len(idx) < 2 and len(x) >= 2:
                continue  # batch statistics need at least two samples
            model.normalize(x[idx], training=True)
            loss, grads = model.loss_and_grads(x[idx], y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss {loss} at epoch {epoch}, step {model.step}")
            model.adam_update(grads, lr, weight_decay)
    return model


def evaluate(model: ReadoutModel, features, labels) -> float:
    y = np.asarray(labels)
    if len(y) == 0:
        return float("nan")
    return float(np.mean(model.predict(features) == y))


def write_features_csv(path, features, labels=None) -> None:
    x = np.asarray(features)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ([] if labels is None else ["label"]) + [f"f{k}" for k in range(x.shape[1])]
        writer.writerow(header)
        for row, vals in enumerate(x.tolist()):
            writer.writerow(([] if labels is None else [int(labels[row])]) + vals)


def read_features_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    data = np.asarray(rows).reshape(len(rows), len(header))
    if header and header[0] == "label":
        return data[:, 1:], data[:, 0].astype(np.int64)
    return data, None
