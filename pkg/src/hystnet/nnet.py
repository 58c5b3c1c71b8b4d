"""Minimal neural-network substrate with manual backpropagation.

Dense stacks, residual stacks (identity skip every two layers), a gated
recurrent (LSTM) stack with dense encoder/decoder, MSE loss, Adam, and a
finite-difference gradient checker. No autodiff: the networks here are desk
scale, and hand-written backward passes keep every gradient testable against
central differences.

All nets share one protocol: forward(x) -> (y, cache), backward(cache, dy)
accumulating into Param.grad, parameters(), zero_grad(). Forward passes are
pure given parameters; training is deterministic given the seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "identity", "sigmoid", "tanh")


@dataclass
class Param:
    """One parameter tensor with its accumulated gradient."""

    values: np.ndarray
    grad: np.ndarray

    @classmethod
    def zeros(cls, *shape) -> "Param":
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def glorot(cls, rng: np.random.Generator, fan_in: int, fan_out: int,
               shape=None) -> "Param":
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        shape = (fan_in, fan_out) if shape is None else shape
        return cls(rng.uniform(-lim, lim, size=shape), np.zeros(shape))


def _apply_act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "identity":
        return z
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d(act)/dz given pre-activation z and output a."""
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "identity":
        return np.ones_like(z)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {name!r}")


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


class _Net:
    """Shared parameter bookkeeping."""

    def parameters(self) -> list[Param]:
        raise NotImplementedError

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad[...] = 0.0

    @property
    def n_params(self) -> int:
        return sum(p.values.size for p in self.parameters())

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([p.values.reshape(-1) for p in self.parameters()])

    def set_flat_params(self, flat: np.ndarray) -> None:
        off = 0
        for p in self.parameters():
            size = p.values.size
            p.values[...] = flat[off:off + size].reshape(p.values.shape)
            off += size
        if off != flat.size:
            raise ValueError("flat parameter vector has wrong length")


class DenseNet(_Net):
    """Affine + activation chain: dims = [d_in, h1, ..., d_out]."""

    def __init__(self, dims, activations, rng: np.random.Generator):
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.dims = [int(d) for d in dims]
        self.activations = list(activations)
        self.weights = [
            Param.glorot(rng, self.dims[i], self.dims[i + 1])
            for i in range(len(dims) - 1)
        ]
        self.biases = [Param.zeros(d) for d in self.dims[1:]]

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def parameters(self) -> list[Param]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def forward(self, x):
        xb, squeeze = _as_batch(x)
        if xb.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got {xb.shape[1]}")
        acts = [xb]
        pres = []
        h = xb
        for w, b, name in zip(self.weights, self.biases, self.activations):
            z = h @ w.values + b.values
            h = _apply_act(name, z)
            pres.append(z)
            acts.append(h)
        cache = {
            "acts": acts,
            "pres": pres,
            "squeeze": squeeze,
            "relu_pres": [z for z, n in zip(pres, self.activations) if n == "relu"],
        }
        return (h[0] if squeeze else h), cache

    def infer(self, x):
        """Cache-free forward pass for inference."""
        h, _ = _as_batch(x)
        for w, b, name in zip(self.weights, self.biases, self.activations):
            h = _apply_act(name, h @ w.values + b.values)
        return h[0] if np.asarray(x).ndim == 1 else h

    def backward(self, cache, dy):
        d = np.asarray(dy, dtype=float)
        if cache["squeeze"]:
            d = d[None, :]
        for i in range(len(self.weights) - 1, -1, -1):
            z = cache["pres"][i]
            a = cache["acts"][i + 1]
            dz = d * _act_grad(self.activations[i], z, a)
            self.weights[i].grad += cache["acts"][i].T @ dz
            self.biases[i].grad += dz.sum(axis=0)
            d = dz @ self.weights[i].values.T
        return d[0] if cache["squeeze"] else d

    def to_dict(self) -> dict:
        return {
            "kind": "dense",
            "dims": self.dims,
            "activations": self.activations,
            "weights": [w.values.tolist() for w in self.weights],
            "biases": [b.values.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DenseNet":
        net = cls(d["dims"], d["activations"], np.random.default_rng(0))
        for w, stored in zip(net.weights, d["weights"]):
            w.values[...] = np.asarray(stored, dtype=float)
        for b, stored in zip(net.biases, d["biases"]):
            b.values[...] = np.asarray(stored, dtype=float)
        return net


def mlp(d_in: int, hidden, d_out: int, rng: np.random.Generator) -> DenseNet:
    """ReLU hidden layers, identity output (no activation before the output)."""
    dims = [d_in, *hidden, d_out]
    acts = ["relu"] * len(list(hidden)) + ["identity"]
    return DenseNet(dims, acts, rng)


class ResidualNet(_Net):
    """Dense stack with identity skip connections every two layers.

    stem (relu) -> n_blocks x [relu layer, linear layer, add input] -> output.
    A block whose second layer is zero-initialized is exactly the identity.
    """

    def __init__(self, d_in: int, width: int, n_blocks: int, d_out: int,
                 rng: np.random.Generator):
        self.d_in, self.width, self.n_blocks, self.d_out = d_in, width, n_blocks, d_out
        self.stem_w = Param.glorot(rng, d_in, width)
        self.stem_b = Param.zeros(width)
        self.blocks = []
        for _ in range(n_blocks):
            self.blocks.append(
                (
                    Param.glorot(rng, width, width),
                    Param.zeros(width),
                    Param.glorot(rng, width, width),
                    Param.zeros(width),
                )
            )
        self.out_w = Param.glorot(rng, width, d_out)
        self.out_b = Param.zeros(d_out)

    @property
    def input_dim(self) -> int:
        return self.d_in

    @property
    def output_dim(self) -> int:
        return self.d_out

    def parameters(self) -> list[Param]:
        out = [self.stem_w, self.stem_b]
        for w1, b1, w2, b2 in self.blocks:
            out.extend((w1, b1, w2, b2))
        out.extend((self.out_w, self.out_b))
        return out

    def forward(self, x):
        xb, squeeze = _as_batch(x)
        z_stem = xb @ self.stem_w.values + self.stem_b.values
        h = np.maximum(z_stem, 0.0)
        block_caches = []
        for w1, b1, w2, b2 in self.blocks:
            z1 = h @ w1.values + b1.values
            u = np.maximum(z1, 0.0)
            block_caches.append((h, z1, u))
            h = h + u @ w2.values + b2.values
        y = h @ self.out_w.values + self.out_b.values
        cache = {
            "x": xb,
            "z_stem": z_stem,
            "blocks": block_caches,
            "h_final": h,
            "squeeze": squeeze,
            "relu_pres": [z_stem] + [z1 for (_, z1, _) in block_caches],
        }
        return (y[0] if squeeze else y), cache

    def infer(self, x):
        h, _ = _as_batch(x)
        h = np.maximum(h @ self.stem_w.values + self.stem_b.values, 0.0)
        for w1, b1, w2, b2 in self.blocks:
            u = np.maximum(h @ w1.values + b1.values, 0.0)
            h = h + u @ w2.values + b2.values
        y = h @ self.out_w.values + self.out_b.values
        return y[0] if np.asarray(x).ndim == 1 else y

    def backward(self, cache, dy):
        d = np.asarray(dy, dtype=float)
        if cache["squeeze"]:
            d = d[None, :]
        self.out_w.grad += cache["h_final"].T @ d
        self.out_b.grad += d.sum(axis=0)
        dh = d @ self.out_w.values.T
        for (w1, b1, w2, b2), (h_in, z1, u) in zip(
            reversed(self.blocks), reversed(cache["blocks"])
        ):
            w2.grad += u.T @ dh
            b2.grad += dh.sum(axis=0)
            du = dh @ w2.values.T
            dz1 = du * (z1 > 0.0)
            w1.grad += h_in.T @ dz1
            b1.grad += dz1.sum(axis=0)
            dh = dh + dz1 @ w1.values.T
        dz_stem = dh * (cache["z_stem"] > 0.0)
        self.stem_w.grad += cache["x"].T @ dz_stem
        self.stem_b.grad += dz_stem.sum(axis=0)
        dx = dz_stem @ self.stem_w.values.T
        return dx[0] if cache["squeeze"] else dx

    def to_dict(self) -> dict:
        return {
            "kind": "residual",
            "d_in": self.d_in,
            "width": self.width,
            "n_blocks": self.n_blocks,
            "d_out": self.d_out,
            "params": [p.values.tolist() for p in self.parameters()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualNet":
        net = cls(d["d_in"], d["width"], d["n_blocks"], d["d_out"],
                  np.random.default_rng(0))
        for p, stored in zip(net.parameters(), d["params"]):
            p.values[...] = np.asarray(stored, dtype=float)
        return net


class LSTMNet(_Net):
    """Dense encoder -> one gated recurrent cell per frame -> dense decoder.

    Gate order in the packed matrices is (input, forget, candidate, output);
    gates use sigmoid, the candidate and cell output use tanh.
    """

    def __init__(self, d_in: int, enc_dim: int, hidden_dim: int, d_out: int,
                 rng: np.random.Generator):
        self.d_in, self.enc_dim, self.hidden_dim, self.d_out = (
            d_in, enc_dim, hidden_dim, d_out,
        )
        self.encoder = DenseNet([d_in, enc_dim], ["relu"], rng)
        h = hidden_dim
        self.wx = Param.glorot(rng, enc_dim, 4 * h, shape=(enc_dim, 4 * h))
        self.wh = Param.glorot(rng, h, 4 * h, shape=(h, 4 * h))
        self.b = Param.zeros(4 * h)
        self.decoder = DenseNet([h, d_out], ["identity"], rng)

    @property
    def input_dim(self) -> int:
        return self.d_in

    @property
    def output_dim(self) -> int:
        return self.d_out

    def parameters(self) -> list[Param]:
        return (
            self.encoder.parameters()
            + [self.wx, self.wh, self.b]
            + self.decoder.parameters()
        )

    def initial_state(self, batch: int = 1) -> tuple[np.ndarray, np.ndarray]:
        h = np.zeros((batch, self.hidden_dim))
        return h, h.copy()

    def _gates(self, e, h_prev):
        hdim = self.hidden_dim
        z = e @ self.wx.values + h_prev @ self.wh.values + self.b.values
        i = 1.0 / (1.0 + np.exp(-z[:, :hdim]))
        f = 1.0 / (1.0 + np.exp(-z[:, hdim:2 * hdim]))
        g = np.tanh(z[:, 2 * hdim:3 * hdim])
        o = 1.0 / (1.0 + np.exp(-z[:, 3 * hdim:]))
        return i, f, g, o

    def step(self, x, h_prev, c_prev):
        """One recurrent update; returns (y, h, c, cache)."""
        xb, squeeze = _as_batch(x)
        hb = h_prev if h_prev.ndim == 2 else h_prev[None, :]
        cb = c_prev if c_prev.ndim == 2 else c_prev[None, :]
        e, enc_cache = self.encoder.forward(xb)
        i, f, g, o = self._gates(e, hb)
        c = f * cb + i * g
        tc = np.tanh(c)
        h = o * tc
        y, dec_cache = self.decoder.forward(h)
        cache = {
            "e": e, "enc": enc_cache, "h_prev": hb, "c_prev": cb,
            "i": i, "f": f, "g": g, "o": o, "c": c, "tc": tc,
            "dec": dec_cache, "squeeze": squeeze,
        }
        if squeeze:
            return y[0] if y.ndim == 2 else y, h[0], c[0], cache
        return y, h, c, cache

    def forward(self, window):
        """Run a window of frames; output is the final frame's decoded state.

        window: (T, d_in) for one sample or (B, T, d_in) for a batch.
        """
        w = np.asarray(window, dtype=float)
        squeeze = w.ndim == 2
        if squeeze:
            w = w[None]
        batch, T, _ = w.shape
        h, c = self.initial_state(batch)
        caches = []
        y = None
        for t in range(T):
            y, h, c, cache = self.step(w[:, t, :], h, c)
            caches.append(cache)
        full = {"steps": caches, "squeeze": squeeze,
                "relu_pres": [pz for cc in caches for pz in cc["enc"]["relu_pres"]]}
        return (y[0] if squeeze else y), full

    def backward(self, cache, dy):
        """Backpropagation through time; loss applies to the final output only."""
        steps = cache["steps"]
        d = np.asarray(dy, dtype=float)
        if cache["squeeze"]:
            d = d[None, :]
        last = steps[-1]
        dh = self.decoder.backward(last["dec"], d)
        dc = np.zeros_like(last["c"])
        hdim = self.hidden_dim
        for t in range(len(steps) - 1, -1, -1):
            st = steps[t]
            i, f, g, o, c, tc = st["i"], st["f"], st["g"], st["o"], st["c"], st["tc"]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * g
            df = dc * st["c_prev"]
            dg = dc * i
            dc = dc * f
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            self.wx.grad += st["e"].T @ dz
            self.wh.grad += st["h_prev"].T @ dz
            self.b.grad += dz.sum(axis=0)
            de = dz @ self.wx.values.T
            self.encoder.backward(st["enc"], de)
            # Intermediate decoded outputs carry no loss; only the recurrent
            # path propagates further back.
            dh = dz @ self.wh.values.T
        return None

    def stream(self, frames):
        """Stateful inference over a whole sequence; returns per-frame outputs."""
        x = np.asarray(frames, dtype=float)
        h, c = self.initial_state(1)
        out = np.empty((x.shape[0], self.d_out))
        for t in range(x.shape[0]):
            y, h, c, _ = self.step(x[t][None, :], h, c)
            out[t] = y[0]
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "lstm",
            "d_in": self.d_in,
            "enc_dim": self.enc_dim,
            "hidden_dim": self.hidden_dim,
            "d_out": self.d_out,
            "encoder": self.encoder.to_dict(),
            "wx": self.wx.values.tolist(),
            "wh": self.wh.values.tolist(),
            "b": self.b.values.tolist(),
            "decoder": self.decoder.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LSTMNet":
        net = cls(d["d_in"], d["enc_dim"], d["hidden_dim"], d["d_out"],
                  np.random.default_rng(0))
        net.encoder = DenseNet.from_dict(d["encoder"])
        net.wx.values[...] = np.asarray(d["wx"], dtype=float)
        net.wh.values[...] = np.asarray(d["wh"], dtype=float)
        net.b.values[...] = np.asarray(d["b"], dtype=float)
        net.decoder = DenseNet.from_dict(d["decoder"])
        return net


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements and its gradient wrt pred."""
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    diff = p - t
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


class Adam:
    """Bias-corrected Adam; moment state stored per parameter tensor."""

    def __init__(self, params: list[Param], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.values) for p in params]
        self.v = [np.zeros_like(p.values) for p in params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * p.grad
            v *= b2
            v += (1.0 - b2) * p.grad * p.grad
            p.values -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def fit_network(
    net,
    x: np.ndarray,
    y: np.ndarray,
    *,
    epochs: int,
    batch_size: int = 256,
    lr: float = 1e-3,
    val_fraction: float = 0.1,
    patience: int = 5,
    rng: np.random.Generator,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> dict:
    """MSE training with Adam and early stopping on a held-out split.

    Pass x_val/y_val to validate on an external set (e.g. held-out
    trajectories, which is what the estimators do - a random frame split
    leaks trajectory state and rewards memorization); otherwise a
    val_fraction random frame split is used. Returns the training log
    (per-epoch train/val loss, best epoch). With epochs == 0 the network is
    returned untouched.
    """
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    history: dict = {"train_loss": [], "val_loss": [], "best_epoch": None}
    if epochs == 0:
        return history
    if x_val is not None:
        train_idx = np.arange(n)
    else:
        perm = rng.permutation(n)
        n_val = int(round(val_fraction * n)) if n > 1 else 0
        val_idx = perm[:n_val]
        train_idx = perm[n_val:]
        if train_idx.size == 0:
            train_idx, val_idx = perm, perm[:0]
        if val_idx.size:
            x_val, y_val = x[val_idx], y[val_idx]
    opt = Adam(net.parameters(), lr=lr)
    best_val = math.inf
    best_flat = net.get_flat_params()
    best_epoch = 0
    bad_epochs = 0

    def eval_loss(xs, ys):
        total = 0.0
        for s in range(0, xs.shape[0], 8192):
            pred = net.infer(xs[s:s + 8192])
            total += float(np.sum((pred - ys[s:s + 8192]) ** 2))
        return total / ys.size

    for epoch in range(1, epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        total = 0.0
        for start in range(0, order.size, batch_size):
            idx = order[start:start + batch_size]
            net.zero_grad()
            pred, cache = net.forward(x[idx])
            loss, dpred = mse_loss(pred, y[idx])
            net.backward(cache, dpred)
            opt.step()
            total += loss * idx.size
        train_loss = total / order.size
        val_loss = eval_loss(x_val, y_val) if x_val is not None else train_loss
        history["train_loss"].append(train_loss)
        history["val_loss"].append(val_loss)
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_flat = net.get_flat_params()
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= patience:
                break
    net.set_flat_params(best_flat)
    history["best_epoch"] = best_epoch
    return history


def _kink_signs(cache) -> list[np.ndarray]:
    return [np.sign(z) for z in cache.get("relu_pres", [])]


def grad_check(model, x, target, tolerance: float = 1e-5,
               step: float = 1e-5) -> dict:
    """Compare every parameter gradient against central finite differences.

    Entries whose +/-step evaluations land on different sides of a ReLU kink
    are skipped (the loss is not differentiable there). Returns a report;
    failure is reported, never raised.
    """
    model.zero_grad()
    pred, cache = model.forward(x)
    _, dpred = mse_loss(pred, target)
    model.backward(cache, dpred)
    analytic = [p.grad.copy() for p in model.parameters()]

    max_rel = 0.0
    n_checked = 0
    n_skipped = 0
    for p, g_an in zip(model.parameters(), analytic):
        flat = p.values.reshape(-1)
        g_flat = g_an.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            y_hi, cache_hi = model.forward(x)
            loss_hi, _ = mse_loss(y_hi, target)
            flat[j] = orig - step
            y_lo, cache_lo = model.forward(x)
            loss_lo, _ = mse_loss(y_lo, target)
            flat[j] = orig
            crossed = any(
                np.any(s_hi != s_lo)
                for s_hi, s_lo in zip(_kink_signs(cache_hi), _kink_signs(cache_lo))
            )
            if crossed:
                n_skipped += 1
                continue
            fd = (loss_hi - loss_lo) / (2.0 * step)
            denom = max(abs(fd), abs(g_flat[j]), 1e-3)
            max_rel = max(max_rel, abs(fd - g_flat[j]) / denom)
            n_checked += 1
    return {
        "max_rel_err": max_rel,
        "n_checked": n_checked,
        "n_skipped": n_skipped,
        "tolerance": tolerance,
        "passed": max_rel < tolerance and n_checked > 0,
    }
