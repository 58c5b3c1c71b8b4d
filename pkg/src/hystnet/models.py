"""Current estimators in the scikit-learn idiom, plus evaluation and latency
benchmarking.

Estimators fit on a Dataset (targets are its currents) and predict per-frame
currents for another Dataset. Four families:

* MLPCurrentEstimator - plain multi-frame dense network.
* ResidualCurrentEstimator - same input, identity skip connections every two
  layers; optionally takes a retained-velocity (MD) feature block.
* LSTMCurrentEstimator - recurrent baseline trained on truncated windows.
* HierarchicalResidualEstimator - an ordered stack of dense networks where
  stage j is trained on the residual error left by stages < j and all stages
  share the multi-frame input but read different MD groups; at inference the
  stages run independently (optionally on parallel workers) and their outputs
  are summed in stage order, so the answer is identical in both modes.

The MLP and residual baselines default to the same parameter count as the
full three-stage stack, so accuracy comparisons are capacity-fair.

Feature standardization constants are learned from the training set and
stored with each model; targets are standardized the same way and folded back
at predict time. Model files are versioned JSON and byte-stable: the same
config and seed reproduce the same file.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator

from .data import Dataset, rmse_per_joint
from .features import (
    MDState,
    ThresholdSet,
    build_design_matrix,
    build_input_vector,
    default_thresholds,
    md_trace,
)
from .nnet import DenseNet, LSTMNet, ResidualNet, fit_network, mlp
from .validation import N_JOINTS, check_fitted

MODEL_FORMAT = "hystnet-model"
MODEL_VERSION = 1

_INFER_CHUNK = 8192


class _Standardizer:
    """Per-dimension mean/scale with a floor on the scale."""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = mean
        self.scale = scale

    @classmethod
    def fit(cls, x: np.ndarray) -> "_Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale < 1e-8, 1.0, scale)
        return cls(mean, scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def invert(self, x: np.ndarray) -> np.ndarray:
        return x * self.scale + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "_Standardizer":
        return cls(np.asarray(d["mean"]), np.asarray(d["scale"]))


def _infer_chunked(net, x: np.ndarray) -> np.ndarray:
    out = np.empty((x.shape[0], net.output_dim))
    for start in range(0, x.shape[0], _INFER_CHUNK):
        out[start:start + _INFER_CHUNK] = net.infer(x[start:start + _INFER_CHUNK])
    return out


def _dataset_fingerprint(dataset: Dataset) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.q).tobytes())
    return h.hexdigest()


def _resolve_thresholds(thresholds) -> ThresholdSet:
    return default_thresholds() if thresholds is None else thresholds


def _val_split(dataset: Dataset, val_fraction: float, seed: int):
    """Early-stopping split by whole trajectories.

    A random frame split would share trajectory state between the two sides
    and let validation reward memorized friction states; held-out
    trajectories measure what actually generalizes. Falls back to no
    validation set when the dataset cannot be split.
    """
    if val_fraction <= 0.0 or dataset.n_trajectories < 2:
        return dataset, None
    from .data import split_by_trajectory

    return split_by_trajectory(dataset, val_fraction, seed)


class _WindowedCurrentEstimator(BaseEstimator):
    """Shared machinery for the dense-input estimators."""

    # Subclasses define: _build_net(d_in, rng) and the md_subset semantics.

    def _subset(self, ts: ThresholdSet | None):
        if self.md_subset is None:
            return None
        if self.md_subset == "all":
            return ts.full_range()
        return tuple(self.md_subset)

    def _design(self, dataset: Dataset, ts, subset, trace=None) -> np.ndarray:
        return build_design_matrix(dataset, self.M, ts, subset, trace=trace)

    def fit(self, dataset: Dataset, y=None):
        if dataset.n_frames == 0:
            raise ValueError("empty dataset")
        if dataset.current is None:
            raise ValueError("dataset has no currents to learn from")
        rng = np.random.default_rng(self.seed)
        ts = _resolve_thresholds(self.thresholds) if self.md_subset is not None else None
        subset = self._subset(ts)
        fit_part, val_part = _val_split(dataset, self.val_fraction, self.seed)
        x = self._design(fit_part, ts, subset)
        y_t = fit_part.current
        self.x_scaler_ = _Standardizer.fit(x)
        self.y_scaler_ = _Standardizer.fit(y_t)
        x_val = y_val = None
        if val_part is not None:
            x_val = self.x_scaler_.apply(self._design(val_part, ts, subset))
            y_val = self.y_scaler_.apply(val_part.current)
        self.net_ = self._build_net(x.shape[1], rng)
        self.history_ = fit_network(
            self.net_,
            self.x_scaler_.apply(x),
            self.y_scaler_.apply(y_t),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            val_fraction=self.val_fraction,
            patience=self.patience,
            rng=rng,
            x_val=x_val,
            y_val=y_val,
        )
        self.thresholds_ = ts
        self.subset_ = subset
        self.n_params_ = self.net_.n_params
        self.train_fingerprint_ = _dataset_fingerprint(dataset)
        return self

    def predict(self, dataset: Dataset) -> np.ndarray:
        check_fitted(self)
        x = self._design(dataset, self.thresholds_, self.subset_)
        z = _infer_chunked(self.net_, self.x_scaler_.apply(x))
        return self.y_scaler_.invert(z)

    def predict_frame(self, frames, md: MDState | None) -> np.ndarray:
        """Single-step inference for closed-loop use."""
        check_fitted(self)
        v = build_input_vector(frames, md, self.subset_)
        z = self.net_.infer(self.x_scaler_.apply(v))
        return self.y_scaler_.invert(z)

    # -- serialization ------------------------------------------------------

    def _state_dict(self) -> dict:
        return {
            "net": self.net_.to_dict(),
            "x_scaler": self.x_scaler_.to_dict(),
            "y_scaler": self.y_scaler_.to_dict(),
            "subset": list(self.subset_) if self.subset_ else None,
            "thresholds": _thresholds_to_dict(self.thresholds_),
        }

    def _load_state(self, state: dict) -> None:
        self.net_ = _net_from_dict(state["net"])
        self.x_scaler_ = _Standardizer.from_dict(state["x_scaler"])
        self.y_scaler_ = _Standardizer.from_dict(state["y_scaler"])
        self.subset_ = tuple(state["subset"]) if state["subset"] else None
        self.thresholds_ = _thresholds_from_dict(state["thresholds"])
        self.n_params_ = self.net_.n_params


class MLPCurrentEstimator(_WindowedCurrentEstimator):
    """Multi-frame dense baseline; hidden sizing matches the 3-stage stack."""

    def __init__(self, M=5, md_subset=None, thresholds=None,
                 hidden=(256, 256, 256, 256, 256, 256, 256), epochs=20,
                 batch_size=256, lr=1e-3, val_fraction=0.1, patience=5, seed=0):
        self.M = M
        self.md_subset = md_subset
        self.thresholds = thresholds
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.val_fraction = val_fraction
        self.patience = patience
        self.seed = seed

    def _build_net(self, d_in, rng):
        return mlp(d_in, list(self.hidden), N_JOINTS, rng)


class ResidualCurrentEstimator(_WindowedCurrentEstimator):
    """Dense net with identity skips every two layers (optionally MD input).

    Same depth and parameter count as the MLP baseline at the defaults:
    stem + 3 two-layer blocks equals 7 hidden weight layers of width 256.
    """

    def __init__(self, M=5, md_subset=None, thresholds=None, width=256,
                 n_blocks=3, epochs=20, batch_size=256, lr=1e-3,
                 val_fraction=0.1, patience=5, seed=0):
        self.M = M
        self.md_subset = md_subset
        self.thresholds = thresholds
        self.width = width
        self.n_blocks = n_blocks
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.val_fraction = val_fraction
        self.patience = patience
        self.seed = seed

    def _build_net(self, d_in, rng):
        return ResidualNet(d_in, self.width, self.n_blocks, N_JOINTS, rng)


class LSTMCurrentEstimator(BaseEstimator):
    """Recurrent baseline: encoder -> gated cell per frame -> decoder.

    Trained on truncated windows (loss on the final frame only); inference
    streams the recurrence over whole trajectories. Sized well below the
    dense baselines to keep desk-scale training time reasonable.
    """

    def __init__(self, window=100, enc_dim=64, hidden_dim=96, epochs=10,
                 batch_size=64, lr=1e-3, samples_per_epoch=8192,
                 val_fraction=0.1, patience=5, seed=0):
        self.window = window
        self.enc_dim = enc_dim
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.samples_per_epoch = samples_per_epoch
        self.val_fraction = val_fraction
        self.patience = patience
        self.seed = seed

    @staticmethod
    def _states(dataset: Dataset) -> np.ndarray:
        return np.concatenate([dataset.q, dataset.dq, dataset.ddq], axis=1)

    def _window_positions(self, dataset: Dataset) -> np.ndarray:
        if self.window < 1:
            raise ValueError("window must be >= 1")
        positions = []
        for s in dataset.trajectory_slices():
            length = s.stop - s.start
            if length < self.window:
                raise ValueError(
                    f"window {self.window} exceeds trajectory length {length}"
                )
            positions.append(np.arange(s.start + self.window - 1, s.stop))
        return np.concatenate(positions)

    def fit(self, dataset: Dataset, y=None):
        if dataset.n_frames == 0:
            raise ValueError("empty dataset")
        if dataset.current is None:
            raise ValueError("dataset has no currents to learn from")
        rng = np.random.default_rng(self.seed)
        fit_part, val_part = _val_split(dataset, self.val_fraction, self.seed)
        states = self._states(fit_part)
        self.x_scaler_ = _Standardizer.fit(states)
        self.y_scaler_ = _Standardizer.fit(fit_part.current)
        xs = self.x_scaler_.apply(states)
        ys = self.y_scaler_.apply(fit_part.current)
        train_pos = self._window_positions(fit_part)
        if val_part is not None:
            xs_val = self.x_scaler_.apply(self._states(val_part))
            ys_val = self.y_scaler_.apply(val_part.current)
            val_pos = self._window_positions(val_part)
            val_pos = val_pos[rng.permutation(val_pos.size)][:512]
        else:
            xs_val, ys_val = xs, ys
            train_pos = train_pos[rng.permutation(train_pos.size)]
            n_val = max(1, int(round(self.val_fraction * train_pos.size)))
            val_pos = train_pos[:min(n_val, 512)]
            train_pos = train_pos[n_val:]
        net = LSTMNet(18, self.enc_dim, self.hidden_dim, N_JOINTS, rng)
        self.net_ = net
        self.history_ = {"train_loss": [], "val_loss": [], "best_epoch": None}
        if self.epochs == 0:
            self._finish_fit(dataset)
            return self
        from .nnet import Adam, mse_loss

        opt = Adam(net.parameters(), lr=self.lr)
        offsets = np.arange(-(self.window - 1), 1)
        best_val = np.inf
        best = net.get_flat_params()
        best_epoch, bad = 0, 0

        def batch_windows(pos, xsrc, ysrc):
            idx = pos[:, None] + offsets[None, :]
            return xsrc[idx], ysrc[pos]

        xv, yv = batch_windows(val_pos, xs_val, ys_val)
        for epoch in range(1, self.epochs + 1):
            take = rng.choice(train_pos, size=min(self.samples_per_epoch,
                                                  train_pos.size), replace=False)
            total = 0.0
            for start in range(0, take.size, self.batch_size):
                pos = take[start:start + self.batch_size]
                xb, yb = batch_windows(pos)
                net.zero_grad()
                pred, cache = net.forward(xb)
                loss, dpred = mse_loss(pred, yb)
                net.backward(cache, dpred)
                opt.step()
                total += loss * pos.size
            val_pred, _ = net.forward(xv)
            val_loss, _ = mse_loss(val_pred, yv)
            self.history_["train_loss"].append(total / take.size)
            self.history_["val_loss"].append(val_loss)
            if val_loss < best_val - 1e-12:
                best_val, best, best_epoch, bad = val_loss, net.get_flat_params(), epoch, 0
            else:
                bad += 1
                if bad >= self.patience:
                    break
        net.set_flat_params(best)
        self.history_["best_epoch"] = best_epoch
        self._finish_fit(dataset)
        return self

    def _finish_fit(self, dataset):
        self.n_params_ = self.net_.n_params
        self.train_fingerprint_ = _dataset_fingerprint(dataset)

    def predict(self, dataset: Dataset) -> np.ndarray:
        """Streaming recurrent inference, state reset per trajectory."""
        check_fitted(self)
        xs = self.x_scaler_.apply(self._states(dataset))
        out = np.empty((dataset.n_frames, N_JOINTS))
        for s in dataset.trajectory_slices():
            out[s] = self.net_.stream(xs[s])
        return self.y_scaler_.invert(out)

    def constant_input_drift(self, frame_state: np.ndarray, steps: int) -> np.ndarray:
        """Stream one fixed 18-dim joint state for `steps` frames.

        Returns the per-step outputs; the spread across late steps is the
        drift this architecture exhibits under constant input.
        """
        check_fitted(self)
        xs = self.x_scaler_.apply(np.tile(frame_state, (steps, 1)))
        return self.y_scaler_.invert(self.net_.stream(xs))

    def _state_dict(self) -> dict:
        return {
            "net": self.net_.to_dict(),
            "x_scaler": self.x_scaler_.to_dict(),
            "y_scaler": self.y_scaler_.to_dict(),
        }

    def _load_state(self, state: dict) -> None:
        self.net_ = LSTMNet.from_dict(state["net"])
        self.x_scaler_ = _Standardizer.from_dict(state["x_scaler"])
        self.y_scaler_ = _Standardizer.from_dict(state["y_scaler"])
        self.n_params_ = self.net_.n_params


class HierarchicalResidualEstimator(BaseEstimator):
    """Ordered stack of dense stages trained on successive residuals.

    Stage 1 fits the measured currents; stage j > 1 fits what the summed
    stages < j still miss on the training set (computed with those stages
    frozen). All stages see the same multi-frame joint state and their own
    threshold group's retained velocities. The prediction is the sum of all
    stage outputs in stage order - in parallel mode each stage runs on its
    own worker and the fixed-order summation makes the result bit-identical
    to sequential evaluation.
    """

    def __init__(self, thresholds=None, n_hierarchies=3, hidden=(256, 256, 256),
                 M=5, epochs=20, batch_size=256, lr=1e-3, val_fraction=0.1,
                 patience=5, seed=0):
        self.thresholds = thresholds
        self.n_hierarchies = n_hierarchies
        self.hidden = hidden
        self.M = M
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.val_fraction = val_fraction
        self.patience = patience
        self.seed = seed

    def _groups(self, ts: ThresholdSet):
        if self.n_hierarchies < 1:
            raise ValueError("need at least one hierarchy")
        if self.n_hierarchies > len(ts.groups):
            raise ValueError(
                f"{self.n_hierarchies} hierarchies but only {len(ts.groups)} "
                "threshold groups"
            )
        return ts.groups[: self.n_hierarchies]

    def fit(self, dataset: Dataset, y=None):
        if dataset.n_frames == 0:
            raise ValueError("empty dataset")
        if dataset.current is None:
            raise ValueError("dataset has no currents to learn from")
        ts = _resolve_thresholds(self.thresholds)
        groups = self._groups(ts)
        rng = np.random.default_rng(self.seed)
        fit_part, val_part = _val_split(dataset, self.val_fraction, self.seed)
        trace = md_trace(fit_part, ts)
        val_trace = md_trace(val_part, ts) if val_part is not None else None
        residual = fit_part.current.copy()
        val_residual = val_part.current.copy() if val_part is not None else None
        self.nets_ = []
        self.x_scalers_ = []
        self.y_scalers_ = []
        self.histories_ = []
        self.train_rmse_per_stage_ = []
        for subset in groups:
            x = build_design_matrix(fit_part, self.M, ts, subset, trace=trace)
            xsc = _Standardizer.fit(x)
            ysc = _Standardizer.fit(residual)
            x_val = y_val = None
            if val_part is not None:
                x_val = xsc.apply(
                    build_design_matrix(val_part, self.M, ts, subset,
                                        trace=val_trace)
                )
                y_val = ysc.apply(val_residual)
            net = mlp(x.shape[1], list(self.hidden), N_JOINTS, rng)
            history = fit_network(
                net, xsc.apply(x), ysc.apply(residual),
                epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                val_fraction=self.val_fraction, patience=self.patience, rng=rng,
                x_val=x_val, y_val=y_val,
            )
            stage_pred = ysc.invert(_infer_chunked(net, xsc.apply(x)))
            residual = residual - stage_pred
            if val_part is not None:
                val_pred = ysc.invert(_infer_chunked(net, x_val))
                val_residual = val_residual - val_pred
            self.nets_.append(net)
            self.x_scalers_.append(xsc)
            self.y_scalers_.append(ysc)
            self.histories_.append(history)
            self.train_rmse_per_stage_.append(
                rmse_per_joint(fit_part.current - residual, fit_part.current)
            )
        self.thresholds_ = ts
        self.groups_ = groups
        self.n_params_ = sum(net.n_params for net in self.nets_)
        self.train_fingerprint_ = _dataset_fingerprint(dataset)
        self._pool = None
        return self

    # -- inference -----------------------------------------------------------

    def _stage_inputs(self, dataset: Dataset):
        trace = md_trace(dataset, self.thresholds_)
        return [
            build_design_matrix(dataset, self.M, self.thresholds_, subset,
                                trace=trace)
            for subset in self.groups_
        ]

    def _stage_infer(self, j: int, x: np.ndarray) -> np.ndarray:
        z = self.nets_[j].infer(self.x_scalers_[j].apply(x))
        return self.y_scalers_[j].invert(z)

    def _ensure_pool(self) -> ThreadPoolExecutor:
        pool = getattr(self, "_pool", None)
        if pool is None:
            pool = ThreadPoolExecutor(
                max_workers=len(self.nets_),
                thread_name_prefix="hierarchy",
            )
            self._pool = pool
        return pool

    def predict(self, dataset: Dataset, mode: str = "sequential",
                n_stages: int | None = None) -> np.ndarray:
        check_fitted(self, "nets_")
        inputs = self._stage_inputs(dataset)
        n_stages = len(self.nets_) if n_stages is None else n_stages
        outputs = self._run_stages(
            mode, [(j, inputs[j]) for j in range(n_stages)]
        )
        total = np.zeros((dataset.n_frames, N_JOINTS))
        for out in outputs:
            total += out
        return total

    def predict_frame(self, frames, md: MDState, mode: str = "sequential") -> np.ndarray:
        """Batch-1 inference; parallel mode fans stages out to the pool."""
        check_fitted(self, "nets_")
        jobs = []
        for j, subset in enumerate(self.groups_):
            jobs.append((j, build_input_vector(frames, md, subset)))
        outputs = self._run_stages(mode, jobs)
        total = np.zeros(N_JOINTS)
        for out in outputs:
            total += out
        return total

    def _run_stages(self, mode: str, jobs):
        if mode == "sequential":
            return [self._stage_infer(j, x) for j, x in jobs]
        if mode == "parallel":
            pool = self._ensure_pool()
            futures = [pool.submit(self._stage_infer, j, x) for j, x in jobs]
            return [f.result() for f in futures]
        raise ValueError(f"unknown inference mode {mode!r}")

    def stage_predictions(self, dataset: Dataset) -> list[np.ndarray]:
        """Per-stage outputs (for cumulative error analysis)."""
        check_fitted(self, "nets_")
        inputs = self._stage_inputs(dataset)
        return [self._stage_infer(j, x) for j, x in enumerate(inputs)]

    # -- serialization --------------------------------------------------------

    def _state_dict(self) -> dict:
        return {
            "nets": [n.to_dict() for n in self.nets_],
            "x_scalers": [s.to_dict() for s in self.x_scalers_],
            "y_scalers": [s.to_dict() for s in self.y_scalers_],
            "groups": [list(g) for g in self.groups_],
            "thresholds": _thresholds_to_dict(self.thresholds_),
        }

    def _load_state(self, state: dict) -> None:
        self.nets_ = [_net_from_dict(d) for d in state["nets"]]
        self.x_scalers_ = [_Standardizer.from_dict(d) for d in state["x_scalers"]]
        self.y_scalers_ = [_Standardizer.from_dict(d) for d in state["y_scalers"]]
        self.groups_ = tuple(tuple(g) for g in state["groups"])
        self.thresholds_ = _thresholds_from_dict(state["thresholds"])
        self.n_params_ = sum(net.n_params for net in self.nets_)
        self._pool = None


# -- evaluation ---------------------------------------------------------------


def evaluate(model, dataset: Dataset, motion_eps: float = 1e-3) -> dict:
    """Per-joint RMSE overall plus the static/moving breakdown.

    Static frames are those with every |dq| below motion_eps. Keeping the
    test set disjoint from training data is the caller's duty; a fingerprint
    match with the model's training set raises a warning.
    """
    if dataset.n_frames == 0:
        raise ValueError("empty test set")
    if dataset.current is None:
        raise ValueError("test set has no measured currents")
    fp = getattr(model, "train_fingerprint_", None)
    if fp is not None and fp == _dataset_fingerprint(dataset):
        import warnings

        warnings.warn("evaluating on the training dataset", stacklevel=2)
    pred = model.predict(dataset)
    static = np.all(np.abs(dataset.dq) < motion_eps, axis=1)
    out = {
        "overall": rmse_per_joint(pred, dataset.current),
        "n_static": int(static.sum()),
        "n_moving": int((~static).sum()),
    }
    out["static"] = (
        rmse_per_joint(pred[static], dataset.current[static])
        if static.any() else None
    )
    out["moving"] = (
        rmse_per_joint(pred[~static], dataset.current[~static])
        if (~static).any() else None
    )
    return out


# -- latency ------------------------------------------------------------------


def bench_latency(call, calls: int = 10_000, warmup: int = 100) -> dict:
    """Wall-clock timing of batch-1 inference on the monotonic clock.

    Runs `warmup` untimed calls first (model parameters end up pinned in
    cache), then times each of `calls` invocations individually. Returns
    microsecond percentiles.
    """
    for _ in range(warmup):
        call()
    samples = np.empty(calls)
    for i in range(calls):
        t0 = time.perf_counter_ns()
        call()
        samples[i] = time.perf_counter_ns() - t0
    samples /= 1000.0
    return {
        "median_us": float(np.median(samples)),
        "p95_us": float(np.percentile(samples, 95)),
        "p99_us": float(np.percentile(samples, 99)),
        "calls": calls,
        "warmup": warmup,
    }


def write_bench_csv(path, results: dict[str, dict]) -> None:
    """Benchmark CSV: one row per mode."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("mode,median_us,p95_us,p99_us\n")
        for mode, r in results.items():
            fh.write(
                f"{mode},{r['median_us']:.3f},{r['p95_us']:.3f},{r['p99_us']:.3f}\n"
            )


# -- serialization --------------------------------------------------------------


def _thresholds_to_dict(ts: ThresholdSet | None):
    if ts is None:
        return None
    return {"thresholds": ts.thresholds.tolist(), "groups": [list(g) for g in ts.groups]}


def _thresholds_from_dict(d) -> ThresholdSet | None:
    if d is None:
        return None
    return ThresholdSet(np.asarray(d["thresholds"]),
                        tuple(tuple(g) for g in d["groups"]))


def _net_from_dict(d: dict):
    kinds = {"dense": DenseNet, "residual": ResidualNet, "lstm": LSTMNet}
    return kinds[d["kind"]].from_dict(d)


ESTIMATOR_KINDS = {
    "MLPCurrentEstimator": MLPCurrentEstimator,
    "ResidualCurrentEstimator": ResidualCurrentEstimator,
    "LSTMCurrentEstimator": LSTMCurrentEstimator,
    "HierarchicalResidualEstimator": HierarchicalResidualEstimator,
}


def save_model(path, estimator) -> None:
    """Versioned JSON dump; floats keep their shortest round-trip form."""
    kind = type(estimator).__name__
    if kind not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator type {kind}")
    params = estimator.get_params()
    if isinstance(params.get("thresholds"), ThresholdSet):
        params["thresholds"] = {"__thresholds__": _thresholds_to_dict(params["thresholds"])}
    for key, value in params.items():
        if isinstance(value, tuple):
            params[key] = list(value)
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "estimator": kind,
        "params": params,
        "state": estimator._state_dict(),
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    cls = ESTIMATOR_KINDS[doc["estimator"]]
    params = doc["params"]
    if isinstance(params.get("thresholds"), dict) and "__thresholds__" in params["thresholds"]:
        params["thresholds"] = _thresholds_from_dict(params["thresholds"]["__thresholds__"])
    for key, value in params.items():
        if isinstance(value, list):
            params[key] = tuple(value)
    est = cls(**params)
    est._load_state(doc["state"])
    return est
