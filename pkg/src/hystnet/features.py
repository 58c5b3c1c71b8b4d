"""Model inputs: the Motion Discriminator, multi-frame windows, and the
slider-equivalent quantities that relate retained velocities to elasto-slide
element states.

The Motion Discriminator (MD) is an I x 6 matrix of retained velocities: for
every threshold row i and joint k, whenever |dq_k| >= t_i[k] the entry is
overwritten with the signed velocity. Below threshold nothing happens, so
after a joint stops each row keeps the last suprathreshold velocity - a
non-vanishing memory of how (and in which direction) the joint last moved.
Entries that never fired read zero and are tracked as uninitialized, which
distinguishes "never moved" from "stopped after motion".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, JointFrame
from .validation import N_JOINTS, as_joint_vector, check_positive

# Shipped threshold table: three groups of five thresholds (rad/s), one group
# per hierarchy, each threshold broadcast to all six joints.
DEFAULT_THRESHOLD_GROUPS = (
    (0.003, 0.006, 0.009, 0.012, 0.015),
    (0.012, 0.016, 0.020, 0.024, 0.028),
    (0.002, 0.006, 0.010, 0.014, 0.018),
)


@dataclass(frozen=True)
class ThresholdSet:
    """Velocity thresholds (I, 6) plus their grouping into hierarchies.

    Groups are half-open [start, stop) ranges of threshold indices; they must
    be disjoint and contiguous.
    """

    thresholds: np.ndarray
    groups: tuple[tuple[int, int], ...]

    def __post_init__(self):
        th = np.asarray(self.thresholds, dtype=float)
        if th.ndim == 1:
            th = np.repeat(th[:, None], N_JOINTS, axis=1)
        if th.ndim != 2 or th.shape[1] != N_JOINTS:
            raise ValueError("thresholds must have shape (I,) or (I, 6)")
        check_positive(th, "thresholds")
        object.__setattr__(self, "thresholds", th)
        groups = tuple((int(a), int(b)) for a, b in self.groups)
        for a, b in groups:
            if not 0 <= a < b <= th.shape[0]:
                raise ValueError(f"group ({a}, {b}) out of range")
        for (_, b_prev), (a_next, _) in zip(groups, groups[1:]):
            if a_next < b_prev:
                raise ValueError("groups must be disjoint and in index order")
        object.__setattr__(self, "groups", groups)

    @property
    def n_thresholds(self) -> int:
        return self.thresholds.shape[0]

    def full_range(self) -> tuple[int, int]:
        return (0, self.n_thresholds)


def default_thresholds() -> ThresholdSet:
    rows = [t for group in DEFAULT_THRESHOLD_GROUPS for t in group]
    sizes = np.cumsum([0] + [len(g) for g in DEFAULT_THRESHOLD_GROUPS])
    groups = tuple((int(a), int(b)) for a, b in zip(sizes[:-1], sizes[1:]))
    return ThresholdSet(np.asarray(rows), groups)


@dataclass(frozen=True)
class MDState:
    """Retained-velocity matrix; zeros where no update ever fired."""

    values: np.ndarray        # (I, 6) rad/s
    initialized: np.ndarray   # (I, 6) bool

    @classmethod
    def fresh(cls, n_thresholds: int) -> "MDState":
        return cls(
            np.zeros((n_thresholds, N_JOINTS)),
            np.zeros((n_thresholds, N_JOINTS), dtype=bool),
        )


def md_update(md: MDState, dq, ts: ThresholdSet) -> MDState:
    """One update step: entries at or above threshold take the signed velocity."""
    dq = as_joint_vector(dq, "dq")
    fire = np.abs(dq)[None, :] >= ts.thresholds
    values = np.where(fire, dq[None, :], md.values)
    return MDState(values, md.initialized | fire)


class MDTrace:
    """Per-frame MD states for a whole dataset (arrays, indexable into MDState)."""

    def __init__(self, values: np.ndarray, initialized: np.ndarray):
        self.values = values            # (n, I, 6)
        self.initialized = initialized  # (n, I, 6)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> MDState:
        return MDState(self.values[i], self.initialized[i])


def md_trace(dataset: Dataset, ts: ThresholdSet) -> MDTrace:
    """Fold the MD update over every frame, restarting fresh per trajectory.

    Vectorized as a forward fill: each entry carries the most recent
    suprathreshold velocity of its joint. Entry (f, i, k) depends only on
    frames <= f of the containing trajectory (causality).
    """
    n = dataset.n_frames
    I = ts.n_thresholds
    values = np.zeros((n, I, N_JOINTS))
    initialized = np.zeros((n, I, N_JOINTS), dtype=bool)
    joint_idx = np.arange(N_JOINTS)[None, None, :]
    for s in dataset.trajectory_slices():
        dq = dataset.dq[s]
        m = dq.shape[0]
        fire = np.abs(dq)[:, None, :] >= ts.thresholds[None, :, :]
        idx = np.where(fire, np.arange(m, dtype=np.int64)[:, None, None], -1)
        last = np.maximum.accumulate(idx, axis=0)
        seen = last >= 0
        values[s] = np.where(seen, dq[np.maximum(last, 0), joint_idx], 0.0)
        initialized[s] = seen
    return MDTrace(values, initialized)


def build_input_vector(frames, md: MDState, subset: tuple[int, int] | None) -> np.ndarray:
    """Concatenate M frames of (q, dq, ddq) with the chosen MD rows.

    frames: the last M JointFrames, oldest first (repeat the first frame of a
    trajectory to left-pad at its start). An empty subset yields the plain
    multi-frame input used by baselines without retained-velocity features.
    Output length is 18*M + 6*|subset|.
    """
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    parts = []
    for f in frames:
        parts.extend((f.q, f.dq, f.ddq))
    if subset is not None:
        a, b = subset
        parts.append(md.values[a:b].reshape(-1))
    return np.concatenate(parts)


def frame_window(dataset: Dataset, index: int, traj_start: int, m: int) -> list[JointFrame]:
    """The last m frames ending at index, left-padded with the trajectory's first frame."""
    out = []
    for j in range(index - m + 1, index + 1):
        out.append(dataset.frame(max(j, traj_start)))
    return out


def build_design_matrix(
    dataset: Dataset,
    m: int,
    ts: ThresholdSet | None = None,
    subset: tuple[int, int] | None = None,
    trace: MDTrace | None = None,
) -> np.ndarray:
    """Vectorized batch counterpart of build_input_vector for every frame.

    Row f equals build_input_vector(window ending at f, MD state at f, subset).
    Pass a precomputed trace to reuse one MD fold across several subsets.
    """
    if m < 1:
        raise ValueError("window length m must be >= 1")
    n = dataset.n_frames
    state = np.concatenate([dataset.q, dataset.dq, dataset.ddq], axis=1)  # (n, 18)
    blocks = np.empty((n, 18 * m))
    for s in dataset.trajectory_slices():
        seg = state[s]
        for offset in range(m):
            # offset 0 is the oldest frame in the window (m-1 steps back).
            back = m - 1 - offset
            idx = np.maximum(np.arange(seg.shape[0]) - back, 0)
            blocks[s, offset * 18:(offset + 1) * 18] = seg[idx]
    if subset is None:
        return blocks
    if ts is None:
        raise ValueError("a ThresholdSet is required when subset is given")
    if trace is None:
        trace = md_trace(dataset, ts)
    a, b = subset
    md_flat = trace.values[:, a:b, :].reshape(n, -1)
    return np.concatenate([blocks, md_flat], axis=1)


def md_ms_equivalents(md: MDState, q, ts: ThresholdSet, f: float):
    """Slider-equivalent quantities (z, signed saturation offset, slider position).

    For threshold row i the virtual element's saturation displacement is
    t_i / f. The sign of the retained velocity orients the offset; entries
    that never fired get sign 0, i.e. the slider sits at the input (zeta = z).
    Returns three (I, 6) arrays: z (broadcast positions), delta_signed, zeta.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    q = as_joint_vector(q, "q")
    delta = ts.thresholds / f
    sign = np.where(md.initialized, np.sign(md.values), 0.0)
    delta_signed = sign * delta
    z = np.broadcast_to(q[None, :], delta.shape).copy()
    zeta = z - delta_signed
    return z, delta_signed, zeta
