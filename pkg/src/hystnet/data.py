"""Joint-state/current datasets: domain types, CSV I/O, splitting, error metrics.

A dataset is a sequence of 100 Hz frames grouped into trajectories. Each frame
carries time, six joint positions/velocities/accelerations, and (optionally)
six motor currents in %Use, i.e. percentage of motor loading capacity.

On-disk format: plain comma-separated text with the exact header

    t,q1,...,q6,dq1,...,dq6,ddq1,...,ddq6,i1,...,i6

one row per frame, values at 9 significant digits, and one blank line between
trajectories. Frequency is recovered from the time column on read; the textual
label ("continuous" / "hysteresis-rich" / "mixed") is not stored in the file
and defaults to "mixed" on read - callers convey it via the file name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import N_JOINTS, as_joint_vector

CSV_HEADER = ",".join(
    ["t"]
    + [f"q{k}" for k in range(1, 7)]
    + [f"dq{k}" for k in range(1, 7)]
    + [f"ddq{k}" for k in range(1, 7)]
    + [f"i{k}" for k in range(1, 7)]
)

# Absolute slack when checking the constant time step 1/freq. Nine significant
# digits keep sub-microsecond precision for any desk-scale recording length.
_TIME_STEP_TOL = 1e-6


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not parse."""


@dataclass(frozen=True)
class JointFrame:
    """One sample: time plus per-joint position, velocity, acceleration, current."""

    t: float
    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    current: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", as_joint_vector(self.q, "q"))
        object.__setattr__(self, "dq", as_joint_vector(self.dq, "dq"))
        object.__setattr__(self, "ddq", as_joint_vector(self.ddq, "ddq"))
        if self.current is not None:
            object.__setattr__(
                self, "current", as_joint_vector(self.current, "current")
            )


@dataclass
class Dataset:
    """Ordered frames stored as arrays, with trajectory start indices.

    Immutable by convention after construction: the arrays are shared
    read-only across workers, never mutated in place.
    """

    t: np.ndarray                       # (n,) seconds, restarts at 0 per trajectory
    q: np.ndarray                       # (n, 6) rad
    dq: np.ndarray                      # (n, 6) rad/s
    ddq: np.ndarray                     # (n, 6) rad/s^2
    current: np.ndarray | None = None   # (n, 6) %Use, or None before simulation
    freq: float = 100.0
    boundaries: list[int] = field(default_factory=list)  # trajectory start indices
    label: str = "mixed"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.dq = np.asarray(self.dq, dtype=float)
        self.ddq = np.asarray(self.ddq, dtype=float)
        if self.current is not None:
            self.current = np.asarray(self.current, dtype=float)
        n = len(self.t)
        if not self.boundaries and n > 0:
            self.boundaries = [0]
        self._validate(n)

    def _validate(self, n: int) -> None:
        if self.freq <= 0:
            raise ValueError("freq must be positive")
        for name, arr in (("q", self.q), ("dq", self.dq), ("ddq", self.ddq)):
            if arr.shape != (n, N_JOINTS):
                raise ValueError(f"{name}: expected shape ({n}, 6), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: contains non-finite values")
        if self.current is not None:
            if self.current.shape != (n, N_JOINTS):
                raise ValueError(
                    f"current: expected shape ({n}, 6), got {self.current.shape}"
                )
            if not np.all(np.isfinite(self.current)):
                raise ValueError("current: contains non-finite values")
        if n == 0:
            if self.boundaries:
                raise ValueError("empty dataset cannot have trajectory boundaries")
            return
        b = list(self.boundaries)
        if b[0] != 0 or any(b[i] >= b[i + 1] for i in range(len(b) - 1)) or b[-1] >= n:
            raise ValueError(
                "trajectory boundaries must start at 0, be strictly increasing, "
                "and stay within range"
            )
        step = 1.0 / self.freq
        for s in self.trajectory_slices():
            dt = np.diff(self.t[s])
            if np.any(np.abs(dt - step) > _TIME_STEP_TOL):
                raise ValueError(
                    f"time within a trajectory must increase by 1/freq = {step}"
                )

    # -- structure ---------------------------------------------------------

    @property
    def n_frames(self) -> int:
        return len(self.t)

    @property
    def n_trajectories(self) -> int:
        return len(self.boundaries)

    def trajectory_slices(self) -> list[slice]:
        ends = list(self.boundaries[1:]) + [self.n_frames]
        return [slice(s, e) for s, e in zip(self.boundaries, ends)]

    def frame(self, i: int) -> JointFrame:
        cur = None if self.current is None else self.current[i]
        return JointFrame(float(self.t[i]), self.q[i], self.dq[i], self.ddq[i], cur)

    def with_current(self, current: np.ndarray) -> "Dataset":
        return Dataset(
            self.t, self.q, self.dq, self.ddq, current,
            freq=self.freq, boundaries=list(self.boundaries), label=self.label,
        )

    def select_trajectories(self, indices: list[int]) -> "Dataset":
        """New dataset keeping the given trajectories (original order preserved)."""
        slices = self.trajectory_slices()
        keep = [slices[j] for j in sorted(indices)]
        parts = lambda a: np.concatenate([a[s] for s in keep]) if keep else a[:0]
        boundaries, off = [], 0
        for s in keep:
            boundaries.append(off)
            off += s.stop - s.start
        cur = None if self.current is None else parts(self.current)
        return Dataset(
            parts(self.t), parts(self.q), parts(self.dq), parts(self.ddq), cur,
            freq=self.freq, boundaries=boundaries, label=self.label,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        same_current = (
            (self.current is None and other.current is None)
            or (
                self.current is not None
                and other.current is not None
                and np.array_equal(self.current, other.current)
            )
        )
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.dq, other.dq)
            and np.array_equal(self.ddq, other.ddq)
            and same_current
            and self.freq == other.freq
            and list(self.boundaries) == list(other.boundaries)
            and self.label == other.label
        )


def concat_datasets(datasets: list[Dataset], label: str = "mixed") -> Dataset:
    """Concatenate trajectory-wise; all inputs must share freq and current-ness."""
    if not datasets:
        raise ValueError("need at least one dataset")
    freq = datasets[0].freq
    has_cur = datasets[0].current is not None
    if any(d.freq != freq for d in datasets):
        raise ValueError("cannot concatenate datasets with different frequencies")
    if any((d.current is not None) != has_cur for d in datasets):
        raise ValueError("cannot mix datasets with and without currents")
    boundaries, off = [], 0
    for d in datasets:
        boundaries.extend(b + off for b in d.boundaries)
        off += d.n_frames
    cat = lambda key: np.concatenate([getattr(d, key) for d in datasets])
    return Dataset(
        cat("t"), cat("q"), cat("dq"), cat("ddq"),
        cat("current") if has_cur else None,
        freq=freq, boundaries=boundaries, label=label,
    )


# -- CSV I/O ---------------------------------------------------------------


def _format_row(values: np.ndarray) -> str:
    return ",".join(format(v, ".9g") for v in values)


def write_dataset(path, dataset: Dataset) -> None:
    """Write in the documented CSV format (9 significant digits)."""
    if dataset.current is None:
        raise ValueError("cannot write a dataset without currents")
    if dataset.n_frames == 0:
        raise ValueError("cannot write an empty dataset")
    rows = np.column_stack(
        [dataset.t, dataset.q, dataset.dq, dataset.ddq, dataset.current]
    )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        slices = dataset.trajectory_slices()
        for j, s in enumerate(slices):
            if j > 0:
                fh.write("\n")
            for i in range(s.start, s.stop):
                fh.write(_format_row(rows[i]) + "\n")


def read_dataset(path, label: str = "mixed") -> Dataset:
    """Parse the documented CSV format; errors carry 1-based line numbers."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0]
    if header != CSV_HEADER:
        got = header.split(",")
        expected = CSV_HEADER.split(",")
        missing = [c for c in expected if c not in got]
        unexpected = [c for c in got if c not in expected]
        detail = []
        if missing:
            detail.append(f"missing columns: {', '.join(missing)}")
        if unexpected:
            detail.append(f"unexpected columns: {', '.join(unexpected)}")
        if not detail:
            detail.append("column order differs from the required header")
        raise DatasetFormatError(f"{path}: line 1: malformed header ({'; '.join(detail)})")

    rows: list[np.ndarray] = []
    boundaries: list[int] = [0]
    prev_blank = False
    for lineno, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            if prev_blank or not rows:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: blank line without preceding trajectory"
                )
            prev_blank = True
            continue
        if prev_blank:
            boundaries.append(len(rows))
            prev_blank = False
        fields = line.split(",")
        if len(fields) != 25:
            raise DatasetFormatError(
                f"{path}: line {lineno}: expected 25 values, got {len(fields)}"
            )
        try:
            rows.append(np.array([float(f) for f in fields]))
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: line {lineno}: {exc}") from None
        if len(rows) > 1 and boundaries[-1] != len(rows) - 1:
            if rows[-1][0] <= rows[-2][0]:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: time not strictly increasing"
                )
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    data = np.vstack(rows)

    first_len = (boundaries[1] if len(boundaries) > 1 else len(rows)) - boundaries[0]
    if first_len < 2:
        freq = 100.0  # step unrecoverable from a single frame, assume default rate
    else:
        step = data[1, 0] - data[0, 0]
        if step <= 0:
            raise DatasetFormatError(f"{path}: non-positive time step")
        freq = 1.0 / step
        if abs(freq - round(freq)) < 1e-6:
            freq = float(round(freq))
    try:
        return Dataset(
            data[:, 0], data[:, 1:7], data[:, 7:13], data[:, 13:19], data[:, 19:25],
            freq=freq, boundaries=boundaries, label=label,
        )
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from None


# -- splitting and metrics ---------------------------------------------------


def split_by_trajectory(
    dataset: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Split into train/test by whole trajectories, deterministically by seed."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n = dataset.n_trajectories
    if n < 2:
        raise ValueError("need at least 2 trajectories to split without leakage")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    n_test = min(max(n_test, 1), n - 1)
    test_idx = sorted(order[:n_test].tolist())
    train_idx = sorted(order[n_test:].tolist())
    return dataset.select_trajectories(train_idx), dataset.select_trajectories(test_idx)


def rmse_per_joint(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-joint root-mean-square error between two (n, 6) current sequences."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.ndim != 2 or pred.shape[1] != N_JOINTS or pred.shape[0] < 1:
        raise ValueError("expected non-empty (n, 6) sequences")
    return np.sqrt(np.mean((pred - truth) ** 2, axis=0))
