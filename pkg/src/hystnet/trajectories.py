"""Training-trajectory generators and signal conditioning.

Two excitation regimes:

* continuous - random via-points interpolated with quintic segments (zero
  velocity and acceleration at the via-points), time-scaled to the velocity
  limits; rich smooth motion with few static frames.
* hysteresis-rich - each cycle samples a random target per joint and drives
  every joint there at its own random constant velocity, inserting a 3 s pause
  after every 3 s of motion; joints that arrive early hold until all arrive.
  This floods the data with static phases and direction reversals.

Via-points are sampled in joint space (the original task-space planning would
need inverse kinematics and buys nothing for the downstream learning problem).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .validation import N_JOINTS

# Random per-joint speeds for the hysteresis-rich regime (rad/s).
HYST_SPEED_RANGE = (0.05, 0.5)
# Motion/pause block length in the hysteresis-rich regime (seconds).
BLOCK_SECONDS = 3.0
# Peak |velocity| of a rest-to-rest quintic is 15/8 * distance / duration.
QUINTIC_PEAK_VEL = 15.0 / 8.0


@dataclass
class TrajSpec:
    kind: str                      # "continuous" | "hysteresis_rich"
    duration: float                # seconds
    freq: float = 100.0            # Hz
    joint_limits: tuple = ((-2.0, 2.0),) * N_JOINTS
    vel_limits: tuple = (1.0,) * N_JOINTS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("continuous", "hysteresis_rich"):
            raise ValueError(f"unknown trajectory kind: {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.freq <= 0:
            raise ValueError("freq must be positive")
        lim = np.asarray(self.joint_limits, dtype=float)
        if lim.shape != (N_JOINTS, 2) or np.any(lim[:, 0] >= lim[:, 1]):
            raise ValueError("joint_limits must be 6 well-ordered (lo, hi) pairs")
        if np.any(np.asarray(self.vel_limits) <= 0):
            raise ValueError("vel_limits must be positive")


def _quintic_eval(tau: np.ndarray):
    """Normalized rest-to-rest quintic s(tau) and its first two derivatives."""
    s = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
    ds = 30.0 * tau**2 - 60.0 * tau**3 + 30.0 * tau**4
    dds = 60.0 * tau - 180.0 * tau**2 + 120.0 * tau**3
    return s, ds, dds


def gen_continuous(spec: TrajSpec) -> Dataset:
    """Quintic via-point trajectory; dq/ddq from the analytic interpolant."""
    if spec.kind != "continuous":
        raise ValueError("spec.kind must be 'continuous'")
    rng = np.random.default_rng(spec.seed)
    lim = np.asarray(spec.joint_limits, dtype=float)
    vmax = np.asarray(spec.vel_limits, dtype=float)

    # Build segments until the timeline covers the requested duration.
    start = rng.uniform(lim[:, 0], lim[:, 1])
    points = [start]
    durations: list[float] = []
    total = 0.0
    while total < spec.duration:
        target = rng.uniform(lim[:, 0], lim[:, 1])
        dist = np.abs(target - points[-1])
        t_min = float(np.max(QUINTIC_PEAK_VEL * dist / vmax))
        seg = max(t_min, 0.5) * rng.uniform(1.05, 1.6)
        points.append(target)
        durations.append(seg)
        total += seg

    n = int(round(spec.duration * spec.freq))
    t = np.arange(n) / spec.freq
    q = np.empty((n, N_JOINTS))
    dq = np.empty((n, N_JOINTS))
    ddq = np.empty((n, N_JOINTS))
    seg_end = np.cumsum(durations)
    seg_idx = np.searchsorted(seg_end, t, side="right")
    seg_start = seg_end - np.asarray(durations)
    for j in np.unique(seg_idx):
        mask = seg_idx == j
        a = points[j]
        b = points[j + 1]
        T = durations[j]
        tau = (t[mask] - seg_start[j]) / T
        s, ds, dds = _quintic_eval(tau)
        delta = (b - a)[None, :]
        q[mask] = a[None, :] + delta * s[:, None]
        dq[mask] = delta * ds[:, None] / T
        ddq[mask] = delta * dds[:, None] / T**2
    return Dataset(t, q, dq, ddq, freq=spec.freq, label="continuous")


def gen_hysteresis_rich(spec: TrajSpec) -> Dataset:
    """Stop-and-go excitation: constant-velocity moves with 3 s on / 3 s off."""
    if spec.kind != "hysteresis_rich":
        raise ValueError("spec.kind must be 'hysteresis_rich'")
    rng = np.random.default_rng(spec.seed)
    lim = np.asarray(spec.joint_limits, dtype=float)
    block = int(round(BLOCK_SECONDS * spec.freq))
    dt = 1.0 / spec.freq

    n = int(round(spec.duration * spec.freq))
    q = np.empty((n, N_JOINTS))
    dq = np.zeros((n, N_JOINTS))
    pos = rng.uniform(lim[:, 0], lim[:, 1])

    i = 0
    while i < n:
        # New cycle: fresh targets, speeds, and motion/pause clock.
        target = rng.uniform(lim[:, 0], lim[:, 1])
        speed = rng.uniform(*HYST_SPEED_RANGE, size=N_JOINTS)
        arrived = np.isclose(pos, target)
        motion_left = block
        pausing = False
        while not arrived.all() and i < n:
            if pausing:
                q[i] = pos
                i += 1
                motion_left -= 1
                if motion_left == 0:
                    pausing = False
                    motion_left = block
                continue
            prev = pos.copy()
            step = np.minimum(speed * dt, np.abs(target - pos))
            pos = pos + np.sign(target - pos) * step
            arrived = np.abs(target - pos) < 1e-12
            q[i] = pos
            dq[i] = (pos - prev) / dt
            i += 1
            motion_left -= 1
            if motion_left == 0 and not arrived.all():
                pausing = True
                motion_left = block

    t = np.arange(n) / spec.freq
    # Velocities are piecewise constant; accelerations at the block edges are
    # impulsive and not representable at the sample rate, so ddq is zero.
    ddq = np.zeros((n, N_JOINTS))
    return Dataset(t, q, dq, ddq, freq=spec.freq, label="hysteresis-rich")


def butterworth3_coefficients(cutoff: float, fs: float):
    """Third-order low-pass coefficients via analog prototype + bilinear transform.

    Frequency pre-warping maps the requested cutoff exactly; the numerator is
    normalized at z = 1 so the DC gain is 1.
    """
    if not 0.0 < cutoff < fs / 2.0:
        raise ValueError("cutoff must lie in (0, fs/2)")
    warped = 2.0 * fs * np.tan(np.pi * cutoff / fs)
    # Left-half-plane poles of the order-3 prototype, scaled to the warped cutoff.
    angles = np.pi * (2.0 * np.arange(1, 4) + 2.0) / 6.0
    poles = warped * np.exp(1j * angles)
    # Bilinear transform: three zeros land at z = -1.
    pz = (2.0 * fs + poles) / (2.0 * fs - poles)
    a = np.real(np.poly(pz))
    b_proto = np.array([1.0, 3.0, 3.0, 1.0])
    b = b_proto * (a.sum() / b_proto.sum())
    return b, a


def butterworth3(signal, cutoff: float, fs: float) -> np.ndarray:
    """Causal third-order Butterworth low-pass (forward pass only)."""
    b, a = butterworth3_coefficients(cutoff, fs)
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    y = np.empty_like(x)
    # Direct form II transposed, zero initial state.
    z1 = z2 = z3 = 0.0
    b0, b1, b2, b3 = b
    a1, a2, a3 = a[1:]
    for i, xi in enumerate(x):
        yi = b0 * xi + z1
        z1 = b1 * xi - a1 * yi + z2
        z2 = b2 * xi - a2 * yi + z3
        z3 = b3 * xi - a3 * yi
        y[i] = yi
    return y


def finite_diff_derivatives(q_seq, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Velocity and acceleration by central differences (one-sided at the ends)."""
    q = np.asarray(q_seq, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
        squeeze = True
    else:
        squeeze = False
    n = q.shape[0]
    if n < 3:
        raise ValueError("need at least 3 samples")
    h = 1.0 / fs
    dq = np.empty_like(q)
    dq[1:-1] = (q[2:] - q[:-2]) / (2.0 * h)
    dq[0] = (q[1] - q[0]) / h
    dq[-1] = (q[-1] - q[-2]) / h
    ddq = np.empty_like(q)
    ddq[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) / h**2
    ddq[0] = ddq[1]
    ddq[-1] = ddq[-2]
    if squeeze:
        return dq[:, 0], ddq[:, 0]
    return dq, ddq
