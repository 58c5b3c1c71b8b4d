"""Synthetic 6-joint manipulator: joint trajectories in, motor currents out.

Per joint k the simulated current (%Use) is

    i_k = g_k(q) + viscous_k * dq_k + inertial_k * ddq_k
          + F_hyst_k(q_k history) + tau_ext_k / kappa_k + noise

with cosine gravity terms on joints 2, 3, 5 only (joints 1, 4, 6 are
gravity-free, matching a vertical serial arm), Maxwell-Slip hysteresis driven
by joint position, and an optional external joint torque mapped through the
per-joint torque constant kappa (Nm per %Use).

Cross-joint coupling: while a joint is static but at least one other joint
moves, the static joint's slider positions relax toward its position by a
per-frame factor, so its retained friction decays geometrically. This is a
stand-in for an interaction whose physical mechanism is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kinematics import external_to_joint_torque
from .maxwell import DEFAULT_SATURATION, DEFAULT_STIFFNESS, MaxwellSlipBank
from .validation import N_JOINTS, as_joint_vector

# Torque constants from the shipped deadzone table ratios (Nm boundary over
# %Use boundary), so simulated torques and currents stay commensurate.
DEFAULT_TORQUE_PER_USE = (0.71, 0.81, 0.40333333, 0.11222222, 0.14363636, 0.07636364)
DEFAULT_LINK_LENGTHS = (0.30, 0.30, 0.25, 0.20, 0.15, 0.10)


@dataclass
class RobotParams:
    """Simulator constants; invented desk-scale values unless noted."""

    gravity_gains: tuple[float, float, float] = (30.0, 15.0, 5.0)  # %Use
    viscous: tuple = (8.0, 10.0, 8.0, 5.0, 4.0, 3.0)               # %Use per rad/s
    inertial: tuple = (4.0, 5.0, 4.0, 2.0, 2.0, 1.0)               # %Use per rad/s^2
    ms_stiffness: tuple = DEFAULT_STIFFNESS                         # per joint bank
    ms_saturation: tuple = DEFAULT_SATURATION
    coupling_decay: float = 0.02          # slider relaxation per frame, in [0, 1]
    motion_eps: float = 1e-3              # rad/s; below this a joint counts as static
    noise_sigma: float = 1.0              # %Use
    torque_per_use: tuple = DEFAULT_TORQUE_PER_USE                  # Nm per %Use
    link_lengths: tuple = DEFAULT_LINK_LENGTHS                      # m
    joint_limits: tuple = ((-2.0, 2.0),) * N_JOINTS                 # rad
    vel_limits: tuple = (1.0,) * N_JOINTS                           # rad/s

    def __post_init__(self):
        if not 0.0 <= self.coupling_decay <= 1.0:
            raise ValueError("coupling_decay must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if np.any(np.asarray(self.torque_per_use) <= 0):
            raise ValueError("torque_per_use entries must be positive")
        if np.any(np.asarray(self.link_lengths) <= 0):
            raise ValueError("link_lengths must be positive")
        lim = np.asarray(self.joint_limits, dtype=float)
        if lim.shape != (N_JOINTS, 2) or np.any(lim[:, 0] >= lim[:, 1]):
            raise ValueError("joint_limits must be 6 well-ordered (lo, hi) pairs")

    def make_banks(self, q0) -> list[MaxwellSlipBank]:
        q0 = as_joint_vector(q0, "q0")
        return [
            MaxwellSlipBank(self.ms_stiffness, self.ms_saturation, z0=q0[k])
            for k in range(N_JOINTS)
        ]


def gravity_current(params: RobotParams, q) -> np.ndarray:
    """Static gravity term; zero on joints 1, 4, 6."""
    q = as_joint_vector(q, "q")
    g_a, g_b, g_c = params.gravity_gains
    out = np.zeros(N_JOINTS)
    out[1] = g_a * np.cos(q[1]) + g_b * np.cos(q[1] + q[2])
    out[2] = g_b * np.cos(q[1] + q[2])
    out[4] = g_c * np.cos(q[1] + q[2] + q[4])
    return out


def hysteresis_free_current(params: RobotParams, q, dq, ddq) -> np.ndarray:
    """Gravity + viscous + inertial terms only (the analytic comparator model)."""
    dq = as_joint_vector(dq, "dq")
    ddq = as_joint_vector(ddq, "ddq")
    return (
        gravity_current(params, q)
        + np.asarray(params.viscous) * dq
        + np.asarray(params.inertial) * ddq
    )


class CurrentSimulator:
    """Stateful frame-by-frame oracle; owns its banks and noise stream.

    One simulation run owns its state; runs with distinct params/seeds can
    execute in parallel.
    """

    def __init__(self, params: RobotParams, seed: int = 0, q0=None):
        self.params = params
        self.rng = np.random.default_rng(seed)
        q0 = np.zeros(N_JOINTS) if q0 is None else as_joint_vector(q0, "q0")
        self.banks = params.make_banks(q0)

    def reset_banks(self, q0) -> None:
        self.banks = self.params.make_banks(q0)

    def hysteresis_state(self) -> np.ndarray:
        """Retained friction force per joint for the last seen positions."""
        return np.array([b.stored_force() for b in self.banks])

    def step(self, q, dq, ddq, tau_ext=None) -> np.ndarray:
        """Advance one frame and return the measured currents (%Use)."""
        p = self.params
        q = as_joint_vector(q, "q")
        dq = as_joint_vector(dq, "dq")
        ddq = as_joint_vector(ddq, "ddq")
        moving = np.abs(dq) >= p.motion_eps
        any_moving = bool(moving.any())
        hyst = np.empty(N_JOINTS)
        for k, bank in enumerate(self.banks):
            if p.coupling_decay > 0.0 and any_moving and not moving[k]:
                bank.relax(q[k], p.coupling_decay)
            hyst[k] = bank.step(q[k])
        current = hysteresis_free_current(p, q, dq, ddq) + hyst
        if tau_ext is not None:
            current = current + as_joint_vector(tau_ext, "tau_ext") / np.asarray(
                p.torque_per_use
            )
        if p.noise_sigma > 0.0:
            current = current + self.rng.normal(0.0, p.noise_sigma, N_JOINTS)
        return current


def simulate_currents(
    traj: Dataset,
    params: RobotParams,
    wrench_profile: np.ndarray | None = None,
    seed: int = 0,
) -> Dataset:
    """Attach simulated currents to a kinematic trajectory dataset.

    wrench_profile, when given, is an (n_frames, 6) end-effector wrench
    (fx..mz) mapped to joint torques through the Jacobian transpose at each
    frame. Banks restart fresh at every trajectory boundary. Deterministic
    given seed.
    """
    if traj.freq <= 0:
        raise ValueError("trajectory frequency must be positive")
    n = traj.n_frames
    if wrench_profile is not None:
        wrench_profile = np.asarray(wrench_profile, dtype=float)
        if wrench_profile.shape != (n, 6):
            raise ValueError(
                f"wrench_profile: expected shape ({n}, 6), got {wrench_profile.shape}"
            )
    sim = CurrentSimulator(params, seed=seed)
    L = np.asarray(params.link_lengths)
    current = np.empty((n, N_JOINTS))
    for s in traj.trajectory_slices():
        sim.reset_banks(traj.q[s.start])
        for i in range(s.start, s.stop):
            tau = None
            if wrench_profile is not None:
                tau = external_to_joint_torque(wrench_profile[i], traj.q[i], L)
            current[i] = sim.step(traj.q[i], traj.dq[i], traj.ddq[i], tau)
    return traj.with_current(current)
