"""Maxwell-Slip friction: a bank of parallel elasto-slide elements.

Each element is a spring-slider pair with stiffness k, saturation force W and
slider position zeta. Driven by a common displacement z, an element sticks
(linear spring force) while |z - zeta| < W/k and slips (saturated force,
slider dragged along) otherwise. The bank output is the sum over elements,
which yields rate-independent hysteresis with memory of the motion history.

At exact equality |z - zeta| == W/k the slipping branch applies; the force is
identical on both branches there, and this choice keeps the post-step
confinement |z - zeta| <= W/k airtight.
"""

from __future__ import annotations

import math

import numpy as np

from .validation import check_positive

# Desk-scale default bank: saturation displacements W/k span 0.002..0.02 rad
# and the total saturation force is 7 %Use, commensurate with the shipped
# deadzone boundaries. Simulator constants, not measured values.
DEFAULT_STIFFNESS = (500.0, 300.0, 200.0, 125.0)       # %Use per rad
DEFAULT_SATURATION = (1.0, 1.5, 2.0, 2.5)              # %Use


class MaxwellSlipBank:
    """Mutable friction state machine for one joint; single-writer.

    Independent banks (one per joint) may be stepped in parallel.
    """

    def __init__(self, stiffness=DEFAULT_STIFFNESS, saturation=DEFAULT_SATURATION,
                 z0: float = 0.0):
        self.k = np.asarray(stiffness, dtype=float)
        self.W = np.asarray(saturation, dtype=float)
        if self.k.ndim != 1 or self.k.shape != self.W.shape or self.k.size < 1:
            raise ValueError("stiffness and saturation must be equal-length 1-D arrays")
        check_positive(self.k, "stiffness")
        check_positive(self.W, "saturation")
        self.delta = self.W / self.k
        self.reset(z0)

    def reset(self, z0: float = 0.0) -> None:
        """Unloaded state: all sliders at the input position (zero stored force)."""
        if not math.isfinite(z0):
            raise ValueError("z0 must be finite")
        self.zeta = np.full(self.k.shape, float(z0))
        self.z_last = float(z0)

    def copy(self) -> "MaxwellSlipBank":
        dup = MaxwellSlipBank(self.k, self.W, self.z_last)
        dup.zeta = self.zeta.copy()
        return dup

    @property
    def n_elements(self) -> int:
        return self.k.size

    @property
    def saturation_total(self) -> float:
        return float(self.W.sum())

    def step(self, z: float) -> float:
        """Advance by one displacement sample; returns the total friction force."""
        z = float(z)
        if not math.isfinite(z):
            raise ValueError("displacement must be finite")
        e = z - self.zeta
        slipping = np.abs(e) >= self.delta
        sgn = np.sign(e)
        force = np.where(slipping, sgn * self.W, self.k * e)
        self.zeta = np.where(slipping, z - sgn * self.delta, self.zeta)
        self.z_last = z
        return float(force.sum())

    def run(self, z_seq) -> np.ndarray:
        """Fold step() over a displacement sequence; the bank ends in the folded state."""
        z_seq = np.asarray(z_seq, dtype=float)
        if z_seq.ndim != 1 or z_seq.size == 0:
            raise ValueError("z_seq must be a non-empty 1-D sequence")
        out = np.empty(z_seq.size)
        for i, z in enumerate(z_seq):
            out[i] = self.step(z)
        return out

    def relax(self, z: float, lam: float) -> None:
        """Move every slider toward z by factor lam in [0, 1].

        Models the observed cross-joint interaction: retained friction in a
        static joint subsides while other joints move. Shrinks |z - zeta|, so
        confinement is preserved.
        """
        if not 0.0 <= lam <= 1.0:
            raise ValueError("relaxation factor must be in [0, 1]")
        self.zeta = self.zeta + lam * (float(z) - self.zeta)

    def stored_force(self) -> float:
        """Force the bank would report for a repeat of the last input."""
        e = self.z_last - self.zeta
        return float(np.sum(np.where(np.abs(e) >= self.delta,
                                     np.sign(e) * self.W, self.k * e)))
