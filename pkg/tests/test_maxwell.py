import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hystnet.maxwell import MaxwellSlipBank


def scalar_reference_step(k, W, zeta, z):
    """Independent single-element trace of the stick/slip branches."""
    delta = W / k
    e = z - zeta
    if abs(e) < delta:
        return k * e, zeta
    s = 1.0 if e > 0 else -1.0
    return s * W, z - s * delta


class TestSingleElement:
    # k=10, W=1 => delta=0.1, fresh slider at 0.
    def test_sticking_branch(self):
        bank = MaxwellSlipBank([10.0], [1.0])
        assert bank.step(0.05) == pytest.approx(0.5)
        assert bank.zeta[0] == 0.0

    def test_slipping_branch(self):
        bank = MaxwellSlipBank([10.0], [1.0])
        bank.step(0.05)
        assert bank.step(0.25) == pytest.approx(1.0)
        assert bank.zeta[0] == pytest.approx(0.15)

    def test_reversal_after_slip(self):
        bank = MaxwellSlipBank([10.0], [1.0])
        bank.step(0.05)
        bank.step(0.25)
        # 10 * (0.10 - 0.15) = -0.5
        assert bank.step(0.10) == pytest.approx(-0.5)

    def test_matches_reference_on_random_walk(self):
        rng = np.random.default_rng(42)
        bank = MaxwellSlipBank([10.0], [1.0])
        zeta = 0.0
        z = 0.0
        for _ in range(500):
            z += rng.normal(scale=0.05)
            expect, zeta = scalar_reference_step(10.0, 1.0, zeta, z)
            assert bank.step(z) == pytest.approx(expect, abs=1e-12)


class TestRun:
    def test_zero_sequence(self):
        bank = MaxwellSlipBank()
        assert np.array_equal(bank.run([0.0, 0.0, 0.0]), np.zeros(3))

    def test_ramp_saturates_at_total(self):
        bank = MaxwellSlipBank()
        z = np.linspace(0.0, 10 * bank.delta.max(), 200)
        forces = bank.run(z)
        assert forces[-1] == pytest.approx(bank.saturation_total)

    def test_triangle_wave_loop_closes_on_second_period(self):
        # After one full period the state cycle is closed: periods 2 and 3
        # produce identical force traces.
        bank = MaxwellSlipBank()
        amp = 2.0 * bank.delta.max()
        quarter = np.linspace(0.0, amp, 50)
        period = np.concatenate(
            [quarter, quarter[-2::-1], -quarter[1:], -quarter[-2::-1]]
        )
        bank.run(period)
        p2 = bank.run(period)
        p3 = bank.run(period)
        assert np.allclose(p2, p3, atol=1e-12)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            MaxwellSlipBank().run([])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            MaxwellSlipBank().step(np.nan)


@st.composite
def bank_and_walk(draw):
    n_el = draw(st.integers(1, 5))
    k = [draw(st.floats(1.0, 500.0)) for _ in range(n_el)]
    W = [draw(st.floats(0.1, 5.0)) for _ in range(n_el)]
    steps = draw(st.lists(st.floats(-0.05, 0.05), min_size=1, max_size=60))
    return k, W, steps


class TestProperties:
    @given(bank_and_walk())
    @settings(max_examples=150, deadline=None)
    def test_bounded_and_confined(self, data):
        k, W, steps = data
        bank = MaxwellSlipBank(k, W)
        total = bank.saturation_total
        z = 0.0
        for dz in steps:
            z += dz
            f = bank.step(z)
            assert abs(f) <= total + 1e-9
            assert np.all(np.abs(z - bank.zeta) <= bank.delta + 1e-12)

    @given(bank_and_walk())
    @settings(max_examples=100, deadline=None)
    def test_rate_independence(self, data):
        k, W, steps = data
        z_seq = np.cumsum(steps)
        dup = np.repeat(z_seq, 2)
        a = MaxwellSlipBank(k, W).run(z_seq)
        b = MaxwellSlipBank(k, W).run(dup)[1::2]
        assert np.allclose(a, b, atol=1e-12)

    @given(bank_and_walk())
    @settings(max_examples=100, deadline=None)
    def test_odd_symmetry_from_fresh_bank(self, data):
        k, W, steps = data
        z_seq = np.cumsum(steps)
        a = MaxwellSlipBank(k, W).run(z_seq)
        b = MaxwellSlipBank(k, W).run(-z_seq)
        assert np.allclose(a, -b, atol=1e-12)

    def test_sticking_linearity(self):
        # While no element slips, force increments are (sum k) * dz exactly.
        bank = MaxwellSlipBank()
        dz = 0.2 * bank.delta.min()
        k_total = bank.k.sum()
        prev = bank.step(0.0)
        z = 0.0
        for _ in range(4):  # stays within the smallest delta
            z += dz
            f = bank.step(z)
            assert f - prev == pytest.approx(k_total * dz, rel=1e-12)
            prev = f

    def test_relax_shrinks_retained_force(self):
        bank = MaxwellSlipBank()
        bank.run(np.linspace(0, 0.1, 50))  # saturate
        z = 0.1
        before = bank.stored_force()
        bank.relax(z, 0.5)
        after = bank.step(z)
        assert abs(after) == pytest.approx(0.5 * abs(before), rel=1e-9)
