import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from essm.spectral import (
    Periodogram,
    PhaseSpectra,
    parse_phases,
    periodogram,
    phase_average,
    relative_periodogram,
)


def direct_dft_power(x):
    """O(T^2) DFT periodogram over all T Fourier frequencies."""
    x = np.asarray(x, dtype=float)
    n = x.size
    t = np.arange(n)
    out = np.empty(n)
    for j in range(n):
        z = np.sum(x * np.exp(-2j * np.pi * j * t / n))
        out[j] = np.abs(z) ** 2 / n
    return out


class TestPeriodogram:
    def test_matches_direct_dft(self):
        rng = np.random.default_rng(0)
        for n in (8, 65, 256):
            x = rng.normal(size=n)
            want = direct_dft_power(x - x.mean())
            pg = periodogram(x, fs=1.0)
            np.testing.assert_allclose(pg.power, want[1 : n // 2 + 1],
                                       rtol=1e-10, atol=1e-10)

    def test_parseval_against_time_domain_sum(self):
        rng = np.random.default_rng(1)
        for n in (100, 101):
            x = rng.normal(size=n)
            full = direct_dft_power(x - x.mean())
            time_sum = np.sum((x - x.mean()) ** 2)
            assert np.sum(full) == pytest.approx(time_sum, rel=1e-8)
            # one-sided ordinates fold back onto the full sum
            pg = periodogram(x, fs=1.0)
            folded = 2.0 * pg.power.sum()
            if n % 2 == 0:
                folded -= pg.power[-1]
            assert folded == pytest.approx(time_sum, rel=1e-8)

    def test_pure_cosine_concentrates_at_its_line(self):
        n, j0 = 200, 30
        t = np.arange(n)
        pg = periodogram(np.cos(2 * np.pi * j0 * t / n), fs=1.0)
        peak = pg.power[j0 - 1]
        rest = np.delete(pg.power, j0 - 1)
        assert np.all(rest < 1e-10 * peak)
        assert pg.freqs_hz[j0 - 1] == pytest.approx(j0 / n)

    def test_constant_series_is_all_zero(self):
        pg = periodogram(np.full(50, 3.7), fs=10.0)
        np.testing.assert_allclose(pg.power, 0.0, atol=1e-12)

    def test_grid_covers_up_to_nyquist(self):
        pg = periodogram(np.random.default_rng(2).normal(size=64), fs=100.0)
        assert pg.power.size == 32
        assert pg.freqs_hz[0] == pytest.approx(100.0 / 64)
        assert pg.freqs_hz[-1] == pytest.approx(50.0)

    def test_rejects_short_and_bad_input(self):
        with pytest.raises(ValueError):
            periodogram(np.ones(3), fs=1.0)
        with pytest.raises(ValueError):
            periodogram(np.array([1.0, np.nan, 2.0, 3.0]), fs=1.0)
        with pytest.raises(ValueError):
            periodogram(np.ones((4, 4)), fs=1.0)
        with pytest.raises(ValueError):
            periodogram(np.ones(8), fs=0.0)

    def test_log_power_floors_zeros(self):
        pg = periodogram(np.full(50, 1.0), fs=1.0)
        assert np.all(np.isfinite(pg.log_power()))

    def test_type_validation(self):
        with pytest.raises(ValueError):
            Periodogram(np.arange(3.0), -np.ones(3), 6, 1.0)
        with pytest.raises(ValueError):
            Periodogram(np.arange(4.0), np.ones(4), 6, 1.0)


def toy_pgrams(powers, fs=1.0):
    n = 2 * len(powers[0])
    freqs = np.arange(1, n // 2 + 1) / n * fs
    return [Periodogram(freqs, np.asarray(p, float), n, fs) for p in powers]


class TestPhaseAverage:
    def test_hand_averaged_three_epochs(self):
        pgs = toy_pgrams([[1.0, 4.0], [3.0, 0.0], [8.0, 2.0]])
        out = phase_average(pgs, [(1, 2), (3, 3)])
        np.testing.assert_allclose(out.power, [[2.0, 2.0], [8.0, 2.0]])
        assert out.phases == ((1, 2), (3, 3))

    def test_identical_epochs_reproduce_single_spectrum(self):
        pgs = toy_pgrams([[2.0, 5.0, 1.0]] * 6)
        out = phase_average(pgs, [(1, 3), (4, 6)])
        np.testing.assert_allclose(out.power, [[2.0, 5.0, 1.0]] * 2)

    def test_one_phase_per_epoch_is_identity(self):
        rng = np.random.default_rng(3)
        raw = rng.uniform(size=(4, 5))
        out = phase_average(toy_pgrams(raw), [(r, r) for r in range(1, 5)])
        np.testing.assert_allclose(out.power, raw)

    @pytest.mark.parametrize(
        "phases",
        [
            [(1, 2)],               # does not reach R
            [(1, 2), (2, 3)],       # overlap
            [(1, 1), (3, 3)],       # gap
            [(2, 1), (1, 3)],       # empty phase
            [(0, 3)],               # starts before 1
        ],
    )
    def test_bad_partitions_rejected(self, phases):
        pgs = toy_pgrams([[1.0, 1.0]] * 3)
        with pytest.raises(ValueError):
            phase_average(pgs, phases)

    def test_mismatched_grids_rejected(self):
        a = periodogram(np.random.default_rng(4).normal(size=16), fs=1.0)
        b = periodogram(np.random.default_rng(5).normal(size=32), fs=1.0)
        with pytest.raises(ValueError):
            phase_average([a, b], [(1, 2)])


class TestRelativePeriodogram:
    def test_equal_phases_give_uniform_shares(self):
        ps = PhaseSpectra(np.arange(3.0), np.full((4, 3), 2.5))
        values, degenerate = relative_periodogram(ps)
        np.testing.assert_allclose(values, 0.25)
        assert not degenerate.any()

    def test_known_shares(self):
        ps = PhaseSpectra(np.arange(1.0), np.array([[2.0], [1.0], [1.0]]))
        values, _ = relative_periodogram(ps)
        np.testing.assert_allclose(values[:, 0], [0.5, 0.25, 0.25])

    def test_columns_sum_to_one_on_random_input(self):
        rng = np.random.default_rng(6)
        ps = PhaseSpectra(np.arange(40.0), rng.uniform(0.0, 9.0, (3, 40)))
        values, _ = relative_periodogram(ps)
        np.testing.assert_allclose(values.sum(axis=0), 1.0, atol=1e-12)

    def test_zero_total_column_flagged_and_uniform(self):
        power = np.array([[1.0, 0.0], [3.0, 0.0]])
        values, degenerate = relative_periodogram(
            PhaseSpectra(np.arange(2.0), power)
        )
        assert degenerate.tolist() == [False, True]
        np.testing.assert_allclose(values[:, 1], 0.5)
        np.testing.assert_allclose(values[:, 0], [0.25, 0.75])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=1e6))
    def test_scale_invariant(self, c):
        rng = np.random.default_rng(7)
        power = rng.uniform(0.1, 5.0, (3, 8))
        base, _ = relative_periodogram(PhaseSpectra(np.arange(8.0), power))
        scaled, _ = relative_periodogram(
            PhaseSpectra(np.arange(8.0), c * power)
        )
        np.testing.assert_allclose(scaled, base, rtol=1e-9)


class TestParsePhases:
    def test_paper_style_string(self):
        assert parse_phases("1-80,81-160,161-247") == (
            (1, 80), (81, 160), (161, 247),
        )

    def test_whitespace_tolerated(self):
        assert parse_phases(" 1-2 , 3-4 ") == ((1, 2), (3, 4))

    @pytest.mark.parametrize("text", ["1:3", "a-b", "1-", "5"])
    def test_malformed_rejected(self, text):
        with pytest.raises(ValueError):
            parse_phases(text)
