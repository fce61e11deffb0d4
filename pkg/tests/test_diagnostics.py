import itertools

import numpy as np
import pytest
from scipy.signal import lfilter
from scipy.stats import chi2

from essm.diagnostics import (
    ClusterResult,
    ResidualReport,
    _ljung_box_from_acf,
    acf,
    cluster_mixing,
    ljung_box,
    pacf,
    residual_report,
    residuals,
)
from essm.model import BandSpec, EpochParams, EpochSeries, MixingMatrix
from essm.simulation import SimSpec, simulate_epochs

FS = 100.0
BAND8 = BandSpec("slow", 8.0, 1.005, 1.2)


def direct_acvf(x, h):
    """gamma_hat(h) by the explicit 1/T sum."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    return sum(xc[t + h] * xc[t] for t in range(n - h)) / n


def toeplitz_pacf(x, max_lag):
    """Last Yule-Walker coefficient at each order, solved directly."""
    rho = np.array([direct_acvf(x, h) for h in range(max_lag + 1)])
    rho = rho / rho[0]
    out = np.ones(max_lag + 1)
    for k in range(1, max_lag + 1):
        R = np.array([[rho[abs(i - j)] for j in range(k)] for i in range(k)])
        out[k] = np.linalg.solve(R, rho[1 : k + 1])[-1]
    return out


def min_diameter_bipartition(values):
    """Brute-force best 2-partition under the max within-set range."""
    idx = range(len(values))
    best, best_cost = None, np.inf
    for size in range(1, len(values)):
        for left in itertools.combinations(idx, size):
            right = tuple(i for i in idx if i not in left)
            cost = max(
                np.ptp([values[i] for i in side]) for side in (left, right)
            )
            if cost < best_cost:
                best, best_cost = (left, right), cost
    return frozenset(frozenset(side) for side in best)


def sim_epoch(seed, p=3, T=500, rho=1.05, tau2=0.5):
    spec = SimSpec(
        bands=(BAND8,),
        rho_start=np.array([rho]),
        rho_increment=0.0,
        sigma2=1.0,
        tau2=tau2,
        n_channels=p,
        n_times=T,
        n_epochs=1,
        fs=FS,
        rng_seed=seed,
    )
    ds = simulate_epochs(spec)
    return ds.epochs[0], ds.mixing, ds.params_by_epoch[0]


class TestAcf:
    def test_hand_example_one_two_three_four(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert direct_acvf(x, 0) == pytest.approx(1.25)
        assert direct_acvf(x, 1) == pytest.approx(0.3125)
        assert acf(x, 1)[1] == pytest.approx(0.25, abs=1e-15)

    def test_lag_zero_is_one(self):
        assert acf(np.array([3.0, -1.0, 2.0, 0.5]), 0).tolist() == [1.0]

    def test_matches_direct_sum(self):
        x = np.random.default_rng(0).normal(size=80)
        want = np.array([direct_acvf(x, h) for h in range(11)])
        np.testing.assert_allclose(acf(x, 10), want / want[0], atol=1e-12)

    def test_white_noise_stays_in_bands(self):
        rng = np.random.default_rng(1)
        hits = total = 0
        for _ in range(50):
            x = rng.normal(size=1000)
            r = acf(x, 20)[1:]
            hits += np.sum(np.abs(r) < 3 / np.sqrt(1000))
            total += r.size
        assert hits / total >= 0.99

    def test_rejects_constant_and_bad_lags(self):
        with pytest.raises(ValueError):
            acf(np.full(10, 2.0), 3)
        with pytest.raises(ValueError):
            acf(np.arange(5.0), 5)
        with pytest.raises(ValueError):
            acf(np.ones((4, 2)), 1)


class TestPacf:
    def test_base_cases(self):
        x = np.random.default_rng(2).normal(size=60)
        out = pacf(x, 5)
        assert out[0] == 1.0
        assert out[1] == acf(x, 1)[1]

    def test_matches_toeplitz_solve(self):
        x = np.random.default_rng(3).normal(size=200)
        np.testing.assert_allclose(
            pacf(x, 12), toeplitz_pacf(x, 12), atol=1e-8
        )

    def test_ar1_cutoff_after_lag_one(self):
        rng = np.random.default_rng(4)
        x = lfilter([1.0], [1.0, -0.5], rng.normal(size=6000))[500:]
        out = pacf(x, 6)
        band = 3 / np.sqrt(x.size)
        assert out[1] == pytest.approx(0.5, abs=band)
        assert np.all(np.abs(out[2:]) < band)

    def test_ar2_cutoff_after_lag_two(self):
        epoch, _, _ = sim_epoch(seed=5, p=1, T=8000, tau2=0.0)
        x = epoch.data[0]
        out = pacf(x, 10)
        assert out[2] < -0.5  # phi2 = -1/rho^2 is strongly negative
        band = 3 / np.sqrt(x.size)
        assert np.mean(np.abs(out[3:]) < band) >= 0.75

    def test_lag_bound(self):
        with pytest.raises(ValueError):
            pacf(np.arange(10.0), 5)


class TestLjungBox:
    def test_toy_series_matches_hand_formula(self):
        x = np.array([0.7, -1.2, 0.4, 0.0, 2.1, -0.3, 0.9, -1.7])
        stat, pvalue = ljung_box(x, n_lags=1)
        rho1 = direct_acvf(x, 1) / direct_acvf(x, 0)
        want = 8 * 10 * rho1**2 / 7
        assert stat == pytest.approx(want, rel=1e-12)
        assert pvalue == pytest.approx(chi2.sf(want, 1), rel=1e-10)

    def test_matches_hand_formula_on_longer_series(self):
        x = np.random.default_rng(6).normal(size=100)
        stat, pvalue = ljung_box(x, n_lags=10)
        rho = [direct_acvf(x, h) / direct_acvf(x, 0) for h in range(1, 11)]
        want = 100 * 102 * sum(r**2 / (100 - h)
                               for h, r in zip(range(1, 11), rho))
        assert stat == pytest.approx(want, rel=1e-12)
        assert pvalue == pytest.approx(chi2.sf(want, 10), rel=1e-10)

    def test_zero_acf_gives_zero_stat_unit_pvalue(self):
        stat, pvalue = _ljung_box_from_acf(np.zeros(5), 100)
        assert stat == 0.0
        assert pvalue == 1.0

    def test_lag_bounds(self):
        x = np.random.default_rng(7).normal(size=40)
        with pytest.raises(ValueError):
            ljung_box(x, n_lags=10)  # not below T/4
        with pytest.raises(ValueError):
            ljung_box(x, n_lags=0)

    def test_null_calibration_small(self):
        rng = np.random.default_rng(8)
        pvals = np.array(
            [ljung_box(rng.normal(size=400), 20)[1] for _ in range(500)]
        )
        assert 0.02 <= np.mean(pvals < 0.05) <= 0.09
        assert 0.44 <= pvals.mean() <= 0.56


class TestResiduals:
    def test_noise_free_single_channel_is_machine_zero(self):
        epoch, mixing, params = sim_epoch(seed=9, p=1, T=300, tau2=0.0)
        res = residuals(epoch, mixing, params, (BAND8,))
        assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(epoch.data)

    def test_vanishing_mixing_returns_observations(self):
        rng = np.random.default_rng(10)
        epoch = EpochSeries(rng.normal(size=(2, 150)), FS)
        mixing = MixingMatrix(np.full((2, 1), 1e-12))
        params = EpochParams(np.array([1.05]), 1.0, 1e6)
        res = residuals(epoch, mixing, params, (BAND8,))
        np.testing.assert_allclose(res, epoch.data, atol=1e-10)

    def test_smoothed_flag_changes_interior_keeps_last_step(self):
        epoch, mixing, params = sim_epoch(seed=11, p=3, T=200)
        filt = residuals(epoch, mixing, params, (BAND8,))
        smth = residuals(epoch, mixing, params, (BAND8,), smoothed=True)
        assert filt.shape == smth.shape == (3, 200)
        np.testing.assert_allclose(smth[:, -1], filt[:, -1], atol=1e-12)
        assert not np.allclose(smth[:, :-1], filt[:, :-1])

    def test_well_specified_residuals_pass_whiteness_mostly(self):
        rejections = checks = 0
        for seed in range(12):
            epoch, mixing, params = sim_epoch(seed=100 + seed)
            res = residuals(epoch, mixing, params, (BAND8,))
            for ch in range(res.shape[0]):
                rep = residual_report(res[ch], n_lags=20)
                rejections += rep.ljung_box_pvalue < 0.05
                checks += 1
        assert checks == 36
        assert rejections <= 6

    def test_report_is_consistent_with_pieces(self):
        x = np.random.default_rng(12).normal(size=300)
        rep = residual_report(x, n_lags=15)
        np.testing.assert_array_equal(rep.acf, acf(x, 15))
        np.testing.assert_array_equal(rep.pacf, pacf(x, 15))
        assert (rep.ljung_box_stat, rep.ljung_box_pvalue) == ljung_box(x, 15)
        assert rep.n_lags == 15

    def test_report_validation(self):
        with pytest.raises(ValueError):
            ResidualReport(np.array([0.9]), np.array([1.0]), 1.0, 0.5, 0)
        with pytest.raises(ValueError):
            ResidualReport(np.array([1.0]), np.array([1.0]), 1.0, 1.5, 0)


class TestClusterMixing:
    def two_band_mixing(self, col0):
        values = np.column_stack([col0, np.linspace(0.2, 0.9, len(col0))])
        return MixingMatrix(values)

    def test_two_scale_loadings_match_bruteforce_bipartition(self):
        col = [1.0, 1.01, 5.0, 5.02]
        got = cluster_mixing(self.two_band_mixing(col), band=0, k=2)
        assert got.groups() == min_diameter_bipartition(col)
        assert got.groups() == frozenset(
            [frozenset([0, 1]), frozenset([2, 3])]
        )

    def test_default_k_from_height_gap(self):
        got = cluster_mixing(
            self.two_band_mixing([1.0, 1.01, 5.0, 5.02]), band=0
        )
        assert got.n_clusters == 2
        assert got.linkage_heights.shape == (3,)

    def test_k_equal_p_gives_singletons(self):
        got = cluster_mixing(
            self.two_band_mixing([0.1, 0.4, 0.7, 0.9]), band=0, k=4
        )
        assert got.n_clusters == 4

    def test_k_out_of_range(self):
        m = self.two_band_mixing([0.1, 0.4, 0.7, 0.9])
        with pytest.raises(ValueError):
            cluster_mixing(m, band=0, k=5)
        with pytest.raises(ValueError):
            cluster_mixing(m, band=0, k=0)

    def test_permutation_equivariance_as_partitions(self):
        rng = np.random.default_rng(13)
        col = rng.uniform(0.1, 1.0, size=7)
        perm = rng.permutation(7)
        base = cluster_mixing(self.two_band_mixing(col), band=0, k=3)
        moved = cluster_mixing(self.two_band_mixing(col[perm]), band=0, k=3)
        mapped = frozenset(
            frozenset(int(np.flatnonzero(perm == i)[0]) for i in grp)
            for grp in base.groups()
        )
        assert moved.groups() == mapped

    def test_deterministic_and_band_label(self):
        m = self.two_band_mixing([0.3, 0.6, 0.61, 0.9])
        a = cluster_mixing(m, band=1, band_name="alpha")
        b = cluster_mixing(m, band=1, band_name="alpha")
        np.testing.assert_array_equal(a.assignments, b.assignments)
        assert a.band == "alpha"

    def test_single_channel(self):
        got = cluster_mixing(MixingMatrix(np.array([[0.5]])), band=0)
        assert got.n_clusters == 1
        assert got.linkage_heights.size == 0
