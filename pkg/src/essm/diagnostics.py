"""Residual diagnostics (ACF, PACF, Ljung-Box) and clustering of mixing
columns across channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.special import gammaincc

from .kalman import FilterInit, kalman_filter, rts_smooth
from .model import (
    BandSpec,
    EpochParams,
    EpochSeries,
    MixingMatrix,
    build_companion,
    coeffs_for_epoch,
)


@dataclass(frozen=True)
class ResidualReport:
    """Whiteness summary for one residual series."""

    acf: np.ndarray
    pacf: np.ndarray
    ljung_box_stat: float
    ljung_box_pvalue: float
    n_lags: int

    def __post_init__(self):
        if self.acf[0] != 1.0 or np.any(np.abs(self.acf) > 1.0 + 1e-12):
            raise ValueError("acf must start at 1 and stay within [-1, 1]")
        if not 0.0 <= self.ljung_box_pvalue <= 1.0:
            raise ValueError("p-value must lie in [0, 1]")


@dataclass(frozen=True)
class ClusterResult:
    """Channel grouping for one band's mixing column."""

    band: str
    assignments: np.ndarray
    linkage_heights: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.assignments, dtype=int)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("assignments must label every channel")
        object.__setattr__(self, "assignments", labels)

    @property
    def n_clusters(self) -> int:
        return int(np.unique(self.assignments).size)

    def groups(self) -> frozenset:
        """Label-free view: the partition as a set of channel-index sets."""
        labels = self.assignments
        return frozenset(
            frozenset(np.flatnonzero(labels == c).tolist())
            for c in np.unique(labels)
        )


def residuals(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    params: EpochParams,
    bands: Tuple[BandSpec, ...],
    init: FilterInit | None = None,
    smoothed: bool = False,
) -> np.ndarray:
    """Observation residuals Y_t - M~ X_t for one epoch, shape (p, T).

    States are filtered by default; smoothed=True substitutes the
    fixed-interval smoother output.
    """
    out = kalman_filter(epoch, mixing, params, bands, init)
    if smoothed:
        system = build_companion(coeffs_for_epoch(params, bands, epoch.fs))
        states, _ = rts_smooth(out, system)
    else:
        states = out.filtered_means
    fitted = mixing.augmented() @ states.T
    return epoch.data - fitted


def acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations rho(0..max_lag) with the 1/T convention."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be 1-d")
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    xc = x - x.mean()
    gamma0 = np.dot(xc, xc) / n
    if gamma0 <= 0.0:
        raise ValueError("series is constant, autocorrelation undefined")
    cov = np.correlate(xc, xc, mode="full")[n - 1 : n + max_lag] / n
    return cov / gamma0


def pacf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Partial autocorrelations via Durbin-Levinson; pacf[0] = 1."""
    x = np.asarray(x, dtype=float)
    if not 0 <= max_lag < x.size / 2:
        raise ValueError(f"max_lag must be below T/2, got {max_lag}")
    rho = acf(x, max_lag)
    out = np.ones(max_lag + 1)
    if max_lag == 0:
        return out
    phi = np.zeros(max_lag + 1)  # phi[j] = phi_{k,j} for the current order k
    phi[1] = rho[1]
    out[1] = rho[1]
    for k in range(2, max_lag + 1):
        prev = phi[1:k].copy()
        num = rho[k] - np.dot(prev, rho[k - 1 : 0 : -1])
        den = 1.0 - np.dot(prev, rho[1:k])
        phi_kk = num / den
        phi[1:k] = prev - phi_kk * prev[::-1]
        phi[k] = phi_kk
        out[k] = phi_kk
    return out


def _ljung_box_from_acf(rho: np.ndarray, n: int) -> Tuple[float, float]:
    # rho holds rho(1..h); chi-square tail via regularized upper gamma
    h = rho.size
    lags = np.arange(1, h + 1)
    stat = n * (n + 2.0) * np.sum(rho**2 / (n - lags))
    pvalue = float(gammaincc(h / 2.0, stat / 2.0))
    return float(stat), pvalue


def ljung_box(x: np.ndarray, n_lags: int = 20) -> Tuple[float, float]:
    """Ljung-Box portmanteau test; returns (Q, p-value).

    Q = T(T+2) sum_h rho(h)^2/(T-h), referred to chi-square with n_lags
    degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    if not 1 <= n_lags < x.size / 4:
        raise ValueError(f"n_lags must lie in [1, T/4), got {n_lags}")
    rho = acf(x, n_lags)[1:]
    return _ljung_box_from_acf(rho, x.size)


def residual_report(x: np.ndarray, n_lags: int = 20) -> ResidualReport:
    """ACF, PACF and Ljung-Box for one residual series."""
    stat, pvalue = ljung_box(x, n_lags)
    return ResidualReport(
        acf=acf(x, n_lags),
        pacf=pacf(x, n_lags),
        ljung_box_stat=stat,
        ljung_box_pvalue=pvalue,
        n_lags=n_lags,
    )


def _gap_cluster_count(heights: np.ndarray, p: int) -> int:
    # cut where consecutive merge heights jump the most; with fewer than
    # two merges there is no gap to compare
    if heights.size < 2:
        return 1
    gaps = np.diff(heights)
    return p - (int(np.argmax(gaps)) + 1)


def cluster_mixing(
    mixing: MixingMatrix,
    band: int,
    k: int | None = None,
    band_name: str | None = None,
) -> ClusterResult:
    """Complete-linkage clustering of one band's channel loadings.

    k defaults to the count implied by the largest gap in the merge
    heights. Assignment labels are arbitrary; compare via groups().
    """
    values = mixing.values[:, band]
    p = values.size
    if p == 1:
        return ClusterResult(
            band_name or str(band), np.zeros(1, dtype=int), np.empty(0)
        )
    Z = linkage(values[:, None], method="complete")
    heights = Z[:, 2].copy()
    if k is None:
        k = _gap_cluster_count(heights, p)
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}], got {k}")
    labels = fcluster(Z, t=k, criterion="maxclust")
    return ClusterResult(band_name or str(band), labels - 1, heights)
