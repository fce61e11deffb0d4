"""Kalman filtering, innovations likelihood, and RTS smoothing for the companion system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve

from .errors import ConditioningError
from .model import (
    BandSpec,
    CompanionSystem,
    EpochParams,
    EpochSeries,
    MixingMatrix,
    build_companion,
    coeffs_for_epoch,
)

__all__ = [
    "FilterInit",
    "FilterOutput",
    "innovations_nll",
    "kalman_filter",
    "neg_loglik",
    "rts_smooth",
]


@dataclass(frozen=True)
class FilterInit:
    """Prior state mean and covariance (X_0^0, P_0^0)."""

    x0: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        if x0.ndim != 1 or p0.shape != (x0.size, x0.size):
            raise ValueError(f"incompatible init shapes {x0.shape}, {p0.shape}")
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(p0))):
            raise ValueError("init must be finite")
        if not np.allclose(p0, p0.T, atol=1e-12):
            raise ValueError("p0 must be symmetric")
        if np.min(np.linalg.eigvalsh(p0)) < -1e-10:
            raise ValueError("p0 must be positive semidefinite")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "p0", 0.5 * (p0 + p0.T))

    @classmethod
    def default(cls, q: int) -> "FilterInit":
        # zero mean, identity covariance on the stacked 2q state
        return cls(np.zeros(2 * q), np.eye(2 * q))


@dataclass(frozen=True)
class FilterOutput:
    """Per-step filter quantities for one epoch, t = 1..T at index t-1."""

    predicted_means: np.ndarray  # (T, 2q)
    filtered_means: np.ndarray  # (T, 2q)
    predicted_covs: np.ndarray  # (T, 2q, 2q)
    filtered_covs: np.ndarray  # (T, 2q, 2q)
    gains: np.ndarray  # (T, 2q, p)
    innovations: np.ndarray  # (T, p)
    innovation_covs: np.ndarray  # (T, p, p)
    neg_loglik: float


@njit(cache=True)
def _chol_lower(S, L):
    # lower Cholesky of S into L; False when S is not positive definite
    p = S.shape[0]
    for i in range(p):
        acc = S[i, i]
        for k in range(i):
            acc -= L[i, k] * L[i, k]
        if not (acc > 0.0):  # catches non-positive and NaN
            return False
        L[i, i] = np.sqrt(acc)
        for j in range(i + 1, p):
            v = S[j, i]
            for k in range(i):
                v -= L[j, k] * L[i, k]
            L[j, i] = v / L[i, i]
    return True


@njit(cache=True)
def _chol_solve_vec(L, b):
    # solves (L L') x = b in place
    p = L.shape[0]
    for i in range(p):
        for k in range(i):
            b[i] -= L[i, k] * b[k]
        b[i] /= L[i, i]
    for i in range(p - 1, -1, -1):
        for k in range(i + 1, p):
            b[i] -= L[k, i] * b[k]
        b[i] /= L[i, i]


@njit(cache=True)
def _chol_solve_cols(L, B):
    # solves (L L') X = B column-wise in place, B of shape (p, k)
    p, k = B.shape
    for c in range(k):
        for i in range(p):
            for kk in range(i):
                B[i, c] -= L[i, kk] * B[kk, c]
            B[i, c] /= L[i, i]
        for i in range(p - 1, -1, -1):
            for kk in range(i + 1, p):
                B[i, c] -= L[kk, i] * B[kk, c]
            B[i, c] /= L[i, i]


@njit(cache=True)
def _filter_full(y, m, phi, sigma2, tau2, x0, p0):
    T, p = y.shape
    n = phi.shape[0]
    q = n // 2
    xp = np.empty((T, n))
    xf = np.empty((T, n))
    Pp = np.empty((T, n, n))
    Pf = np.empty((T, n, n))
    Ks = np.empty((T, n, p))
    eps = np.empty((T, p))
    Ss = np.empty((T, p, p))
    L = np.empty((p, p))
    In = np.eye(n)
    x = x0.copy()
    P = p0.copy()
    nll = 0.0
    for t in range(T):
        xpred = np.dot(phi, x)
        Ppred = np.dot(np.dot(phi, P), phi.T)
        for i in range(q):
            Ppred[i, i] += sigma2
        Ppred = 0.5 * (Ppred + Ppred.T)
        S = np.dot(np.dot(m, Ppred), m.T)
        for i in range(p):
            S[i, i] += tau2
        S = 0.5 * (S + S.T)
        if not _chol_lower(S, L):
            return xp, xf, Pp, Pf, Ks, eps, Ss, nll, t + 1
        e = y[t] - np.dot(m, xpred)
        a = e.copy()
        _chol_solve_vec(L, a)
        quad = 0.0
        logdet_half = 0.0
        for i in range(p):
            quad += e[i] * a[i]
            logdet_half += np.log(L[i, i])
        nll += logdet_half + 0.5 * quad
        B = np.dot(m, Ppred)  # (p, n); Ppred symmetric
        _chol_solve_cols(L, B)
        K = B.T.copy()  # (n, p) = Ppred m' S^-1
        xfil = xpred + np.dot(K, e)
        Pfil = np.dot(In - np.dot(K, m), Ppred)
        Pfil = 0.5 * (Pfil + Pfil.T)
        xp[t] = xpred
        xf[t] = xfil
        Pp[t] = Ppred
        Pf[t] = Pfil
        Ks[t] = K
        eps[t] = e
        Ss[t] = S
        x = xfil
        P = Pfil
    return xp, xf, Pp, Pf, Ks, eps, Ss, nll, -1


@njit(cache=True)
def _filter_nll(y, m, phi, sigma2, tau2, x0, p0):
    # likelihood-only pass: identical recursion, no per-step storage
    T, p = y.shape
    n = phi.shape[0]
    q = n // 2
    L = np.empty((p, p))
    In = np.eye(n)
    x = x0.copy()
    P = p0.copy()
    nll = 0.0
    for t in range(T):
        xpred = np.dot(phi, x)
        Ppred = np.dot(np.dot(phi, P), phi.T)
        for i in range(q):
            Ppred[i, i] += sigma2
        Ppred = 0.5 * (Ppred + Ppred.T)
        S = np.dot(np.dot(m, Ppred), m.T)
        for i in range(p):
            S[i, i] += tau2
        S = 0.5 * (S + S.T)
        if not _chol_lower(S, L):
            return np.nan, t + 1
        e = y[t] - np.dot(m, xpred)
        a = e.copy()
        _chol_solve_vec(L, a)
        quad = 0.0
        logdet_half = 0.0
        for i in range(p):
            quad += e[i] * a[i]
            logdet_half += np.log(L[i, i])
        nll += logdet_half + 0.5 * quad
        B = np.dot(m, Ppred)
        _chol_solve_cols(L, B)
        K = B.T.copy()
        x = xpred + np.dot(K, e)
        P = np.dot(In - np.dot(K, m), Ppred)
        P = 0.5 * (P + P.T)
    return nll, -1


def _check_inputs(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    params: EpochParams,
    bands: tuple[BandSpec, ...],
    init: FilterInit | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, FilterInit]:
    if mixing.p != epoch.p:
        raise ValueError(
            f"mixing has {mixing.p} rows for {epoch.p} channels"
        )
    if mixing.q != params.q or len(bands) != params.q:
        raise ValueError(
            f"band count mismatch: mixing q={mixing.q}, params q={params.q}, "
            f"bands={len(bands)}"
        )
    if init is None:
        init = FilterInit.default(params.q)
    if init.x0.size != 2 * params.q:
        raise ValueError(f"init is {init.x0.size}-dim, state is {2 * params.q}-dim")
    system = build_companion(coeffs_for_epoch(params, bands, epoch.fs))
    y = np.ascontiguousarray(epoch.data.T)
    m = np.ascontiguousarray(mixing.augmented())
    return y, m, system.phi_tilde, init


def kalman_filter(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    params: EpochParams,
    bands: tuple[BandSpec, ...],
    init: FilterInit | None = None,
) -> FilterOutput:
    """One forward filter pass; collects every per-step quantity.

    Raises ConditioningError (with the failing step) when an innovation
    covariance stops being positive definite.
    """
    y, m, phi, init = _check_inputs(epoch, mixing, params, bands, init)
    xp, xf, Pp, Pf, Ks, eps, Ss, nll, fail_t = _filter_full(
        y, m, phi, params.sigma2, params.tau2, init.x0, init.p0
    )
    if fail_t > 0:
        raise ConditioningError(
            f"innovation covariance not positive definite at t={fail_t}", t=fail_t
        )
    return FilterOutput(
        predicted_means=xp,
        filtered_means=xf,
        predicted_covs=Pp,
        filtered_covs=Pf,
        gains=Ks,
        innovations=eps,
        innovation_covs=Ss,
        neg_loglik=float(nll),
    )


def innovations_nll(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    params: EpochParams,
    bands: tuple[BandSpec, ...],
    init: FilterInit | None = None,
) -> float:
    """Innovations negative log-likelihood without materializing FilterOutput."""
    y, m, phi, init = _check_inputs(epoch, mixing, params, bands, init)
    nll, fail_t = _filter_nll(
        y, m, phi, params.sigma2, params.tau2, init.x0, init.p0
    )
    if fail_t > 0:
        raise ConditioningError(
            f"innovation covariance not positive definite at t={fail_t}", t=fail_t
        )
    return float(nll)


def neg_loglik(output: FilterOutput) -> float:
    """Recompute 0.5 * sum(log|S_t| + e_t' S_t^-1 e_t) from stored innovations."""
    total = 0.0
    for e, S in zip(output.innovations, output.innovation_covs):
        try:
            c = cho_factor(S, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - stored S was PD
            raise ConditioningError(str(exc)) from exc
        total += np.sum(np.log(np.diag(c[0]))) + 0.5 * float(e @ cho_solve(c, e))
    return float(total)


def rts_smooth(
    output: FilterOutput, system: CompanionSystem
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-interval smoother over one filtered epoch.

    Returns (smoothed_means, smoothed_covs) of shapes (T, 2q) and
    (T, 2q, 2q). Raises ConditioningError when a predicted covariance is
    singular (its inverse enters the backward gain).
    """
    phi = system.phi_tilde
    xf, xp = output.filtered_means, output.predicted_means
    Pf, Pp = output.filtered_covs, output.predicted_covs
    T, n = xf.shape
    xs = np.empty_like(xf)
    Ps = np.empty_like(Pf)
    xs[-1] = xf[-1]
    Ps[-1] = Pf[-1]
    for t in range(T - 2, -1, -1):
        try:
            c = cho_factor(Pp[t + 1], lower=True)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError(
                f"predicted covariance singular at t={t + 2}", t=t + 2
            ) from exc
        J = cho_solve(c, phi @ Pf[t]).T  # Pf_t phi' inv(Pp_{t+1})
        xs[t] = xf[t] + J @ (xs[t + 1] - xp[t + 1])
        Pst = Pf[t] + J @ (Ps[t + 1] - Pp[t + 1]) @ J.T
        Ps[t] = 0.5 * (Pst + Pst.T)
    return xs, Ps
