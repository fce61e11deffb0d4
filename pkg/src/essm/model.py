"""Latent AR(2) band model: parameterizations, spectra, companion-form system.

Each latent source is a causal AR(2) process written in polar form: root
modulus rho > 1 and phase psi in (0, pi), so that

    phi1 = 2 * rho**-1 * cos(psi),    phi2 = -rho**-2.

A band pins psi through its center frequency (psi = 2*pi*f0/fs) and
constrains rho to a box; the per-epoch free parameters are the rho vector
plus the shared state/observation noise variances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CausalityError, NoOscillationError

__all__ = [
    "Ar2Coeffs",
    "BandSpec",
    "CompanionSystem",
    "EpochParams",
    "EpochSeries",
    "MixingMatrix",
    "ar2_from_polar",
    "ar2_spectrum",
    "build_companion",
    "coeffs_for_epoch",
    "evolutionary_spectrum",
    "polar_from_ar2",
]


@dataclass(frozen=True)
class Ar2Coeffs:
    """AR(2) lag coefficients (phi1, phi2) of x_t = phi1 x_{t-1} + phi2 x_{t-2} + w_t."""

    phi1: float
    phi2: float

    def is_causal(self) -> bool:
        """True when both companion eigenvalues lie strictly inside the unit circle."""
        lams = np.linalg.eigvals(np.array([[self.phi1, self.phi2], [1.0, 0.0]]))
        return bool(np.all(np.abs(lams) < 1.0))


@dataclass(frozen=True)
class BandSpec:
    """A named oscillatory band: fixed center frequency, box constraint on rho.

    The phase is resolved against a sampling rate at use time; construction
    only checks the box (1 < rho_min <= rho_max) and a positive center.
    """

    name: str
    center_freq_hz: float
    rho_min: float
    rho_max: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("band name must be non-empty")
        if not np.isfinite(self.center_freq_hz) or self.center_freq_hz <= 0:
            raise ValueError(f"band {self.name!r}: center_freq_hz must be positive")
        if not (1.0 < self.rho_min <= self.rho_max):
            raise ValueError(
                f"band {self.name!r}: need 1 < rho_min <= rho_max, "
                f"got [{self.rho_min}, {self.rho_max}]"
            )

    def psi(self, fs: float) -> float:
        """Phase 2*pi*f0/fs; requires the center to be Nyquist-valid for fs."""
        if fs <= 0:
            raise ValueError("fs must be positive")
        if not (0.0 < self.center_freq_hz < fs / 2.0):
            raise ValueError(
                f"band {self.name!r}: center {self.center_freq_hz} Hz outside "
                f"(0, {fs / 2.0}) for fs={fs}"
            )
        return 2.0 * np.pi * self.center_freq_hz / fs


@dataclass(frozen=True)
class EpochParams:
    """Per-epoch parameters: rho per band, shared sigma2 (state), tau2 (observation)."""

    rho: np.ndarray
    sigma2: float
    tau2: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim != 1 or rho.size == 0:
            raise ValueError("rho must be a non-empty 1-D array")
        if not np.all(np.isfinite(rho)) or np.any(rho <= 1.0):
            raise CausalityError(f"rho entries must be finite and > 1, got {rho}")
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ValueError("sigma2 must be finite and non-negative")
        if not np.isfinite(self.tau2) or self.tau2 < 0:
            raise ValueError("tau2 must be finite and non-negative")
        object.__setattr__(self, "rho", rho)

    @property
    def q(self) -> int:
        return self.rho.size

    def in_box(self, bands: tuple[BandSpec, ...]) -> bool:
        """Whether each rho_l lies in its band's [rho_min, rho_max]."""
        if len(bands) != self.q:
            raise ValueError(f"{len(bands)} bands for {self.q} rho entries")
        return all(
            b.rho_min <= r <= b.rho_max for b, r in zip(bands, self.rho)
        )


@dataclass(frozen=True)
class MixingMatrix:
    """Nonnegative p x q loading matrix mapping sources to channels."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.size == 0:
            raise ValueError("mixing matrix must be 2-D and non-empty")
        if not np.all(np.isfinite(vals)):
            raise ValueError("mixing matrix entries must be finite")
        if np.any(vals < 0):
            raise ValueError("mixing matrix entries must be >= 0")
        if np.any(~vals.any(axis=0)):
            dead = np.flatnonzero(~vals.any(axis=0))
            raise ValueError(f"mixing matrix has all-zero column(s) {dead.tolist()}")
        object.__setattr__(self, "values", vals)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def augmented(self) -> np.ndarray:
        """p x 2q observation matrix (M, 0) acting on the stacked state."""
        return np.hstack([self.values, np.zeros_like(self.values)])


@dataclass(frozen=True)
class CompanionSystem:
    """Companion-form transition for q stacked AR(2) sources.

    phi_tilde is the 2q x 2q block matrix ((Phi1, Phi2), (I_q, 0)) with
    diagonal Phi1, Phi2; state_noise_embed = diag(I_q, 0) places the state
    noise on the current-source block only.
    """

    phi_tilde: np.ndarray
    state_noise_embed: np.ndarray

    @property
    def q(self) -> int:
        return self.phi_tilde.shape[0] // 2


@dataclass(frozen=True)
class EpochSeries:
    """One epoch of observations: channel-by-time matrix plus sampling rate."""

    data: np.ndarray
    fs: float
    channel_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
            raise ValueError(f"epoch data must be p x T with T >= 2, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("epoch data must be finite")
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise ValueError("fs must be positive")
        if self.channel_names is not None:
            names = tuple(self.channel_names)
            if len(names) != data.shape[0]:
                raise ValueError(
                    f"{len(names)} channel names for {data.shape[0]} channels"
                )
            object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "data", data)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]


def ar2_from_polar(rho: float, psi: float) -> Ar2Coeffs:
    """Map polar root parameters to AR(2) lag coefficients.

    Parameters
    ----------
    rho : float
        Characteristic root modulus; must exceed 1 (causality).
    psi : float
        Root phase in radians, strictly inside (0, pi).

    Returns
    -------
    Ar2Coeffs
        phi1 = 2 cos(psi)/rho, phi2 = -1/rho**2.
    """
    if not np.isfinite(rho) or rho <= 1.0:
        raise CausalityError(f"rho must be > 1 for a causal AR(2), got {rho}")
    if not np.isfinite(psi) or not (0.0 < psi < np.pi):
        raise ValueError(f"psi must lie in (0, pi), got {psi}")
    return Ar2Coeffs(phi1=2.0 * np.cos(psi) / rho, phi2=-1.0 / rho**2)


def polar_from_ar2(coeffs: Ar2Coeffs) -> tuple[float, float]:
    """Invert ar2_from_polar; requires complex characteristic roots.

    Returns
    -------
    (rho, psi)
        Root modulus and phase of the complex-conjugate root pair.
    """
    disc = coeffs.phi1**2 + 4.0 * coeffs.phi2
    if disc >= 0.0:
        raise NoOscillationError(
            f"characteristic roots are real (phi1^2 + 4 phi2 = {disc} >= 0)"
        )
    rho = (-coeffs.phi2) ** -0.5
    if rho <= 1.0:
        raise CausalityError(f"root modulus {rho} <= 1: process not causal")
    psi = float(np.arccos(np.clip(coeffs.phi1 * rho / 2.0, -1.0, 1.0)))
    return float(rho), psi


def ar2_spectrum(
    coeffs: Ar2Coeffs, sigma_w2: float, omega: np.ndarray | float
) -> np.ndarray:
    """Spectral density of a causal AR(2) process.

    Parameters
    ----------
    coeffs : Ar2Coeffs
    sigma_w2 : float
        Innovation variance, > 0.
    omega : array_like
        Frequencies in cycles per sample, each within [-1/2, 1/2].

    Returns
    -------
    ndarray
        f(omega) = sigma_w2 / |1 - phi1 e^{-2 pi i w} - phi2 e^{-4 pi i w}|^2,
        same shape as omega.
    """
    if not np.isfinite(sigma_w2) or sigma_w2 <= 0:
        raise ValueError("sigma_w2 must be positive")
    om = np.asarray(omega, dtype=float)
    if np.any(np.abs(om) > 0.5):
        raise ValueError("omega must lie within [-1/2, 1/2] cycles per sample")
    z = np.exp(-2j * np.pi * om)
    denom = np.abs(1.0 - coeffs.phi1 * z - coeffs.phi2 * z**2) ** 2
    return sigma_w2 / denom


def coeffs_for_epoch(
    params: EpochParams, bands: tuple[BandSpec, ...], fs: float
) -> list[Ar2Coeffs]:
    """AR(2) coefficients for every band of one epoch (psi from band centers)."""
    if len(bands) != params.q:
        raise ValueError(f"{len(bands)} bands for {params.q} rho entries")
    return [
        ar2_from_polar(float(r), b.psi(fs)) for r, b in zip(params.rho, bands)
    ]


def evolutionary_spectrum(
    params_by_epoch: list[EpochParams],
    bands: tuple[BandSpec, ...],
    fs: float,
    freq_grid_hz: np.ndarray,
) -> np.ndarray:
    """Per-epoch, per-band AR(2) spectra on a common frequency grid.

    Returns
    -------
    ndarray, shape (R, F, q)
        Entry (r, j, l) is the band-l spectrum of epoch r at freq_grid_hz[j],
        built from rho_l of epoch r, the band's phase at fs, and the epoch's
        sigma2.
    """
    grid = np.asarray(freq_grid_hz, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("freq_grid_hz must be a non-empty 1-D array")
    if np.any(grid < 0) or np.any(grid > fs / 2.0):
        raise ValueError("freq_grid_hz must lie within [0, fs/2]")
    omega = grid / fs
    out = np.empty((len(params_by_epoch), grid.size, len(bands)))
    for r, params in enumerate(params_by_epoch):
        for l, coeffs in enumerate(coeffs_for_epoch(params, bands, fs)):
            out[r, :, l] = ar2_spectrum(coeffs, params.sigma2, omega)
    return out


def build_companion(coeffs_per_band: list[Ar2Coeffs]) -> CompanionSystem:
    """Stack per-band AR(2) dynamics into the 2q x 2q companion transition.

    Raises
    ------
    CausalityError
        If any band's coefficients are not causal.
    """
    if not coeffs_per_band:
        raise ValueError("need at least one band")
    for l, c in enumerate(coeffs_per_band):
        if not c.is_causal():
            raise CausalityError(f"band {l}: AR(2) coefficients not causal")
    q = len(coeffs_per_band)
    phi = np.zeros((2 * q, 2 * q))
    phi[:q, :q] = np.diag([c.phi1 for c in coeffs_per_band])
    phi[:q, q:] = np.diag([c.phi2 for c in coeffs_per_band])
    phi[q:, :q] = np.eye(q)
    embed = np.zeros((2 * q, 2 * q))
    embed[:q, :q] = np.eye(q)
    return CompanionSystem(phi_tilde=phi, state_noise_embed=embed)
