"""Nonparametric spectral summaries: periodograms, phase averages, and
relative (share-per-frequency) spectra.

Conventions: ordinates are I(w_j) = |sum_t x_t e^(-2*pi*i*w_j*t)|^2 / T at
Fourier frequencies w_j = j/T, j = 1..floor(T/2), after removing the sample
mean. Frequencies are reported in Hz as j/T*fs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Periodogram:
    """One series' periodogram on (0, fs/2]."""

    freqs_hz: np.ndarray
    power: np.ndarray
    n_times: int
    fs: float

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if freqs.ndim != 1 or freqs.shape != power.shape:
            raise ValueError("freqs_hz and power must be matching 1-d arrays")
        if freqs.size != self.n_times // 2:
            raise ValueError("expected floor(T/2) ordinates")
        if np.any(power < 0):
            raise ValueError("power must be nonnegative")
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "power", power)

    def log_power(self) -> np.ndarray:
        """Natural-log ordinates, floored to avoid log(0)."""
        return np.log(np.maximum(self.power, LOG_FLOOR))


@dataclass(frozen=True)
class PhaseSpectra:
    """Per-phase mean spectra on a shared frequency grid.

    power has shape (n_phases, n_freqs); phases records the inclusive
    1-based epoch ranges that were averaged.
    """

    freqs_hz: np.ndarray
    power: np.ndarray
    phases: Tuple[Tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if power.ndim != 2 or power.shape[1] != freqs.size:
            raise ValueError("power must be (n_phases, n_freqs)")
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "power", power)

    @property
    def n_phases(self) -> int:
        return self.power.shape[0]


def periodogram(x: np.ndarray, fs: float) -> Periodogram:
    """Periodogram of one series.

    Parameters
    ----------
    x : ndarray, shape (T,)
        Series with T >= 4. The sample mean is removed before transforming.
    fs : float
        Sampling rate in Hz.

    Returns
    -------
    Periodogram
        Ordinates at j/T*fs Hz for j = 1..floor(T/2). Summing I over all T
        Fourier frequencies (both half-axes) recovers sum((x - mean(x))^2).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be 1-d")
    n = x.size
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if fs <= 0:
        raise ValueError("fs must be positive")
    spec = np.abs(np.fft.rfft(x - x.mean())) ** 2 / n
    half = n // 2
    j = np.arange(1, half + 1)
    return Periodogram(j / n * fs, spec[1 : half + 1], n, float(fs))


def parse_phases(text: str) -> Tuple[Tuple[int, int], ...]:
    """Parse a phase partition like "1-80,81-160,161-247"."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.strip().partition("-")
        if not sep:
            raise ValueError(f"bad phase range {part!r}, expected lo-hi")
        try:
            out.append((int(lo), int(hi)))
        except ValueError:
            raise ValueError(f"bad phase range {part!r}, expected integers")
    return tuple(out)


def _check_partition(phases, n_epochs: int) -> Tuple[Tuple[int, int], ...]:
    # must tile 1..R exactly: contiguous, disjoint, non-empty
    clean = tuple((int(lo), int(hi)) for lo, hi in phases)
    for lo, hi in clean:
        if lo > hi:
            raise ValueError(f"empty phase {lo}-{hi}")
    ordered = sorted(clean)
    if ordered[0][0] != 1 or ordered[-1][1] != n_epochs:
        raise ValueError(
            f"phases must cover epochs 1..{n_epochs}, got {ordered}"
        )
    for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
        if lo != hi + 1:
            raise ValueError(f"phases must be disjoint and contiguous at {lo}")
    return clean


def phase_average(
    periodograms: Sequence[Periodogram],
    phases: Sequence[Tuple[int, int]],
) -> PhaseSpectra:
    """Average per-epoch periodograms within each phase.

    phases is a sequence of inclusive 1-based (first_epoch, last_epoch)
    ranges that must partition 1..R; epoch r is periodograms[r-1].
    """
    if len(periodograms) == 0:
        raise ValueError("need at least one periodogram")
    ref = periodograms[0]
    for pg in periodograms[1:]:
        if pg.n_times != ref.n_times or pg.fs != ref.fs:
            raise ValueError("periodograms must share T and fs")
    clean = _check_partition(phases, len(periodograms))
    power = np.stack([pg.power for pg in periodograms])
    means = np.stack(
        [power[lo - 1 : hi].mean(axis=0) for lo, hi in clean]
    )
    return PhaseSpectra(ref.freqs_hz.copy(), means, clean)


def relative_periodogram(
    per_phase: PhaseSpectra,
) -> Tuple[np.ndarray, np.ndarray]:
    """Rescale phase spectra to sum to 1 across phases at each frequency.

    Returns (values, degenerate) where values has the same shape as
    per_phase.power and degenerate marks frequencies whose total power was
    zero; those columns are filled with the uniform share 1/n_phases.
    """
    power = per_phase.power
    totals = power.sum(axis=0)
    degenerate = totals <= 0.0
    safe = np.where(degenerate, 1.0, totals)
    values = power / safe
    if np.any(degenerate):
        values[:, degenerate] = 1.0 / per_phase.n_phases
    return values, degenerate
