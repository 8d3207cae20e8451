"""Spectral analysis of emanations: FFT, PSD, peak detection, harmonic models.

Emanations behave like amplitude-modulated clock signals: square-ish waves
in the time domain, equally spaced spikes in the frequency domain. This
module provides the numeric pieces used to turn raw IQ captures into the
compact "PSD at spike bins" series consumed by feature extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasedHarmonic, BinOutOfRange, EmptyInput, TooFewPeaks

DEFAULT_THRESHOLD_K = 6.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Unnormalized DFT output; ``bin_hz`` is the bin width."""

    bin_hz: float
    values: np.ndarray  # complex, length N (power of two after padding)


@dataclass(frozen=True)
class PeakSet:
    """Detected spectral spikes, sorted by bin index."""

    peaks: tuple[tuple[int, float, float], ...]  # (bin_index, freq_hz, psd)
    noise_floor: float

    def bins(self) -> list[int]:
        return [b for b, _, _ in self.peaks]


@dataclass(frozen=True)
class EmanationFrequencyModel:
    """Mixing model for over-the-air emanation frequencies.

    Received spikes appear at p*carrier + q*clock + r*leak for small
    integers p, q, r; which multiples actually show up depends on the
    hardware, so the model enumerates candidates and leaves selection
    to the peak matcher.
    """

    f_carrier_hz: float
    f_c_hz: float
    f_l_hz: float
    p_range: tuple[int, int]  # inclusive
    q_range: tuple[int, int]
    r_range: tuple[int, int]

    def __post_init__(self):
        for lo, hi in (self.p_range, self.q_range, self.r_range):
            if hi < lo:
                raise EmptyInput(f"empty integer range ({lo},{hi})")


@dataclass(frozen=True)
class SquareWaveSpec:
    """Truncated Fourier synthesis of an ideal square wave."""

    f_hz: float
    n_harmonics: int
    sample_rate_hz: float
    n_samples: int

    def __post_init__(self):
        if self.f_hz <= 0 or self.f_hz >= self.sample_rate_hz / 2:
            raise AliasedHarmonic(f"cycle frequency {self.f_hz} outside (0, Nyquist)")
        if self.n_harmonics < 1 or self.n_samples < 1:
            raise EmptyInput("n_harmonics and n_samples must be >= 1")


# --------------------------------------------------------------------------
# FFT
# --------------------------------------------------------------------------

def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_pow2(a: np.ndarray) -> np.ndarray:
    """Iterative radix-2 Cooley-Tukey; ``a`` length must be a power of two."""
    n = a.size
    if n == 1:
        return a.copy()
    out = a[_bit_reverse_indices(n)].astype(np.complex128)
    length = 2
    while length <= n:
        half = length // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / length)
        blocks = out.reshape(-1, length)
        even = blocks[:, :half]
        odd = blocks[:, half:] * tw
        out = np.concatenate([even + odd, even - odd], axis=1).reshape(-1)
        length *= 2
    return out


def fft(signal, sample_rate_hz: float = 1.0) -> Spectrum:
    """Unnormalized DFT; non-power-of-two inputs are zero-padded."""
    a = np.asarray(signal, dtype=np.complex128).ravel()
    if a.size == 0:
        raise EmptyInput("fft of empty signal")
    n = _next_pow2(a.size)
    if n != a.size:
        a = np.concatenate([a, np.zeros(n - a.size, dtype=np.complex128)])
    return Spectrum(bin_hz=sample_rate_hz / n, values=_fft_pow2(a))


def ifft(spectrum: Spectrum) -> np.ndarray:
    vals = spectrum.values
    return np.conj(_fft_pow2(np.conj(vals))) / vals.size


# --------------------------------------------------------------------------
# Time-domain emanation model
# --------------------------------------------------------------------------

def square_wave(spec: SquareWaveSpec) -> np.ndarray:
    """Sum of odd harmonics (4/pi) * sin(2*pi*(2k-1)*f*t) / (2k-1)."""
    top = (2 * spec.n_harmonics - 1) * spec.f_hz
    if top > spec.sample_rate_hz / 2:  # a harmonic exactly at Nyquist is tolerated
        raise AliasedHarmonic(
            f"harmonic {2 * spec.n_harmonics - 1} at {top} Hz beyond Nyquist {spec.sample_rate_hz / 2}"
        )
    t = np.arange(spec.n_samples) / spec.sample_rate_hz
    x = np.zeros(spec.n_samples)
    for k in range(1, spec.n_harmonics + 1):
        m = 2 * k - 1
        x += np.sin(2 * np.pi * m * spec.f_hz * t) / m
    return (4.0 / np.pi) * x


# --------------------------------------------------------------------------
# PSD and peak analysis
# --------------------------------------------------------------------------

def psd(spectrum: Spectrum, window_length: int) -> np.ndarray:
    """Periodogram |X[k]|^2 / (window_length * sample_rate)."""
    n = spectrum.values.size
    fs = spectrum.bin_hz * n
    return (np.abs(spectrum.values) ** 2) / (window_length * fs)


def detect_peaks(
    psd_values,
    min_separation_bins: int = 1,
    threshold_k: float = DEFAULT_THRESHOLD_K,
    bin_hz: float = 1.0,
) -> PeakSet:
    """Local maxima above a robust noise floor (median + k * MAD).

    Candidates are taken greedily in descending PSD order; a candidate
    closer than ``min_separation_bins`` to an already accepted peak is
    dropped.
    """
    vals = np.asarray(psd_values, dtype=float).ravel()
    if vals.size == 0:
        raise EmptyInput("detect_peaks on empty psd")
    med = float(np.median(vals))
    mad = float(np.median(np.abs(vals - med)))
    floor = med + threshold_k * mad

    candidates = []
    for i in range(vals.size):
        left_ok = i == 0 or vals[i] > vals[i - 1]
        right_ok = i == vals.size - 1 or vals[i] > vals[i + 1]
        if vals.size > 1 and left_ok and right_ok and vals[i] > floor:
            candidates.append(i)
    chosen: list[int] = []
    for i in sorted(candidates, key=lambda j: (-vals[j], j)):
        if all(abs(i - c) >= min_separation_bins for c in chosen):
            chosen.append(i)
    peaks = tuple((i, i * bin_hz, float(vals[i])) for i in sorted(chosen))
    return PeakSet(peaks=peaks, noise_floor=floor)


def estimate_harmonic_spacing(peak_set: PeakSet) -> float:
    """Least-squares common difference of the peak frequency progression."""
    freqs = np.array([f for _, f, _ in peak_set.peaks], dtype=float)
    if freqs.size < 2:
        raise TooFewPeaks(f"need >= 2 peaks, got {freqs.size}")
    idx = np.arange(freqs.size)
    slope = np.polyfit(idx, freqs, 1)[0]
    return float(slope)


def candidate_frequencies(model: EmanationFrequencyModel) -> np.ndarray:
    """All non-negative p*carrier + q*clock + r*leak mixing products, sorted unique."""
    p = np.arange(model.p_range[0], model.p_range[1] + 1)
    q = np.arange(model.q_range[0], model.q_range[1] + 1)
    r = np.arange(model.r_range[0], model.r_range[1] + 1)
    grid = (
        p[:, None, None] * model.f_carrier_hz
        + q[None, :, None] * model.f_c_hz
        + r[None, None, :] * model.f_l_hz
    ).ravel()
    return np.unique(grid[grid >= 0])


def emanation_features(windows, reference_peaks: PeakSet) -> np.ndarray:
    """PSD sampled at the reference peak bins, one row per window.

    ``windows`` may contain plain PSD vectors, Spectrum objects, or raw IQ
    arrays; the reference peaks must come from one calibration spectrum so
    every window yields the same dimensionality.
    """
    bins = reference_peaks.bins()
    rows = []
    for w in windows:
        if isinstance(w, Spectrum):
            vals = psd(w, window_length=w.values.size)
        elif isinstance(w, np.ndarray) and np.iscomplexobj(w):
            spec = fft(w)
            vals = psd(spec, window_length=w.size)
        else:
            vals = np.asarray(w, dtype=float).ravel()
        if bins and max(bins) >= vals.size:
            raise BinOutOfRange(f"peak bin {max(bins)} outside psd of length {vals.size}")
        rows.append(vals[bins] if bins else np.zeros(0))
    return np.array(rows)


def pooled_calibration_psd(psd_rows) -> np.ndarray:
    """Mean PSD across windows, used as the calibration spectrum for peaks."""
    mat = np.asarray(list(psd_rows), dtype=float)
    if mat.size == 0:
        raise EmptyInput("no spectra to pool")
    return mat.mean(axis=0)
