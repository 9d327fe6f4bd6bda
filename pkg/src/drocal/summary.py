"""Spectral summary of a time series: twelve Fourier peak parameters.

Transform convention (used everywhere in the package): a series
``y(0..N-1)`` is synthesized as ``y(t) = sum_k C_k exp(-i k w0 t)``, so the
coefficients are

    C_k = (1/N) * sum_t y(t) * exp(+2 pi i k t / N),   k = 0 .. N // 2

i.e. the complex conjugate of the forward FFT divided by N. With this
normalization C_0 is the signal mean, an on-grid ``cos`` of unit amplitude
gives ``Re C = 0.5`` and an on-grid ``sin`` gives ``Im C = +0.5``. The
frequency of coefficient k is ``k / (N * dt)`` Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import BAND1, BAND2
from .errors import InvalidBandError, InvalidInputError

SUMMARY_FIELDS = (
    "re_max_val_b1",
    "re_max_freq_b1",
    "re_min_val_b1",
    "re_min_freq_b1",
    "re_max_val_b2",
    "re_max_freq_b2",
    "re_min_val_b2",
    "re_min_freq_b2",
    "im_min_val_b1",
    "im_min_freq_b1",
    "im_max_val_b2",
    "im_max_freq_b2",
)
N_SUMMARIES = len(SUMMARY_FIELDS)
VALUE_SLOTS = (0, 2, 4, 6, 8, 10)
FREQ_SLOTS = (1, 3, 5, 7, 9, 11)

# Coefficients below this fraction of max|y| are snapped to exactly zero so
# that round-off cannot break the lowest-frequency tie rule.
_SNAP_REL = 1e-12
# Slack on band edges, relative to the band's upper edge.
_EDGE_REL = 1e-9


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    dt: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError(f"time series must be 1-D, got shape {values.shape}")
        if values.size < 2:
            raise InvalidInputError("time series needs at least 2 samples")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("time series contains non-finite values")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be positive and finite, got {self.dt}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def T(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class FrequencyBand:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise InvalidBandError(f"need 0 <= lo <= hi, got [{self.lo}, {self.hi}]")

    def mask(self, freqs: np.ndarray) -> np.ndarray:
        tol = _EDGE_REL * max(1.0, self.hi)
        return (freqs >= self.lo - tol) & (freqs <= self.hi + tol)


DEFAULT_BANDS = (FrequencyBand(*BAND1), FrequencyBand(*BAND2))


@dataclass(frozen=True)
class SpectrumSlice:
    freqs: np.ndarray
    re: np.ndarray
    im: np.ndarray


def grid_frequencies(n_samples: int, dt: float) -> np.ndarray:
    return np.arange(n_samples // 2 + 1) / (n_samples * dt)


def _coefficients(values: np.ndarray) -> np.ndarray:
    """One-sided C_k for each row of ``values`` (shape [..., N])."""
    n = values.shape[-1]
    coef = np.conj(np.fft.rfft(values, axis=-1)) / n
    scale = np.max(np.abs(values), axis=-1, keepdims=True)
    floor = _SNAP_REL * scale
    re = np.where(np.abs(coef.real) <= floor, 0.0, coef.real)
    im = np.where(np.abs(coef.imag) <= floor, 0.0, coef.imag)
    return re + 1j * im


def dft(ts: TimeSeries) -> SpectrumSlice:
    coef = _coefficients(ts.values)
    return SpectrumSlice(grid_frequencies(ts.values.size, ts.dt), coef.real, coef.imag)


def _check_bands(band1: FrequencyBand, band2: FrequencyBand):
    if band1.lo != 0:
        raise InvalidBandError(f"band1 must start at 0 Hz, got {band1.lo}")
    if band2.lo <= band1.hi:
        raise InvalidBandError(
            f"bands overlap or are out of order: [{band1.lo}, {band1.hi}] and [{band2.lo}, {band2.hi}]"
        )


def summarize_batch(
    values: np.ndarray,
    dt: float,
    band1: FrequencyBand = DEFAULT_BANDS[0],
    band2: FrequencyBand = DEFAULT_BANDS[1],
) -> np.ndarray:
    """Summaries of many equal-length series at once.

    ``values`` has shape [n, N]; returns an [n, 12] matrix laid out as
    ``SUMMARY_FIELDS``. Extremum ties go to the lowest frequency.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[-1] < 2:
        raise InvalidInputError("time series needs at least 2 samples")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("time series contains non-finite values")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidInputError(f"dt must be positive and finite, got {dt}")
    _check_bands(band1, band2)

    freqs = grid_frequencies(values.shape[-1], dt)
    m1, m2 = band1.mask(freqs), band2.mask(freqs)
    for name, band, mask in (("band1", band1, m1), ("band2", band2, m2)):
        if not mask.any():
            raise InvalidBandError(
                f"{name} [{band.lo}, {band.hi}] Hz contains no grid frequency "
                f"(grid step {freqs[1]:.6g} Hz, Nyquist {freqs[-1]:.6g} Hz)"
            )

    coef = _coefficients(values)
    out = np.empty((values.shape[0], N_SUMMARIES))
    slots = (
        (coef.real, m1, np.argmax),
        (coef.real, m1, np.argmin),
        (coef.real, m2, np.argmax),
        (coef.real, m2, np.argmin),
        (coef.imag, m1, np.argmin),
        (coef.imag, m2, np.argmax),
    )
    rows = np.arange(values.shape[0])
    for s, (part, mask, pick) in enumerate(slots):
        sub = part[:, mask]
        idx = pick(sub, axis=1)  # first occurrence == lowest frequency
        out[:, 2 * s] = sub[rows, idx]
        out[:, 2 * s + 1] = freqs[mask][idx]
    return out


def extract_summary(
    ts: TimeSeries,
    band1: FrequencyBand = DEFAULT_BANDS[0],
    band2: FrequencyBand = DEFAULT_BANDS[1],
) -> np.ndarray:
    return summarize_batch(ts.values[None, :], ts.dt, band1, band2)[0]


def reconstruct_from_summary(sv, T: int, dt: float) -> TimeSeries:
    """Synthesize a signal from the six retained peak coefficients.

    Diagnostic only. Each real-part peak at frequency f contributes
    ``2 Re C cos(2 pi f t)`` and each imaginary-part peak ``2 Im C sin(2 pi f t)``
    (no doubling at 0 Hz or Nyquist). When the max and min of one band land on
    the same coefficient it is counted once.
    """
    sv = np.asarray(sv, dtype=float)
    if sv.shape != (N_SUMMARIES,) or not np.all(np.isfinite(sv)):
        raise InvalidInputError(f"summary vector must be {N_SUMMARIES} finite values")
    if T < 1:
        raise InvalidInputError("T must be at least 1")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidInputError(f"dt must be positive and finite, got {dt}")

    n = T + 1
    nyquist = (n // 2) / (n * dt) if n % 2 == 0 else None
    t = np.arange(n) * dt
    y = np.zeros(n)
    seen = set()
    for slot in VALUE_SLOTS:
        val, freq = sv[slot], sv[slot + 1]
        is_imag = slot >= 8
        key = (is_imag, round(freq * n * dt))
        if key in seen:
            continue
        seen.add(key)
        edge = freq == 0 or (nyquist is not None and np.isclose(freq, nyquist))
        amp = val if edge else 2 * val
        wave = np.sin if is_imag else np.cos
        y += amp * wave(2 * np.pi * freq * t)
    return TimeSeries(y, dt)
