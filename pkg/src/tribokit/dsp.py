"""Feature extraction from vibration records.

Time-domain statistics, one-sided magnitude spectra, the squared envelope
spectrum and a biorthogonal wavelet filter bank whose per-level
reconstructions feed the time-frequency features.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

import numpy as np
import pywt
from scipy.signal import hilbert

from .core import MetaParameters, VibrationRecord
from .errors import ConfigurationError, DegenerateSignalError, InvalidInputError

FEATURE_NAMES = {
    1: "rms",
    2: "crest_factor",
    3: "shape_factor",
    4: "impulse_factor",
    5: "shannon_entropy",
    6: "log_energy_entropy",
    7: "skewness",
    8: "kurtosis",
    9: "envelope_fault_amplitude",
    10: "wavelet_envelope_fault_amplitude",
}

ENTROPY_GUARD = 1e-12
WAVELET_MODE = "symmetric"
SUPPORTED_WAVELETS = frozenset(pywt.wavelist(family="bior"))


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    resolution: float
    sample_count: int

    def __len__(self):
        return self.amplitudes.size

    def mean_square(self) -> float:
        """Signal power implied by the one-sided amplitudes (Parseval)."""
        a = self.amplitudes
        if self.sample_count % 2 == 0:
            return float(a[0] ** 2 + 0.5 * np.sum(a[1:-1] ** 2) + a[-1] ** 2)
        return float(a[0] ** 2 + 0.5 * np.sum(a[1:] ** 2))

    def max_amplitude(self) -> float:
        return float(self.amplitudes.max()) if self.amplitudes.size else 0.0


def _one_sided(x: np.ndarray, sampling_rate: float) -> Spectrum:
    n = x.size
    amps = np.abs(np.fft.rfft(x)) / n
    # DC and Nyquist appear once in the two-sided spectrum, everything else twice
    if n % 2 == 0:
        amps[1:-1] *= 2.0
    else:
        amps[1:] *= 2.0
    return Spectrum(np.fft.rfftfreq(n, d=1.0 / sampling_rate), amps, sampling_rate / n, n)


def time_domain_features(record: VibrationRecord) -> dict[int, float]:
    """Features 1-8: RMS, crest, shape, impulse, two entropies, skewness, kurtosis.

    Shape and impulse factors divide by the mean absolute value; kurtosis is
    non-excess (Gaussian -> 3).
    """
    x = record.samples
    energy = x * x
    total = energy.sum()
    if total == 0:
        raise DegenerateSignalError("all-zero signal: shape and impulse factors are undefined")
    rms = math.sqrt(total / x.size)
    peak = float(np.abs(x).max())
    mean_abs = float(np.abs(x).mean())

    p = energy / total
    nz = p[p > 0]
    shannon = float(-np.sum(nz * np.log(nz)))
    log_energy = float(np.sum(np.log(energy + ENTROPY_GUARD)))

    centred = x - x.mean()
    m2 = float(np.mean(centred**2))
    if m2 > 0:
        skew = float(np.mean(centred**3)) / m2**1.5
        kurt = float(np.mean(centred**4)) / m2**2
    else:
        skew, kurt = 0.0, 0.0
    return {
        1: rms,
        2: peak / rms,
        3: rms / mean_abs,
        4: peak / mean_abs,
        5: shannon,
        6: log_energy,
        7: skew,
        8: kurt,
    }


def real_spectrum(record: VibrationRecord) -> Spectrum:
    if len(record) < 2:
        raise InvalidInputError("spectrum needs at least 2 samples")
    return _one_sided(record.samples, record.sampling_rate)


def squared_envelope(samples: np.ndarray) -> np.ndarray:
    """|analytic signal|^2; scipy's hilbert zeroes the negative frequencies."""
    z = hilbert(samples)
    return z.real**2 + z.imag**2


def squared_envelope_spectrum(record: VibrationRecord) -> Spectrum:
    if len(record) < 4:
        raise InvalidInputError("envelope spectrum needs at least 4 samples")
    env = squared_envelope(record.samples)
    spec = _one_sided(env - env.mean(), record.sampling_rate)
    spec.amplitudes[0] = 0.0
    return spec


def envelope_spectrum(record: VibrationRecord) -> Spectrum:
    """Spectrum of the plain envelope |analytic signal|, DC removed.

    Linear in signal amplitude, unlike the squared envelope; used where a
    level proportional to the impact amplitude is wanted.
    """
    if len(record) < 4:
        raise InvalidInputError("envelope spectrum needs at least 4 samples")
    env = np.abs(hilbert(record.samples))
    spec = _one_sided(env - env.mean(), record.sampling_rate)
    spec.amplitudes[0] = 0.0
    return spec


@dataclass(frozen=True, eq=False)
class WaveletDecomposition:
    mother_wavelet: str
    levels: list[np.ndarray]
    approximation: np.ndarray
    band_edges: list[tuple[float, float]]

    def reconstruction(self) -> np.ndarray:
        return np.sum(self.levels, axis=0) + self.approximation


def band_edges(sampling_rate: float, n_levels: int) -> list[tuple[float, float]]:
    return [(sampling_rate / 2 ** (lvl + 1), sampling_rate / 2**lvl) for lvl in range(1, n_levels + 1)]


def wavelet_decompose(record: VibrationRecord, mother_wavelet: str = "bior6.8", n_levels: int = 12) -> WaveletDecomposition:
    """Multilevel DWT with every detail band reconstructed to full length.

    Level 1 is the highest band. Details plus approximation sum back to the
    input because the synthesis bank is linear and perfect-reconstruction.
    """
    if mother_wavelet not in SUPPORTED_WAVELETS:
        raise ConfigurationError(f"unsupported mother wavelet {mother_wavelet!r}")
    n = len(record)
    limit = int(math.floor(math.log2(n)))
    if not 1 <= n_levels <= limit:
        raise ConfigurationError(f"n_levels={n_levels} outside [1, floor(log2({n}))={limit}]")
    wavelet = pywt.Wavelet(mother_wavelet)
    with warnings.catch_warnings():
        # deep levels exceed pywt's boundary-free limit; reconstruction stays exact
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec(np.array(record.samples), wavelet, mode=WAVELET_MODE, level=n_levels)

    def rebuild(keep: int) -> np.ndarray:
        parts = [c if i == keep else np.zeros_like(c) for i, c in enumerate(coeffs)]
        return pywt.waverec(parts, wavelet, mode=WAVELET_MODE)[:n]

    # coeffs = [cA_n, cD_n, ..., cD_1]
    details = [rebuild(len(coeffs) - lvl) for lvl in range(1, n_levels + 1)]
    return WaveletDecomposition(
        mother_wavelet=mother_wavelet,
        levels=details,
        approximation=rebuild(0),
        band_edges=band_edges(record.sampling_rate, n_levels),
    )


@dataclass(frozen=True)
class FeatureVector:
    timestamp: datetime
    values: dict[int, float] = field(default_factory=dict)

    def __getitem__(self, feature_id: int) -> float:
        return self.values[feature_id]

    def as_row(self) -> list[float]:
        return [self.values[i] for i in sorted(FEATURE_NAMES)]


def _peak_at(spectrum: Spectrum, targets, tolerance: float) -> float:
    from .detect import peak_amplitude_near

    return max(peak_amplitude_near(spectrum, f, tolerance)[0] for f in targets)


def envelope_amplitude_at(record: VibrationRecord, fault_freq, tolerance: float = 0.02) -> float:
    """Feature 9: squared-envelope amplitude at the first harmonic of ``fault_freq``."""
    return _peak_at(squared_envelope_spectrum(record), np.atleast_1d(fault_freq), tolerance)


def wavelet_envelope_amplitudes(
    record: VibrationRecord,
    fault_freq,
    decomposition: WaveletDecomposition,
    tolerance: float = 0.02,
) -> list[float]:
    """Envelope amplitude at ``fault_freq`` for each reconstructed detail level."""
    targets = np.atleast_1d(fault_freq)
    return [
        _peak_at(squared_envelope_spectrum(record.with_samples(level)), targets, tolerance)
        for level in decomposition.levels
    ]


def extract_all_features(
    record: VibrationRecord,
    fault_freq,
    meta: Optional[MetaParameters] = None,
    tolerance: float = 0.02,
    decomposition: Optional[WaveletDecomposition] = None,
) -> FeatureVector:
    """Features 1-10 of one record.

    ``fault_freq`` may be a single frequency or several; with several,
    features 9 and 10 report the largest amplitude among them.
    """
    meta = meta or MetaParameters()
    values = time_domain_features(record)
    values[9] = envelope_amplitude_at(record, fault_freq, tolerance)
    if decomposition is None:
        meta.check_levels(len(record))
        decomposition = wavelet_decompose(record, meta.mother_wavelet, meta.n_decomp_levels)
    values[10] = max(wavelet_envelope_amplitudes(record, fault_freq, decomposition, tolerance))
    return FeatureVector(record.timestamp, values)
