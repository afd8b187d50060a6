"""Envelope-spectrum fault detection with a steady-state alarm baseline."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import FaultFrequencies, MetaParameters, VibrationRecord
from .dsp import Spectrum, squared_envelope_spectrum, wavelet_decompose
from .errors import ConfigurationError

DEFAULT_TOLERANCE = 0.02
DEFAULT_BASELINE_COUNT = 50
FAULT_ORDER = ("BPFI", "BPFO", "BSF")
PATHS = ("raw", "wavelet", "combined")


@dataclass(frozen=True)
class FaultStatus:
    is_faulty: bool
    fault_type: str
    detected_amplitude: float
    alarm_level: float
    detection_time: datetime

    def to_line(self) -> str:
        return json.dumps(
            {
                "timestamp": self.detection_time.isoformat(),
                "type": self.fault_type,
                "amplitude": self.detected_amplitude,
                "alarm": self.alarm_level,
                "faulty": self.is_faulty,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "FaultStatus":
        d = json.loads(line)
        return cls(d["faulty"], d["type"], d["amplitude"], d["alarm"], datetime.fromisoformat(d["timestamp"]))


def _is_local_max(a: np.ndarray, k: int) -> bool:
    left = a[k - 1] if k > 0 else -np.inf
    right = a[k + 1] if k + 1 < a.size else -np.inf
    return a[k] > left and a[k] >= right


def peak_amplitude_near(spectrum: Spectrum, target: float, tolerance: float = DEFAULT_TOLERANCE) -> tuple[float, float]:
    """Largest local maximum within ``target * (1 +/- tolerance)``.

    Neighbours outside the window still count when deciding whether an edge
    bin is a local maximum. Without any local maximum the largest bin wins,
    ties going to the bin closest to ``target``.
    """
    if not tolerance > 0:
        raise ConfigurationError("tolerance must be positive")
    f = spectrum.frequencies
    a = spectrum.amplitudes
    lo, hi = target * (1 - tolerance), target * (1 + tolerance)
    window = np.flatnonzero((f >= lo) & (f <= hi))
    if window.size == 0:
        raise ConfigurationError(f"no spectral bins within [{lo:.6g}, {hi:.6g}] Hz")
    peaks = [k for k in window if _is_local_max(a, k)]
    if peaks:
        k = max(peaks, key=lambda i: (a[i], -abs(f[i] - target)))
    else:
        k = max(window, key=lambda i: (a[i], -abs(f[i] - target)))
    return float(a[k]), float(f[k])


@dataclass(frozen=True, eq=False)
class EnvelopeView:
    """Squared envelope spectra of a record: raw signal plus each wavelet level."""

    raw: Spectrum
    levels: list[Spectrum]

    def spectra(self, path: str = "combined") -> list[Spectrum]:
        if path == "raw":
            return [self.raw]
        if path == "wavelet":
            return list(self.levels)
        if path == "combined":
            return [self.raw, *self.levels]
        raise ConfigurationError(f"unknown detection path {path!r}; expected one of {PATHS}")


def envelope_view(record: VibrationRecord, meta: Optional[MetaParameters] = None, path: str = "combined") -> EnvelopeView:
    meta = meta or MetaParameters()
    raw = squared_envelope_spectrum(record)
    levels: list[Spectrum] = []
    if path != "raw":
        meta.check_levels(len(record))
        deco = wavelet_decompose(record, meta.mother_wavelet, meta.n_decomp_levels)
        levels = [squared_envelope_spectrum(record.with_samples(d)) for d in deco.levels]
    return EnvelopeView(raw, levels)


def amplitudes_by_spectrum(
    view: EnvelopeView,
    fault_freqs: FaultFrequencies,
    path: str = "combined",
    tolerance: float = DEFAULT_TOLERANCE,
) -> dict[str, list[float]]:
    """Per fault type, the peak amplitude in every spectrum on ``path``."""
    spectra = view.spectra(path)
    return {
        name: [peak_amplitude_near(s, target, tolerance)[0] for s in spectra]
        for name, target in fault_freqs.targets().items()
    }


def fault_amplitudes(
    view: EnvelopeView,
    fault_freqs: FaultFrequencies,
    path: str = "combined",
    tolerance: float = DEFAULT_TOLERANCE,
) -> dict[str, float]:
    """Per fault type, the largest peak amplitude across the chosen spectra."""
    return {k: max(v) for k, v in amplitudes_by_spectrum(view, fault_freqs, path, tolerance).items()}


def baseline_maximum(record: VibrationRecord, meta: Optional[MetaParameters] = None, path: str = "combined") -> float:
    """Maximum envelope-spectrum amplitude of one healthy record on ``path``."""
    return max(s.max_amplitude() for s in envelope_view(record, meta, path).spectra(path))


def steady_state_alarm_level(
    baseline_records: Sequence[VibrationRecord],
    meta: Optional[MetaParameters] = None,
    path: str = "raw",
    factor: Optional[float] = None,
) -> float:
    """``factor`` times the mean over healthy records of the envelope-spectrum maximum.

    ``factor`` defaults to ``meta.alarm_level_fault`` (3 unless overridden).
    """
    if len(baseline_records) == 0:
        raise ConfigurationError("steady-state baseline needs at least one record")
    meta = meta or MetaParameters()
    factor = meta.alarm_level_fault if factor is None else factor
    maxima = [baseline_maximum(r, meta, path) for r in baseline_records]
    level = factor * float(np.mean(maxima))
    if not level > 0:
        raise ConfigurationError("baseline records carry no envelope energy; alarm level would be zero")
    return level


@dataclass(frozen=True)
class AlarmLevels:
    """One steady-state alarm per spectrum: the raw signal and each wavelet level."""

    raw: float
    levels: tuple[float, ...]

    def for_path(self, path: str = "combined") -> list[float]:
        if path == "raw":
            return [self.raw]
        if path == "wavelet":
            return list(self.levels)
        if path == "combined":
            return [self.raw, *self.levels]
        raise ConfigurationError(f"unknown detection path {path!r}; expected one of {PATHS}")

    def scaled(self, k: float) -> "AlarmLevels":
        return AlarmLevels(self.raw * k, tuple(v * k for v in self.levels))


def steady_state_alarm_levels(
    baseline_records: Sequence[VibrationRecord],
    meta: Optional[MetaParameters] = None,
    factor: Optional[float] = None,
) -> AlarmLevels:
    """Per-spectrum version of :func:`steady_state_alarm_level`.

    Each wavelet band has its own noise floor, so each gets its own alarm.
    Bands whose baseline is numerically empty are floored at 1e-9 of the
    largest alarm rather than zero.
    """
    if len(baseline_records) == 0:
        raise ConfigurationError("steady-state baseline needs at least one record")
    meta = meta or MetaParameters()
    factor = meta.alarm_level_fault if factor is None else factor
    maxima = np.array([[s.max_amplitude() for s in envelope_view(r, meta).spectra()] for r in baseline_records])
    alarms = factor * maxima.mean(axis=0)
    top = alarms.max()
    if not top > 0:
        raise ConfigurationError("baseline records carry no envelope energy; alarm level would be zero")
    alarms = np.maximum(alarms, 1e-9 * top)
    return AlarmLevels(float(alarms[0]), tuple(float(a) for a in alarms[1:]))


def decide(amplitudes: dict, alarm_level, timestamp: datetime) -> FaultStatus:
    """Turn per-type amplitudes into a FaultStatus.

    ``amplitudes`` maps fault type to one amplitude, or to a list aligned
    with a list of per-spectrum ``alarm_level`` values. The comparison with
    the largest amplitude/alarm ratio is reported; ties go BPFI < BPFO < BSF.
    """
    alarms = np.atleast_1d(np.asarray(alarm_level, dtype=float))
    if not np.all(alarms > 0):
        raise ConfigurationError("alarm level must be positive")
    best = None
    for order, name in enumerate(FAULT_ORDER):
        amps = np.atleast_1d(np.asarray(amplitudes[name], dtype=float))
        if amps.shape != alarms.shape:
            raise ConfigurationError("one alarm level per searched spectrum is required")
        ratios = amps / alarms
        i = int(np.argmax(ratios))
        key = (ratios[i], -order)
        if best is None or key > best[0]:
            best = (key, name, float(amps[i]), float(alarms[i]))
    _, name, amp, alarm = best
    faulty = amp > alarm
    return FaultStatus(
        is_faulty=faulty,
        fault_type=name if faulty else "none",
        detected_amplitude=amp,
        alarm_level=alarm,
        detection_time=timestamp,
    )


def detect_fault(
    record: VibrationRecord,
    fault_freqs: FaultFrequencies,
    meta: Optional[MetaParameters] = None,
    alarm_level=1.0,
    path: str = "combined",
    tolerance: float = DEFAULT_TOLERANCE,
) -> FaultStatus:
    """Search raw and per-level envelope spectra at BPFI, BPFO and 2*BSF.

    ``alarm_level`` is either one level shared by every spectrum or an
    :class:`AlarmLevels` from :func:`steady_state_alarm_levels`.
    """
    view = envelope_view(record, meta, path)
    if isinstance(alarm_level, AlarmLevels):
        amps = amplitudes_by_spectrum(view, fault_freqs, path, tolerance)
        return decide(amps, alarm_level.for_path(path), record.timestamp)
    if not alarm_level > 0:
        raise ConfigurationError("alarm level must be positive")
    return decide(fault_amplitudes(view, fault_freqs, path, tolerance), alarm_level, record.timestamp)


def first_detection(statuses: Iterable[FaultStatus]) -> Optional[FaultStatus]:
    for status in statuses:
        if status.is_faulty:
            return status
    return None
