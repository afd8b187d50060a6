"""Signal builders shared by the test modules."""

from datetime import datetime, timedelta, timezone

import numpy as np
from scipy.signal import butter, sosfiltfilt

from tribokit.core import VibrationRecord

FS = 20480.0
T0 = datetime(2004, 2, 12, tzinfo=timezone.utc)


def record(samples, fs=FS, ts=T0, channel="0"):
    return VibrationRecord(ts, fs, np.asarray(samples, dtype=float), channel)


def tone(freq, amplitude=1.0, n=20480, fs=FS, phase=0.0):
    t = np.arange(n) / fs
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


def am_signal(carrier, modulation, depth=0.5, n=20480, fs=FS):
    t = np.arange(n) / fs
    return (1 + depth * np.cos(2 * np.pi * modulation * t)) * np.sin(2 * np.pi * carrier * t)


def lowpass_noise(rng, n, cutoff, std, fs=FS):
    """Gaussian noise confined below ``cutoff`` Hz, rescaled to ``std``."""
    sos = butter(8, cutoff, fs=fs, output="sos")
    x = sosfiltfilt(sos, rng.standard_normal(n))
    return std * x / x.std()


def hours(n, step=1.0):
    return np.arange(n) * step


def timestamps(n, minutes=10):
    return [T0 + k * timedelta(minutes=minutes) for k in range(n)]
