"""Run-to-failure data ingestion, synthetic fault signals and feature tables.

IMS bearing files are whitespace-delimited ASCII, one row per sample and
one column per accelerometer channel, named after their acquisition time
(``2004.02.12.10.32.39``). Dataset 1 has 8 columns, datasets 2 and 3 have 4.
"""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import IMS_SAMPLING_RATE, VibrationRecord
from .dsp import FEATURE_NAMES, FeatureVector
from .errors import IngestionError, ParseError, SchemaError, TimestampError

IMS_SAMPLES = 20480
_STAMP = re.compile(r"^(\d{4})\.(\d{2})\.(\d{2})\.(\d{2})\.(\d{2})\.(\d{2})$")
STAMP_FORMAT = "%Y.%m.%d.%H.%M.%S"


def parse_timestamp(name: str) -> datetime:
    m = _STAMP.match(name)
    if not m:
        raise TimestampError(f"file name {name!r} is not year.month.day.hour.minute.second")
    try:
        return datetime(*(int(g) for g in m.groups()), tzinfo=timezone.utc)
    except ValueError as exc:
        raise TimestampError(f"file name {name!r}: {exc}") from exc


def _parse_rows(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ParseError(f"non-numeric value in row: {line.strip()!r}", path, lineno) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"expected {width} columns, found {len(values)}", path, lineno)
            rows.append(values)
    if not rows:
        raise ParseError("file is empty", path)
    return np.array(rows)


def read_ims_record(
    path,
    sampling_rate: float = IMS_SAMPLING_RATE,
    expected_samples: Optional[int] = IMS_SAMPLES,
) -> list[VibrationRecord]:
    """One VibrationRecord per column of an IMS file, channel ids ``"0"``, ``"1"``, ..."""
    path = Path(path)
    timestamp = parse_timestamp(path.name)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty files are reported below
            data = np.loadtxt(path, ndmin=2)
    except (ValueError, IndexError):
        data = _parse_rows(path)  # re-parse to locate the offending line
    if data.size == 0:
        raise ParseError("file is empty", path)
    if expected_samples is not None and data.shape[0] != expected_samples:
        raise ParseError(
            f"expected {expected_samples} rows, found {data.shape[0]}", path, data.shape[0] + 1
        )
    return [
        VibrationRecord(timestamp, sampling_rate, data[:, ch], channel_id=str(ch))
        for ch in range(data.shape[1])
    ]


@dataclass
class RunDirectory:
    path: Path
    records: list[Path]
    channels_per_file: int
    samples_per_file: int
    timestamps: list[datetime] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def hours_since_start(self) -> np.ndarray:
        t0 = self.timestamps[0]
        return np.array([(ts - t0).total_seconds() / 3600.0 for ts in self.timestamps])


def scan_run_directory(path) -> RunDirectory:
    """Find every timestamp-named file, sorted by acquisition time.

    Channel and sample counts are read from the first file's shape.
    """
    path = Path(path)
    if not path.is_dir():
        raise IngestionError(f"run directory not found: {path}")
    found = []
    for p in path.iterdir():
        if p.is_file() and _STAMP.match(p.name):
            found.append((parse_timestamp(p.name), p))
    if not found:
        raise IngestionError(f"no IMS record files in {path}")
    found.sort()
    first = found[0][1]
    with open(first) as fh:
        lines = [ln for ln in fh if ln.strip()]
    channels = len(lines[0].split()) if lines else 0
    return RunDirectory(path, [p for _, p in found], channels, len(lines), [ts for ts, _ in found])


def write_ims_record(directory, records: Sequence[VibrationRecord], fmt: str = "%.9e") -> Path:
    """Write same-timestamp channels as one IMS-style file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ts = records[0].timestamp
    out = directory / ts.strftime(STAMP_FORMAT)
    data = np.column_stack([r.samples for r in records])
    np.savetxt(out, data, fmt=fmt, delimiter="\t")
    return out


# -- synthetic bearing-fault signals ----------------------------------------


@dataclass(frozen=True)
class SyntheticFaultSpec:
    """Periodic impacts exciting a decaying resonance, plus Gaussian noise."""

    fault_frequency: float = 236.0
    resonance_frequency: float = 4000.0
    impulse_decay: float = 800.0
    noise_std: float = 0.0
    slip: float = 0.0
    duration_seconds: float = 1.0
    sampling_rate: float = IMS_SAMPLING_RATE
    seed: int = 0
    amplitude: float = 1.0
    timestamp: datetime = datetime(2004, 2, 12, tzinfo=timezone.utc)
    channel_id: str = "0"

    def __post_init__(self):
        nyquist = self.sampling_rate / 2
        if not 0 < self.fault_frequency < nyquist:
            raise ValueError("fault_frequency must lie in (0, samplingRate/2)")
        if not 0 < self.resonance_frequency < nyquist:
            raise ValueError("resonance_frequency must lie in (0, samplingRate/2)")
        if self.impulse_decay <= 0 or self.noise_std < 0 or not 0 <= self.slip < 1:
            raise ValueError("impulse_decay must be > 0, noise_std >= 0, slip in [0, 1)")


def impact_response(spec: SyntheticFaultSpec, rng: np.random.Generator) -> np.ndarray:
    fs = spec.sampling_rate
    n = int(round(spec.duration_seconds * fs))
    out = np.zeros(n)
    period = 1.0 / spec.fault_frequency
    count = int(math.ceil(spec.duration_seconds / period)) + 1
    jitter = 1.0 + spec.slip * rng.uniform(-1.0, 1.0, count)
    arrivals = np.cumsum(period * jitter) - period * jitter[0]
    ring = int(math.ceil(12.0 / spec.impulse_decay * fs))  # e^-12 of the peak
    w = 2 * np.pi * spec.resonance_frequency
    for t_k in arrivals:
        first = int(math.ceil(t_k * fs))
        if first >= n:
            break
        idx = np.arange(first, min(first + ring, n))
        tau = idx / fs - t_k
        out[idx] += np.exp(-spec.impulse_decay * tau) * np.sin(w * tau)
    return spec.amplitude * out


def synthesize_fault_signal(spec: SyntheticFaultSpec) -> VibrationRecord:
    """Deterministic for a given ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    signal = impact_response(spec, rng)
    if spec.noise_std > 0:
        signal = signal + rng.normal(0.0, spec.noise_std, signal.size)
    return VibrationRecord(spec.timestamp, spec.sampling_rate, signal, spec.channel_id)


def synthesize_run(
    n_records: int,
    fault_onset: Optional[int] = None,
    base: SyntheticFaultSpec = SyntheticFaultSpec(noise_std=0.1),
    onset_amplitude: float = 0.5,
    growth: float = 0.0,
    interval: timedelta = timedelta(minutes=10),
    seed: int = 0,
) -> list[VibrationRecord]:
    """A healthy-then-faulty run; records from ``fault_onset`` (0-based) on carry impacts.

    Impact amplitude starts at ``onset_amplitude`` and grows by
    ``exp(growth * k)`` ``k`` records after onset. Each record gets its own
    noise seed derived from ``seed``.
    """
    records = []
    seeds = np.random.SeedSequence(seed).generate_state(n_records)
    for k in range(n_records):
        faulty = fault_onset is not None and k >= fault_onset
        amp = onset_amplitude * math.exp(growth * (k - fault_onset)) if faulty else 0.0
        spec = replace(base, amplitude=amp, seed=int(seeds[k]), timestamp=base.timestamp + k * interval)
        records.append(synthesize_fault_signal(spec))
    return records


# -- feature tables ---------------------------------------------------------

FEATURE_HEADER = ["timestamp", *(FEATURE_NAMES[i] for i in sorted(FEATURE_NAMES))]


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_feature_table(vectors: Sequence[FeatureVector], path) -> Path:
    if not vectors:
        raise SchemaError("refusing to write an empty feature table")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(FEATURE_HEADER)
        for v in vectors:
            writer.writerow([v.timestamp.isoformat(), *(_fmt(x) for x in v.as_row())])
    return path


def read_feature_table(path) -> list[FeatureVector]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows:
        raise SchemaError(f"{path}: empty feature table")
    header = rows[0]
    for i, expected in enumerate(FEATURE_HEADER):
        got = header[i] if i < len(header) else "<missing>"
        if got != expected:
            raise SchemaError(f"{path}: column {i + 1} is {got!r}, expected {expected!r}")
    if len(header) != len(FEATURE_HEADER):
        raise SchemaError(f"{path}: unexpected extra column {header[len(FEATURE_HEADER)]!r}")
    ids = sorted(FEATURE_NAMES)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(FEATURE_HEADER):
            raise SchemaError(f"{path}:{lineno}: expected {len(FEATURE_HEADER)} fields, found {len(row)}")
        try:
            ts = datetime.fromisoformat(row[0])
            values = {i: float(x) for i, x in zip(ids, row[1:])}
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from exc
        out.append(FeatureVector(ts, values))
    return out


def feature_series(vectors: Sequence[FeatureVector], ids: Iterable[int] = FEATURE_NAMES):
    """Split feature vectors into one FeatureSeries per id, hours since the first vector."""
    from .degrade import FeatureSeries

    t0 = vectors[0].timestamp
    hours = np.array([(v.timestamp - t0).total_seconds() / 3600.0 for v in vectors])
    return [FeatureSeries(i, hours, [v.values[i] for v in vectors], start=t0) for i in ids]
