"""Plug-in interfaces, run-time registry and the condition analyzer.

Five interfaces make up a pipeline: measurement data, asset data, feature
extraction, fault detection and RUL estimation. Implementations are bound
by name in a :class:`Registry` and resolved per run, so a single interface
can be swapped (another detector, another tribosystem) without touching the
rest. :func:`analyze_condition` runs load -> features -> detection -> RUL,
timing each phase and skipping RUL when no fault is found.
"""

from __future__ import annotations

import importlib
import json
import math
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .core import META_PARAMETER_NAMES, AssetRecord, MetaParameters, VibrationRecord, default_asset
from .degrade import FeatureSeries, GoodnessReport, select_degradation_feature
from .detect import (
    DEFAULT_BASELINE_COUNT,
    DEFAULT_TOLERANCE,
    AlarmLevels,
    FaultStatus,
    detect_fault,
    first_detection,
    steady_state_alarm_levels,
)
from .dsp import FeatureVector, extract_all_features
from .errors import PhaseError, PluginLookupError, RegistrationError, TribokitError
from .io import IMS_SAMPLES, feature_series, read_ims_record, scan_run_directory
from .rul import RULResult, estimate_rul

INTERFACES = ("MeasurementData", "AssetData", "FeatureExtractor", "FaultDetector", "RULalgorithm")
PHASES = ("loadData", "featureExtraction", "faultDetection", "rulEstimation")


# -- interfaces -------------------------------------------------------------


class MeasurementData(ABC):
    @abstractmethod
    def records(self, channel: int = 0) -> list[VibrationRecord]:
        """Time-ordered records of one channel."""


class AssetData(ABC):
    @abstractmethod
    def get_asset_data(self, asset_id: str) -> AssetRecord: ...


class FeatureExtractor(ABC):
    @abstractmethod
    def extract(self, record: VibrationRecord, asset: AssetRecord) -> FeatureVector: ...

    @abstractmethod
    def select_degradation_feature(self, series: Sequence[FeatureSeries], meta: MetaParameters) -> GoodnessReport: ...


class FaultDetector(ABC):
    @abstractmethod
    def calibrate(self, baseline: Sequence[VibrationRecord], asset: AssetRecord) -> Any:
        """Derive and remember the alarm level(s) from healthy records."""

    @abstractmethod
    def detect(self, record: VibrationRecord, asset: AssetRecord) -> FaultStatus: ...


class RULalgorithm(ABC):
    @abstractmethod
    def estimate(self, series: FeatureSeries, meta: MetaParameters, seed: int) -> RULResult: ...


_INTERFACE_TYPES = dict(zip(INTERFACES, (MeasurementData, AssetData, FeatureExtractor, FaultDetector, RULalgorithm)))


# -- registry ---------------------------------------------------------------


@dataclass(frozen=True)
class PluginDescriptor:
    plugin_name: str
    provides: frozenset
    version: str = "1.0"


class Registry:
    """Factories bound by (interface, plug-in name).

    Reads and writes are guarded by one lock, so new plug-ins may be bound
    while analyses resolve existing ones.
    """

    def __init__(self):
        self._factories: dict[tuple[str, str], Callable[..., Any]] = {}
        self._plugins: dict[str, PluginDescriptor] = {}
        self._lock = threading.RLock()

    def register(self, interface_id: str, plugin_name: str, factory: Callable[..., Any]) -> "Registry":
        if interface_id not in INTERFACES:
            raise RegistrationError(f"unknown interface {interface_id!r}; expected one of {INTERFACES}")
        if not callable(factory):
            raise RegistrationError("factory must be callable")
        key = (interface_id, plugin_name)
        with self._lock:
            if key in self._factories:
                raise RegistrationError(f"{plugin_name!r} already bound for {interface_id}")
            self._factories[key] = factory
            old = self._plugins.get(plugin_name)
            provides = (old.provides if old else frozenset()) | {interface_id}
            version = old.version if old else "1.0"
            self._plugins[plugin_name] = PluginDescriptor(plugin_name, frozenset(provides), version)
        return self

    def register_plugin(self, descriptor: PluginDescriptor, factories: dict[str, Callable[..., Any]]) -> "Registry":
        missing = set(descriptor.provides) - set(factories)
        if missing:
            raise RegistrationError(f"descriptor promises {sorted(missing)} without factories")
        for interface_id, factory in factories.items():
            self.register(interface_id, descriptor.plugin_name, factory)
        with self._lock:
            self._plugins[descriptor.plugin_name] = PluginDescriptor(
                descriptor.plugin_name, self._plugins[descriptor.plugin_name].provides, descriptor.version
            )
        return self

    def resolve(self, interface_id: str, plugin_name: str, *args, **kwargs):
        with self._lock:
            factory = self._factories.get((interface_id, plugin_name))
            names = self.names(interface_id)
        if factory is None:
            raise PluginLookupError(
                f"no {interface_id} plug-in named {plugin_name!r}; registered: {', '.join(names) or 'none'}"
            )
        instance = factory(*args, **kwargs)
        expected = _INTERFACE_TYPES[interface_id]
        if not isinstance(instance, expected):
            raise RegistrationError(f"{plugin_name!r} factory returned {type(instance).__name__}, not {expected.__name__}")
        return instance

    def names(self, interface_id: str) -> list[str]:
        with self._lock:
            return sorted(name for (iface, name) in self._factories if iface == interface_id)

    def descriptors(self) -> list[PluginDescriptor]:
        with self._lock:
            return [self._plugins[k] for k in sorted(self._plugins)]

    def is_complete(self, plugins: dict[str, str]) -> bool:
        with self._lock:
            return all((iface, plugins.get(iface, "bearing")) in self._factories for iface in INTERFACES)


def load_plugin(registry: Registry, target: str) -> Registry:
    """Import ``package.module[:function]`` and call it with the registry.

    The function defaults to ``register``. This is how plug-ins living
    outside tribokit are deployed into a running process.
    """
    module_name, _, attr = target.partition(":")
    module = importlib.import_module(module_name)
    hook = getattr(module, attr or "register")
    hook(registry)
    return registry


# -- bearing plug-in --------------------------------------------------------


class RecordListMeasurementData(MeasurementData):
    """Records already in memory, optionally keyed by channel."""

    def __init__(self, records):
        if isinstance(records, dict):
            self._by_channel = {int(k): list(v) for k, v in records.items()}
        else:
            self._by_channel = {0: list(records)}

    def records(self, channel: int = 0) -> list[VibrationRecord]:
        if channel not in self._by_channel:
            raise TribokitError(f"channel {channel} not available; have {sorted(self._by_channel)}")
        return sorted(self._by_channel[channel], key=lambda r: r.timestamp)


class DirectoryMeasurementData(MeasurementData):
    """IMS-layout run directory read from disk on every call."""

    def __init__(self, path, expected_samples: Optional[int] = IMS_SAMPLES):
        self.path = Path(path)
        self.expected_samples = expected_samples

    def records(self, channel: int = 0) -> list[VibrationRecord]:
        run = scan_run_directory(self.path)
        out = []
        for ref in run.records:
            channels = read_ims_record(ref, expected_samples=self.expected_samples)
            if channel >= len(channels):
                raise TribokitError(f"{ref.name} has {len(channels)} channels; channel {channel} requested")
            out.append(channels[channel])
        return out


def measurement_source(source) -> MeasurementData:
    if isinstance(source, MeasurementData):
        return source
    if isinstance(source, (str, Path)):
        return DirectoryMeasurementData(source)
    return RecordListMeasurementData(source)


class BearingAssetData(AssetData):
    def __init__(self, assets: Optional[Sequence[AssetRecord]] = None):
        assets = list(assets) if assets is not None else [default_asset()]
        self._assets = {a.asset_id: a for a in assets}

    def get_asset_data(self, asset_id: str) -> AssetRecord:
        try:
            return self._assets[asset_id]
        except KeyError:
            raise TribokitError(f"unknown asset {asset_id!r}; known: {sorted(self._assets)}") from None


class BearingFeatureExtractor(FeatureExtractor):
    """Features 1-10; 9 and 10 at the strongest of BPFI, BPFO and 2*BSF."""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, window: int = 20, step_hours: Optional[float] = 10 / 60):
        self.tolerance = tolerance
        self.window = window
        self.step_hours = step_hours

    def extract(self, record, asset):
        targets = list(asset.fault_frequencies.targets().values())
        return extract_all_features(record, targets, asset.meta, self.tolerance)

    def select_degradation_feature(self, series, meta):
        # the exponential model needs a strictly positive indicator
        positive = [s for s in series if np.all(s.values > 0)]
        report = select_degradation_feature(positive, meta, self.window, self.step_hours)
        for s in series:
            if s.feature_id not in {p.feature_id for p in positive}:
                report.excluded[s.feature_id] = "nonpositive values"
        return report


class BearingFaultDetector(FaultDetector):
    """Raw and per-level squared envelope spectra, each against its own steady-state alarm."""

    def __init__(self, path: str = "combined", tolerance: float = DEFAULT_TOLERANCE, alarm_levels: Optional[AlarmLevels] = None):
        self.path = path
        self.tolerance = tolerance
        self.alarm_levels = alarm_levels

    def calibrate(self, baseline, asset):
        self.alarm_levels = steady_state_alarm_levels(baseline, asset.meta)
        return self.alarm_levels

    def detect(self, record, asset):
        if self.alarm_levels is None:
            raise TribokitError("detector not calibrated")
        return detect_fault(record, asset.fault_frequencies, asset.meta, self.alarm_levels, self.path, self.tolerance)


class MetropolisRUL(RULalgorithm):
    def estimate(self, series, meta, seed):
        return estimate_rul(series, meta, seed)


def bearing_plugin_factories(assets: Optional[Sequence[AssetRecord]] = None) -> dict[str, Callable[..., Any]]:
    return {
        "MeasurementData": measurement_source,
        "AssetData": lambda: BearingAssetData(assets),
        "FeatureExtractor": BearingFeatureExtractor,
        "FaultDetector": BearingFaultDetector,
        "RULalgorithm": MetropolisRUL,
    }


def default_registry(assets: Optional[Sequence[AssetRecord]] = None) -> Registry:
    registry = Registry()
    registry.register_plugin(PluginDescriptor("bearing", frozenset(INTERFACES), "1.0"), bearing_plugin_factories(assets))
    return registry


# -- condition analyzer -----------------------------------------------------


@dataclass
class PhaseTimings:
    load_data: float = 0.0
    feature_extraction: float = 0.0
    fault_detection: float = 0.0
    rul_estimation: Optional[float] = None
    rul_skipped: bool = True
    total: float = 0.0

    def as_dict(self) -> dict:
        """Phase durations in seconds; ``rulEstimation`` is omitted when skipped."""
        doc = {
            "loadData": self.load_data,
            "featureExtraction": self.feature_extraction,
            "faultDetection": self.fault_detection,
            "rulSkipped": self.rul_skipped,
            "total": self.total,
        }
        if not self.rul_skipped:
            doc["rulEstimation"] = self.rul_estimation
        return doc


def _alarm_doc(alarms) -> Any:
    if isinstance(alarms, AlarmLevels):
        return {"raw": alarms.raw, "wavelet": list(alarms.levels)}
    return alarms


@dataclass
class AnalysisOutcome:
    asset_id: str
    fault_status: FaultStatus
    timings: PhaseTimings
    alarm_levels: Any
    seed: int
    rul: Optional[RULResult] = None
    goodness: Optional[GoodnessReport] = None
    statuses: list[FaultStatus] = field(default_factory=list)
    features: list[FeatureVector] = field(default_factory=list)
    baseline_count: int = 0

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {
            "asset_id": self.asset_id,
            "seed": self.seed,
            "records": len(self.features),
            "baseline_count": self.baseline_count,
            "alarm_levels": _alarm_doc(self.alarm_levels),
            "fault_status": json.loads(self.fault_status.to_line()),
            "rul_skipped": self.rul is None,
        }
        if self.goodness is not None:
            doc["goodness"] = {
                "selected_feature_id": self.goodness.selected_feature_id,
                "weights": list(self.goodness.weights),
                "scores": {str(k): v for k, v in self.goodness.scores.items()},
                "excluded": {str(k): v for k, v in self.goodness.excluded.items()},
            }
        if self.rul is not None:
            doc["rul"] = self.rul.to_dict()
        if include_timings:
            doc["timings"] = self.timings.as_dict()
        return doc

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True)


class ConditionAnalyzer:
    """Runs one asset through load, features, detection and RUL using resolved plug-ins."""

    def __init__(self, registry: Registry, plugins: Optional[dict[str, str]] = None):
        self.registry = registry
        self.plugins = {iface: "bearing" for iface in INTERFACES}
        self.plugins.update(plugins or {})

    def _resolve(self, interface_id, *args):
        return self.registry.resolve(interface_id, self.plugins[interface_id], *args)

    def analyze(
        self,
        asset_id: str,
        source,
        meta: Optional[MetaParameters] = None,
        seed: int = 0,
        baseline_count: int = DEFAULT_BASELINE_COUNT,
    ) -> AnalysisOutcome:
        timings = PhaseTimings()
        clock = time.perf_counter
        started = clock()

        def run(phase, attr, fn):
            t = clock()
            try:
                result = fn()
            except Exception as exc:
                setattr(timings, attr, clock() - t)
                timings.total = clock() - started
                raise PhaseError(phase, exc, timings) from exc
            setattr(timings, attr, clock() - t)
            return result

        def load():
            asset = self._resolve("AssetData").get_asset_data(asset_id)
            if meta is not None:
                asset = AssetRecord(asset.asset_id, asset.geometry, asset.shaft_rate, meta, asset.channel)
            records = self._resolve("MeasurementData", source).records(asset.channel)
            if not records:
                raise TribokitError("measurement source yielded no records")
            return asset, records

        asset, records = run("loadData", "load_data", load)

        extractor = self._resolve("FeatureExtractor")
        features = run("featureExtraction", "feature_extraction", lambda: [extractor.extract(r, asset) for r in records])

        def detection():
            detector = self._resolve("FaultDetector")
            b = max(1, min(baseline_count, len(records)))
            alarm = detector.calibrate(records[:b], asset)
            monitored = records[b:] or records[-1:]
            statuses = []
            for r in monitored:
                status = detector.detect(r, asset)
                statuses.append(status)
                if status.is_faulty:
                    break
            return alarm, b, statuses

        alarm, b, statuses = run("faultDetection", "fault_detection", detection)
        status = first_detection(statuses) or statuses[-1]

        rul = goodness = None
        if status.is_faulty:
            def estimation():
                series = feature_series(features)
                report = extractor.select_degradation_feature(series, asset.meta)
                chosen = next(s for s in series if s.feature_id == report.selected_feature_id)
                return report, self._resolve("RULalgorithm").estimate(chosen, asset.meta, seed)

            timings.rul_skipped = False
            goodness, rul = run("rulEstimation", "rul_estimation", estimation)

        timings.total = clock() - started
        return AnalysisOutcome(asset.asset_id, status, timings, alarm, seed, rul, goodness, statuses, features, b)


def analyze_condition(
    asset_id: str,
    registry: Registry,
    source,
    meta: Optional[MetaParameters] = None,
    seed: int = 0,
    baseline_count: int = DEFAULT_BASELINE_COUNT,
    plugins: Optional[dict[str, str]] = None,
) -> AnalysisOutcome:
    return ConditionAnalyzer(registry, plugins).analyze(asset_id, source, meta, seed, baseline_count)


# -- performance statistics -------------------------------------------------


@dataclass
class TimingStats:
    runs: int
    mean: dict[str, float]
    std: dict[str, float]
    counts: dict[str, int]

    def rows(self) -> list[tuple[str, float, float, int]]:
        return [(p, self.mean[p], self.std[p], self.counts[p]) for p in PHASES]

    def to_table(self) -> str:
        lines = ["phase\tmean_s\tstd_s\tn"]
        for phase, m, s, n in self.rows():
            lines.append(f"{phase}\t{m!r}\t{s!r}\t{n}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        width = 18
        head = f"{self.runs} RUNS / FUNCTION".ljust(12 + width * 4)
        cols = "".join(p.rjust(width) for p in PHASES)
        mean = "".join(_cell(self.mean[p], width) for p in PHASES)
        std = "".join(_cell(self.std[p], width) for p in PHASES)
        return f"{head}\n{'':12}{cols}\n{'Mean [s]':12}{mean}\n{'Std [s]':12}{std}\n"


def _cell(value: float, width: int) -> str:
    return ("skipped" if math.isnan(value) else f"{value:.4f}").rjust(width)


def timing_stats(all_timings: Sequence[PhaseTimings]) -> TimingStats:
    """Per-phase mean and sample std; RUL statistics cover only runs that estimated RUL."""
    mean, std, counts = {}, {}, {}
    for phase in PHASES:
        values = [t.as_dict().get(phase) for t in all_timings]
        values = [v for v in values if v is not None]
        counts[phase] = len(values)
        mean[phase] = float(np.mean(values)) if values else math.nan
        std[phase] = float(np.std(values, ddof=1)) if len(values) > 1 else (0.0 if values else math.nan)
    return TimingStats(len(all_timings), mean, std, counts)


# -- configuration complexity -----------------------------------------------


@dataclass
class AuditEntry:
    name: str
    value: Any
    is_default: bool


@dataclass
class ConfigAudit:
    entries: list[AuditEntry]

    @property
    def count(self) -> int:
        return len(self.entries)

    def to_text(self) -> str:
        lines = ["parameter\tvalue\tdefault"]
        for e in self.entries:
            lines.append(f"{e.name}\t{e.value}\t{'yes' if e.is_default else 'no'}")
        lines.append(f"total\t{self.count}\t")
        return "\n".join(lines) + "\n"


def config_audit(meta: Optional[MetaParameters] = None) -> ConfigAudit:
    meta = meta or MetaParameters()
    changed = meta.non_default()
    entries = []
    for attr, name in META_PARAMETER_NAMES.items():
        value = getattr(meta, attr)
        if attr == "rul_model_parameters" and value is None:
            value = "derived at run time from least squares"
        elif isinstance(value, tuple):
            value = ", ".join(f"{v:.6g}" for v in value)
        entries.append(AuditEntry(name, value, attr not in changed))
    return ConfigAudit(entries)
