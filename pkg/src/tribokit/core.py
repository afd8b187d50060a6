"""Domain types and rolling-bearing kinematics."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True)
class BearingGeometry:
    """Rolling-element bearing dimensions (millimetres, degrees)."""

    roller_count: int
    roller_diameter: float
    pitch_diameter: float
    contact_angle: float = 0.0

    def __post_init__(self):
        if int(self.roller_count) != self.roller_count or self.roller_count < 1:
            raise InvalidInputError(f"roller_count must be a positive integer, got {self.roller_count}")
        if not self.roller_diameter > 0:
            raise InvalidInputError("roller_diameter must be > 0")
        if not self.pitch_diameter > self.roller_diameter:
            raise InvalidInputError("pitch_diameter must exceed roller_diameter")
        if not 0 <= self.contact_angle < 90:
            raise InvalidInputError("contact_angle must lie in [0, 90) degrees")

    @property
    def diameter_ratio(self) -> float:
        """(d/D)·cos(phi), the quantity every defect frequency depends on."""
        return self.roller_diameter / self.pitch_diameter * math.cos(math.radians(self.contact_angle))


# Rexnord ZA-2115 double-row bearing used in the IMS run-to-failure rig.
ZA_2115 = BearingGeometry(roller_count=16, roller_diameter=8.4, pitch_diameter=71.5, contact_angle=15.17)
IMS_SHAFT_RATE = 2000.0 / 60.0
IMS_SAMPLING_RATE = 20480.0


@dataclass(frozen=True)
class FaultFrequencies:
    bpfi: float
    bpfo: float
    bsf: float
    ftf: float
    shaft_rate: float

    def targets(self) -> dict[str, float]:
        """Detection targets; a roller defect strikes both races, hence 2*BSF."""
        return {"BPFI": self.bpfi, "BPFO": self.bpfo, "BSF": 2.0 * self.bsf}


def compute_fault_frequencies(geometry: BearingGeometry, shaft_rate: float) -> FaultFrequencies:
    if not shaft_rate > 0:
        raise InvalidInputError(f"shaft_rate must be > 0, got {shaft_rate}")
    n = geometry.roller_count
    ratio = geometry.diameter_ratio
    half_pass = 0.5 * n * shaft_rate
    bpfo = half_pass * (1.0 - ratio)
    # n*fr - bpfo keeps bpfi + bpfo == n*fr up to one rounding
    bpfi = n * shaft_rate - bpfo
    bsf = geometry.pitch_diameter / (2.0 * geometry.roller_diameter) * shaft_rate * (1.0 - ratio**2)
    ftf = 0.5 * shaft_rate * (1.0 - ratio)
    return FaultFrequencies(bpfi=bpfi, bpfo=bpfo, bsf=bsf, ftf=ftf, shaft_rate=shaft_rate)


def _utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True, eq=False)
class VibrationRecord:
    """One fixed-rate acceleration snapshot (g)."""

    timestamp: datetime
    sampling_rate: float
    samples: np.ndarray
    channel_id: str = "0"

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("samples must be a nonempty 1-D sequence")
        if not self.sampling_rate > 0:
            raise InvalidInputError("sampling_rate must be > 0")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "timestamp", _utc(self.timestamp))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sampling_rate

    def with_samples(self, samples) -> "VibrationRecord":
        return replace(self, samples=samples)


# Published camelCase names of the seven knobs, in the order they are audited.
META_PARAMETER_NAMES = {
    "alarm_level_fault": "alarmLevelFault",
    "mother_wavelet": "motherWavelet",
    "n_decomp_levels": "nOfDecompLevels",
    "deg_param_weights": "degParamWeights",
    "alarm_level_rul": "alarmLevelRUL",
    "rul_model_parameters": "RULmodelParameters",
    "n_simulations": "nOfSimulations",
}


@dataclass(frozen=True)
class MetaParameters:
    """User-facing configuration of the bearing plug-in.

    ``alarm_level_fault`` multiplies the steady-state envelope baseline to
    give the detection alarm. ``rul_model_parameters`` is an optional prior
    ``(c, b, sigma2)``; when absent it is fitted by least squares at run time.
    """

    alarm_level_fault: float = 3.0
    mother_wavelet: str = "bior6.8"
    n_decomp_levels: int = 12
    deg_param_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    alarm_level_rul: float = 3.5
    rul_model_parameters: Optional[tuple[float, float, float]] = None
    n_simulations: int = 10000

    def __post_init__(self):
        if not self.alarm_level_fault > 0:
            raise ConfigurationError("alarmLevelFault must be positive")
        if not self.alarm_level_rul > 0:
            raise ConfigurationError("alarmLevelRUL must be positive")
        if int(self.n_decomp_levels) != self.n_decomp_levels or self.n_decomp_levels < 1:
            raise ConfigurationError("nOfDecompLevels must be an integer >= 1")
        if int(self.n_simulations) != self.n_simulations or self.n_simulations < 1:
            raise ConfigurationError("nOfSimulations must be an integer >= 1")
        w = tuple(float(v) for v in self.deg_param_weights)
        if len(w) != 3 or any(v < 0 or not math.isfinite(v) for v in w) or sum(w) == 0:
            raise ConfigurationError("degParamWeights must be three nonnegative reals, not all zero")
        total = sum(w)
        object.__setattr__(self, "deg_param_weights", tuple(v / total for v in w))
        if self.rul_model_parameters is not None:
            p = tuple(float(v) for v in self.rul_model_parameters)
            if len(p) != 3 or p[0] <= 0 or p[2] <= 0:
                raise ConfigurationError("RULmodelParameters must be (c > 0, b, sigma2 > 0)")
            object.__setattr__(self, "rul_model_parameters", p)

    def check_levels(self, sample_count: int) -> None:
        limit = int(math.floor(math.log2(sample_count))) if sample_count >= 1 else 0
        if self.n_decomp_levels > limit:
            raise ConfigurationError(
                f"nOfDecompLevels={self.n_decomp_levels} exceeds floor(log2({sample_count}))={limit}"
            )

    def non_default(self) -> set[str]:
        default = MetaParameters()
        return {f.name for f in fields(self) if getattr(self, f.name) != getattr(default, f.name)}


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    geometry: BearingGeometry
    shaft_rate: float
    meta: MetaParameters = field(default_factory=MetaParameters)
    channel: int = 0

    def __post_init__(self):
        if not self.shaft_rate > 0:
            raise InvalidInputError("shaft_rate must be > 0")

    @property
    def fault_frequencies(self) -> FaultFrequencies:
        return compute_fault_frequencies(self.geometry, self.shaft_rate)


# -- configuration files ----------------------------------------------------
#
# INI layout, one [asset] section and an optional [meta] section:
#
#   [asset]
#   asset_id = ims-2-bearing-1
#   roller_count = 16
#   roller_diameter_mm = 8.4
#   pitch_diameter_mm = 71.5
#   contact_angle_deg = 15.17
#   shaft_rate_hz = 33.333
#   channel = 0
#
#   [meta]
#   alarmLevelFault = 3.0
#   motherWavelet = bior6.8
#   nOfDecompLevels = 12
#   degParamWeights = 1, 1, 1
#   alarmLevelRUL = 3.5
#   RULmodelParameters = 1.0, 0.02, 0.01   ; omit to fit at run time
#   nOfSimulations = 10000


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"configuration file not found: {path}")
    parser.read(path)
    return parser


def meta_from_mapping(section) -> MetaParameters:
    known = {v: k for k, v in META_PARAMETER_NAMES.items()}
    kwargs = {}
    for key, raw in section.items():
        name = known.get(key, key)
        if name not in META_PARAMETER_NAMES:
            raise ConfigurationError(f"unknown meta-parameter {key!r}")
        raw = str(raw).strip()
        try:
            if name in ("alarm_level_fault", "alarm_level_rul"):
                kwargs[name] = float(raw)
            elif name in ("n_decomp_levels", "n_simulations"):
                kwargs[name] = int(raw)
            elif name == "mother_wavelet":
                kwargs[name] = raw
            elif name == "deg_param_weights":
                kwargs[name] = _floats(raw)
            elif name == "rul_model_parameters":
                kwargs[name] = _floats(raw) if raw and raw.lower() != "none" else None
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    return MetaParameters(**kwargs)


def load_meta(path) -> MetaParameters:
    parser = _read_ini(path)
    if not parser.has_section("meta"):
        raise ConfigurationError(f"{path}: missing [meta] section")
    return meta_from_mapping(parser["meta"])


def load_asset(path, meta: Optional[MetaParameters] = None) -> AssetRecord:
    parser = _read_ini(path)
    if not parser.has_section("asset"):
        raise ConfigurationError(f"{path}: missing [asset] section")
    sec = parser["asset"]
    try:
        geometry = BearingGeometry(
            roller_count=int(sec["roller_count"]),
            roller_diameter=float(sec["roller_diameter_mm"]),
            pitch_diameter=float(sec["pitch_diameter_mm"]),
            contact_angle=float(sec.get("contact_angle_deg", "0")),
        )
        shaft_rate = float(sec["shaft_rate_hz"])
        channel = int(sec.get("channel", "0"))
    except KeyError as exc:
        raise ConfigurationError(f"{path}: missing asset key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if meta is None:
        meta = meta_from_mapping(parser["meta"]) if parser.has_section("meta") else MetaParameters()
    return AssetRecord(
        asset_id=sec.get("asset_id", Path(path).stem),
        geometry=geometry,
        shaft_rate=shaft_rate,
        meta=meta,
        channel=channel,
    )


def default_asset(asset_id: str = "ims-za2115", meta: Optional[MetaParameters] = None) -> AssetRecord:
    return AssetRecord(asset_id, ZA_2115, IMS_SHAFT_RATE, meta or MetaParameters())
