"""Degradation-feature preparation and selection.

A candidate feature is resampled to a uniform time grid, smoothed to a
trend, and scored by correlation with time, monotonicity of the trend and
robustness to the residual. The score is their weighted sum and the
highest-scoring candidate is the degradation indicator handed to RUL
estimation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from .core import MetaParameters
from .errors import ConfigurationError, InvalidInputError, SelectionError

DEFAULT_WINDOW = 20
DEFAULT_STEP_HOURS = 10.0 / 60.0
ROBUSTNESS_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureSeries:
    """A feature sampled over machine life; ``times`` in hours since ``start``."""

    feature_id: int
    times: np.ndarray
    values: np.ndarray
    start: Optional[datetime] = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise InvalidInputError("times and values must be 1-D and of equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise InvalidInputError("times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def with_values(self, values, times=None) -> "FeatureSeries":
        return FeatureSeries(self.feature_id, self.times if times is None else times, values, self.start)


def smooth_feature(series: FeatureSeries, window: int = DEFAULT_WINDOW) -> FeatureSeries:
    """Centred moving average that keeps straight lines straight.

    Odd windows average ``window`` points; even windows use the classical
    2xN centred form (``window + 1`` taps, half weight on both ends). Near
    the edges the window shrinks symmetrically to the points available.
    """
    if window < 1:
        raise ConfigurationError("smoothing window must be >= 1")
    k = len(series)
    if window > k:
        raise ConfigurationError(f"smoothing window {window} exceeds series length {k}")
    x = series.values
    if window == 1:
        return series.with_values(x.copy())
    half = window // 2
    out = np.empty(k)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    for i in range(k):
        h = min(half, i, k - 1 - i)
        if window % 2 == 0 and h == half:
            inner = csum[i + h] - csum[i - h + 1]
            out[i] = (inner + 0.5 * (x[i - h] + x[i + h])) / window
        else:
            out[i] = (csum[i + h + 1] - csum[i - h]) / (2 * h + 1)
    return series.with_values(out)


def resample_uniform(series: FeatureSeries, step_hours: float = DEFAULT_STEP_HOURS) -> FeatureSeries:
    if not step_hours > 0:
        raise ConfigurationError("resampling step must be positive")
    if len(series) < 2:
        raise InvalidInputError("cannot resample a series with fewer than 2 points")
    t0, t1 = series.times[0], series.times[-1]
    count = int(math.floor((t1 - t0) / step_hours + 1e-9)) + 1
    grid = t0 + step_hours * np.arange(count)
    return series.with_values(np.interp(grid, series.times, series.values), times=grid)


def goodness_metrics(series: FeatureSeries, window: int = DEFAULT_WINDOW) -> tuple[float, float, float]:
    """(correlation, monotonicity, robustness), each in [0, 1]."""
    k = len(series)
    if k < 3:
        raise InvalidInputError("goodness metrics need at least 3 points")
    x = series.values
    trend = smooth_feature(series, window).values
    t = series.times

    if np.ptp(trend) == 0:
        corr = 0.0
    else:
        # Pearson is scale free; rescaling first avoids underflow on tiny spreads
        centred = trend - trend.min()
        corr = float(abs(np.corrcoef(centred / centred.max(), t)[0, 1]))
        corr = min(corr, 1.0)

    d = np.diff(trend)
    # increments at round-off scale are flat, not rises or falls
    d[np.abs(d) <= 16 * np.finfo(float).eps * np.abs(trend).max()] = 0.0
    mon = abs(int(np.sum(d > 0)) - int(np.sum(d < 0))) / (k - 1)

    resid = x - trend
    rob = float(np.mean(np.exp(-np.abs(resid) / (np.abs(x) + ROBUSTNESS_GUARD))))
    return corr, float(mon), rob


def goodness_score(metrics: Sequence[float], weights: Sequence[float]) -> float:
    return float(sum(w * m for w, m in zip(weights, metrics)))


@dataclass
class GoodnessReport:
    metrics: dict[int, tuple[float, float, float]]
    scores: dict[int, float]
    selected_feature_id: int
    weights: tuple[float, float, float]
    excluded: dict[int, str] = field(default_factory=dict)

    def to_table(self) -> str:
        """Delimited table, one column per feature id, rows corr/mon/rob/J."""
        ids = sorted(self.scores)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", *ids])
        for row, idx in (("corr", 0), ("mon", 1), ("rob", 2)):
            writer.writerow([row, *(repr(self.metrics[i][idx]) for i in ids)])
        writer.writerow(["J", *(repr(self.scores[i]) for i in ids)])
        writer.writerow(["selected", self.selected_feature_id])
        return buf.getvalue()


def min_max_scaled(series: FeatureSeries) -> FeatureSeries:
    """Optional pre-scaling; robustness is not translation invariant."""
    v = series.values
    span = np.ptp(v)
    return series.with_values((v - v.min()) / span if span > 0 else np.zeros_like(v))


def select_degradation_feature(
    candidates: Sequence[FeatureSeries],
    meta: Optional[MetaParameters] = None,
    window: int = DEFAULT_WINDOW,
    step_hours: Optional[float] = DEFAULT_STEP_HOURS,
    scale: bool = False,
) -> GoodnessReport:
    """Score every candidate and pick the best; ties go to the lowest id.

    Candidates that cannot be scored (too short, non-finite) are listed in
    ``excluded``. Series shorter than ``window`` are smoothed with a window
    equal to their length.
    """
    if not candidates:
        raise SelectionError("no candidate degradation features")
    meta = meta or MetaParameters()
    weights = meta.deg_param_weights
    metrics, scores, excluded = {}, {}, {}
    for series in sorted(candidates, key=lambda s: s.feature_id):
        try:
            prepared = resample_uniform(series, step_hours) if step_hours else series
            if scale:
                prepared = min_max_scaled(prepared)
            if len(prepared) < 3 or not np.all(np.isfinite(prepared.values)):
                raise InvalidInputError("fewer than 3 finite points")
            m = goodness_metrics(prepared, min(window, len(prepared)))
        except (InvalidInputError, ConfigurationError) as exc:
            excluded[series.feature_id] = str(exc)
            continue
        metrics[series.feature_id] = m
        scores[series.feature_id] = goodness_score(m, weights)
    if not scores:
        raise SelectionError(f"all candidates degenerate: {excluded}")
    best = max(scores, key=lambda i: (scores[i], -i))
    return GoodnessReport(metrics, scores, best, weights, excluded)
