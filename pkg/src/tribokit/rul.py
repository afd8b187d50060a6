"""Remaining-useful-life estimation with an exponential degradation model.

The indicator is modelled as ``deg(t) = c * exp(b * t)`` with additive
Gaussian noise. A log-space least-squares fit supplies the prior, an
adaptive Metropolis chain samples ``(c, b)``, and every posterior sample is
turned into the time at which its trajectory reaches the alarm threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Optional, Sequence

import numpy as np

from .core import MetaParameters
from .degrade import FeatureSeries
from .errors import FitDomainError, InvalidInputError, LowConfidenceError, SamplingError

PRIOR_WIDTH = 0.5
PRIOR_FLOOR = 1e-6
ADAPT_AFTER = 100
ADAPT_EPS = 1e-10
QUANTILES = (0.05, 0.50, 0.95)


@dataclass(frozen=True)
class DegradationModel:
    c: float
    b: float
    sigma2: float

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInputError("c must be positive")
        if not self.sigma2 > 0:
            raise InvalidInputError("sigma2 must be positive")

    def __call__(self, t):
        return self.c * np.exp(self.b * np.asarray(t, dtype=float))


def fit_exponential_prior(series: FeatureSeries) -> DegradationModel:
    """Least squares on ``ln x = ln c + b t``.

    ``sigma2`` is the residual variance of the fitted curve on the data
    scale, ``sum((x - c exp(bt))^2) / (K - 2)``, since the likelihood is
    evaluated there. It is floored at ``1e-12 * mean(x^2)`` so a noiseless
    series still gives a proper density.
    """
    x = series.values
    t = series.times
    if len(series) < 3:
        raise InvalidInputError("exponential fit needs at least 3 points")
    if np.any(x <= 0):
        raise FitDomainError("exponential fit requires strictly positive values; offset-shift first")
    A = np.column_stack([np.ones_like(t), t])
    (log_c, b), *_ = np.linalg.lstsq(A, np.log(x), rcond=None)
    c = math.exp(log_c)
    resid = x - c * np.exp(b * t)
    dof = max(len(series) - 2, 1)
    sigma2 = float(resid @ resid) / dof
    sigma2 = max(sigma2, 1e-12 * float(np.mean(x * x)))
    return DegradationModel(c, float(b), sigma2)


def _prior_sd(value: float) -> float:
    return max(PRIOR_WIDTH * abs(value), PRIOR_FLOOR)


def log_posterior(params: Sequence[float], series: FeatureSeries, prior: DegradationModel) -> float:
    c, b = params
    if not c > 0:
        return -math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        resid = series.values - c * np.exp(b * series.times)
    ssr = float(resid @ resid)
    if not math.isfinite(ssr):
        return -math.inf
    n = len(series)
    loglik = -0.5 * n * math.log(2 * math.pi * prior.sigma2) - 0.5 * ssr / prior.sigma2
    sc, sb = _prior_sd(prior.c), _prior_sd(prior.b)
    logprior = (
        -0.5 * ((c - prior.c) / sc) ** 2
        - math.log(sc * math.sqrt(2 * math.pi))
        - 0.5 * ((b - prior.b) / sb) ** 2
        - math.log(sb * math.sqrt(2 * math.pi))
    )
    return loglik + logprior


@dataclass(frozen=True, eq=False)
class PosteriorSampleSet:
    samples: np.ndarray  # (n_kept, 2) rows of (c, b)
    n_simulations: int
    burn_in: int
    acceptance_rate: float


def adaptive_metropolis(
    log_target: Callable[[np.ndarray], float],
    init: Sequence[float],
    n_simulations: int,
    seed: int,
    proposal_scale: Optional[Sequence[float]] = None,
    adapt_after: int = ADAPT_AFTER,
) -> PosteriorSampleSet:
    """Adaptive Metropolis random walk (Haario et al. 2001).

    The chain runs in coordinates standardised by ``proposal_scale``
    (default ``0.1 * |init|``), so the initial proposal covariance is
    ``diag(proposal_scale**2)`` and the regulariser ``eps * I`` is
    unit-free. After ``adapt_after`` steps the proposal covariance is
    ``s_d * (cov(past states) + eps * I)`` with ``s_d = 2.4**2 / d``.
    The first half of the chain is discarded.
    """
    if n_simulations < 2:
        raise InvalidInputError("n_simulations must be >= 2")
    x0 = np.asarray(init, dtype=float)
    d = x0.size
    if proposal_scale is None:
        scale = 0.1 * np.abs(x0)
        scale = np.where(scale > 0, scale, PRIOR_FLOOR)
    else:
        scale = np.asarray(proposal_scale, dtype=float)
    if np.any(~(scale > 0)):
        raise InvalidInputError("proposal_scale must be positive")

    def target(u):
        val = log_target(x0 + scale * u)
        return val if val == val else -math.inf  # NaN -> rejected

    rng = np.random.default_rng(seed)
    sd = 2.4**2 / d
    eye = np.eye(d)

    u = np.zeros(d)
    lp = target(u)
    if not math.isfinite(lp):
        raise SamplingError(f"log target is not finite at the initial point {x0.tolist()}")

    chain = np.empty((n_simulations, d))
    chain[0] = u
    mean = u.copy()
    m2 = np.zeros((d, d))  # Welford scatter of all states so far
    chol = eye
    accepted = 0
    normals = rng.standard_normal((n_simulations, d))
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.random(n_simulations))
    for t in range(1, n_simulations):
        if t > adapt_after:
            cov = m2 / (t - 1)
            try:
                chol = np.linalg.cholesky(sd * (cov + ADAPT_EPS * eye))
            except np.linalg.LinAlgError:
                pass  # keep the previous factor
        prop = u + chol @ normals[t]
        lp_prop = target(prop)
        if log_u[t] < lp_prop - lp:
            u, lp = prop, lp_prop
            accepted += 1
        chain[t] = u
        delta = u - mean
        mean += delta / (t + 1)
        m2 += np.outer(delta, u - mean)

    burn = n_simulations // 2
    samples = x0 + scale * chain[burn:]
    return PosteriorSampleSet(samples, n_simulations, burn, accepted / (n_simulations - 1))


@dataclass(frozen=True, eq=False)
class RULResult:
    """Threshold-crossing quantiles in hours since run start.

    ``last_operation`` is the 5% crossing quantile. Instants are derived
    from ``run_start`` when it is known.
    """

    last_operation: float
    q05: float
    q50: float
    q95: float
    alarm_level_rul: float
    censored_fraction: float
    last_measurement: float
    seed: int
    prior: Optional[DegradationModel] = None
    posterior: Optional[PosteriorSampleSet] = field(default=None, repr=False)
    run_start: Optional[datetime] = None

    def instant(self, hours: float) -> Optional[datetime]:
        if self.run_start is None:
            return None
        return self.run_start + timedelta(hours=hours)

    @property
    def last_operation_date(self) -> Optional[datetime]:
        return self.instant(self.last_operation)

    def to_dict(self) -> dict:
        def iso(h):
            ts = self.instant(h)
            return ts.isoformat() if ts is not None else None

        out = {
            "last_operation_date": iso(self.last_operation),
            "crossing_q05": iso(self.q05),
            "crossing_q50": iso(self.q50),
            "crossing_q95": iso(self.q95),
            "last_measurement": iso(self.last_measurement),
            "hours": {
                "last_operation": self.last_operation,
                "q05": self.q05,
                "q50": self.q50,
                "q95": self.q95,
                "last_measurement": self.last_measurement,
            },
            "alarm_level_rul": self.alarm_level_rul,
            "censored_fraction": self.censored_fraction,
            "seed": self.seed,
        }
        if self.prior is not None:
            out["prior"] = {"c": self.prior.c, "b": self.prior.b, "sigma2": self.prior.sigma2}
        if self.posterior is not None:
            out["posterior"] = {
                "n_simulations": self.posterior.n_simulations,
                "burn_in": self.posterior.burn_in,
                "acceptance_rate": self.posterior.acceptance_rate,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def crossing_times(samples: np.ndarray, threshold: float) -> np.ndarray:
    """Hours at which each ``(c, b)`` trajectory reaches ``threshold``.

    Samples already at or above the threshold cross at 0; samples with
    ``b <= 0`` below it never cross and come back as ``inf``.
    """
    c, b = samples[:, 0], samples[:, 1]
    out = np.full(c.shape, np.inf)
    above = c >= threshold
    out[above] = 0.0
    rising = ~above & (b > 0)
    out[rising] = np.log(threshold / c[rising]) / b[rising]
    return out


def trajectory_quantiles(
    posterior: PosteriorSampleSet, times: Sequence[float], quantiles: Sequence[float] = QUANTILES
) -> np.ndarray:
    """Quantiles of ``c exp(b t)`` across posterior samples, shape (len(times), len(quantiles))."""
    t = np.asarray(times, dtype=float)
    c = posterior.samples[:, :1]
    b = posterior.samples[:, 1:]
    with np.errstate(over="ignore"):
        paths = c * np.exp(b * t[None, :])
    return np.quantile(paths, quantiles, axis=0).T


def estimate_rul(
    series: FeatureSeries,
    meta: Optional[MetaParameters] = None,
    seed: int = 0,
    last_measurement: Optional[float] = None,
) -> RULResult:
    meta = meta or MetaParameters()
    threshold = meta.alarm_level_rul
    last = float(series.times[-1]) if last_measurement is None else float(last_measurement)

    if series.values[-1] >= threshold:
        return RULResult(last, last, last, last, threshold, 0.0, last, seed, run_start=series.start)

    if meta.rul_model_parameters is not None:
        prior = DegradationModel(*meta.rul_model_parameters)
    else:
        prior = fit_exponential_prior(series)
    post = adaptive_metropolis(
        lambda p: log_posterior(p, series, prior),
        (prior.c, prior.b),
        meta.n_simulations,
        seed,
    )
    crossings = crossing_times(post.samples, threshold)
    finite = crossings[np.isfinite(crossings)]
    censored = 1.0 - finite.size / crossings.size
    if censored > 0.5:
        raise LowConfidenceError(
            f"{censored:.1%} of posterior trajectories never reach {threshold}", censored
        )
    finite = np.maximum(finite, last)
    q05, q50, q95 = (float(v) for v in np.quantile(finite, QUANTILES))
    return RULResult(q05, q05, q50, q95, threshold, censored, last, seed, prior, post, series.start)
