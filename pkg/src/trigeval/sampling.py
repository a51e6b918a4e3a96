"""Sampled trigger-intensity estimation and its error bounds.

A unit's intensity is estimated by inspecting ``m`` of its observations and
taking the fraction that triggered. The error ``eps = r' - r`` has mean zero
and ``E[eps^2] = (E[r] - E[r^2]) / m`` under i.i.d. (with-replacement) draws,
which drives the downward bias of the sampled-intensity ATE and the extra
variance bounded below.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (InsufficientObservations, InvalidInput, InvalidMoments, MissingTriggerData,
                     NoTriggers)
from .estimators import noise_term_coefficient
from .model import Dataset, ModelParams, ObservationRecord, unit_stream

_MOMENT_SLACK = 1e-12


class SamplingMode(str, Enum):
    WITH_REPLACEMENT = "with_replacement"
    WITHOUT_REPLACEMENT = "without_replacement"


@dataclass(frozen=True)
class SamplingPlan:
    m: int
    mode: SamplingMode = SamplingMode.WITH_REPLACEMENT
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", SamplingMode(self.mode))
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInput(f"sample budget m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    def with_m(self, m: int) -> SamplingPlan:
        return SamplingPlan(m, self.mode, self.seed)


@dataclass(frozen=True)
class EpsilonMoments:
    mean_eps: float
    mean_eps2: float


def estimate_trigger_intensity(observations: Sequence[ObservationRecord], plan: SamplingPlan,
                               rng: np.random.Generator) -> float:
    """Fraction of triggered rows among ``plan.m`` sampled observations of one unit."""
    n = len(observations)
    if n == 0:
        raise InsufficientObservations("unit has no observations")
    if plan.mode is SamplingMode.WITHOUT_REPLACEMENT:
        if plan.m > n:
            raise InsufficientObservations(
                f"cannot draw {plan.m} of {n} observations without replacement")
        idx = rng.choice(n, size=plan.m, replace=False)
    else:
        idx = rng.integers(0, n, size=plan.m)
    hits = 0
    for i in idx:
        status = observations[int(i)].trigger_status
        if status is None:
            raise MissingTriggerData(
                f"sampled observation of unit {observations[int(i)].unit_id!r} has no trigger label")
        hits += status
    return hits / plan.m


def estimate_intensities(observations: Sequence[ObservationRecord],
                         plan: SamplingPlan) -> dict[str, float]:
    """Estimate every unit's intensity, each from its own ``(seed, unit_id)`` stream."""
    by_unit: dict[str, list[ObservationRecord]] = {}
    for obs in observations:
        by_unit.setdefault(obs.unit_id, []).append(obs)
    return {uid: estimate_trigger_intensity(rows, plan, unit_stream(plan.seed, uid))
            for uid, rows in by_unit.items()}


def sample_trigger_counts(n_obs: np.ndarray, trigger_counts: np.ndarray, plan: SamplingPlan,
                          rng: np.random.Generator) -> np.ndarray:
    """Vectorized sampling from units summarized by ``(n_obs, trigger_count)``.

    With replacement the hit count is Binomial(m, K/n); without replacement it
    is Hypergeometric(K, n - K, m). Returns the estimated intensities.
    """
    n_obs = np.asarray(n_obs, dtype=np.int64)
    k = np.asarray(trigger_counts, dtype=np.int64)
    if plan.mode is SamplingMode.WITHOUT_REPLACEMENT:
        if (n_obs < plan.m).any():
            raise InsufficientObservations(
                f"sample budget m={plan.m} exceeds the smallest unit ({int(n_obs.min())} obs)")
        hits = rng.hypergeometric(k, n_obs - k, plan.m)
    else:
        hits = rng.binomial(plan.m, k / n_obs)
    return hits / plan.m


def sample_dataset_intensities(dataset: Dataset, plan: SamplingPlan) -> Dataset:
    """Fill ``estimated_trigger_intensity`` by sampling from each unit's true intensity.

    Trigger counts are recovered as ``r * n_obs``, which must be integral.
    """
    r = dataset.true_trigger_intensity
    if r is None or np.isnan(r).any():
        raise MissingTriggerData("sampling from aggregates needs true_trigger_intensity")
    kf = r * dataset.n_obs
    k = np.rint(kf)
    if (np.abs(kf - k) > 1e-6).any():
        raise InvalidInput("true_trigger_intensity * n_obs is not an integer trigger count")
    rng = np.random.default_rng(np.random.SeedSequence([plan.seed & ((1 << 64) - 1), 0x5A]))
    return dataset.with_estimated_intensity(sample_trigger_counts(dataset.n_obs, k, plan, rng))


def epsilon_moments(mean_r: float, mean_r2: float, m: int) -> EpsilonMoments:
    """Mean and second moment of the intensity estimation error for budget ``m``."""
    if m < 1:
        raise InvalidInput("m must be >= 1")
    if not (-_MOMENT_SLACK <= mean_r2 <= mean_r + _MOMENT_SLACK and mean_r <= 1 + _MOMENT_SLACK):
        raise InvalidMoments(f"need 0 <= E[r^2] <= E[r] <= 1, got E[r]={mean_r}, E[r^2]={mean_r2}")
    if mean_r2 < mean_r**2 - _MOMENT_SLACK:
        raise InvalidMoments("E[r^2] < E[r]^2 is impossible")
    return EpsilonMoments(0.0, max(mean_r - mean_r2, 0.0) / m)


def ate_bias_bound(beta2: float, m: int) -> float:
    """Upper bound ``|beta2| / (m - 1)`` on the downward ATE bias."""
    if m < 2:
        raise InvalidInput("the bias bound needs m >= 2")
    return abs(beta2) / (m - 1)


def exact_ate_bias(beta2: float, mean_r: float, mean_r2: float, m: int) -> float:
    """Large-N bias ``rho - E[rho']`` before bounding:
    ``beta2 (E[r] - E[r^2]) E[r] / ((m - 1) E[r^2] + E[r])``."""
    epsilon_moments(mean_r, mean_r2, m)
    denom = (m - 1) * mean_r2 + mean_r
    if denom == 0:
        raise NoTriggers("every trigger intensity is zero")
    return beta2 * (mean_r - mean_r2) * mean_r / denom


def variance_gap_bound(beta1: float, beta2: float, m: int) -> float:
    """Upper bound on ``Var(rho') - Var(rho)``: ``((b1 + b2/2)^2 + b2^2/4) / m``."""
    if not (math.isfinite(beta1) and math.isfinite(beta2)):
        raise InvalidInput("coefficients must be finite")
    if m < 1:
        raise InvalidInput("m must be >= 1")
    return noise_term_coefficient(ModelParams(0.0, beta1, beta2)) / m


def variance_ratio(mean_r: float, mean_r2: float, h: float = 1.0) -> float:
    """Var(full-knowledge ATE) / Var(baseline ATE) = ``E[r]^2 / (h E[r^2])``.

    ``h >= 1`` is the ratio of baseline to trigger-model residual variance.
    """
    if mean_r2 == 0:
        raise NoTriggers("E[r^2] = 0: no trigger observations")
    if h < 1:
        raise InvalidInput("h must be >= 1")
    if not (0 < mean_r2 <= mean_r + _MOMENT_SLACK) or mean_r2 < mean_r**2 - _MOMENT_SLACK:
        raise InvalidMoments(f"inconsistent moments E[r]={mean_r}, E[r^2]={mean_r2}")
    return mean_r**2 / (h * mean_r2)
