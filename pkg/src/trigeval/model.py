"""Domain types and the synthetic data-generating process.

Per observation j of unit i the response is::

    y_ij = beta0 + beta1 * r_ij + beta2 * T_i * r_ij + noise_ij

where ``r_ij`` is the Bernoulli trigger status with unit intensity ``r_i`` and
``T_i`` the treatment flag. Units are the regression rows after averaging.

Two generation paths are provided. :func:`generate_observations` /
:func:`generate_observation_level` emit every observation and aggregate them.
:func:`generate_dataset` samples the unit aggregates directly: the trigger
count is Binomial(n_i, p_i) and the mean of ``n_i`` Gaussian draws is
Normal(0, sigma_i**2 / n_i), so both paths share one distribution while the
aggregate path costs O(N) instead of O(sum n_i).
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Any

import numpy as np

from .errors import DuplicateUnit, InvalidInput, MissingAssignment

DEFAULT_OBS_CAP = 1_000_000
_U64 = (1 << 64) - 1


class Assignment(IntEnum):
    CONTROL = 0
    TREATMENT = 1


def _check_intensity(value: float | None, name: str) -> None:
    if value is None:
        return
    if not (0.0 <= value <= 1.0):
        raise InvalidInput(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True, slots=True)
class UnitRecord:
    """One randomized unit after aggregation over its observations."""

    unit_id: str
    assignment: Assignment
    n_obs: int
    mean_response: float
    true_trigger_intensity: float | None = None
    estimated_trigger_intensity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "assignment", Assignment(self.assignment))
        if self.n_obs < 1:
            raise InvalidInput(f"unit {self.unit_id!r}: n_obs must be >= 1")
        _check_intensity(self.true_trigger_intensity, "true_trigger_intensity")
        _check_intensity(self.estimated_trigger_intensity, "estimated_trigger_intensity")


@dataclass(frozen=True, slots=True)
class ObservationRecord:
    unit_id: str
    response: float
    trigger_status: int | None = None

    def __post_init__(self):
        if self.trigger_status is not None and self.trigger_status not in (0, 1):
            raise InvalidInput(f"trigger_status must be 0 or 1, got {self.trigger_status!r}")


@dataclass(frozen=True, slots=True)
class ModelParams:
    beta0: float
    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ("beta0", "beta1", "beta2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInput(f"{name} must be finite")


@dataclass(frozen=True)
class NoiseSpec:
    """Per-observation Gaussian noise.

    ``homogeneous`` uses one ``sigma`` for every unit; ``heterogeneous`` draws
    each unit's sigma uniformly from ``[low, high]``.
    """

    kind: str = "homogeneous"
    sigma: float = 1.0
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if self.kind == "homogeneous":
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise InvalidInput("noise sigma must be positive")
        elif self.kind == "heterogeneous":
            if self.low is None or self.high is None:
                raise InvalidInput("heterogeneous noise needs low and high")
            if not (0 < self.low <= self.high and math.isfinite(self.high)):
                raise InvalidInput("heterogeneous noise needs 0 < low <= high")
        else:
            raise InvalidInput(f"unknown noise kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, sigma: float) -> NoiseSpec:
        return cls("homogeneous", sigma=sigma)

    @classmethod
    def heterogeneous(cls, low: float, high: float) -> NoiseSpec:
        return cls("heterogeneous", sigma=0.5 * (low + high), low=low, high=high)

    @classmethod
    def heterogeneous_around(cls, sigma: float) -> NoiseSpec:
        """Per-unit sigma uniform on ``[0.5 sigma, 1.5 sigma]``."""
        return cls.heterogeneous(0.5 * sigma, 1.5 * sigma)

    def scaled(self, factor: float) -> NoiseSpec:
        if not factor > 0:
            raise InvalidInput("noise scale factor must be positive")
        if self.kind == "homogeneous":
            return NoiseSpec.homogeneous(self.sigma * factor)
        return NoiseSpec.heterogeneous(self.low * factor, self.high * factor)

    def sample_sigmas(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "homogeneous":
            return np.full(n, float(self.sigma))
        return rng.uniform(self.low, self.high, size=n)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "homogeneous":
            return {"kind": "homogeneous", "sigma": self.sigma}
        return {"kind": "heterogeneous", "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> NoiseSpec:
        kind = d.get("kind", "homogeneous")
        if kind == "homogeneous":
            return cls.homogeneous(float(d.get("sigma", 1.0)))
        if "sigma" in d and "low" not in d:
            return cls.heterogeneous_around(float(d["sigma"]))
        return cls.heterogeneous(float(d["low"]), float(d["high"]))


@dataclass(frozen=True)
class TriggerLaw:
    """Distribution of unit trigger intensities on [0, 1].

    kinds: ``constant`` (value), ``two_point`` (low, high, p_high),
    ``uniform`` (low, high) and ``explicit`` (one value per unit).
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.kind == "constant":
            ok = len(p) == 1
        elif self.kind == "two_point":
            ok = len(p) == 3 and 0.0 <= p[2] <= 1.0
            p = p[:2]
        elif self.kind == "uniform":
            ok = len(p) == 2 and p[0] <= p[1]
        elif self.kind == "explicit":
            ok = len(p) >= 1
        else:
            raise InvalidInput(f"unknown trigger law {self.kind!r}")
        if not ok:
            raise InvalidInput(f"bad parameters for {self.kind} trigger law: {self.params}")
        if any(not (0.0 <= v <= 1.0) for v in p):
            raise InvalidInput("trigger intensities must lie in [0, 1]")

    @classmethod
    def constant(cls, value: float) -> TriggerLaw:
        return cls("constant", (value,))

    @classmethod
    def two_point(cls, low: float, high: float, p_high: float = 0.5) -> TriggerLaw:
        return cls("two_point", (low, high, p_high))

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 1.0) -> TriggerLaw:
        return cls("uniform", (low, high))

    @classmethod
    def explicit(cls, values: Iterable[float]) -> TriggerLaw:
        return cls("explicit", tuple(values))

    @property
    def mean(self) -> float:
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "two_point":
            return (1 - p[2]) * p[0] + p[2] * p[1]
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        return math.fsum(p) / len(p)

    @property
    def second_moment(self) -> float:
        p = self.params
        if self.kind == "constant":
            return p[0] ** 2
        if self.kind == "two_point":
            return (1 - p[2]) * p[0] ** 2 + p[2] * p[1] ** 2
        if self.kind == "uniform":
            return (p[0] ** 2 + p[0] * p[1] + p[1] ** 2) / 3.0
        return math.fsum(v * v for v in p) / len(p)

    @property
    def variance(self) -> float:
        return max(self.second_moment - self.mean**2, 0.0)

    def with_mean(self, x: float) -> TriggerLaw:
        """Re-center the law on ``x``, keeping its spread where [0, 1] allows.

        The half-width is clipped to ``min(x, 1 - x)``, so ``x = 1`` always
        yields the constant law ``r = 1``.
        """
        if not 0.0 <= x <= 1.0:
            raise InvalidInput(f"trigger intensity grid value {x} outside [0, 1]")
        p = self.params
        if self.kind == "constant":
            return TriggerLaw.constant(x)
        if self.kind == "uniform":
            half = min(0.5 * (p[1] - p[0]), x, 1.0 - x)
            return TriggerLaw.uniform(x - half, x + half)
        if self.kind == "two_point":
            half = min(0.5 * (p[1] - p[0]), x, 1.0 - x)
            return TriggerLaw.two_point(x - half, x + half, 0.5)
        raise InvalidInput("an explicit trigger law cannot be swept")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full(n, p[0])
        if self.kind == "two_point":
            return np.where(rng.random(n) < p[2], p[1], p[0])
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], size=n)
        if len(p) != n:
            raise InvalidInput(f"explicit trigger law has {len(p)} values for {n} units")
        return np.asarray(p, dtype=float)

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        if self.kind == "constant":
            return {"kind": "constant", "value": p[0]}
        if self.kind == "two_point":
            return {"kind": "two_point", "low": p[0], "high": p[1], "p_high": p[2]}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": p[0], "high": p[1]}
        return {"kind": "explicit", "values": list(p)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TriggerLaw:
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "two_point":
            return cls.two_point(d["low"], d["high"], d.get("p_high", 0.5))
        if kind == "uniform":
            return cls.uniform(d.get("low", 0.0), d.get("high", 1.0))
        if kind == "explicit":
            return cls.explicit(d["values"])
        raise InvalidInput(f"unknown trigger law {kind!r}")


@dataclass(frozen=True)
class CountLaw:
    """Distribution of per-unit observation counts.

    kinds: ``constant`` (n), ``uniform`` (integers low..high inclusive) and
    ``lognormal`` (median, log-sd). Every draw is clipped to ``[1, cap]``.
    """

    kind: str = "constant"
    params: tuple[float, ...] = (1000,)
    cap: int = DEFAULT_OBS_CAP

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        p = self.params
        if self.cap < 1:
            raise InvalidInput("observation cap must be >= 1")
        if self.kind == "constant":
            ok = len(p) == 1 and p[0] >= 1
        elif self.kind == "uniform":
            ok = len(p) == 2 and 1 <= p[0] <= p[1]
        elif self.kind == "lognormal":
            ok = len(p) == 2 and p[0] >= 1 and p[1] >= 0
        else:
            raise InvalidInput(f"unknown observation count law {self.kind!r}")
        if not ok:
            raise InvalidInput(f"bad parameters for {self.kind} count law: {p}")

    @classmethod
    def constant(cls, n: int, cap: int = DEFAULT_OBS_CAP) -> CountLaw:
        return cls("constant", (int(n),), cap)

    @classmethod
    def uniform(cls, low: int, high: int, cap: int = DEFAULT_OBS_CAP) -> CountLaw:
        return cls("uniform", (int(low), int(high)), cap)

    @classmethod
    def lognormal(cls, median: float, sigma: float, cap: int = DEFAULT_OBS_CAP) -> CountLaw:
        return cls("lognormal", (float(median), float(sigma)), cap)

    @property
    def minimum(self) -> int:
        if self.kind == "constant":
            return min(int(self.params[0]), self.cap)
        if self.kind == "uniform":
            return min(int(self.params[0]), self.cap)
        return 1

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            out = np.full(n, int(p[0]), dtype=np.int64)
        elif self.kind == "uniform":
            out = rng.integers(int(p[0]), int(p[1]), size=n, endpoint=True)
        else:
            out = np.rint(p[0] * np.exp(p[1] * rng.standard_normal(n))).astype(np.int64)
        return np.clip(out, 1, self.cap)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "constant":
            d = {"kind": "constant", "n": self.params[0]}
        elif self.kind == "uniform":
            d = {"kind": "uniform", "low": self.params[0], "high": self.params[1]}
        else:
            d = {"kind": "lognormal", "median": self.params[0], "sigma": self.params[1]}
        d["cap"] = self.cap
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> CountLaw:
        kind = d.get("kind", "constant")
        cap = int(d.get("cap", DEFAULT_OBS_CAP))
        if kind == "constant":
            return cls.constant(int(d.get("n", 1000)), cap)
        if kind == "uniform":
            return cls.uniform(int(d["low"]), int(d["high"]), cap)
        if kind == "lognormal":
            return cls.lognormal(float(d["median"]), float(d["sigma"]), cap)
        raise InvalidInput(f"unknown observation count law {kind!r}")


@dataclass(frozen=True)
class GenConfig:
    n_units: int = 2000
    params: ModelParams = field(default_factory=lambda: ModelParams(1.0, 0.5, 0.3))
    trigger_law: TriggerLaw = field(default_factory=TriggerLaw.uniform)
    obs_law: CountLaw = field(default_factory=CountLaw)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 2:
            raise InvalidInput("n_units must be >= 2")
        if self.trigger_law.kind == "explicit" and len(self.trigger_law.params) != self.n_units:
            raise InvalidInput("explicit trigger law length must equal n_units")

    def replace(self, **changes) -> GenConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_units": self.n_units,
            "params": {"beta0": self.params.beta0, "beta1": self.params.beta1,
                       "beta2": self.params.beta2},
            "trigger_law": self.trigger_law.to_dict(),
            "obs_law": self.obs_law.to_dict(),
            "noise": self.noise.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> GenConfig:
        try:
            p = d.get("params", {})
            return cls(
                n_units=int(d.get("n_units", 2000)),
                params=ModelParams(float(p.get("beta0", 1.0)), float(p.get("beta1", 0.5)),
                                   float(p.get("beta2", 0.3))),
                trigger_law=TriggerLaw.from_dict(d.get("trigger_law", {"kind": "uniform"})),
                obs_law=CountLaw.from_dict(d.get("obs_law", {})),
                noise=NoiseSpec.from_dict(d.get("noise", {})),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"bad generator config: {exc}") from exc


def _optional_column(values, n: int) -> np.ndarray | None:
    if values is None:
        return None
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise InvalidInput("column length mismatch")
    if np.isnan(arr).all():
        return None
    finite = arr[~np.isnan(arr)]
    if ((finite < 0.0) | (finite > 1.0)).any():
        raise InvalidInput("trigger intensities must lie in [0, 1]")
    return arr


class Dataset:
    """Column-oriented collection of :class:`UnitRecord`.

    Optional intensity columns are ``None`` when absent for every unit and
    hold ``NaN`` for individual missing units.
    """

    __slots__ = ("unit_ids", "assignment", "n_obs", "mean_response",
                 "true_trigger_intensity", "estimated_trigger_intensity")

    def __init__(self, unit_ids, assignment, n_obs, mean_response,
                 true_trigger_intensity=None, estimated_trigger_intensity=None):
        self.unit_ids = tuple(str(u) for u in unit_ids)
        n = len(self.unit_ids)
        if len(set(self.unit_ids)) != n:
            seen = set()
            dup = next(u for u in self.unit_ids if u in seen or seen.add(u))
            raise DuplicateUnit(f"duplicate unit_id {dup!r}")
        self.assignment = np.asarray(assignment, dtype=np.int8)
        self.n_obs = np.asarray(n_obs, dtype=np.int64)
        self.mean_response = np.asarray(mean_response, dtype=float)
        for name in ("assignment", "n_obs", "mean_response"):
            if getattr(self, name).shape != (n,):
                raise InvalidInput(f"{name} column length mismatch")
        if n and not np.isin(self.assignment, (0, 1)).all():
            raise InvalidInput("assignment must be 0 or 1")
        if n and (self.n_obs < 1).any():
            raise InvalidInput("n_obs must be >= 1")
        self.true_trigger_intensity = _optional_column(true_trigger_intensity, n)
        self.estimated_trigger_intensity = _optional_column(estimated_trigger_intensity, n)

    @classmethod
    def _trusted(cls, unit_ids: tuple[str, ...], assignment, n_obs, mean_response,
                 true_trigger_intensity=None, estimated_trigger_intensity=None) -> Dataset:
        # Skips validation; for generator output already known to be valid.
        self = cls.__new__(cls)
        self.unit_ids = unit_ids
        self.assignment = assignment
        self.n_obs = n_obs
        self.mean_response = mean_response
        self.true_trigger_intensity = true_trigger_intensity
        self.estimated_trigger_intensity = estimated_trigger_intensity
        return self

    def __len__(self) -> int:
        return len(self.unit_ids)

    def __repr__(self) -> str:
        return (f"Dataset(n_units={len(self)}, true_intensity={self.has_true_intensity}, "
                f"estimated_intensity={self.has_estimated_intensity})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.unit_ids != other.unit_ids:
            return False
        for name in self.__slots__[1:]:
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b, equal_nan=a.dtype.kind == "f"):
                return False
        return True

    @property
    def has_true_intensity(self) -> bool:
        r = self.true_trigger_intensity
        return r is not None and not np.isnan(r).any()

    @property
    def has_estimated_intensity(self) -> bool:
        r = self.estimated_trigger_intensity
        return r is not None and not np.isnan(r).any()

    @classmethod
    def from_units(cls, units: Iterable[UnitRecord]) -> Dataset:
        units = list(units)

        def opt(name):
            vals = [getattr(u, name) for u in units]
            if all(v is None for v in vals):
                return None
            return [np.nan if v is None else v for v in vals]

        return cls(
            [u.unit_id for u in units],
            [int(u.assignment) for u in units],
            [u.n_obs for u in units],
            [u.mean_response for u in units],
            opt("true_trigger_intensity"),
            opt("estimated_trigger_intensity"),
        )

    def units(self) -> Iterator[UnitRecord]:
        def opt(col, i):
            if col is None or np.isnan(col[i]):
                return None
            return float(col[i])

        for i, uid in enumerate(self.unit_ids):
            yield UnitRecord(
                uid,
                Assignment(int(self.assignment[i])),
                int(self.n_obs[i]),
                float(self.mean_response[i]),
                opt(self.true_trigger_intensity, i),
                opt(self.estimated_trigger_intensity, i),
            )

    def with_estimated_intensity(self, values) -> Dataset:
        return Dataset(self.unit_ids, self.assignment, self.n_obs, self.mean_response,
                       self.true_trigger_intensity, values)


def unit_ids_for(n: int) -> list[str]:
    width = max(5, len(str(n - 1)))
    return [f"u{i:0{width}d}" for i in range(n)]


def unit_stream(seed: int, unit_id: str) -> np.random.Generator:
    """Independent RNG stream for one unit, stable across runs and orderings."""
    h = int.from_bytes(hashlib.blake2b(str(unit_id).encode(), digest_size=8).digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([seed & _U64, h]))


def _stream(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _U64, *path]))


def assign_randomly(unit_ids: Sequence[Any], seed: int) -> list[Assignment]:
    """Independent fair-coin assignment for each unit, in input order."""
    if len(unit_ids) == 0:
        raise InvalidInput("cannot assign an empty list of units")
    draws = _stream(seed, 0xA5).integers(0, 2, size=len(unit_ids))
    return [Assignment(int(d)) for d in draws]


def _observation_arrays(assignment: int, n_obs: int, r: float, params: ModelParams,
                        sigma: float, rng: np.random.Generator):
    if not 0.0 <= r <= 1.0:
        raise InvalidInput(f"trigger intensity {r} outside [0, 1]")
    if not sigma > 0:
        raise InvalidInput("sigma must be positive")
    if n_obs < 1:
        raise InvalidInput("n_obs must be >= 1")
    status = (rng.random(n_obs) < r).astype(np.int8)
    slope = params.beta1 + params.beta2 * int(assignment)
    response = params.beta0 + slope * status + rng.normal(0.0, sigma, size=n_obs)
    return response, status


def generate_observations(unit_id: str, assignment: Assignment, n_obs: int, r: float,
                          params: ModelParams, sigma: float,
                          rng: np.random.Generator) -> list[ObservationRecord]:
    """Emit ``n_obs`` observations for one unit with trigger probability ``r``."""
    response, status = _observation_arrays(assignment, n_obs, r, params, sigma, rng)
    return [ObservationRecord(unit_id, float(y), int(s)) for y, s in zip(response, status)]


def aggregate_to_units(observations: Iterable[ObservationRecord],
                       assignments: Mapping[str, Assignment]) -> Dataset:
    """Average observations per unit (units ordered by first appearance)."""
    responses: dict[str, list[float]] = {}
    statuses: dict[str, list[int | None]] = {}
    for obs in observations:
        if obs.unit_id not in assignments:
            raise MissingAssignment(f"no assignment for unit {obs.unit_id!r}")
        responses.setdefault(obs.unit_id, []).append(obs.response)
        statuses.setdefault(obs.unit_id, []).append(obs.trigger_status)

    ids = list(responses)
    intensity = []
    for uid in ids:
        s = statuses[uid]
        intensity.append(np.nan if any(v is None for v in s) else sum(s) / len(s))
    return Dataset(
        ids,
        [int(assignments[u]) for u in ids],
        [len(responses[u]) for u in ids],
        [math.fsum(responses[u]) / len(responses[u]) for u in ids],
        intensity,
    )


@dataclass
class UnitArrays:
    """Raw per-unit draws behind a generated dataset (simulation internals)."""

    assignment: np.ndarray
    n_obs: np.ndarray
    trigger_count: np.ndarray
    sigma: np.ndarray
    mean_response: np.ndarray

    @property
    def intensity(self) -> np.ndarray:
        return self.trigger_count / self.n_obs

    @property
    def noise_variance(self) -> np.ndarray:
        """Variance of each unit's mean noise, sigma_i**2 / n_i."""
        return self.sigma**2 / self.n_obs


def _unit_descriptors(config: GenConfig, rng: np.random.Generator):
    n = config.n_units
    p = config.trigger_law.sample(n, rng)
    n_obs = config.obs_law.sample(n, rng)
    sigma = config.noise.sample_sigmas(n, rng)
    return p, n_obs, sigma


def simulate_units(config: GenConfig, rng: np.random.Generator | None = None) -> UnitArrays:
    """Draw unit aggregates directly (the fast generation path)."""
    if rng is None:
        rng = _stream(config.seed, 1)
    n = config.n_units
    t = rng.integers(0, 2, size=n).astype(np.int8)
    p, n_obs, sigma = _unit_descriptors(config, rng)
    k = rng.binomial(n_obs, p)
    r = k / n_obs
    b = config.params
    y = b.beta0 + (b.beta1 + b.beta2 * t) * r + rng.standard_normal(n) * (sigma / np.sqrt(n_obs))
    return UnitArrays(t, n_obs, k, sigma, y)


def generate_dataset(config: GenConfig) -> Dataset:
    """Generate a unit-level dataset with true trigger intensities populated."""
    u = simulate_units(config)
    return Dataset(unit_ids_for(config.n_units), u.assignment, u.n_obs, u.mean_response,
                   u.intensity)


def generate_observation_level(config: GenConfig):
    """Generate every observation, then aggregate.

    Returns ``(dataset, unit_ids, observation_unit_index, responses, statuses)``
    with the observation columns as flat arrays. Unit descriptors come from the
    root stream; observations from per-unit streams keyed by unit id.
    """
    ids = unit_ids_for(config.n_units)
    assignment = np.array([int(a) for a in assign_randomly(ids, config.seed)], dtype=np.int8)
    p, n_obs, sigma = _unit_descriptors(config, _stream(config.seed, 2))
    ys, ss = [], []
    for i, uid in enumerate(ids):
        y, s = _observation_arrays(assignment[i], int(n_obs[i]), float(p[i]), config.params,
                                   float(sigma[i]), unit_stream(config.seed, uid))
        ys.append(y)
        ss.append(s)
    index = np.repeat(np.arange(config.n_units), n_obs)
    responses = np.concatenate(ys)
    statuses = np.concatenate(ss)
    counts = np.array([s.sum() for s in ss], dtype=np.int64)
    means = np.array([math.fsum(y) / len(y) for y in ys])
    ds = Dataset(ids, assignment, n_obs, means, counts / n_obs)
    return ds, ids, index, responses, statuses
