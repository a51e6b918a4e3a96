"""Closed-form OLS fits for the three evaluation methods.

* baseline: ``y = a0 + a1*T``; the ATE is ``a1``.
* full knowledge: ``y = b0 + b1*r + b2*T*r`` with exact intensities; the ATE
  is ``b2 * mean(r)``.
* partial knowledge: the same regression on sampled intensities ``r'``.

Coefficients are solved from the sample moment matrix ``X'X / N`` inverted in
closed form. When the realized design is exactly balanced (``E[T] = 1/2``,
``E[T r] = E[r]/2``, ``E[T r^2] = E[r^2]/2``) the textbook balanced inverse is
used directly; otherwise the general adjugate inverse is. Standard errors are
``sqrt(sigma_hat^2 * [(X'X/N)^-1]_kk / N)`` with ``sigma_hat^2 = SSR/(N - p)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import stats

from . import kernels
from .errors import (DegenerateDesign, InsufficientData, InvalidInput, MissingTriggerData,
                     NoTriggers)
from .model import Dataset, ModelParams

BALANCE_TOL = 1e-12


class Method(str, Enum):
    BASELINE = "baseline"
    FULL = "full"
    PARTIAL = "partial"

    @classmethod
    def parse(cls, value: str | Method) -> Method:
        aliases = {"fullknowledge": "full", "full_knowledge": "full",
                   "partialknowledge": "partial", "partial_knowledge": "partial",
                   "none": "baseline"}
        v = str(getattr(value, "value", value)).lower()
        try:
            return cls(aliases.get(v, v))
        except ValueError:
            raise InvalidInput(f"unknown method {value!r}") from None


class Design(str, Enum):
    BASELINE = "baseline"
    TRIGGER = "trigger"


@dataclass(frozen=True)
class MomentSet:
    """Sample moments of the regression columns (all means over units)."""

    n_units: int
    mean_t: Any
    mean_r: Any
    mean_r2: Any
    mean_tr: Any
    mean_tr2: Any
    mean_y: Any = 0.0
    mean_yr: Any = 0.0
    mean_tyr: Any = 0.0
    mean_y_treat: Any = math.nan
    mean_y_ctrl: Any = math.nan
    mean_yr_treat: Any = math.nan
    mean_yr_ctrl: Any = math.nan

    @property
    def var_r(self):
        return self.mean_r2 - self.mean_r**2

    @classmethod
    def balanced(cls, mean_r, mean_r2, n_units: int = 0, mean_t=0.5) -> MomentSet:
        """Moments of a design where T is independent of r with ``E[T] = mean_t``."""
        return cls(n_units, mean_t, mean_r, mean_r2, mean_t * mean_r, mean_t * mean_r2)

    @classmethod
    def from_sums(cls, sums) -> MomentSet:
        n, st, sx, sxx, stx, stxx, sy, sty, sxy, stxy, _ = (float(v) for v in sums)
        n1, n0 = st, n - st
        return cls(
            n_units=int(n),
            mean_t=st / n,
            mean_r=sx / n,
            mean_r2=sxx / n,
            mean_tr=stx / n,
            mean_tr2=stxx / n,
            mean_y=sy / n,
            mean_yr=sxy / n,
            mean_tyr=stxy / n,
            mean_y_treat=sty / n1 if n1 else math.nan,
            mean_y_ctrl=(sy - sty) / n0 if n0 else math.nan,
            mean_yr_treat=stxy / n1 if n1 else math.nan,
            mean_yr_ctrl=(sxy - stxy) / n0 if n0 else math.nan,
        )

    @classmethod
    def from_dataset(cls, dataset: Dataset, intensity: str = "true") -> MomentSet:
        x = _intensity_column(dataset, intensity)
        return cls.from_sums(kernels.trigger_sums(dataset.mean_response, x, dataset.assignment))

    @property
    def is_balanced(self) -> bool:
        return (abs(self.mean_t - 0.5) < BALANCE_TOL
                and abs(self.mean_tr - self.mean_r / 2) < BALANCE_TOL
                and abs(self.mean_tr2 - self.mean_r2 / 2) < BALANCE_TOL)


@dataclass(frozen=True)
class FitResult:
    method: Method
    coefficients: tuple[float, ...]
    ate: float
    residual_variance: float
    se_ate: float
    t_value: float
    ci: tuple[float, float]
    dof: int
    ci_level: float = 0.95
    n_units: int = 0
    se_coefficients: tuple[float, ...] = ()
    mean_intensity: float | None = None
    flags: tuple[str, ...] = field(default=())

    def interval(self, level: float) -> tuple[float, float]:
        """Confidence interval at another level, rebuilt from ``se_ate`` and ``dof``."""
        if self.se_ate is None or not math.isfinite(self.se_ate):
            raise InvalidInput("fit has no usable standard error")
        if level == self.ci_level:
            return self.ci
        half = t_quantile(level, self.dof) * self.se_ate
        return (self.ate - half, self.ate + half)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["method"] = self.method.value
        d["coefficients"] = list(self.coefficients)
        d["se_coefficients"] = list(self.se_coefficients)
        d["ci"] = list(self.ci)
        d["flags"] = list(self.flags)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> FitResult:
        try:
            return cls(
                method=Method.parse(d["method"]),
                coefficients=tuple(float(v) for v in d["coefficients"]),
                ate=float(d["ate"]),
                residual_variance=float(d["residual_variance"]),
                se_ate=float(d["se_ate"]),
                t_value=float(d["t_value"]),
                ci=(float(d["ci"][0]), float(d["ci"][1])),
                dof=int(d["dof"]),
                ci_level=float(d.get("ci_level", 0.95)),
                n_units=int(d.get("n_units", 0)),
                se_coefficients=tuple(float(v) for v in d.get("se_coefficients", ())),
                mean_intensity=(None if d.get("mean_intensity") is None
                                else float(d["mean_intensity"])),
                flags=tuple(d.get("flags", ())),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"malformed fit record: {exc!r}") from exc


@lru_cache(maxsize=4096)
def t_quantile(level: float, dof: int) -> float:
    """Two-sided Student-t critical value for confidence ``level``."""
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must be in (0, 1), got {level}")
    if dof < 1:
        raise InsufficientData("no residual degrees of freedom")
    return float(stats.t.ppf(0.5 + level / 2.0, dof))


def _t_value(ate: float, se: float) -> float:
    if se > 0:
        return ate / se
    return 0.0 if ate == 0 else math.copysign(math.inf, ate)


def closed_form_inverse_2x2(moments: MomentSet) -> np.ndarray:
    """Inverse of ``[[1, E[T]], [E[T], E[T^2]]]`` (``T^2 = T`` for a 0/1 flag)."""
    p = moments.mean_t
    if abs(p - 0.5) < BALANCE_TOL:
        half = p if _is_exact(p) else 0.5
        return 4 * np.array([[half, -half], [-half, 2 * half]])
    det = p - p * p
    if det <= 0:
        raise DegenerateDesign("one treatment arm is empty")
    return np.array([[p / det, -p / det], [-p / det, 1 / det]])


def _is_exact(value) -> bool:
    return not isinstance(value, (float, np.floating))


def closed_form_inverse_3x3(moments: MomentSet) -> np.ndarray:
    """Inverse of the moment matrix of the columns ``(1, r, T*r)``.

    Under a balanced design with ``m = E[r]``, ``s = E[r^2]`` and
    ``v = s - m^2`` this is::

        [[ s/v,      -m/v,    0   ],
         [-m/v,  1/v + 1/s, -2/s  ],
         [  0,      -2/s,    4/s  ]]
    """
    m, s = moments.mean_r, moments.mean_r2
    if s == 0:
        raise DegenerateDesign("every trigger intensity is zero")
    if moments.is_balanced:
        v = s - m * m
        if v <= 0:
            raise DegenerateDesign("trigger intensity is constant; columns 1 and r collinear")
        return np.array([[s / v, -m / v, 0 * s], [-m / v, 1 / v + 1 / s, -2 / s],
                         [0 * s, -2 / s, 4 / s]])
    return adjugate_inverse_3x3(moments)


def adjugate_inverse_3x3(moments: MomentSet) -> np.ndarray:
    """General (unbalanced) inverse of the ``(1, r, T*r)`` moment matrix."""
    m, s = moments.mean_r, moments.mean_r2
    a, b = moments.mean_tr, moments.mean_tr2
    # symmetric forward matrix [[1, m, a], [m, s, b], [a, b, b]]
    c00 = s * b - b * b
    c01 = -(m * b - b * a)
    c02 = m * b - s * a
    c11 = b - a * a
    c12 = -(b - a * m)
    c22 = s - m * m
    det = c00 + m * c01 + a * c02
    scale = max(abs(s), abs(b), 1.0) ** 2
    if det == 0 or abs(det) <= 1e-14 * scale:
        raise DegenerateDesign("moment matrix of (1, r, T*r) is singular")
    return np.array([[c00, c01, c02], [c01, c11, c12], [c02, c12, c22]]) / det


def forward_matrix_2x2(moments: MomentSet) -> np.ndarray:
    p = moments.mean_t
    return np.array([[1, p], [p, p]])


def forward_matrix_3x3(moments: MomentSet) -> np.ndarray:
    m, s, a, b = moments.mean_r, moments.mean_r2, moments.mean_tr, moments.mean_tr2
    return np.array([[1, m, a], [m, s, b], [a, b, b]])


def _intensity_column(dataset: Dataset, intensity: str) -> np.ndarray:
    if intensity == "true":
        col, label = dataset.true_trigger_intensity, "true_trigger_intensity"
    elif intensity == "estimated":
        col, label = dataset.estimated_trigger_intensity, "estimated_trigger_intensity"
    else:
        raise InvalidInput(f"unknown intensity column {intensity!r}")
    if col is None:
        raise MissingTriggerData(f"dataset has no {label}")
    if np.isnan(col).any():
        missing = dataset.unit_ids[int(np.flatnonzero(np.isnan(col))[0])]
        raise MissingTriggerData(f"{label} missing for unit {missing!r}")
    return col


def _check_arms(dataset: Dataset) -> int:
    n1 = int(np.count_nonzero(dataset.assignment))
    if n1 == 0 or n1 == len(dataset):
        raise DegenerateDesign("both treatment arms need at least one unit")
    return n1


def residual_variance(dataset: Dataset, coefficients, design: Design | str = Design.TRIGGER,
                      intensity: str = "true", n_params: int | None = None) -> float:
    """Sum of squared residuals over ``N - p``.

    ``p`` is 2 for the baseline design and 3 for the trigger design unless
    ``n_params`` overrides it (the collinear reduced fit has 2).
    """
    design = Design(design)
    n = len(dataset)
    p = n_params if n_params is not None else (2 if design is Design.BASELINE else 3)
    if n <= p:
        raise InsufficientData(f"need more than {p} units, got {n}")
    y, t = dataset.mean_response, dataset.assignment
    if design is Design.BASELINE:
        a0, a1 = coefficients
        ssr = kernels.ssr_baseline(y, t, a0, a1)
    else:
        b0, b1, b2 = coefficients
        ssr = kernels.ssr_trigger(y, _intensity_column(dataset, intensity), t, b0, b1, b2)
    return ssr / (n - p)


def fit_baseline(dataset: Dataset, ci_level: float = 0.95) -> FitResult:
    """Difference in arm means, ignoring trigger information."""
    n1 = _check_arms(dataset)
    n = len(dataset)
    if n <= 2:
        raise InsufficientData("baseline fit needs at least 3 units")
    y, t = dataset.mean_response, dataset.assignment
    sums = kernels.trigger_sums(y, np.ones(n), t)
    mom = MomentSet.from_sums(sums)
    a0 = mom.mean_y_ctrl
    a1 = mom.mean_y_treat - mom.mean_y_ctrl
    s2 = residual_variance(dataset, (a0, a1), Design.BASELINE)
    inv = closed_form_inverse_2x2(mom)
    se = np.sqrt(np.maximum(np.diag(inv) * s2 / n, 0.0))
    se1 = float(se[1])
    dof = n - 2
    half = t_quantile(ci_level, dof) * se1
    assert n1 == sums[1]
    return FitResult(Method.BASELINE, (a0, a1), a1, s2, se1, _t_value(a1, se1),
                     (a1 - half, a1 + half), dof, ci_level, n, (float(se[0]), se1))


def _fit_trigger(dataset: Dataset, intensity: str, method: Method, ci_level: float) -> FitResult:
    x = _intensity_column(dataset, intensity)
    _check_arms(dataset)
    n = len(dataset)
    if not (x > 0).any():
        raise NoTriggers("every trigger intensity is zero; the treatment effect is 0")
    y, t = dataset.mean_response, dataset.assignment
    if x.min() == x.max():
        return _fit_constant_intensity(dataset, float(x[0]), intensity, method, ci_level)
    if n <= 3:
        raise InsufficientData("trigger fit needs at least 4 units")
    mom = MomentSet.from_sums(kernels.trigger_sums(y, x, t))
    inv = closed_form_inverse_3x3(mom)
    if mom.is_balanced:
        diff = (mom.mean_yr_treat - mom.mean_yr_ctrl) / mom.mean_r2
        v = mom.var_r
        beta = (mom.mean_r2 / v * mom.mean_y - mom.mean_r / v * mom.mean_yr,
                -mom.mean_r / v * mom.mean_y + mom.mean_yr / v - diff / 2,
                diff)
    else:
        beta = tuple(inv @ np.array([mom.mean_y, mom.mean_yr, mom.mean_tyr]))
    beta = tuple(float(b) for b in beta)
    s2 = residual_variance(dataset, beta, Design.TRIGGER, intensity)
    se = np.sqrt(np.maximum(np.diag(inv) * s2 / n, 0.0))
    mean_r = mom.mean_r
    ate = beta[2] * mean_r
    se_ate = float(se[2]) * abs(mean_r)
    dof = n - 3
    half = t_quantile(ci_level, dof) * se_ate
    return FitResult(method, beta, ate, s2, se_ate, _t_value(ate, se_ate),
                     (ate - half, ate + half), dof, ci_level, n, tuple(float(v) for v in se),
                     mean_r)


def _fit_constant_intensity(dataset: Dataset, c: float, intensity: str, method: Method,
                            ci_level: float) -> FitResult:
    # Columns 1 and r coincide up to scale: fit (1, c*T) and report beta1 = 0.
    n = len(dataset)
    if n <= 2:
        raise InsufficientData("reduced trigger fit needs at least 3 units")
    y, t = dataset.mean_response, dataset.assignment
    x = np.full(n, c)
    mom = MomentSet.from_sums(kernels.trigger_sums(y, x, t))
    b0 = mom.mean_y_ctrl
    b2 = (mom.mean_y_treat - mom.mean_y_ctrl) / c
    beta = (b0, 0.0, b2)
    s2 = residual_variance(dataset, beta, Design.TRIGGER, intensity, n_params=2)
    inv = closed_form_inverse_2x2(mom)
    se0 = math.sqrt(max(inv[0, 0] * s2 / n, 0.0))
    se2 = math.sqrt(max(inv[1, 1] * s2 / n, 0.0)) / c
    ate = b2 * c
    se_ate = se2 * c
    dof = n - 2
    half = t_quantile(ci_level, dof) * se_ate
    return FitResult(method, beta, ate, s2, se_ate, _t_value(ate, se_ate),
                     (ate - half, ate + half), dof, ci_level, n, (se0, 0.0, se2), c,
                     ("constant_intensity",))


def fit_full_knowledge(dataset: Dataset, ci_level: float = 0.95) -> FitResult:
    return _fit_trigger(dataset, "true", Method.FULL, ci_level)


def fit_partial_knowledge(dataset: Dataset, ci_level: float = 0.95) -> FitResult:
    return _fit_trigger(dataset, "estimated", Method.PARTIAL, ci_level)


FITTERS = {
    Method.BASELINE: fit_baseline,
    Method.FULL: fit_full_knowledge,
    Method.PARTIAL: fit_partial_knowledge,
}


def fit(dataset: Dataset, method: Method | str, ci_level: float = 0.95) -> FitResult:
    return FITTERS[Method.parse(method)](dataset, ci_level)


def noise_term_coefficient(params: ModelParams) -> float:
    """``(beta1 + beta2/2)^2 + beta2^2/4``: weight of E[eps^2] in the residual."""
    return (params.beta1 + params.beta2 / 2) ** 2 + params.beta2**2 / 4


def predicted_partial_residual_variance(sigma2_eta: float, params: ModelParams,
                                        e_eps2: float) -> float:
    """Large-N residual variance of the sampled-intensity fit.

    The approximation treats the intensity error as pure added noise; it runs
    high once ``e_eps2`` is no longer small next to ``Var(r)``.
    """
    if not (math.isfinite(sigma2_eta) and math.isfinite(e_eps2)):
        raise InvalidInput("inputs must be finite")
    if sigma2_eta < 0 or e_eps2 < 0:
        raise InvalidInput("variances must be nonnegative")
    return sigma2_eta + noise_term_coefficient(params) * e_eps2
