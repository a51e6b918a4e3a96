"""Cross-method comparison over many treatments.

Given two fits per treatment (typically baseline vs sampled-intensity), report
average standard errors, the relative SE reduction, significance tallies,
paired t-tests on SE and ATE differences, CI overlap and sign agreement.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientData, InvalidInput
from .estimators import FitResult, t_quantile

DEFAULT_LEVELS = (0.90, 0.95)


@dataclass(frozen=True)
class TreatmentComparison:
    treatment_id: str
    fit_a: FitResult
    fit_b: FitResult


@dataclass(frozen=True)
class ComparisonReport:
    n_treatments: int
    avg_se_a: float
    avg_se_b: float
    se_reduction_pct: float
    avg_abs_t_a: float
    avg_abs_t_b: float
    significant_a: dict[float, int]
    significant_b: dict[float, int]
    paired_t_se: float
    paired_t_p_value_se: float
    paired_t_ate: float
    paired_t_p_value_ate: float
    ci_overlap: dict[float, int]
    same_sign_count: int

    def to_rows(self) -> list[tuple[str, float | int]]:
        """Flat ``(key, value)`` pairs, level-specific keys suffixed ``_90`` / ``_95``."""
        rows: list[tuple[str, float | int]] = [
            ("n_treatments", self.n_treatments),
            ("avg_se_a", self.avg_se_a),
            ("avg_se_b", self.avg_se_b),
            ("se_reduction_pct", self.se_reduction_pct),
            ("avg_abs_t_a", self.avg_abs_t_a),
            ("avg_abs_t_b", self.avg_abs_t_b),
        ]
        for level in sorted(self.ci_overlap):
            tag = _level_tag(level)
            rows.append((f"significant_a_{tag}", self.significant_a[level]))
            rows.append((f"significant_b_{tag}", self.significant_b[level]))
            rows.append((f"ci_overlap_{tag}", self.ci_overlap[level]))
        rows += [
            ("paired_t_se", self.paired_t_se),
            ("paired_t_p_value_se", self.paired_t_p_value_se),
            ("paired_t_ate", self.paired_t_ate),
            ("paired_t_p_value_ate", self.paired_t_p_value_ate),
            ("same_sign_count", self.same_sign_count),
        ]
        return rows


def _level_tag(level: float) -> str:
    pct = level * 100
    return f"{pct:g}".replace(".", "_")


def se_reduction_pct(avg_se_a: float, avg_se_b: float) -> float:
    """Relative reduction of the average SE from method a to b, in percent."""
    if avg_se_a <= 0:
        raise InvalidInput("reference standard error must be positive")
    return 100.0 * (avg_se_a - avg_se_b) / avg_se_a


def paired_t_test(diffs: Sequence[float]) -> tuple[float, float]:
    """Two-sided one-sample t-test of ``mean(diffs) == 0``.

    Zero spread gives ``(0, 1)`` for a zero mean and ``(+-inf, 0)`` otherwise.
    """
    d = np.asarray(diffs, dtype=float)
    n = d.size
    if n < 2:
        raise InsufficientData("paired t-test needs at least 2 differences")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), n - 1))
    return t, min(p, 1.0)


def intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Closed-interval intersection; touching endpoints overlap."""
    return a[0] <= b[1] and b[0] <= a[1]


def _interval(fit: FitResult, level: float) -> tuple[float, float]:
    if fit.se_ate is None or not math.isfinite(fit.se_ate):
        raise InvalidInput("comparison fit is missing its standard error")
    return fit.interval(level)


def ci_overlap_count(comparisons: Sequence[TreatmentComparison], level: float) -> int:
    return sum(intervals_overlap(_interval(c.fit_a, level), _interval(c.fit_b, level))
               for c in comparisons)


def is_significant(fit: FitResult, level: float) -> bool:
    return abs(fit.t_value) > t_quantile(level, fit.dof)


def build_comparison_report(comparisons: Sequence[TreatmentComparison],
                            levels: Sequence[float] = DEFAULT_LEVELS) -> ComparisonReport:
    if not comparisons:
        raise InsufficientData("no treatments to compare")
    se_a = np.array([c.fit_a.se_ate for c in comparisons], dtype=float)
    se_b = np.array([c.fit_b.se_ate for c in comparisons], dtype=float)
    if not (np.isfinite(se_a).all() and np.isfinite(se_b).all()):
        raise InvalidInput("every fit needs a finite standard error")
    ate_a = np.array([c.fit_a.ate for c in comparisons], dtype=float)
    ate_b = np.array([c.fit_b.ate for c in comparisons], dtype=float)
    n = len(comparisons)
    if n >= 2:
        t_se, p_se = paired_t_test(se_a - se_b)
        t_ate, p_ate = paired_t_test(ate_a - ate_b)
    else:
        # a single pair carries no spread; report no evidence of a difference
        t_se, p_se = (0.0, 1.0) if se_a[0] == se_b[0] else (math.nan, math.nan)
        t_ate, p_ate = (0.0, 1.0) if ate_a[0] == ate_b[0] else (math.nan, math.nan)
    avg_a, avg_b = float(se_a.mean()), float(se_b.mean())
    return ComparisonReport(
        n_treatments=n,
        avg_se_a=avg_a,
        avg_se_b=avg_b,
        se_reduction_pct=se_reduction_pct(avg_a, avg_b) if avg_a > 0 else math.nan,
        avg_abs_t_a=float(np.mean([abs(c.fit_a.t_value) for c in comparisons])),
        avg_abs_t_b=float(np.mean([abs(c.fit_b.t_value) for c in comparisons])),
        significant_a={lv: sum(is_significant(c.fit_a, lv) for c in comparisons) for lv in levels},
        significant_b={lv: sum(is_significant(c.fit_b, lv) for c in comparisons) for lv in levels},
        paired_t_se=t_se,
        paired_t_p_value_se=p_se,
        paired_t_ate=t_ate,
        paired_t_p_value_ate=p_ate,
        ci_overlap={lv: ci_overlap_count(comparisons, lv) for lv in levels},
        same_sign_count=int(np.sum(np.sign(ate_a) == np.sign(ate_b))),
    )
