"""Monte Carlo sweeps comparing the three estimators.

Every replication draws a fresh dataset from ``SeedSequence([seed, 1, rep])``
and, for the sampled-intensity estimator, samples intensities from
``SeedSequence([seed, 2, rep, grid_index])``. The dataset seed does not depend
on the grid point, so grid points share common random numbers, and results are
keyed by replication index, so the report does not depend on worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import InvalidInput, TrigevalError
from .estimators import FITTERS, Method
from .model import Dataset, GenConfig, simulate_units, unit_ids_for
from .sampling import SamplingPlan, ate_bias_bound, sample_trigger_counts, variance_gap_bound

_U64 = (1 << 64) - 1


class SweepAxis(str, Enum):
    TRIGGER_INTENSITY = "trigger_intensity"
    SAMPLE_BUDGET_M = "sample_budget_m"
    NOISE_SCALE = "noise_scale"


class FigureTarget(str, Enum):
    ATE_VS_INTENSITY = "ate_vs_intensity"
    SE_VS_INTENSITY = "se_vs_intensity"
    BIAS_VS_M = "bias_vs_m"
    SE_VS_M = "se_vs_m"


# target -> (required axis, metric emitted)
_FIGURES = {
    FigureTarget.ATE_VS_INTENSITY: (SweepAxis.TRIGGER_INTENSITY, "mean_ate"),
    FigureTarget.SE_VS_INTENSITY: (SweepAxis.TRIGGER_INTENSITY, "empirical_se"),
    FigureTarget.BIAS_VS_M: (SweepAxis.SAMPLE_BUDGET_M, "empirical_bias"),
    FigureTarget.SE_VS_M: (SweepAxis.SAMPLE_BUDGET_M, "empirical_se"),
}

FIGURE_HEADER = ("axis", "estimator", "metric", "value")


@dataclass(frozen=True)
class SweepConfig:
    gen: GenConfig
    axis: SweepAxis
    grid: tuple[float, ...]
    replications: int
    estimators: tuple[Method, ...] = (Method.BASELINE, Method.FULL)
    plan: SamplingPlan | None = None
    ci_level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "axis", SweepAxis(self.axis))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "estimators",
                           tuple(dict.fromkeys(Method.parse(e) for e in self.estimators)))
        if not self.grid:
            raise InvalidInput("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidInput("sweep grid must be strictly increasing")
        if self.replications < 2:
            raise InvalidInput("replications must be >= 2")
        if not self.estimators:
            raise InvalidInput("no estimators selected")
        if Method.PARTIAL in self.estimators and self.plan is None:
            raise InvalidInput("the partial-knowledge estimator needs a sampling plan")
        if self.axis is SweepAxis.SAMPLE_BUDGET_M:
            if self.plan is None:
                raise InvalidInput("an m sweep needs a sampling plan")
            if any(g != int(g) or g < 1 for g in self.grid):
                raise InvalidInput("m grid values must be positive integers")
        for i in range(len(self.grid)):
            self.point(i)  # validates every grid value up front

    def point(self, index: int) -> tuple[GenConfig, SamplingPlan | None]:
        x = self.grid[index]
        gen, plan = self.gen, self.plan
        if self.axis is SweepAxis.TRIGGER_INTENSITY:
            gen = gen.replace(trigger_law=gen.trigger_law.with_mean(x))
        elif self.axis is SweepAxis.NOISE_SCALE:
            gen = gen.replace(noise=gen.noise.scaled(x))
        else:
            plan = plan.with_m(int(x))
        return gen, plan

    def to_dict(self) -> dict[str, Any]:
        d = {
            "gen": self.gen.to_dict(),
            "axis": self.axis.value,
            "grid": list(self.grid),
            "replications": self.replications,
            "estimators": [e.value for e in self.estimators],
            "ci_level": self.ci_level,
        }
        if self.plan is not None:
            d["plan"] = {"m": self.plan.m, "mode": self.plan.mode.value, "seed": self.plan.seed}
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SweepConfig:
        try:
            plan = d.get("plan")
            return cls(
                gen=GenConfig.from_dict(d.get("gen", {})),
                axis=SweepAxis(d["axis"]),
                grid=tuple(d["grid"]),
                replications=int(d["replications"]),
                estimators=tuple(d.get("estimators", ("baseline", "full"))),
                plan=None if plan is None else SamplingPlan(
                    int(plan["m"]), plan.get("mode", "with_replacement"), int(plan.get("seed", 0))),
                ci_level=float(d.get("ci_level", 0.95)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TrigevalError):
                raise
            raise InvalidInput(f"bad sweep config: {exc}") from exc


@dataclass
class SweepRow:
    axis_value: float
    estimator: Method
    true_ate: float
    n_ok: int
    n_failed: int
    failures: dict[str, int]
    mean_ate: float
    empirical_bias: float
    empirical_se: float
    bias_se: float
    mean_reported_se: float
    mean_residual_variance: float
    bias_bound: float | None = None
    variance_gap_bound: float | None = None

    def to_dict(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["estimator"] = self.estimator.value
        return d


@dataclass
class SweepReport:
    config: SweepConfig
    rows: list[SweepRow]
    true_ate_source: str
    wall_time: float = 0.0
    # (grid index, method) -> per-replication ATE, NaN where the fit failed
    replicate_ates: dict[tuple[int, Method], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def seed(self) -> int:
        return self.config.gen.seed

    def row(self, axis_value: float, estimator: Method | str) -> SweepRow:
        est = Method.parse(estimator)
        for r in self.rows:
            if r.axis_value == axis_value and r.estimator is est:
                return r
        raise KeyError((axis_value, est))

    def to_dict(self, include_wall_time: bool = False) -> dict[str, Any]:
        d = {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "true_ate_source": self.true_ate_source,
            "rows": [r.to_dict() for r in self.rows],
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        return d


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("TRIGEVAL_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _stream(*path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([p & _U64 for p in path]))


def _run_block(config: SweepConfig, grid_index: int, start: int, stop: int):
    gen, plan = config.point(grid_index)
    ids = tuple(unit_ids_for(gen.n_units))
    methods = config.estimators
    k = stop - start
    ate = {m: np.full(k, np.nan) for m in methods}
    se = {m: np.full(k, np.nan) for m in methods}
    resvar = {m: np.full(k, np.nan) for m in methods}
    errors: dict[Method, list[str]] = {m: [] for m in methods}
    for j, rep in enumerate(range(start, stop)):
        units = simulate_units(gen, _stream(gen.seed, 1, rep))
        r_est = None
        if Method.PARTIAL in methods:
            r_est = sample_trigger_counts(units.n_obs, units.trigger_count, plan,
                                          _stream(gen.seed, 2, rep, grid_index))
        ds = Dataset._trusted(ids, units.assignment, units.n_obs, units.mean_response,
                              units.intensity, r_est)
        for m in methods:
            try:
                res = FITTERS[m](ds, config.ci_level)
            except TrigevalError as exc:
                errors[m].append(exc.code)
                continue
            ate[m][j] = res.ate
            se[m][j] = res.se_ate
            resvar[m][j] = res.residual_variance
    return grid_index, start, ate, se, resvar, errors


def _blocks(config: SweepConfig, workers: int):
    size = max(1, math.ceil(config.replications / (4 * workers))) if workers > 1 \
        else config.replications
    for g in range(len(config.grid)):
        for start in range(0, config.replications, size):
            yield g, start, min(start + size, config.replications)


def run_sweep(config: SweepConfig, workers: int | None = None) -> SweepReport:
    """Run every grid point's replications and aggregate per estimator."""
    t0 = time.perf_counter()
    workers = resolve_workers(workers)
    n_grid, reps, methods = len(config.grid), config.replications, config.estimators
    ate = {(g, m): np.full(reps, np.nan) for g in range(n_grid) for m in methods}
    se = {key: np.full(reps, np.nan) for key in ate}
    resvar = {key: np.full(reps, np.nan) for key in ate}
    failures: dict[tuple[int, Method], dict[str, int]] = {key: {} for key in ate}

    def absorb(result):
        g, start, a, s, v, errs = result
        for m in methods:
            stop = start + len(a[m])
            ate[g, m][start:stop] = a[m]
            se[g, m][start:stop] = s[m]
            resvar[g, m][start:stop] = v[m]
            for code in errs[m]:
                failures[g, m][code] = failures[g, m].get(code, 0) + 1

    blocks = list(_blocks(config, workers))
    if workers == 1:
        for b in blocks:
            absorb(_run_block(config, *b))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, config, *b) for b in blocks]
            for f in futures:
                absorb(f.result())

    rows = []
    beta1, beta2 = config.gen.params.beta1, config.gen.params.beta2
    for g, x in enumerate(config.grid):
        gen, plan = config.point(g)
        true_ate = beta2 * gen.trigger_law.mean
        for m in methods:
            a = ate[g, m]
            ok = ~np.isnan(a)
            n_ok = int(ok.sum())
            vals = a[ok]
            mean_ate = float(vals.mean()) if n_ok else math.nan
            emp_se = float(vals.std(ddof=1)) if n_ok > 1 else math.nan
            row = SweepRow(
                axis_value=x,
                estimator=m,
                true_ate=true_ate,
                n_ok=n_ok,
                n_failed=reps - n_ok,
                failures=dict(sorted(failures[g, m].items())),
                mean_ate=mean_ate,
                empirical_bias=mean_ate - true_ate,
                empirical_se=emp_se,
                bias_se=emp_se / math.sqrt(n_ok) if n_ok > 1 else math.nan,
                mean_reported_se=float(se[g, m][ok].mean()) if n_ok else math.nan,
                mean_residual_variance=float(resvar[g, m][ok].mean()) if n_ok else math.nan,
            )
            if m is Method.PARTIAL:
                if plan.m >= 2:
                    row.bias_bound = ate_bias_bound(beta2, plan.m)
                row.variance_gap_bound = variance_gap_bound(beta1, beta2, plan.m)
            rows.append(row)
    return SweepReport(config, rows, "analytic", time.perf_counter() - t0,
                       {key: ate[key] for key in ate})


def emit_figure_data(report: SweepReport, target: FigureTarget | str,
                     estimators=None) -> list[tuple[float, str, str, float]]:
    """Long-format ``(axis, estimator, metric, value)`` rows for one figure."""
    target = FigureTarget(target)
    axis, metric = _FIGURES[target]
    if report.config.axis is not axis:
        raise InvalidInput(f"{target.value} needs a {axis.value} sweep, "
                           f"report is a {report.config.axis.value} sweep")
    chosen = report.config.estimators if estimators is None else \
        tuple(Method.parse(e) for e in estimators)
    if not chosen:
        raise InvalidInput("no estimators selected for the figure")
    missing = set(chosen) - set(report.config.estimators)
    if missing:
        raise InvalidInput(f"estimators not in report: {sorted(m.value for m in missing)}")
    return [(r.axis_value, r.estimator.value, metric, float(getattr(r, metric)))
            for r in report.rows if r.estimator in chosen]


def format_float(value: float) -> str:
    return format(value, ".17g")


def figure_csv(rows) -> str:
    lines = [",".join(FIGURE_HEADER)]
    for axis_value, estimator, metric, value in rows:
        lines.append(f"{format_float(axis_value)},{estimator},{metric},{format_float(value)}")
    return "\n".join(lines) + "\n"
