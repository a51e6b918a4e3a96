"""Command line interface.

Exit status is 0 on success, 1 for domain errors (reported on stderr as a JSON
object with the error class name) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analytics import TreatmentComparison, build_comparison_report
from .errors import InvalidInput, TrigevalError
from .estimators import Method, fit
from .io import (dump_jsonl, fit_record, open_output, parse_fits_jsonl, parse_observation_csv,
                 parse_unit_csv, write_key_values, write_observation_arrays, write_unit_csv)
from .model import CountLaw, GenConfig, ModelParams, NoiseSpec, TriggerLaw, generate_dataset, \
    generate_observation_level
from .sampling import SamplingPlan, ate_bias_bound, estimate_intensities, variance_gap_bound
from .sim import FigureTarget, SweepConfig, emit_figure_data, figure_csv, run_sweep

log = logging.getLogger("trigeval")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg})") from None


def _trigger_law(text: str) -> TriggerLaw:
    """``uniform:LO,HI`` | ``constant:P`` | ``two_point:LO,HI[,P_HIGH]``."""
    kind, _, args = text.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise InvalidInput(f"bad trigger law {text!r}") from None
    if kind == "uniform":
        return TriggerLaw.uniform(*(vals or [0.0, 1.0]))
    if kind == "constant" and len(vals) == 1:
        return TriggerLaw.constant(vals[0])
    if kind == "two_point" and len(vals) in (2, 3):
        return TriggerLaw.two_point(*vals)
    raise InvalidInput(f"bad trigger law {text!r}")


def cmd_simulate(args) -> None:
    cfg = GenConfig.from_dict(_load_json(args.config)) if args.config else GenConfig()
    overrides = {"seed": args.seed}
    if args.n_units is not None:
        overrides["n_units"] = args.n_units
    if any(v is not None for v in (args.beta0, args.beta1, args.beta2)):
        p = cfg.params
        overrides["params"] = ModelParams(
            p.beta0 if args.beta0 is None else args.beta0,
            p.beta1 if args.beta1 is None else args.beta1,
            p.beta2 if args.beta2 is None else args.beta2)
    if args.trigger_law:
        overrides["trigger_law"] = _trigger_law(args.trigger_law)
    if args.n_obs is not None:
        overrides["obs_law"] = CountLaw.constant(args.n_obs)
    if args.sigma is not None:
        overrides["noise"] = (NoiseSpec.heterogeneous_around(args.sigma) if args.heterogeneous
                              else NoiseSpec.homogeneous(args.sigma))
    cfg = cfg.replace(**overrides)
    if args.observations:
        ds, ids, index, responses, statuses = generate_observation_level(cfg)
        write_observation_arrays(ids, index, responses, statuses, args.observations)
    else:
        ds = generate_dataset(cfg)
    write_unit_csv(ds, args.out)
    log.info("simulated %d units (seed %d)", len(ds), cfg.seed)


def cmd_estimate(args) -> None:
    ds = parse_unit_csv(args.data)
    methods = list(Method) if "all" in args.method else [Method.parse(m) for m in args.method]
    fits = [fit(ds, m, args.ci_level) for m in methods]
    if args.format == "csv":
        rows = []
        for f in fits:
            prefix = f.method.value
            rows += [(f"{prefix}_ate", f.ate), (f"{prefix}_se_ate", f.se_ate),
                     (f"{prefix}_t_value", f.t_value), (f"{prefix}_ci_lower", f.ci[0]),
                     (f"{prefix}_ci_upper", f.ci[1]), (f"{prefix}_dof", f.dof),
                     (f"{prefix}_residual_variance", f.residual_variance)]
        write_key_values(rows, args.out)
    else:
        dump_jsonl((fit_record(f, args.treatment_id) for f in fits), args.out)


def cmd_sample_triggers(args) -> None:
    plan = SamplingPlan(args.m, args.mode, args.seed)
    ds = parse_unit_csv(args.units)
    estimates = estimate_intensities(parse_observation_csv(args.observations), plan)
    missing = [u for u in ds.unit_ids if u not in estimates]
    if missing:
        raise InvalidInput(f"no observations for unit {missing[0]!r}")
    ds = ds.with_estimated_intensity([estimates[u] for u in ds.unit_ids])
    write_unit_csv(ds, args.out)


FIGURE_FILES = {
    FigureTarget.ATE_VS_INTENSITY: "ate_vs_intensity.csv",
    FigureTarget.SE_VS_INTENSITY: "se_vs_intensity.csv",
    FigureTarget.BIAS_VS_M: "bias_vs_m.csv",
    FigureTarget.SE_VS_M: "se_vs_m.csv",
}


def cmd_sweep(args) -> None:
    raw = _load_json(args.config)
    raw.setdefault("gen", {})["seed"] = args.seed
    config = SweepConfig.from_dict(raw)
    report = run_sweep(config, workers=args.workers)
    log.info("sweep finished in %.2fs", report.wall_time)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(text, encoding="utf-8")
    for target, name in FIGURE_FILES.items():
        try:
            rows = emit_figure_data(report, target)
        except InvalidInput:
            continue
        (out / name).write_text(figure_csv(rows), encoding="utf-8")


def cmd_compare(args) -> None:
    a = parse_fits_jsonl(args.a)
    b = parse_fits_jsonl(args.b)
    if len(a) != len(b):
        raise InvalidInput(f"fit tables differ in length ({len(a)} vs {len(b)})")
    keyed = all(tid is not None for tid, _ in a + b)
    if keyed:
        b_by_id = {tid: f for tid, f in b}
        if len(b_by_id) != len(b) or set(b_by_id) != {tid for tid, _ in a}:
            raise InvalidInput("treatment ids of the two fit tables do not match")
        pairs = [TreatmentComparison(tid, fa, b_by_id[tid]) for tid, fa in a]
    else:
        pairs = [TreatmentComparison(str(i), fa, fb) for i, ((_, fa), (_, fb))
                 in enumerate(zip(a, b))]
    report = build_comparison_report(pairs, tuple(args.levels))
    write_key_values(report.to_rows(), args.out, args.format)


def cmd_bounds(args) -> None:
    rows = [("variance_gap_bound", variance_gap_bound(args.beta1, args.beta2, args.m))]
    if args.m >= 2:
        rows.append(("ate_bias_bound", ate_bias_bound(args.beta2, args.m)))
    write_key_values(rows, args.out, args.format)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trigeval", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic experiment")
    s.add_argument("--config", help="generator config JSON")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--n-units", type=int)
    s.add_argument("--beta0", type=float)
    s.add_argument("--beta1", type=float)
    s.add_argument("--beta2", type=float)
    s.add_argument("--trigger-law", help="uniform:LO,HI | constant:P | two_point:LO,HI[,P]")
    s.add_argument("--n-obs", type=int, help="constant observations per unit")
    s.add_argument("--sigma", type=float, help="per-observation noise sd")
    s.add_argument("--heterogeneous", action="store_true",
                   help="per-unit sigma uniform on [0.5, 1.5] x --sigma")
    s.add_argument("--observations", help="also write the observation-level CSV here")
    s.add_argument("--out", required=True, help="unit CSV path or -")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="fit estimators to a unit CSV")
    e.add_argument("--data", required=True)
    e.add_argument("--method", action="append", required=True,
                   choices=["baseline", "full", "partial", "all"])
    e.add_argument("--ci-level", type=float, default=0.95)
    e.add_argument("--treatment-id")
    e.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("sample-triggers", help="estimate intensities by sampling observations")
    t.add_argument("--observations", required=True)
    t.add_argument("--units", required=True, help="unit CSV to fill")
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--mode", choices=["with_replacement", "without_replacement"],
                   default="with_replacement")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_sample_triggers)

    w = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    w.add_argument("--config", required=True, help="sweep config JSON")
    w.add_argument("--seed", type=int, required=True)
    w.add_argument("--workers", type=int, help="process count (default TRIGEVAL_THREADS or all cores)")
    w.add_argument("--out", required=True, help="output directory, or - for the report only")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="compare two fit tables treatment by treatment")
    c.add_argument("--a", required=True, help="reference fits (JSON lines)")
    c.add_argument("--b", required=True, help="alternative fits (JSON lines)")
    c.add_argument("--levels", type=float, nargs="+", default=[0.90, 0.95])
    c.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bounds", help="bias and variance bounds for sampled intensities")
    b.add_argument("--beta1", type=float, required=True)
    b.add_argument("--beta2", type=float, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except TrigevalError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
