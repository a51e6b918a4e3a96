"""CSV and JSON-lines formats.

Unit CSV: ``unit_id,assignment,n_obs,mean_response[,trigger_intensity]
[,estimated_trigger_intensity]``. Observation CSV:
``unit_id,response[,trigger_status]``. UTF-8, comma separated, ``\\n`` line
endings, header required; blank optional cells mean "absent". Floats are
written with 17 significant digits so every file re-parses bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from collections.abc import Iterable, Sequence
from contextlib import contextmanager
from typing import IO, Any

import numpy as np

from .errors import DuplicateUnit, ParseError, SchemaError
from .estimators import FitResult
from .model import Dataset, ObservationRecord

UNIT_REQUIRED = ("unit_id", "assignment", "n_obs", "mean_response")
UNIT_OPTIONAL = ("trigger_intensity", "estimated_trigger_intensity")
OBS_REQUIRED = ("unit_id", "response")
OBS_OPTIONAL = ("trigger_status",)


def fmt(value: float) -> str:
    return format(float(value), ".17g")


@contextmanager
def open_output(target: str | os.PathLike | IO[str]):
    """Yield a text handle for a path, ``-`` (stdout) or an open file."""
    if hasattr(target, "write"):
        yield target
    elif str(target) == "-":
        yield sys.stdout
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            yield fh


@contextmanager
def _open_input(source):
    if hasattr(source, "read"):
        yield source
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            yield fh


def _header(reader, required, optional, path) -> dict[str, int]:
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{path}: empty file, header row required") from None
    cols = [h.strip() for h in header]
    if len(set(cols)) != len(cols):
        raise SchemaError(f"{path}: duplicate column in header")
    for name in required:
        if name not in cols:
            raise SchemaError(f"{path}: missing mandatory column {name!r}", column=name)
    return {c: i for i, c in enumerate(cols) if c in required or c in optional}


def _cell(row, index, line, name, path) -> str:
    if index >= len(row):
        raise ParseError(f"{path}:{line}: missing value for {name!r}", row=line)
    return row[index].strip()


def _parse_float(text, line, name, path) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{path}:{line}: {name} {text!r} is not a number", row=line) from None
    if not math.isfinite(v):
        raise ParseError(f"{path}:{line}: {name} must be finite", row=line)
    return v


def _parse_intensity(text, line, name, path) -> float:
    if text == "":
        return math.nan
    v = _parse_float(text, line, name, path)
    if not 0.0 <= v <= 1.0:
        raise ParseError(f"{path}:{line}: {name} {v} outside [0, 1]", row=line)
    return v


def parse_unit_csv(path) -> Dataset:
    label = getattr(path, "name", path)
    ids, assign, n_obs, y = [], [], [], []
    opt: dict[str, list[float]] = {c: [] for c in UNIT_OPTIONAL}
    seen: set[str] = set()
    with _open_input(path) as fh:
        reader = csv.reader(fh)
        cols = _header(reader, UNIT_REQUIRED, UNIT_OPTIONAL, label)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            uid = _cell(row, cols["unit_id"], line, "unit_id", label)
            if uid == "":
                raise ParseError(f"{label}:{line}: empty unit_id", row=line)
            if uid in seen:
                raise DuplicateUnit(f"{label}:{line}: duplicate unit_id {uid!r}")
            seen.add(uid)
            a = _cell(row, cols["assignment"], line, "assignment", label)
            if a not in ("0", "1"):
                raise ParseError(f"{label}:{line}: assignment {a!r} must be 0 or 1", row=line)
            n_text = _cell(row, cols["n_obs"], line, "n_obs", label)
            try:
                n = int(n_text)
            except ValueError:
                raise ParseError(f"{label}:{line}: n_obs {n_text!r} is not an integer",
                                 row=line) from None
            if n < 1:
                raise ParseError(f"{label}:{line}: n_obs must be >= 1", row=line)
            ids.append(uid)
            assign.append(int(a))
            n_obs.append(n)
            y.append(_parse_float(_cell(row, cols["mean_response"], line, "mean_response", label),
                                  line, "mean_response", label))
            for c in UNIT_OPTIONAL:
                opt[c].append(_parse_intensity(_cell(row, cols[c], line, c, label), line, c, label)
                              if c in cols else math.nan)
    return Dataset(
        ids, np.array(assign, dtype=np.int8), np.array(n_obs, dtype=np.int64),
        np.array(y, dtype=float),
        opt["trigger_intensity"] if "trigger_intensity" in cols else None,
        opt["estimated_trigger_intensity"] if "estimated_trigger_intensity" in cols else None,
    )


def write_unit_csv(dataset: Dataset, target) -> None:
    cols = list(UNIT_REQUIRED)
    extra = []
    if dataset.true_trigger_intensity is not None:
        cols.append("trigger_intensity")
        extra.append(dataset.true_trigger_intensity)
    if dataset.estimated_trigger_intensity is not None:
        cols.append("estimated_trigger_intensity")
        extra.append(dataset.estimated_trigger_intensity)
    lines = [",".join(cols)]
    for i, uid in enumerate(dataset.unit_ids):
        cells = [uid, str(int(dataset.assignment[i])), str(int(dataset.n_obs[i])),
                 fmt(dataset.mean_response[i])]
        cells += ["" if math.isnan(col[i]) else fmt(col[i]) for col in extra]
        lines.append(",".join(cells))
    with open_output(target) as fh:
        fh.write("\n".join(lines) + "\n")


def parse_observation_csv(path) -> list[ObservationRecord]:
    label = getattr(path, "name", path)
    out = []
    with _open_input(path) as fh:
        reader = csv.reader(fh)
        cols = _header(reader, OBS_REQUIRED, OBS_OPTIONAL, label)
        has_status = "trigger_status" in cols
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            uid = _cell(row, cols["unit_id"], line, "unit_id", label)
            if uid == "":
                raise ParseError(f"{label}:{line}: empty unit_id", row=line)
            y = _parse_float(_cell(row, cols["response"], line, "response", label),
                             line, "response", label)
            status = None
            if has_status:
                s = _cell(row, cols["trigger_status"], line, "trigger_status", label)
                if s in ("0", "1"):
                    status = int(s)
                elif s != "":
                    raise ParseError(f"{label}:{line}: trigger_status {s!r} must be 0 or 1",
                                     row=line)
            out.append(ObservationRecord(uid, y, status))
    return out


def write_observation_csv(observations: Iterable[ObservationRecord], target) -> None:
    observations = list(observations)
    with_status = any(o.trigger_status is not None for o in observations)
    buf = io.StringIO()
    buf.write("unit_id,response,trigger_status\n" if with_status else "unit_id,response\n")
    for o in observations:
        if with_status:
            s = "" if o.trigger_status is None else str(o.trigger_status)
            buf.write(f"{o.unit_id},{fmt(o.response)},{s}\n")
        else:
            buf.write(f"{o.unit_id},{fmt(o.response)}\n")
    with open_output(target) as fh:
        fh.write(buf.getvalue())


def write_observation_arrays(unit_ids: Sequence[str], unit_index: np.ndarray,
                             responses: np.ndarray, statuses: np.ndarray, target) -> None:
    """Stream flat observation columns to CSV without building records."""
    with open_output(target) as fh:
        fh.write("unit_id,response,trigger_status\n")
        chunk = 65536
        for start in range(0, len(responses), chunk):
            stop = start + chunk
            fh.write("".join(
                f"{unit_ids[i]},{fmt(y)},{s}\n"
                for i, y, s in zip(unit_index[start:stop].tolist(),
                                   responses[start:stop].tolist(),
                                   statuses[start:stop].tolist())))


def fit_record(fit: FitResult, treatment_id: str | None = None) -> dict[str, Any]:
    d = fit.to_dict()
    if treatment_id is not None:
        d = {"treatment_id": treatment_id, **d}
    return d


def dump_jsonl(records: Iterable[dict[str, Any]], target) -> None:
    with open_output(target) as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=False) + "\n")


def parse_fits_jsonl(path) -> list[tuple[str | None, FitResult]]:
    out = []
    label = getattr(path, "name", path)
    with _open_input(path) as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                rec = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{label}:{line}: {exc.msg}", row=line) from None
            if not isinstance(rec, dict):
                raise ParseError(f"{label}:{line}: expected a JSON object", row=line)
            out.append((rec.get("treatment_id"), FitResult.from_dict(rec)))
    return out


def write_key_values(rows: Iterable[tuple[str, Any]], target, fmt_name: str = "csv") -> None:
    rows = list(rows)

    def text(v):
        return fmt(v) if isinstance(v, float) else str(v)

    with open_output(target) as fh:
        if fmt_name == "jsonl":
            fh.write(json.dumps({k: v for k, v in rows}) + "\n")
        else:
            fh.write("key,value\n")
            for k, v in rows:
                fh.write(f"{k},{text(v)}\n")
