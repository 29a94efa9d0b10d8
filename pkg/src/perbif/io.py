"""Deterministic CSV / JSON serialization of solutions and verification reports.

Floats are written with 17 significant digits ("%.17g"), which round-trips
every double; JSON keys keep a fixed order.  Identical inputs therefore give
byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping

import numpy as np

from .continuation import PeriodicSolution, SolutionDiagnostics, ZeroCrossings
from .model import ProblemParams

SCHEMA_VERSION = 1


class MalformedDocument(ValueError):
    pass


def format_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    s = "%.17g" % x
    return "0" if s == "-0" else s


def _encode(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, Mapping):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _encode(val, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        # rows of scalars stay on one line
        if all(isinstance(v, Mapping) and all(not isinstance(x, (Mapping, list)) for x in v.values())
               for v in obj):
            out.append("[\n")
            for i, row in enumerate(obj):
                out.append(pad + "{" + ", ".join(
                    f"{json.dumps(str(k))}: " + _scalar(v) for k, v in row.items()) + "}")
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(end + "]")
            return
        out.append("[\n")
        for i, val in enumerate(obj):
            out.append(pad)
            _encode(val, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _scalar(v):
    out = []
    _encode(v, 0, 0, out)
    return "".join(out)


def dumps(obj, indent: int = 2) -> str:
    out = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def report_to_dict(report) -> dict:
    return {
        "ode_residual_max": report.ode_residual_max,
        "energy_drift": report.energy_drift,
        "identity_2_9_relative_residual": report.identity_2_9_relative_residual,
        "wirtinger_margin": report.wirtinger_margin,
        "zero_simplicity_min": report.zero_simplicity_min,
        "zero_count": report.zero_count,
        "expected_zero_count": report.expected_zero_count,
        "thresholds": report.thresholds.as_dict(),
        "passes": dict(report.passes),
        "passed": report.passed,
    }


def solution_document(sol: PeriodicSolution, report) -> dict:
    p = sol.params
    return {
        "schema_version": SCHEMA_VERSION,
        "params": {"q": p.q, "mu": p.mu, "T": p.T},
        "branch_k": sol.k,
        "u_max": sol.a,
        "u_min": sol.b,
        "energy": sol.E,
        "zero_count": sol.zero_count,
        "verification": report_to_dict(report),
        "samples": [{"t": t, "u": u, "du": du} for t, u, du in zip(sol.t, sol.u, sol.du)],
    }


def _get(doc, key, kind):
    if key not in doc:
        raise MalformedDocument(f"missing field {key!r}")
    val = doc[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise MalformedDocument(f"field {key!r} must be a finite number")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise MalformedDocument(f"field {key!r} must be an integer")
        return val
    if not isinstance(val, kind):
        raise MalformedDocument(f"field {key!r} has the wrong type")
    return val


def solution_from_document(doc) -> PeriodicSolution:
    """Rebuild a solution from a parsed document; raises :class:`MalformedDocument`."""
    if not isinstance(doc, dict):
        raise MalformedDocument("document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise MalformedDocument(f"unsupported schema_version {version!r}")
    params = _get(doc, "params", dict)
    try:
        p = ProblemParams(_get(params, "q", float), _get(params, "mu", float),
                          _get(params, "T", float))
    except ValueError as exc:
        raise MalformedDocument(f"invalid params: {exc}") from exc
    k = _get(doc, "branch_k", int)
    if k < 0:
        raise MalformedDocument("branch_k must be nonnegative")
    samples = _get(doc, "samples", list)
    if len(samples) < 8:
        raise MalformedDocument("too few samples")
    if not all(isinstance(s, dict) for s in samples):
        raise MalformedDocument("samples must be objects with t, u, du")
    arr = np.array([[_get(s, "t", float), _get(s, "u", float), _get(s, "du", float)]
                    for s in samples])
    N = len(arr)
    grid = p.T * np.arange(N) / N
    if np.max(np.abs(arr[:, 0] - grid)) > 1e-12 * p.T:
        raise MalformedDocument("samples are not uniformly spaced on [0, T)")
    zero_count = _get(doc, "zero_count", int)
    return PeriodicSolution(p, k, _get(doc, "u_max", float), _get(doc, "u_min", float),
                            arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(),
                            _get(doc, "energy", float), zero_count,
                            ZeroCrossings(np.empty(0), np.empty(0)), SolutionDiagnostics())


def load_solution(path) -> PeriodicSolution:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"cannot read {path}: {exc}") from exc
    return solution_from_document(doc)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
