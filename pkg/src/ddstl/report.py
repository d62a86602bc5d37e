"""Result bundles: CSV series, plot data and the versioned report.json."""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .lti import write_series_csv
from .stl.formula import Always, And, Formula, Or, Predicate

SCHEMA_VERSION = "1.0"


def load_schema() -> dict:
    return json.loads((resources.files("ddstl") / "data" / "report.schema.json").read_text())


def fahrenheit_to_celsius(v):
    return (np.asarray(v, dtype=float) - 32.0) * 5.0 / 9.0


def _single_output(p: Predicate):
    nz = [i for i, c in enumerate(p.coeffs) if c != 0.0]
    if len(nz) != 1 or p.sched:
        return None
    return nz[0], p.coeffs[nz[0]], p.offset


def _magnitude(node, kind):
    """Recognize the two-sided shapes written as ``abs(y) >= r`` (Or) or ``abs(y) <= r`` (And)."""
    if len(node.children) != 2 or not all(isinstance(c, Predicate) for c in node.children):
        return None
    a, b = (_single_output(c) for c in node.children)
    if a is None or b is None or a[0] != b[0] or a[1] != -b[1] or a[2] != b[2]:
        return None
    r = -a[2] / abs(a[1]) if kind == "or" else a[2] / abs(a[1])
    return a[0], r


def spec_bands(phi: Formula, L: int, n_y: int = 1) -> dict:
    """Per-step bounds that ``phi`` imposes outright through always/and nesting.

    Returns ``{channel: (low, high)}`` with arrays of length ``L + 1`` (NaN where
    unconstrained).  Bounds written with ``abs`` are reported on the magnitude.
    Channels without any bound are omitted.
    """
    low = np.full((n_y, L + 1), np.nan)
    high = np.full((n_y, L + 1), np.nan)

    def tighten(arr, i, t, v, pick):
        arr[i, t] = v if math.isnan(arr[i, t]) else pick(arr[i, t], v)

    def walk(f, times):
        if isinstance(f, Always):
            walk(f.child, sorted({min(t + k, L) for t in times for k in range(f.a, f.b + 1)}))
        elif isinstance(f, And):
            m = _magnitude(f, "and")
            if m is not None:
                for t in times:
                    tighten(high, m[0], t, m[1], min)
                return
            for c in f.children:
                walk(c, times)
        elif isinstance(f, Or):
            m = _magnitude(f, "or")
            if m is not None:
                for t in times:
                    tighten(low, m[0], t, m[1], max)
        elif isinstance(f, Predicate):
            s = _single_output(f)
            if s is None:
                return
            i, c, off = s
            for t in times:
                if c > 0:
                    tighten(low, i, t, -off / c, max)
                else:
                    tighten(high, i, t, off / -c, min)

    walk(phi, [0])
    return {i: (low[i], high[i]) for i in range(n_y)
            if not (np.all(np.isnan(low[i])) and np.all(np.isnan(high[i])))}


def emit_plot_data(path, u, y_pred, y_true=None, phi: Optional[Formula] = None, schedules=None,
                   celsius: bool = False) -> list[str]:
    """Tidy per-step CSV for external plotting; returns the column names written."""
    u = np.asarray(u, dtype=float).reshape(len(u), -1)
    y_pred = np.asarray(y_pred, dtype=float).reshape(len(y_pred), -1)
    L = y_pred.shape[0] - 1
    n_y = y_pred.shape[1]
    cols = {}
    for i in range(u.shape[1]):
        cols[f"u{i + 1}"] = u[:, i]
    for i in range(n_y):
        tag = "" if n_y == 1 else str(i + 1)
        cols[f"y_pred{tag}"] = y_pred[:, i]
        if y_true is not None:
            cols[f"y_true{tag}"] = np.asarray(y_true, dtype=float).reshape(L + 1, -1)[:, i]
    if phi is not None:
        for i, (lo, hi) in spec_bands(phi, L, n_y).items():
            tag = "" if n_y == 1 else str(i + 1)
            cols[f"spec_band_low{tag}"] = lo
            cols[f"spec_band_high{tag}"] = hi
    if schedules and "occ" in schedules and "Tcomf" in schedules:
        occ = np.asarray(schedules["occ"], dtype=float)[:L + 1]
        comf = np.asarray(schedules["Tcomf"], dtype=float)[:L + 1]
        cols["T_ref"] = occ * comf
    if celsius:
        for name in [c for c in cols if c.startswith(("y_pred", "y_true"))]:
            cols[f"{name}_C"] = fahrenheit_to_celsius(cols[name])
        if "T_ref" in cols:
            cols["T_ref_C"] = occ * fahrenheit_to_celsius(comf)
    write_series_csv(path, cols)
    return list(cols)


def _num(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def build_report(*, command: str, spec_text: str, result, verdict: str, cfg, scenario: Optional[str] = None,
                 system: Optional[str] = None, seed: Optional[int] = None, t_fail: Optional[int] = None,
                 prediction_error: Optional[float] = None, projection_distance: Optional[float] = None,
                 files: Optional[dict] = None) -> dict:
    pe = result.pe_certificate
    stats = result.stats
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "scenario": scenario,
        "system": system,
        "seed": seed,
        "spec": spec_text,
        "L": int(result.L),
        "t_ini": int(cfg.t_ini),
        "cost": cfg.cost.kind,
        "status": result.status.value,
        "proven_optimal": bool(result.status.value == "optimal"),
        "objective": _num(result.objective) if result.feasible else None,
        "verdict": verdict,
        "t_fail": t_fail,
        "max_prediction_error": _num(prediction_error),
        "pe_certificate": {
            "checked": pe is not None,
            "ok": None if pe is None else bool(pe.ok),
            "order": None if pe is None else int(pe.order),
            "rank": None if pe is None else int(pe.rank),
            "required": None if pe is None else int(pe.required),
            "reason": "" if pe is None else pe.reason,
        },
        "initialization": {"projection_distance": _num(projection_distance)},
        "encoding": {"big_m": cfg.encoding.big_m, "eps": cfg.encoding.eps, "dictionary": cfg.dictionary},
        "solver": {
            "nodes": int(stats.get("nodes", 0)),
            "lp_iterations": int(stats.get("lp_iterations", 0)),
            "seconds": float(stats.get("seconds", 0.0)),
            "incumbents": [float(v) for v in stats.get("incumbents", [])],
            "variables": int(stats.get("variables", 0)),
            "constraints": int(stats.get("constraints", 0)),
            "binaries": int(stats.get("binaries", 0)),
        },
        "warnings": list(result.warnings),
        "files": dict(files or {}),
    }


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
