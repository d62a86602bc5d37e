"""Export to the CPLEX LP text format for cross-checking with other solvers."""
from __future__ import annotations

import io
import math

from .model import MilpProblem, VarKind


def _num(v: float) -> str:
    return f"{v:.17g}"


def _terms(terms, names) -> list[str]:
    out = []
    for j, c in terms:
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c))} {names[j]}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(label: str, parts: list[str], tail: str = "") -> str:
    lines = []
    line = f" {label}:"
    for p in parts + ([tail] if tail else []):
        if len(line) + len(p) + 1 > 200:
            lines.append(line)
            line = "   "
        line += " " + p
    lines.append(line)
    return "\n".join(lines)


def to_lp_string(p: MilpProblem) -> str:
    names = [v.name for v in p.variables]
    buf = io.StringIO()
    buf.write(f"\\ {len(p.variables)} variables, {len(p.constraints)} constraints\n")
    buf.write("Minimize\n")
    obj = _terms(p.objective, names)
    if not obj and names:
        obj = [f"0 {names[0]}"]
    buf.write(_wrap("obj", obj) + "\n")
    buf.write("Subject To\n")
    for con in p.constraints:
        parts = _terms(con.terms, names)
        if not parts:
            parts = [f"0 {names[0]}"]
        buf.write(_wrap(con.name, parts, f"{con.sense} {_num(con.rhs)}") + "\n")
    buf.write("Bounds\n")
    for v in p.variables:
        lo, hi = v.lb, v.ub
        if v.kind is VarKind.BINARY and lo == 0.0 and hi == 1.0:
            continue
        if lo == hi:
            buf.write(f" {v.name} = {_num(lo)}\n")
        elif math.isinf(lo) and math.isinf(hi):
            buf.write(f" {v.name} free\n")
        elif math.isinf(hi):
            buf.write(f" {v.name} >= {_num(lo)}\n")
        elif math.isinf(lo):
            buf.write(f" -inf <= {v.name} <= {_num(hi)}\n")
        else:
            buf.write(f" {_num(lo)} <= {v.name} <= {_num(hi)}\n")
    binaries = [v.name for v in p.variables if v.kind is VarKind.BINARY]
    if binaries:
        buf.write("Binary\n")
        for name in binaries:
            buf.write(f" {name}\n")
    buf.write("End\n")
    return buf.getvalue()


def export_lp(p: MilpProblem, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_lp_string(p))
