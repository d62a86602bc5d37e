"""Formula tree for signal temporal logic over affine output predicates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np


class Formula:
    __slots__ = ()


def _check_interval(a, b):
    if not (isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer))):
        raise TypeError(f"interval bounds must be integers, got [{a!r},{b!r}]")
    if not 0 <= a <= b:
        raise ValueError(f"interval [{a},{b}] must satisfy 0 <= a <= b")


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Predicate(Formula):
    """``coeffs . y + offset + sum(c * schedule[name][t]) > 0``.

    ``sched`` lists ``(schedule name, coefficient)`` pairs sorted by name;
    schedules are time-indexed series supplied at evaluation time.
    """

    coeffs: tuple
    offset: float = 0.0
    sched: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "sched", tuple(sorted((str(n), float(c)) for n, c in self.sched if c != 0.0)))
        if not all(np.isfinite(self.coeffs)) or not np.isfinite(self.offset):
            raise ValueError("predicate coefficients must be finite")

    @property
    def n_y(self) -> int:
        return len(self.coeffs)

    def shift(self, t: int, schedules: Optional[Mapping[str, Sequence[float]]] = None) -> float:
        """Constant part of the predicate at time ``t``."""
        b = self.offset
        for name, c in self.sched:
            if schedules is None or name not in schedules:
                raise KeyError(f"schedule {name!r} is not bound")
            series = schedules[name]
            if not 0 <= t < len(series):
                raise IndexError(f"schedule {name!r} has no value at t={t}")
            b += c * float(series[t])
        return b

    def value(self, y_t, t: int = 0, schedules=None) -> float:
        return float(np.dot(self.coeffs, np.asarray(y_t, dtype=float).reshape(-1))) + self.shift(t, schedules)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or needs at least two operands")


@dataclass(frozen=True)
class Always(Formula):
    a: int
    b: int
    child: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Eventually(Formula):
    a: int
    b: int
    child: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Until(Formula):
    a: int
    b: int
    left: Formula
    right: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


def conj(*fs: Formula) -> Formula:
    return fs[0] if len(fs) == 1 else And(fs)


def disj(*fs: Formula) -> Formula:
    return fs[0] if len(fs) == 1 else Or(fs)


def predicates(phi: Formula) -> list[Predicate]:
    """Distinct predicates in first-occurrence order."""
    out: list[Predicate] = []

    def walk(f):
        if isinstance(f, Predicate):
            if f not in out:
                out.append(f)
        elif isinstance(f, Not):
            walk(f.child)
        elif isinstance(f, (And, Or)):
            for c in f.children:
                walk(c)
        elif isinstance(f, (Always, Eventually)):
            walk(f.child)
        elif isinstance(f, Until):
            walk(f.left)
            walk(f.right)

    walk(phi)
    return out


def depth(phi: Formula) -> int:
    if isinstance(phi, (Const, Predicate)):
        return 0
    if isinstance(phi, Not):
        return 1 + depth(phi.child)
    if isinstance(phi, (And, Or)):
        return 1 + max(depth(c) for c in phi.children)
    if isinstance(phi, (Always, Eventually)):
        return 1 + depth(phi.child)
    if isinstance(phi, Until):
        return 1 + max(depth(phi.left), depth(phi.right))
    raise TypeError(f"not a formula: {phi!r}")


def horizon(phi: Formula) -> int:
    """Number of future steps needed to decide ``phi`` at time 0."""
    if isinstance(phi, (Const, Predicate)):
        return 0
    if isinstance(phi, Not):
        return horizon(phi.child)
    if isinstance(phi, (And, Or)):
        return max(horizon(c) for c in phi.children)
    if isinstance(phi, (Always, Eventually)):
        # Eventually is true U[a,b] phi, and true has length 0
        return horizon(phi.child) + phi.b
    if isinstance(phi, Until):
        return max(horizon(phi.left), horizon(phi.right)) + phi.b
    raise TypeError(f"not a formula: {phi!r}")


# -- printing ----------------------------------------------------------------

def _num(v: float) -> str:
    return repr(float(v))


def _linear_text(coeffs, offset, sched) -> str:
    parts = []
    for i, c in enumerate(coeffs):
        if c != 0.0:
            parts.append((c, f"y{i + 1}"))
    for name, c in sched:
        parts.append((c, name))
    out = ""
    for c, sym in parts:
        sign = "-" if c < 0 else "+"
        term = f"{_num(abs(c))}*{sym}"
        out = (f"-{term}" if sign == "-" else term) if not out else f"{out} {sign} {term}"
    if offset != 0.0 or not out:
        if not out:
            out = _num(offset)
        else:
            out += f" {'-' if offset < 0 else '+'} {_num(abs(offset))}"
    return out


def to_text(phi: Formula) -> str:
    """Render ``phi`` in the concrete grammar accepted by :func:`parse`."""
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Predicate):
        return f"{_linear_text(phi.coeffs, phi.offset, phi.sched)} > 0"
    if isinstance(phi, Not):
        return f"not ({to_text(phi.child)})"
    if isinstance(phi, And):
        return " and ".join(f"({to_text(c)})" for c in phi.children)
    if isinstance(phi, Or):
        return " or ".join(f"({to_text(c)})" for c in phi.children)
    if isinstance(phi, Always):
        return f"G[{phi.a},{phi.b}] ({to_text(phi.child)})"
    if isinstance(phi, Eventually):
        return f"F[{phi.a},{phi.b}] ({to_text(phi.child)})"
    if isinstance(phi, Until):
        return f"({to_text(phi.left)}) U[{phi.a},{phi.b}] ({to_text(phi.right)})"
    raise TypeError(f"not a formula: {phi!r}")


FormulaLike = Union[Formula]
