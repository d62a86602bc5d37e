"""Mixed-integer linear program container and an incremental builder."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    UNIT = "unit_interval"


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    kind: VarKind
    lb: float
    ub: float


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple  # ((var index, coefficient), ...)
    sense: str  # "<=", "=", ">="
    rhs: float
    name: str = ""


class LinExpr:
    """Sparse affine expression ``sum(c_j x_j) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Mapping[int, float]] = None, const: float = 0.0):
        self.terms = {j: float(c) for j, c in (terms or {}).items() if c != 0.0}
        self.const = float(const)

    @classmethod
    def var(cls, j: int, coef: float = 1.0) -> "LinExpr":
        return cls({j: coef})

    @classmethod
    def lift(cls, v) -> "LinExpr":
        if isinstance(v, LinExpr):
            return v
        return cls({}, float(v))

    def is_const(self) -> bool:
        return not self.terms

    def __add__(self, other) -> "LinExpr":
        other = LinExpr.lift(other)
        t = dict(self.terms)
        for j, c in other.terms.items():
            t[j] = t.get(j, 0.0) + c
        return LinExpr(t, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({j: -c for j, c in self.terms.items()}, -self.const)

    def __sub__(self, other) -> "LinExpr":
        return self + (-LinExpr.lift(other))

    def __rsub__(self, other) -> "LinExpr":
        return LinExpr.lift(other) - self

    def __mul__(self, k: float) -> "LinExpr":
        k = float(k)
        return LinExpr({j: c * k for j, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def value(self, x) -> float:
        return self.const + sum(c * float(x[j]) for j, c in self.terms.items())

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.const})"


_SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class MilpProblem:
    """``min objective`` over ``variables`` subject to ``constraints``."""

    variables: tuple
    constraints: tuple
    objective: tuple  # ((var index, coefficient), ...)
    metadata: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [v.index for v in self.variables if v.kind is VarKind.BINARY]

    def var_named(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_arrays(self):
        """Dense ``(c, A, senses, b, lb, ub, is_binary)``."""
        n = self.n_vars
        c = np.zeros(n)
        for j, v in self.objective:
            c[j] += v
        A = np.zeros((len(self.constraints), n))
        b = np.empty(len(self.constraints))
        senses = []
        for i, con in enumerate(self.constraints):
            for j, v in con.terms:
                A[i, j] += v
            b[i] = con.rhs
            senses.append(con.sense)
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        is_bin = np.array([v.kind is VarKind.BINARY for v in self.variables], dtype=bool)
        return c, A, senses, b, lb, ub, is_bin

    def objective_value(self, x) -> float:
        return float(sum(c * x[j] for j, c in self.objective))

    def max_violation(self, x) -> float:
        """Largest constraint or bound violation at ``x``."""
        worst = 0.0
        for con in self.constraints:
            lhs = sum(c * x[j] for j, c in con.terms)
            if con.sense == "<=":
                worst = max(worst, lhs - con.rhs)
            elif con.sense == ">=":
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        for v in self.variables:
            worst = max(worst, v.lb - x[v.index], x[v.index] - v.ub)
        return float(worst)


class ProblemBuilder:
    """Mutable collector that produces an immutable :class:`MilpProblem`."""

    def __init__(self):
        self._vars: list[Variable] = []
        self._names: set[str] = set()
        self._cons: list[LinearConstraint] = []
        self._obj: dict[int, float] = {}
        self.metadata: dict = {}

    def add_var(self, name: str, kind: VarKind = VarKind.CONTINUOUS, lb: float = -np.inf,
                ub: float = np.inf) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY or kind is VarKind.UNIT:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        j = len(self._vars)
        self._vars.append(Variable(j, name, kind, float(lb), float(ub)))
        self._names.add(name)
        return j

    def set_bounds(self, j: int, lb: Optional[float] = None, ub: Optional[float] = None) -> None:
        v = self._vars[j]
        lb = v.lb if lb is None else float(lb)
        ub = v.ub if ub is None else float(ub)
        self._vars[j] = Variable(v.index, v.name, v.kind, lb, ub)

    def variable(self, j: int) -> Variable:
        return self._vars[j]

    def add_constraint(self, expr, sense: str, rhs: float = 0.0, name: str = "") -> int:
        """Add ``expr sense rhs``; a constant part of ``expr`` moves to the right."""
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        expr = LinExpr.lift(expr)
        terms = tuple(sorted(expr.terms.items()))
        for j, c in terms:
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient in constraint {name!r}")
            if not 0 <= j < len(self._vars):
                raise IndexError(f"constraint {name!r} references unknown variable {j}")
        rhs = float(rhs) - expr.const
        self._cons.append(LinearConstraint(terms, sense, rhs, name or f"c{len(self._cons)}"))
        return len(self._cons) - 1

    def add_objective(self, j: int, coef: float) -> None:
        if self._vars[j].kind is not VarKind.CONTINUOUS:
            raise ValueError("objective may only reference continuous variables")
        self._obj[j] = self._obj.get(j, 0.0) + float(coef)

    @property
    def n_vars(self) -> int:
        return len(self._vars)

    @property
    def n_constraints(self) -> int:
        return len(self._cons)

    def build(self) -> MilpProblem:
        obj = tuple(sorted((j, c) for j, c in self._obj.items() if c != 0.0))
        return MilpProblem(tuple(self._vars), tuple(self._cons), obj, dict(self.metadata))
