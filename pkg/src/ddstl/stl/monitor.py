"""Boolean satisfaction of formulas over a finite output trace.

Time indices reached by temporal operators are clamped to ``[0, L]`` where
``L + 1`` is the trace length, so traces at least ``horizon(phi) + 1`` long are
judged exactly.  Until uses a closed window: the left operand must also hold
at the step where the right operand is met.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .formula import Always, And, Const, Eventually, Formula, Not, Or, Predicate, Until


def _trace(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if y.shape[0] == 0:
        raise ValueError("empty trace")
    return y


class _Monitor:
    def __init__(self, y, schedules):
        self.y = _trace(y)
        self.L = self.y.shape[0] - 1
        self.schedules = schedules
        self.cache: dict = {}

    def window(self, t, a, b):
        return range(min(t + a, self.L), min(t + b, self.L) + 1)

    def sat(self, phi: Formula, t: int) -> bool:
        key = (id(phi), t)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        v = self._sat(phi, t)
        self.cache[key] = v
        return v

    def _sat(self, phi, t):
        if isinstance(phi, Const):
            return phi.value
        if isinstance(phi, Predicate):
            if phi.n_y != self.y.shape[1]:
                raise ValueError(f"predicate over {phi.n_y} outputs applied to a {self.y.shape[1]}-output trace")
            return phi.value(self.y[t], t, self.schedules) > 0.0
        if isinstance(phi, Not):
            return not self.sat(phi.child, t)
        if isinstance(phi, And):
            return all(self.sat(c, t) for c in phi.children)
        if isinstance(phi, Or):
            return any(self.sat(c, t) for c in phi.children)
        if isinstance(phi, Always):
            return all(self.sat(phi.child, i) for i in self.window(t, phi.a, phi.b))
        if isinstance(phi, Eventually):
            return any(self.sat(phi.child, i) for i in self.window(t, phi.a, phi.b))
        if isinstance(phi, Until):
            for tp in self.window(t, phi.a, phi.b):
                if self.sat(phi.right, tp) and all(self.sat(phi.left, s) for s in range(t, tp + 1)):
                    return True
            return False
        raise TypeError(f"not a formula: {phi!r}")

    def first_failure(self, phi, t):
        """Earliest step that explains a violation of ``phi`` at ``t``."""
        if isinstance(phi, Not) and isinstance(phi.child, Not):
            return self.first_failure(phi.child.child, t)
        if isinstance(phi, And):
            return min(self.first_failure(c, t) for c in phi.children if not self.sat(c, t))
        if isinstance(phi, Always):
            for i in self.window(t, phi.a, phi.b):
                if not self.sat(phi.child, i):
                    return self.first_failure(phi.child, i)
        return t


def monitor(phi: Formula, y, t: int = 0, schedules=None) -> bool:
    """Does the output trace ``y`` satisfy ``phi`` at step ``t``?"""
    m = _Monitor(y, schedules)
    if not 0 <= t <= m.L:
        raise IndexError(f"t={t} outside trace of length {m.L + 1}")
    return m.sat(phi, t)


def first_failure(phi: Formula, y, t: int = 0, schedules=None) -> Optional[int]:
    """Step of the earliest failed obligation, or ``None`` when ``phi`` holds."""
    m = _Monitor(y, schedules)
    if m.sat(phi, t):
        return None
    return m.first_failure(phi, t)
