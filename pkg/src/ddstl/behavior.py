"""Data-driven system description built from one measured trajectory.

The stacked dictionary ``[Hu; Hy]`` spans every finite trajectory of the
unknown system once the input data are persistently exciting.  Stacked
trajectory vectors always list all inputs first (time-major, controlled
channels before disturbance channels at each step), then all outputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import numerics
from .lti import Trajectory
from .numerics import DEFAULT_RANK_TOL, DimensionError

DEFAULT_TOL = 1e-8


def _samples(z) -> np.ndarray:
    a = np.array(z, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionError(f"expected a sequence of vectors, got shape {a.shape}")
    return a


def build_hankel(z, depth: int) -> np.ndarray:
    """Block Hankel matrix with ``depth`` block rows.

    Column ``j`` stacks samples ``z[j], ..., z[j + depth - 1]``; the result is
    ``(depth * n_z) x (n_samples - depth + 1)``.
    """
    z = _samples(z)
    n, nz = z.shape
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if n < depth:
        raise ValueError(f"sequence of length {n} is shorter than Hankel depth {depth}")
    cols = n - depth + 1
    return np.vstack([z[i:i + cols].T for i in range(depth)])


@dataclass(frozen=True)
class PECheck:
    ok: bool
    order: int
    rank: int
    required: int
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_pe(u, order: int, tol: float = DEFAULT_RANK_TOL) -> PECheck:
    """Test persistence of excitation of the given order.

    True iff the depth-``order`` Hankel matrix of ``u`` has full row rank.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    u = _samples(u)
    required = order * u.shape[1]
    if u.shape[0] < order:
        return PECheck(False, order, 0, required, f"{u.shape[0]} samples cannot form a depth-{order} Hankel matrix")
    h = build_hankel(u, order)
    if h.shape[1] < required:
        return PECheck(False, order, numerics.rank(h, tol), required,
                       f"Hankel matrix has {h.shape[1]} columns, full row rank needs {required}; "
                       f"at least {required + order - 1} samples are required")
    r = numerics.rank(h, tol)
    reason = "" if r == required else f"rank {r} < {required}"
    return PECheck(r == required, order, r, required, reason)


@dataclass(frozen=True)
class HankelSystem:
    Hu: np.ndarray
    Hy: np.ndarray
    depth: int
    n_u: int
    n_y: int
    source_length: int
    n_d: int = 0
    pe_order_certified: Optional[int] = None
    pe_check: Optional[PECheck] = None

    @property
    def n_in(self) -> int:
        return self.n_u + self.n_d

    @property
    def columns(self) -> int:
        return self.Hu.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        return np.vstack([self.Hu, self.Hy])

    def input_rows(self, start: int, stop: int) -> slice:
        return slice(start * self.n_in, stop * self.n_in)

    def output_rows(self, start: int, stop: int) -> slice:
        off = self.depth * self.n_in
        return slice(off + start * self.n_y, off + stop * self.n_y)


def assemble(data: Trajectory, t_ini: int, L: int, n_x_bound: Optional[int] = None,
             tol: float = DEFAULT_RANK_TOL) -> HankelSystem:
    """Hankel dictionary of depth ``t_ini + L + 1`` over ``data``.

    ``t_ini`` counts initialization samples.  With ``n_x_bound`` the inputs are
    checked for excitation of order ``depth + n_x_bound``.
    """
    depth = t_ini + L + 1
    if t_ini < 0 or L < 0:
        raise ValueError("t_ini and L must be nonnegative")
    if data.length < depth:
        raise ValueError(f"data has {data.length} samples; at least {depth} are needed for depth {depth}")
    Hu = build_hankel(data.inputs, depth)
    Hy = build_hankel(data.y, depth)
    certified, pe = None, None
    if n_x_bound is not None:
        pe = check_pe(data.inputs, depth + n_x_bound, tol)
        if pe:
            certified = depth + n_x_bound
    Hu.setflags(write=False)
    Hy.setflags(write=False)
    return HankelSystem(Hu, Hy, depth, data.n_u, data.n_y, data.length, data.n_d, certified, pe)


def stack(traj: Trajectory) -> np.ndarray:
    """Stacked vector (inputs, then outputs) matching ``HankelSystem.stacked``."""
    return np.concatenate([traj.inputs.reshape(-1), traj.y.reshape(-1)])


@dataclass(frozen=True)
class InSpan:
    alpha: np.ndarray
    residual: float

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class NotInSpan:
    residual: float

    def __bool__(self) -> bool:
        return False


def membership(sys: HankelSystem, w: Union[Trajectory, np.ndarray], tol: float = DEFAULT_TOL):
    """Is ``w`` a trajectory of the system described by ``sys``?"""
    if isinstance(w, Trajectory):
        w = stack(w)
    w = np.asarray(w, dtype=float).reshape(-1)
    H = sys.stacked
    if w.shape[0] != H.shape[0]:
        raise DimensionError(f"stacked trajectory has length {w.shape[0]}, expected {H.shape[0]}")
    alpha = np.linalg.lstsq(H, w, rcond=None)[0]
    res = float(np.linalg.norm(H @ alpha - w))
    if res <= tol * (1.0 + float(np.linalg.norm(w))):
        return InSpan(alpha, res)
    return NotInSpan(res)


class ContinuationError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Continuation:
    y: np.ndarray
    alpha: np.ndarray
    residual: float
    unique: bool


def _init_rows(sys: HankelSystem, t_ini: int):
    H = sys.stacked
    rows = np.r_[np.arange(H.shape[0])[sys.input_rows(0, t_ini)], np.arange(H.shape[0])[sys.output_rows(0, t_ini)]]
    return H[rows]


def _init_vector(w_ini: Trajectory) -> np.ndarray:
    return np.concatenate([w_ini.inputs.reshape(-1), w_ini.y.reshape(-1)])


def init_residual(sys: HankelSystem, w_ini: Trajectory) -> float:
    """Distance from ``w_ini`` to the span of the dictionary's leading blocks."""
    Hp = _init_rows(sys, w_ini.length)
    b = _init_vector(w_ini)
    alpha = np.linalg.lstsq(Hp, b, rcond=None)[0]
    return float(np.linalg.norm(Hp @ alpha - b))


def project_initialization(sys: HankelSystem, w_ini: Trajectory) -> tuple[Trajectory, float]:
    """Nearest trajectory to ``w_ini`` (least squares) that the data can reproduce.

    Used for initializations that were only recorded to a few digits.
    Returns the projected trajectory and the distance moved.
    """
    t = w_ini.length
    if t > sys.depth:
        raise DimensionError(f"initialization of length {t} exceeds dictionary depth {sys.depth}")
    Hp = _init_rows(sys, t)
    b = _init_vector(w_ini)
    alpha = np.linalg.lstsq(Hp, b, rcond=None)[0]
    p = Hp @ alpha
    n_in = t * sys.n_in
    inputs = p[:n_in].reshape(t, sys.n_in)
    y = p[n_in:].reshape(t, sys.n_y)
    d = inputs[:, sys.n_u:] if sys.n_d else None
    return Trajectory(inputs[:, :sys.n_u], y, d), float(np.linalg.norm(p - b))


def continuation(sys: HankelSystem, w_ini: Trajectory, u_future, d_future=None,
                 tol: float = DEFAULT_TOL) -> Continuation:
    """Output response of the data-described system to ``u_future`` after ``w_ini``.

    The response is unique when ``w_ini`` is long enough to fix the internal
    state; ``unique`` is computed from the data, by checking whether the
    unpinned directions of the dictionary can move the future outputs.
    """
    t_ini = w_ini.length
    L = sys.depth - t_ini - 1
    if L < 0:
        raise DimensionError(f"initialization of length {t_ini} does not fit depth {sys.depth}")
    u_future = np.array(u_future, dtype=float).reshape(L + 1, sys.n_u)
    fut_in = u_future
    if sys.n_d:
        if d_future is None:
            raise DimensionError("disturbance samples for the future window are required")
        fut_in = np.hstack([u_future, np.array(d_future, dtype=float).reshape(L + 1, sys.n_d)])
    H = sys.stacked
    idx = np.arange(H.shape[0])
    pinned = np.r_[idx[sys.input_rows(0, sys.depth)], idx[sys.output_rows(0, t_ini)]]
    free = idx[sys.output_rows(t_ini, sys.depth)]
    Hp = H[pinned]
    b = np.concatenate([w_ini.inputs.reshape(-1), fut_in.reshape(-1), w_ini.y.reshape(-1)])
    alpha = np.linalg.lstsq(Hp, b, rcond=None)[0]
    res = float(np.linalg.norm(Hp @ alpha - b))
    if res > tol * (1.0 + float(np.linalg.norm(b))):
        raise ContinuationError(
            f"initialization and inputs are not reproducible from the data (residual {res:.3e})", res)
    Hf = H[free]
    # directions leaving every pinned entry unchanged
    _, s, vt = np.linalg.svd(Hp)
    r = int(np.count_nonzero(s > DEFAULT_RANK_TOL * (s[0] if s.size else 1.0)))
    null = vt[r:].T
    spread = float(np.linalg.norm(Hf @ null, 2)) if null.size else 0.0
    unique = spread <= 1e-6 * max(1.0, float(np.linalg.norm(Hf, 2)))
    y = (Hf @ alpha).reshape(L + 1, sys.n_y)
    return Continuation(y, alpha, res, unique)
