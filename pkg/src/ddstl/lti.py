"""State-space models, simulation and trajectory files.

The simulator is only used to generate measurement data and to check
synthesized inputs in closed loop; synthesis itself never sees a model.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import DimensionError, as_matrix


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_samples(seq, width: Optional[int], name: str) -> np.ndarray:
    a = np.array(seq, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1) if (width in (None, 1)) else a.reshape(-1, width)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a sequence of vectors, got shape {a.shape}")
    if width is not None and a.shape[1] != width:
        raise DimensionError(f"{name} samples have {a.shape[1]} channels, expected {width}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite samples")
    return a


@dataclass(frozen=True)
class StateSpaceModel:
    """x+ = A x + B u + Bd d,  y = C x + D u."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None
    Bd: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        nx = A.shape[0]
        if A.shape != (nx, nx):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(nx, -1)
        C = np.array(self.C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(-1, nx)
        if B.shape[0] != nx:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {nx}")
        if C.shape[1] != nx:
            raise DimensionError(f"C has {C.shape[1]} columns, expected {nx}")
        D = np.zeros((C.shape[0], B.shape[1])) if self.D is None else as_matrix(self.D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionError(f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        Bd = None
        if self.Bd is not None:
            Bd = np.array(self.Bd, dtype=float)
            if Bd.ndim == 1:
                Bd = Bd.reshape(nx, -1)
            if Bd.shape[0] != nx:
                raise DimensionError(f"Bd has {Bd.shape[0]} rows, expected {nx}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(D))
        object.__setattr__(self, "Bd", None if Bd is None else _frozen(Bd))

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_d(self) -> int:
        return 0 if self.Bd is None else self.Bd.shape[1]


@dataclass(frozen=True)
class Trajectory:
    """Input/output samples, one row per time step."""

    u: np.ndarray
    y: np.ndarray
    d: Optional[np.ndarray] = None

    def __post_init__(self):
        u = _as_samples(self.u, None, "u")
        y = _as_samples(self.y, None, "y")
        if u.shape[0] != y.shape[0]:
            raise DimensionError(f"u has {u.shape[0]} samples but y has {y.shape[0]}")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "y", _frozen(y))
        if self.d is not None:
            d = _as_samples(self.d, None, "d")
            if d.shape[0] != u.shape[0]:
                raise DimensionError(f"d has {d.shape[0]} samples but u has {u.shape[0]}")
            object.__setattr__(self, "d", _frozen(d))

    @property
    def length(self) -> int:
        return self.u.shape[0]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[1]

    @property
    def n_d(self) -> int:
        return 0 if self.d is None else self.d.shape[1]

    @property
    def inputs(self) -> np.ndarray:
        """Controlled and disturbance inputs side by side."""
        if self.d is None:
            return self.u
        return np.hstack([self.u, self.d])

    def window(self, start: int, stop: int) -> "Trajectory":
        return Trajectory(self.u[start:stop], self.y[start:stop], None if self.d is None else self.d[start:stop])


def simulate(model: StateSpaceModel, x0, u, d=None, return_states: bool = False):
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape[0] != model.n_x:
        raise DimensionError(f"x0 has length {x.shape[0]}, model has {model.n_x} states")
    u = _as_samples(u, model.n_u, "u")
    if (d is None) != (model.Bd is None):
        raise DimensionError("a disturbance sequence is required exactly when the model has Bd")
    if d is not None:
        d = _as_samples(d, model.n_d, "d")
        if d.shape[0] != u.shape[0]:
            raise DimensionError(f"d has {d.shape[0]} samples but u has {u.shape[0]}")
    n = u.shape[0]
    ys = np.empty((n, model.n_y))
    xs = np.empty((n + 1, model.n_x))
    for t in range(n):
        xs[t] = x
        ys[t] = model.C @ x + model.D @ u[t]
        x = model.A @ x + model.B @ u[t]
        if d is not None:
            x = x + model.Bd @ d[t]
    xs[n] = x
    traj = Trajectory(u, ys, d)
    return (traj, xs) if return_states else traj


def _box_bounds(box, width: int, name: str) -> np.ndarray:
    b = np.array(box, dtype=float)
    if b.ndim == 1:
        b = np.tile(b.reshape(1, 2), (width, 1))
    if b.shape != (width, 2) or np.any(b[:, 0] > b[:, 1]):
        raise ValueError(f"{name} must give a nonempty [lo, hi] per channel")
    return b


def generate_data(model: StateSpaceModel, steps: int, input_box, seed: int, disturbance=None,
                  disturbance_box=None, x0=None) -> Trajectory:
    """Simulate ``steps`` samples under i.i.d. uniform inputs drawn from ``input_box``.

    For models with a disturbance channel either a fixed ``disturbance``
    schedule or a ``disturbance_box`` to sample from must be given.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = np.random.default_rng(seed)
    ub = _box_bounds(input_box, model.n_u, "input_box")
    u = rng.uniform(ub[:, 0], ub[:, 1], size=(steps, model.n_u))
    d = None
    if model.Bd is not None:
        if disturbance is not None:
            d = _as_samples(disturbance, model.n_d, "disturbance")[:steps]
            if d.shape[0] < steps:
                raise ValueError(f"disturbance schedule has {d.shape[0]} samples, need {steps}")
        elif disturbance_box is not None:
            db = _box_bounds(disturbance_box, model.n_d, "disturbance_box")
            d = rng.uniform(db[:, 0], db[:, 1], size=(steps, model.n_d))
        else:
            raise ValueError(f"model {model.name or ''} needs a disturbance schedule or box")
    x = np.zeros(model.n_x) if x0 is None else x0
    return simulate(model, x, u, d)


_CAR = dict(
    A=[[1.0, -0.3, 0.3], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    B=[[-0.03], [1.0], [0.0]],
    C=[[1.0, 0.0, 0.0]],
)

# C is printed with seven entries in the source tables while A is 5x5; the
# trailing zeros are dropped so that C selects the first (room) state.
_BUILDING = dict(
    A=[
        [0.9233, 0.00135, 0.0009377, 0.002662, 0.03775],
        [0.0009377, 0.9606, 0.0004754, 0.00135, 0.01928],
        [0.0009377, 0.0006846, 0.9604, 0.00135, 0.01928],
        [0.001849, 0.00135, 0.0009377, 0.9241, 0.03775],
        [0.07636, 0.05617, 0.039, 0.11, 0.7142],
    ],
    B=[[3.1194e-4], [1.5815e-4], [1.5815e-4], [3.1194e-4], [0.0131]],
    C=[[1.0, 0.0, 0.0, 0.0, 0.0]],
    Bd=[
        [-8.0390e-6, 0.0340, 1.9696e-5, 3.2720e-5, 0.0014, 0.0, 0.0],
        [-4.0756e-6, 1.1479e-5, 0.0173, 1.6530e-5, 0.0230, 0.0, 0.0],
        [-4.0756e-6, 1.1479e-5, 0.0173, 1.6530e-5, 0.0007, 0.0, 0.0],
        [-8.0390e-6, 2.2722e-5, 1.9696e-5, 0.0340, 0.0014, 0.0, 0.0],
        [-3.3691e-4, 0.0014, 0.0011, 0.0021, 0.0568, 0.0, 0.0],
    ],
)

BUILTIN_MODELS = {"car": _CAR, "building": _BUILDING}
# conservative state-dimension bounds used for excitation checks and t_ini defaults
BUILTIN_ORDER_BOUND = {"car": 3, "building": 5}


def builtin_model(name: str) -> StateSpaceModel:
    """Return one of the case-study models: ``car`` (3 states) or ``building``.

    The building model's output matrix is stored as ``[1, 0, 0, 0, 0]``: its
    published form carries two extra zero columns that do not fit the 5-state
    ``A``.
    """
    try:
        spec = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; valid names: {', '.join(sorted(BUILTIN_MODELS))}") from None
    return StateSpaceModel(name=name, **spec)


# -- CSV ---------------------------------------------------------------------

def trajectory_header(n_u: int, n_y: int, n_d: int = 0) -> list[str]:
    return (["t"] + [f"u{i + 1}" for i in range(n_u)] + [f"d{i + 1}" for i in range(n_d)]
            + [f"y{i + 1}" for i in range(n_y)])


def write_trajectory_csv(traj: Trajectory, path, t0: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(traj.n_u, traj.n_y, traj.n_d))
        for k in range(traj.length):
            row = [t0 + k] + [repr(float(v)) for v in traj.u[k]]
            if traj.d is not None:
                row += [repr(float(v)) for v in traj.d[k]]
            row += [repr(float(v)) for v in traj.y[k]]
            w.writerow(row)


def _columns(header: Sequence[str], prefix: str) -> list[int]:
    idx = [(int(h[len(prefix):]), i) for i, h in enumerate(header)
           if h.startswith(prefix) and h[len(prefix):].isdigit()]
    idx.sort()
    if [k for k, _ in idx] != list(range(1, len(idx) + 1)):
        raise ValueError(f"columns {prefix}1..{prefix}n must be numbered consecutively")
    return [i for _, i in idx]


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty trajectory file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise ValueError(f"{path}: first column must be 't'")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(header))
    ui, di, yi = _columns(header, "u"), _columns(header, "d"), _columns(header, "y")
    if not yi:
        raise ValueError(f"{path}: no output columns")
    return Trajectory(data[:, ui], data[:, yi], data[:, di] if di else None)


def write_series_csv(path, columns: dict, t0: int = 0) -> None:
    """Write equally long named columns with a leading time index."""
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for k in range(n):
            w.writerow([t0 + k] + [_fmt(columns[c][k]) for c in names])


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return repr(float(v))


def read_series_csv(path) -> dict:
    """Read a ``t,<name>...`` CSV into ``{"t": [...], name: array}``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    out = {h: [] for h in header}
    for r in rows[1:]:
        for h, v in zip(header, r):
            out[h].append(float(v) if v.strip() else float("nan"))
    return {h: np.array(v) for h, v in out.items()}
