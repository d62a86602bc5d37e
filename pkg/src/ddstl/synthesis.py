"""Input synthesis from one measured trajectory, plus closed-loop verification."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import behavior
from .behavior import HankelSystem, PECheck
from .lti import StateSpaceModel, Trajectory, simulate
from .milp import CostSpec, EncodingParams, MilpProblem, assemble_model_problem, assemble_problem
from .numerics import DimensionError
from .solver import LpSolution, SolverParams, Status, solve_milp
from .stl import Formula, first_failure, horizon, monitor

log = logging.getLogger(__name__)


class PEWarning(UserWarning):
    """The data could not be certified persistently exciting."""


class InconsistentInitialization(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BigMViolation(RuntimeError):
    """A predicate value reached the big-M constant, so its encoding may be wrong."""


@dataclass(frozen=True)
class SynthesisConfig:
    t_ini: int
    n_x_bound: Optional[int] = None
    cost: CostSpec = CostSpec()
    box: object = None
    encoding: EncodingParams = EncodingParams()
    solver: SolverParams = SolverParams()
    L: Optional[int] = None  # defaults to the formula horizon
    init_tol: float = 1e-7
    dictionary: str = "columns"  # or "reduced", see milp.encode_dynamics

    def __post_init__(self):
        if self.t_ini < 1:
            raise ValueError("t_ini must be at least 1")
        if self.n_x_bound is not None and self.n_x_bound < 1:
            raise ValueError("n_x_bound must be positive")


@dataclass
class SynthesisResult:
    status: Status
    L: int
    u_opt: Optional[np.ndarray] = None
    y_pred: Optional[np.ndarray] = None
    objective: float = float("nan")
    alpha: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)
    pe_certificate: Optional[PECheck] = None
    warnings: list = field(default_factory=list)
    problem: Optional[MilpProblem] = None

    @property
    def feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)

    @property
    def proven(self) -> bool:
        return self.status is not Status.FEASIBLE


def compute_L(phi: Formula) -> int:
    """Smallest L with ``L + 1 > horizon(phi)``."""
    return horizon(phi)


def _horizon_for(phi: Formula, cfg: SynthesisConfig) -> int:
    L = compute_L(phi)
    if cfg.L is not None:
        if cfg.L < L:
            raise ValueError(f"L = {cfg.L} is shorter than the formula horizon {L}")
        L = cfg.L
    return L


def _check_big_m(problem: MilpProblem, x: np.ndarray, rel: float = 1e-6) -> None:
    """Raise when a predicate value sits at the big-M limit.

    The encoding itself caps ``|sigma|`` at ``M - eps``, so a too-small ``M``
    never shows up as ``|sigma| >= M``; it shows up as a solution pressed
    against that cap.
    """
    for atom in problem.metadata["handles"].atoms:
        v = atom.expr.value(x)
        if abs(v) >= atom.big_m - atom.eps - rel * atom.big_m:
            raise BigMViolation(
                f"predicate value {v:.6g} at t={atom.t} reaches the big-M limit {atom.big_m:g}; raise milp.big_m")


def _result(problem: MilpProblem, sol: LpSolution, L: int, pe, notes) -> SynthesisResult:
    stats = dict(sol.stats)
    stats.update(variables=len(problem.variables), constraints=len(problem.constraints),
                 binaries=len(problem.binaries))
    if not sol.ok:
        return SynthesisResult(sol.status, L, stats=stats, pe_certificate=pe, warnings=notes, problem=problem)
    _check_big_m(problem, sol.values)
    h = problem.metadata["handles"]
    x = sol.values
    alpha = np.array([x[j] for j in h.alpha]) if h.alpha else None
    if alpha is not None and h.alpha_map is not None:
        alpha = h.alpha_offset + h.alpha_map @ alpha
    if sol.status is Status.FEASIBLE:
        notes.append("node or time limit reached; solution not proven optimal")
    return SynthesisResult(sol.status, L, x[h.u], x[h.y], sol.objective, alpha, stats, pe, notes, problem)


def build_problem(data: Trajectory, w_ini: Trajectory, phi: Formula, cfg: SynthesisConfig, d_future=None,
                  schedules=None) -> tuple[MilpProblem, HankelSystem, list]:
    """Dictionary plus MILP for one synthesis call; also returns warning texts."""
    if w_ini.length != cfg.t_ini:
        raise DimensionError(f"initialization has {w_ini.length} samples, t_ini is {cfg.t_ini}")
    L = _horizon_for(phi, cfg)
    sys = behavior.assemble(data, cfg.t_ini, L, cfg.n_x_bound)
    notes = []
    if sys.pe_check is not None and not sys.pe_check:
        msg = f"data not persistently exciting of order {sys.pe_check.order}: {sys.pe_check.reason}"
        warnings.warn(msg, PEWarning, stacklevel=3)
        notes.append(msg)
    res = behavior.init_residual(sys, w_ini)
    scale = 1.0 + float(np.linalg.norm(np.r_[w_ini.inputs.ravel(), w_ini.y.ravel()]))
    if res > cfg.init_tol * scale:
        raise InconsistentInitialization(
            f"initialization is not a trajectory the data can reproduce (residual {res:.3e}); "
            "check it or project it onto the data", res)
    problem = assemble_problem(sys, w_ini, phi, cfg.cost, cfg.box, cfg.encoding, d_future, schedules,
                               cfg.dictionary)
    return problem, sys, notes


def align_initialization(data: Trajectory, w_ini: Trajectory, phi: Formula, cfg: SynthesisConfig,
                         max_distance: float) -> tuple[Trajectory, float]:
    """Project ``w_ini`` onto the data span when it is off by at most ``max_distance``.

    Initializations recorded to a few digits are rarely exact trajectories of
    the data.  Returns the (possibly unchanged) initialization and the distance
    moved; farther initializations raise ``InconsistentInitialization``.
    """
    sys = behavior.assemble(data, cfg.t_ini, _horizon_for(phi, cfg), cfg.n_x_bound)
    res = behavior.init_residual(sys, w_ini)
    scale = 1.0 + float(np.linalg.norm(np.r_[w_ini.inputs.ravel(), w_ini.y.ravel()]))
    if res <= cfg.init_tol * scale:
        return w_ini, 0.0
    if res > max_distance:
        raise InconsistentInitialization(
            f"initialization is {res:.3e} away from the data span, more than the allowed {max_distance:g}", res)
    return behavior.project_initialization(sys, w_ini)


def synthesize(data: Trajectory, w_ini: Trajectory, phi: Formula, cfg: SynthesisConfig, d_future=None,
               schedules=None) -> SynthesisResult:
    """Optimal open-loop inputs whose predicted output satisfies ``phi``.

    The output is predicted from the span of the data's Hankel dictionary.
    An infeasible problem yields a result with status ``INFEASIBLE``.
    """
    problem, sys, notes = build_problem(data, w_ini, phi, cfg, d_future, schedules)
    log.info("solving MILP: %d variables, %d constraints, %d binaries", len(problem.variables),
             len(problem.constraints), len(problem.binaries))
    sol = solve_milp(problem, cfg.solver)
    return _result(problem, sol, problem.metadata["L"], sys.pe_check, notes)


def model_based_synthesize(model: StateSpaceModel, w_ini: Trajectory, phi: Formula, cfg: SynthesisConfig,
                           d_future=None, schedules=None) -> SynthesisResult:
    """Same problem with the known state-space model in place of the data (a test oracle)."""
    if w_ini.length != cfg.t_ini:
        raise DimensionError(f"initialization has {w_ini.length} samples, t_ini is {cfg.t_ini}")
    L = _horizon_for(phi, cfg)
    problem = assemble_model_problem(model, w_ini, phi, L, cfg.cost, cfg.box, cfg.encoding, d_future, schedules)
    sol = solve_milp(problem, cfg.solver)
    return _result(problem, sol, L, None, [])


@dataclass(frozen=True)
class Satisfied:
    y: np.ndarray
    x0: np.ndarray

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Violated:
    y: np.ndarray
    x0: np.ndarray
    t_fail: Optional[int]

    def __bool__(self) -> bool:
        return False


def reconstruct_state(model: StateSpaceModel, w_ini: Trajectory, tol: float = 1e-6) -> np.ndarray:
    """State at the step after ``w_ini`` that best explains it (least squares)."""
    n = w_ini.length
    if w_ini.n_u != model.n_u or w_ini.n_y != model.n_y:
        raise DimensionError("initialization channels do not match the model")
    # y_k = C A^k x + (response to the known inputs from zero state)
    forced = simulate(model, np.zeros(model.n_x), w_ini.u, w_ini.d if model.n_d else None)
    O = np.vstack([model.C @ np.linalg.matrix_power(model.A, k) for k in range(n)])
    rhs = (w_ini.y - forced.y).reshape(-1)
    x_first = np.linalg.lstsq(O, rhs, rcond=None)[0]
    res = float(np.linalg.norm(O @ x_first - rhs))
    if res > tol * (1.0 + float(np.linalg.norm(w_ini.y))):
        raise InconsistentInitialization(
            f"initialization is not a trajectory of the model (residual {res:.3e})", res)
    _, xs = simulate(model, x_first, w_ini.u, w_ini.d if model.n_d else None, return_states=True)
    return xs[-1]


def verify_closed_loop(model: StateSpaceModel, w_ini: Trajectory, u_opt, phi: Formula, d_future=None,
                       schedules=None, tol: float = 1e-6):
    """Apply ``u_opt`` to the true model after ``w_ini`` and monitor ``phi`` at step 0."""
    x0 = reconstruct_state(model, w_ini, tol)
    u_opt = np.asarray(u_opt, dtype=float).reshape(-1, model.n_u)
    d = None
    if model.n_d:
        if d_future is None:
            raise DimensionError("the model has disturbance inputs; pass their future values")
        d = np.asarray(d_future, dtype=float).reshape(-1, model.n_d)[:u_opt.shape[0]]
    y = simulate(model, x0, u_opt, d).y
    if monitor(phi, y, 0, schedules):
        return Satisfied(y, x0)
    return Violated(y, x0, first_failure(phi, y, 0, schedules))
