from .bnb import solve_milp, solve_milp_arrays
from .simplex import LpSolution, SolverParams, Status, solve_lp, solve_lp_arrays

__all__ = ["solve_milp", "solve_milp_arrays", "LpSolution", "SolverParams", "Status", "solve_lp",
           "solve_lp_arrays"]
