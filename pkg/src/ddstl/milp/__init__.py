from .encode import (COST_KINDS, CostSpec, EncodingParams, Handles, PredicateInstance, assemble_model_problem,
                     assemble_problem, encode_cost, encode_dynamics, encode_formula, encode_state_space)
from .lpfile import export_lp, to_lp_string
from .model import LinearConstraint, LinExpr, MilpProblem, ProblemBuilder, Variable, VarKind

__all__ = [
    "COST_KINDS", "CostSpec", "EncodingParams", "Handles", "PredicateInstance", "assemble_model_problem",
    "assemble_problem", "encode_cost", "encode_dynamics", "encode_formula", "encode_state_space", "export_lp",
    "to_lp_string", "LinearConstraint", "LinExpr", "MilpProblem", "ProblemBuilder", "Variable", "VarKind",
]
