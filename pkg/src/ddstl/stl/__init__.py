from .formula import (Always, And, Const, Eventually, Formula, Not, Or, Predicate, Until, conj, depth, disj,
                      horizon, predicates, to_text)
from .monitor import first_failure, monitor
from .parser import StlSyntaxError, parse

__all__ = [
    "Always", "And", "Const", "Eventually", "Formula", "Not", "Or", "Predicate", "Until", "conj", "depth", "disj",
    "horizon", "predicates", "to_text", "first_failure", "monitor", "StlSyntaxError", "parse",
]
