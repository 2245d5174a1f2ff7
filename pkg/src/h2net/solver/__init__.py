"""LP/MILP engine: simplex, branch-and-bound, Dinkelbach and MPS export."""

from .branch_and_bound import MilpOptions, MilpResult, MilpStatus, solve_milp
from .fractional import DegenerateDenominatorError, FractionalResult, solve_fractional
from .mps import export_mps, write_mps
from .simplex import LpSolution, LpStatus, NumericalError, solve_lp

__all__ = [
    "DegenerateDenominatorError", "FractionalResult", "LpSolution", "LpStatus", "MilpOptions",
    "MilpResult", "MilpStatus", "NumericalError", "export_mps", "solve_fractional", "solve_lp",
    "solve_milp", "write_mps",
]
