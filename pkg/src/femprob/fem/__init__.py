from .assembly import (
    FemSolution,
    SolverError,
    assemble,
    assemble_full,
    solve_poisson,
    write_solution,
)
from .dofmap import DofMap, build_dof_map
from .errors import h1_error
from .quadrature import QuadratureRule, triangle_rule
from .reference import ReferenceElement, reference_element

__all__ = [
    "DofMap",
    "FemSolution",
    "QuadratureRule",
    "ReferenceElement",
    "SolverError",
    "assemble",
    "assemble_full",
    "build_dof_map",
    "h1_error",
    "reference_element",
    "solve_poisson",
    "triangle_rule",
    "write_solution",
]
