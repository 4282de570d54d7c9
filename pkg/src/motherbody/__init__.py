"""Supercritical spectral-curve computations for the cubic normal matrix model."""

from .curve import (
    A1_of_t,
    A2_of_t,
    A3_of_t,
    BranchSet,
    CurveParams,
    SheetPath,
    XiTriple,
    branch_points,
    continue_xi_pair,
    discriminant_Q,
    label_sheets_at,
    solve_cubic_xi,
)

__version__ = "0.1.0"

__all__ = [
    "A1_of_t",
    "A2_of_t",
    "A3_of_t",
    "BranchSet",
    "CurveParams",
    "SheetPath",
    "XiTriple",
    "branch_points",
    "continue_xi_pair",
    "discriminant_Q",
    "label_sheets_at",
    "solve_cubic_xi",
    "__version__",
]
