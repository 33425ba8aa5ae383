"""Global optimization of semi-algebraic functions via lifted moment relaxations."""

from . import errors
from .certify import (
    Certificate,
    certify_solution,
    check_flatness,
    extract_atoms,
    extract_sos_certificate,
    numerical_rank,
    verify_atoms,
)
from .expr import Box, Expr, Interval, eval_expr, interval_eval
from .lift import LiftedProblem, build_problem, compute_ball_bound, eval_lifting
from .moment import (
    LmiRelaxation,
    MatrixPencil,
    build_relaxation,
    build_sparse_relaxation,
    detect_cliques,
    min_order,
    moment_vector,
)
from .oracle import OracleResult, grid_search
from .parser import ProblemSpec, parse_expr, parse_problem
from .poly import Polynomial, monomial_basis
from .printing import expr_to_dsl, poly_to_dsl
from .sdp import SdpSolution, solve
from .sdpa import export_sdpa, import_sdpa

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Certificate",
    "Expr",
    "Interval",
    "LiftedProblem",
    "LmiRelaxation",
    "MatrixPencil",
    "OracleResult",
    "Polynomial",
    "ProblemSpec",
    "SdpSolution",
    "build_problem",
    "build_relaxation",
    "build_sparse_relaxation",
    "certify_solution",
    "check_flatness",
    "compute_ball_bound",
    "detect_cliques",
    "errors",
    "eval_expr",
    "eval_lifting",
    "export_sdpa",
    "expr_to_dsl",
    "extract_atoms",
    "extract_sos_certificate",
    "grid_search",
    "import_sdpa",
    "interval_eval",
    "min_order",
    "moment_vector",
    "monomial_basis",
    "numerical_rank",
    "parse_expr",
    "parse_problem",
    "poly_to_dsl",
    "solve",
    "verify_atoms",
]
