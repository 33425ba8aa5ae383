"""Shared test utilities: canonical problems and random generators."""

from __future__ import annotations

import math

import numpy as np

from semialg import Box, Polynomial, build_problem, monomial_basis, parse_problem
from semialg import expr as E
from semialg.errors import SemialgError

EXAMPLE1 = """
vars x1 x2;
maximize abs(x1)*x2 - x1^2;
x1^2 + x2^2 == 1;
box x1 in [-1, 1];
box x2 in [-1, 1];
"""

EXAMPLE2 = """
vars x1 x2;
maximize x1*abs(x1 - 2*x2);
x1^2 + x2^2 == 1;
box x1 in [-1, 1];
box x2 in [-1, 1];
"""

TWO_ABS = """
vars x1 x2;
minimize (x1 - 0.3)^2 + (x2 + 0.2)^2;
abs(x1) >= 0.5;
abs(x2) >= 0.25;
box x1 in [-1, 1];
box x2 in [-1, 1];
"""

PURE_POLY = """
vars x1;
minimize x1^2;
x1 >= 0;
box x1 in [0, 1];
"""

# Motzkin-style certificate-resistant polynomial: nonnegative everywhere,
# minimum 0 at (+-1, +-1), but its lowest-order relaxation is strictly loose.
MOTZKIN = """
vars x1 x2;
minimize x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1;
box x1 in [-2, 2];
box x2 in [-2, 2];
"""

# Composite of every lifting rule; lifts with exactly 8 auxiliary variables.
DEMO_COMPOSITE = (
    "min(root(abs(x1 + x2 + x1*x2), 2), "
    "sqrt(root(abs(x1)^3 + abs(x2)^3, 3) + 1/(x1 + 3)))"
)

EXAMPLE1_FSTAR = (math.sqrt(2.0) - 1.0) / 2.0  # 0.20710678...
EXAMPLE2_FSTAR = (1.0 + math.sqrt(5.0)) / 2.0  # golden ratio 1.61803398...
TWO_ABS_FSTAR = 0.0425


def build(text: str):
    spec = parse_problem(text)
    lp = build_problem(
        spec.objective, spec.sense, spec.constraints, spec.box, var_names=spec.variables
    )
    return spec, lp


def circle_points(count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def box_points(box: Box, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    return lo + (hi - lo) * rng.random((count, box.dim))


def feasible_points(name: str, spec, count: int, seed: int = 0) -> np.ndarray:
    """Samples satisfying the original constraints of a canonical problem."""
    if name in ("example1", "example2"):
        return circle_points(count, seed)
    rng = np.random.default_rng(seed)
    lo = np.asarray(spec.box.lo)
    hi = np.asarray(spec.box.hi)
    out = []
    while len(out) < count:
        x = lo + (hi - lo) * rng.random(spec.box.dim)
        ok = True
        for h, rel in spec.constraints:
            v = E.eval_expr(h, x)
            if rel == ">=" and v < 0:
                ok = False
            elif rel == "<=" and v > 0:
                ok = False
            elif rel == "==" and abs(v) > 1e-12:
                ok = False
        if ok:
            out.append(x)
    return np.asarray(out)


# ---------------------------------------------------------------------------
# random expression generation


def random_poly(rng, n, max_deg=2, max_terms=3, coeff=1.0) -> Polynomial:
    basis = monomial_basis(n, max_deg)
    k = int(rng.integers(1, max_terms + 1))
    picks = rng.choice(len(basis), size=min(k, len(basis)), replace=False)
    terms = {basis[i]: round(float(rng.uniform(-coeff, coeff)), 3) for i in picks}
    p = Polynomial(n, terms)
    if p.is_zero():
        p = Polynomial.constant(n, 0.5)
    return p


def _safe_denominator(rng, n, box) -> E.Expr:
    # offset dominates the coefficient mass, so the enclosure avoids zero
    p = random_poly(rng, n, max_deg=1, max_terms=2, coeff=0.3)
    cand = E.poly_node(p + Polynomial.constant(n, 2.0))
    iv = E.interval_eval(cand, box)
    if iv.contains_zero():
        return E.constant(n, 2.0)
    return cand


def random_expr(rng, n, depth, box, root_kind=None) -> E.Expr:
    """Random member of the algebra; well-defined on the box by construction."""
    if depth <= 0:
        return E.poly_node(random_poly(rng, n))
    kind = root_kind or rng.choice(
        ["poly", "add", "mul", "abs", "min", "max", "root2", "root3", "div"],
        p=[0.2, 0.15, 0.1, 0.15, 0.1, 0.1, 0.07, 0.07, 0.06],
    )
    if kind == "poly":
        return E.poly_node(random_poly(rng, n))
    if kind == "add":
        return E.add(random_expr(rng, n, depth - 1, box), random_expr(rng, n, depth - 1, box))
    if kind == "mul":
        # one factor stays affine so degrees do not explode
        return E.mul(
            random_expr(rng, n, depth - 1, box),
            E.poly_node(random_poly(rng, n, max_deg=1, max_terms=2)),
        )
    if kind == "abs":
        return E.abs_of(random_expr(rng, n, depth - 1, box))
    if kind == "min":
        return E.min_of(random_expr(rng, n, depth - 1, box), random_expr(rng, n, depth - 1, box))
    if kind == "max":
        return E.max_of(random_expr(rng, n, depth - 1, box), random_expr(rng, n, depth - 1, box))
    if kind == "root2":
        return E.root_of(E.abs_of(random_expr(rng, n, depth - 1, box)), 2)
    if kind == "root3":
        return E.root_of(random_expr(rng, n, depth - 1, box), 3)
    return E.div(random_expr(rng, n, depth - 1, box), _safe_denominator(rng, n, box))


def random_liftable_problem(rng, max_aux=2, max_degree=4):
    """Random n=2 box-constrained problem whose lifting stays small.

    Returns (objective expr, constraints, box, lifted problem) or None when
    the draw is rejected (too many aux variables or degrees that would blow
    up the relaxation).
    """
    n = 2
    box = Box.cube(n, -1.0, 1.0)
    objective = random_expr(rng, n, depth=int(rng.integers(1, 4)), box=box)
    box_polys = []
    for i in range(n):
        p = Polynomial.constant(n, 1.0) - Polynomial.variable(n, i) * Polynomial.variable(n, i)
        box_polys.append((E.poly_node(p), ">="))
    try:
        lp = build_problem(objective, "min", box_polys, box)
    except SemialgError:
        return None
    if lp.n_aux > max_aux or lp.objective.degree > max_degree:
        return None
    if any(u.degree > max_degree for u in lp.equalities):
        return None
    from semialg import min_order
    from semialg.poly import basis_size
    if basis_size(lp.total_vars, 2 * (min_order(lp) + 1)) > 260:
        return None
    return objective, box_polys, box, lp
