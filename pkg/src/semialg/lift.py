"""Rewrite an expression problem as a lifted polynomial problem.

Each distinct non-polynomial node gets at most one auxiliary variable:

    abs(f)      t with  t^2 - f_lifted^2 = 0,  t >= 0
    root(f, q)  t with  t^q - f_lifted   = 0,  t >= 0 for even q
    f / g       r with  r * g_lifted - 1 = 0,  result f_lifted * r
    min, max    routed through abs:  2*min(f,g) = (f+g) - |f-g|

Sums and products of lifted forms stay polynomial and never spend an
auxiliary variable; neither do polynomial subtrees.  Every auxiliary
variable carries provenance: the expression it stands for, so a lifted
point can be reconstructed from an original point (``eval_lifting``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as E
from .errors import DimensionMismatch, EmptyBoxBound, NotWellDefined
from .expr import Box, Expr, interval_eval
from .poly import Polynomial

BALL_MARGIN = 0.05


@dataclass
class LiftedProblem:
    """Polynomial optimization problem over the original plus aux variables.

    ``objective`` is always the *minimized* polynomial; for a maximize
    problem it is the negated objective and reported values are negated
    back by the caller.  All polynomials live over n + len(aux) variables,
    original coordinates first.
    """

    n: int
    var_names: list[str]
    aux_names: list[str]
    equalities: list[Polynomial]
    base_ineqs: list[Polynomial]
    nonneg: list[int]  # aux indices (0-based within aux block)
    objective: Polynomial
    sense: str
    objective_expr: Expr
    provenance: dict[int, Expr]
    ball_M: float
    groups: list[set[int]]  # aux indices used per top-level item, objective first
    box: Box

    @property
    def total_vars(self) -> int:
        return self.n + len(self.aux_names)

    @property
    def n_aux(self) -> int:
        return len(self.aux_names)

    def all_names(self) -> list[str]:
        return list(self.var_names) + list(self.aux_names)

    def reported_value(self, internal: float) -> float:
        return -internal if self.sense == "max" else internal


class _Lifter:
    def __init__(self, n: int, box: Box):
        self.n = n
        self.box = box
        self.memo: dict[int, Polynomial] = {}
        self.provenance: list[Expr] = []
        self.deps: list[set[int]] = []  # transitive aux dependencies
        self.equalities: list[Polynomial] = []
        self.nonneg: list[int] = []

    @property
    def width(self) -> int:
        return self.n + len(self.provenance)

    def pad(self, p: Polynomial) -> Polynomial:
        return p.pad(self.width)

    def aux_vars_of(self, p: Polynomial) -> set[int]:
        return {i - self.n for i in p.vars_used() if i >= self.n}

    def closure(self, aux_set: set[int]) -> set[int]:
        out: set[int] = set()
        for a in aux_set:
            out |= self.deps[a]
        return out

    def new_aux(self, provenance: Expr, sign_constrained: bool) -> Polynomial:
        idx = len(self.provenance)
        self.provenance.append(provenance)
        self.deps.append({idx})
        if sign_constrained:
            self.nonneg.append(idx)
        return Polynomial.variable(self.width, self.n + idx)

    def add_equality(self, p: Polynomial, aux_idx: int):
        self.equalities.append(p)
        self.deps[aux_idx] |= self.closure(self.aux_vars_of(p) - {aux_idx})

    def lift(self, e: Expr) -> Polynomial:
        cached = self.memo.get(id(e))
        if cached is not None:
            return self.pad(cached)
        k = e.kind
        if k == E.P_POLY:
            result = self.pad(e.poly)
        elif k == E.P_ADD:
            left = self.lift(e.children[0])
            right = self.lift(e.children[1])
            result = self.pad(left) + self.pad(right)
        elif k == E.P_MUL:
            left = self.lift(e.children[0])
            right = self.lift(e.children[1])
            result = self.pad(left) * self.pad(right)
        elif k == E.P_DIV:
            result = self._lift_div(e)
        elif k == E.P_ABS:
            result = self._lift_abs(e)
        elif k == E.P_ROOT:
            result = self._lift_root(e)
        else:
            result = self._lift_minmax(e)
        self.memo[id(e)] = result
        return result

    def _lift_abs(self, e: Expr) -> Polynomial:
        inner = self.lift(e.children[0])
        t = self.new_aux(e, sign_constrained=True)
        inner = self.pad(inner)
        self.add_equality(t * t - inner * inner, len(self.provenance) - 1)
        return t

    def _lift_root(self, e: Expr) -> Polynomial:
        q = e.root_exp
        child = e.children[0]
        if q % 2 == 0:
            iv = interval_eval(child, self.box)
            if iv.lo < 0.0:
                raise NotWellDefined(
                    f"argument of a {q}-th root may be negative on the box "
                    f"(enclosure [{iv.lo}, {iv.hi}])"
                )
        inner = self.lift(child)
        t = self.new_aux(e, sign_constrained=(q % 2 == 0))
        self.add_equality(t**q - self.pad(inner), len(self.provenance) - 1)
        return t

    def _lift_div(self, e: Expr) -> Polynomial:
        num_node, den_node = e.children
        iv = interval_eval(den_node, self.box)
        if iv.contains_zero():
            raise NotWellDefined(
                f"denominator may vanish on the box (enclosure [{iv.lo}, {iv.hi}])"
            )
        numerator = self.lift(num_node)
        denominator = self.lift(den_node)
        recip_node = E.div(E.constant(e.n_vars, 1.0), den_node)
        cached = self.memo.get(id(recip_node))
        if cached is not None:
            recip = self.pad(cached)
        else:
            recip = self.new_aux(recip_node, sign_constrained=False)
            one = Polynomial.constant(self.width, 1.0)
            self.add_equality(recip * self.pad(denominator) - one, len(self.provenance) - 1)
            self.memo[id(recip_node)] = recip
        return self.pad(numerator) * recip

    def _lift_minmax(self, e: Expr) -> Polynomial:
        f_node, g_node = e.children
        f_poly = self.lift(f_node)
        g_poly = self.lift(g_node)
        f_poly = self.pad(f_poly)
        delta = f_poly - g_poly
        if delta.is_zero():
            return f_poly
        abs_node = E.abs_of(E.sub(f_node, g_node))
        abs_poly = self.lift(abs_node)
        f_poly = self.pad(f_poly)
        g_poly = self.pad(g_poly)
        if e.kind == E.P_MIN:
            return (f_poly + g_poly - abs_poly).scale(0.5)
        return (f_poly + g_poly + abs_poly).scale(0.5)


def build_problem(
    objective: Expr,
    sense: str,
    constraints: list[tuple[Expr, str]],
    box: Box,
    ball_M: float | None = None,
    var_names: list[str] | None = None,
) -> LiftedProblem:
    """Lift an expression problem into a polynomial one with provenance.

    Polynomial constraints pass through untouched.  A non-polynomial
    constraint ``h rel 0`` is lifted and the relation imposed on its
    lifted polynomial form.  ``h <= 0`` is stored as ``-h >= 0``.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    n = objective.n_vars
    if box.dim != n:
        raise DimensionMismatch("box dimension does not match the objective")
    for h, _ in constraints:
        if h.n_vars != n:
            raise DimensionMismatch("constraint over a different ambient space")

    lifter = _Lifter(n, box)
    groups: list[set[int]] = []

    obj_node = objective if sense == "min" else E.neg(objective)
    obj_poly = lifter.lift(obj_node)
    groups.append(lifter.closure(lifter.aux_vars_of(obj_poly)))

    equalities: list[Polynomial] = []
    base_ineqs: list[Polynomial] = []
    for h, rel in constraints:
        if h.is_poly():
            p = h.poly
            group: set[int] = set()
        else:
            p = lifter.lift(h)
            group = lifter.closure(lifter.aux_vars_of(p))
        groups.append(group)
        if rel == "==":
            equalities.append(p)
        elif rel == ">=":
            base_ineqs.append(p)
        elif rel == "<=":
            base_ineqs.append(-p)
        else:
            raise ValueError(f"unknown relation {rel!r}")

    total = lifter.width
    equalities = [p.pad(total) for p in lifter.equalities] + [p.pad(total) for p in equalities]
    base_ineqs = [p.pad(total) for p in base_ineqs]
    obj_poly = obj_poly.pad(total)

    if var_names is None:
        var_names = [f"x{i + 1}" for i in range(n)]
    taken = set(var_names)
    aux_names = []
    for k in range(len(lifter.provenance)):
        name = f"y{k + 1}"
        if name in taken:
            name = f"_y{k + 1}"
        aux_names.append(name)

    lp = LiftedProblem(
        n=n,
        var_names=list(var_names),
        aux_names=aux_names,
        equalities=equalities,
        base_ineqs=base_ineqs,
        nonneg=list(lifter.nonneg),
        objective=obj_poly,
        sense=sense,
        objective_expr=objective,
        provenance=dict(enumerate(lifter.provenance)),
        ball_M=0.0,
        groups=groups,
        box=box,
    )
    lp.ball_M = float(ball_M) if ball_M is not None else compute_ball_bound(lp, box)
    return lp


def ball_bound_for_vars(lp: LiftedProblem, var_indices, box: Box, margin: float = BALL_MARGIN) -> float:
    """Radius-squared bound for a subset of the lifted coordinates."""
    total = 0.0
    for i in sorted(var_indices):
        if i < lp.n:
            lo, hi = box.lo[i], box.hi[i]
            if math.isinf(lo) or math.isinf(hi):
                raise EmptyBoxBound(
                    f"variable {lp.var_names[i]} has no finite box; "
                    "declare one or pass an explicit ball bound"
                )
            total += max(lo * lo, hi * hi)
        else:
            iv = interval_eval(lp.provenance[i - lp.n], box)
            if iv.unbounded:
                raise EmptyBoxBound(
                    f"no finite enclosure for lifted variable {lp.aux_names[i - lp.n]}; "
                    "pass an explicit ball bound"
                )
            total += iv.magnitude() ** 2
    # strictly positive even for a degenerate all-zero box
    return (1.0 + margin) * max(total, 1e-6)


def compute_ball_bound(lp: LiftedProblem, box: Box, margin: float = BALL_MARGIN) -> float:
    """Bound M with M > squared norm of the lifted point over the box."""
    return ball_bound_for_vars(lp, range(lp.total_vars), box, margin)


def eval_lifting(lp: LiftedProblem, x) -> np.ndarray:
    """Map an original point to its lifted coordinates via provenance."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({lp.n},)")
    aux = [E.eval_expr(lp.provenance[k], x) for k in range(lp.n_aux)]
    return np.concatenate([x, np.asarray(aux, dtype=float)]) if aux else x.copy()


def lifted_problem_to_json(lp: LiftedProblem) -> dict:
    """JSON-ready dump, schema ``liftedproblem/1``."""
    from .printing import expr_to_dsl

    def poly_json(p: Polynomial) -> dict:
        return {",".join(map(str, m)): c for m, c in sorted(p.terms.items())}

    return {
        "schema": "liftedproblem/1",
        "variables": lp.var_names,
        "aux": lp.aux_names,
        "sense": lp.sense,
        "objective": poly_json(lp.objective),
        "equalities": [poly_json(p) for p in lp.equalities],
        "base_ineqs": [poly_json(p) for p in lp.base_ineqs],
        "nonneg": list(lp.nonneg),
        "provenance": {
            lp.aux_names[k]: expr_to_dsl(e, lp.var_names) for k, e in lp.provenance.items()
        },
        "groups": [sorted(g) for g in lp.groups],
        "ball_M": lp.ball_M,
        "box": {"lo": list(lp.box.lo), "hi": list(lp.box.hi)},
    }
