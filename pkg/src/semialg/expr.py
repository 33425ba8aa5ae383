"""Expression DAG for functions built from polynomials.

Supported node kinds: polynomial leaves plus add, mul, div, min, max, abs
and q-th roots.  Construction is hash-consed: building the same expression
twice yields the same object, so shared subexpressions are physically
shared.  That property is load-bearing downstream -- the lifter emits one
auxiliary variable per distinct non-polynomial node.

Semantics of roots: odd q is the sign-preserving real root defined on all
of R; even q is the principal nonnegative root defined on [0, inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DivisionByZero,
    EvenRootOfNegative,
    SemialgError,
)
from .poly import Polynomial

P_POLY = "poly"
P_ADD = "add"
P_MUL = "mul"
P_DIV = "div"
P_MIN = "min"
P_MAX = "max"
P_ABS = "abs"
P_ROOT = "root"


class Expr:
    """One hash-consed DAG node.  Equality and hashing are by identity."""

    __slots__ = ("kind", "children", "poly", "root_exp", "n_vars")

    def __init__(self, kind, children, poly, root_exp, n_vars):
        self.kind = kind
        self.children = children
        self.poly = poly
        self.root_exp = root_exp
        self.n_vars = n_vars

    def is_poly(self) -> bool:
        return self.kind == P_POLY

    def __repr__(self):
        from .printing import expr_to_dsl

        return f"Expr({expr_to_dsl(self)})"


_INTERN: dict = {}


def _hashable_poly(p: Polynomial):
    return (p.n_vars, frozenset(p.terms.items()))


def _intern(key, make):
    node = _INTERN.get(key)
    if node is None:
        node = make()
        _INTERN[key] = node
    return node


def poly_node(p: Polynomial) -> Expr:
    key = (P_POLY, _hashable_poly(p))
    return _intern(key, lambda: Expr(P_POLY, (), p, None, p.n_vars))


def constant(n_vars: int, value: float) -> Expr:
    return poly_node(Polynomial.constant(n_vars, value))


def variable(n_vars: int, index: int) -> Expr:
    return poly_node(Polynomial.variable(n_vars, index))


def _check_pair(a: Expr, b: Expr):
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(
            f"operands have {a.n_vars} and {b.n_vars} ambient variables"
        )


def add(a: Expr, b: Expr) -> Expr:
    _check_pair(a, b)
    if a.is_poly() and b.is_poly():
        return poly_node(a.poly + b.poly)
    key = (P_ADD, id(a), id(b))
    return _intern(key, lambda: Expr(P_ADD, (a, b), None, None, a.n_vars))


def mul(a: Expr, b: Expr) -> Expr:
    _check_pair(a, b)
    if a.is_poly() and b.is_poly():
        return poly_node(a.poly * b.poly)
    key = (P_MUL, id(a), id(b))
    return _intern(key, lambda: Expr(P_MUL, (a, b), None, None, a.n_vars))


def neg(a: Expr) -> Expr:
    return mul(constant(a.n_vars, -1.0), a)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    _check_pair(a, b)
    if b.is_poly() and b.poly.is_constant():
        c = b.poly.constant_value()
        if c == 0.0:
            raise DivisionByZero("division by the zero constant")
        return mul(a, constant(a.n_vars, 1.0 / c))
    key = (P_DIV, id(a), id(b))
    return _intern(key, lambda: Expr(P_DIV, (a, b), None, None, a.n_vars))


def min_of(a: Expr, b: Expr) -> Expr:
    _check_pair(a, b)
    if a.is_poly() and b.is_poly() and a.poly.is_constant() and b.poly.is_constant():
        return constant(a.n_vars, min(a.poly.constant_value(), b.poly.constant_value()))
    key = (P_MIN, id(a), id(b))
    return _intern(key, lambda: Expr(P_MIN, (a, b), None, None, a.n_vars))


def max_of(a: Expr, b: Expr) -> Expr:
    _check_pair(a, b)
    if a.is_poly() and b.is_poly() and a.poly.is_constant() and b.poly.is_constant():
        return constant(a.n_vars, max(a.poly.constant_value(), b.poly.constant_value()))
    key = (P_MAX, id(a), id(b))
    return _intern(key, lambda: Expr(P_MAX, (a, b), None, None, a.n_vars))


def abs_of(a: Expr) -> Expr:
    if a.is_poly() and a.poly.is_constant():
        return constant(a.n_vars, abs(a.poly.constant_value()))
    if a.is_poly() and a.poly.is_zero():
        return a
    key = (P_ABS, id(a))
    return _intern(key, lambda: Expr(P_ABS, (a,), None, None, a.n_vars))


def root_of(a: Expr, q: int) -> Expr:
    if q < 1:
        raise SemialgError(f"root index must be >= 1, got {q}")
    if q == 1:
        return a
    if a.is_poly() and a.poly.is_constant():
        return constant(a.n_vars, _real_root(a.poly.constant_value(), q))
    key = (P_ROOT, id(a), q)
    return _intern(key, lambda: Expr(P_ROOT, (a,), None, q, a.n_vars))


def power(a: Expr, k: int) -> Expr:
    if k < 1:
        raise SemialgError(f"power exponent must be >= 1, got {k}")
    if a.is_poly():
        return poly_node(a.poly**k)
    result = a
    for _ in range(k - 1):
        result = mul(result, a)
    return result


def _real_root(value: float, q: int) -> float:
    if q % 2 == 0:
        if value < 0.0:
            raise EvenRootOfNegative(f"even root of negative value {value}")
        return value ** (1.0 / q)
    return math.copysign(abs(value) ** (1.0 / q), value)


# ---------------------------------------------------------------------------
# evaluation


def eval_expr(e: Expr, x) -> float:
    """Evaluate at a point, sharing work across the DAG."""
    if len(x) != e.n_vars:
        raise DimensionMismatch(f"point has {len(x)} coordinates, expected {e.n_vars}")
    memo: dict = {}

    def rec(node: Expr) -> float:
        val = memo.get(id(node))
        if val is not None:
            return val
        k = node.kind
        if k == P_POLY:
            val = node.poly.evaluate(x)
        elif k == P_ADD:
            val = rec(node.children[0]) + rec(node.children[1])
        elif k == P_MUL:
            val = rec(node.children[0]) * rec(node.children[1])
        elif k == P_DIV:
            den = rec(node.children[1])
            if den == 0.0:
                raise DivisionByZero("denominator vanishes at the point")
            val = rec(node.children[0]) / den
        elif k == P_MIN:
            val = min(rec(node.children[0]), rec(node.children[1]))
        elif k == P_MAX:
            val = max(rec(node.children[0]), rec(node.children[1]))
        elif k == P_ABS:
            val = abs(rec(node.children[0]))
        else:
            val = _real_root(rec(node.children[0]), node.root_exp)
        memo[id(node)] = val
        return val

    return rec(e)


def eval_expr_array(e: Expr, columns) -> np.ndarray:
    """Vectorized evaluation over arrays of coordinates.

    Points where the expression is undefined come back as NaN instead of
    raising, which lets grid scans filter them in bulk.
    """
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(cols) != e.n_vars:
        raise DimensionMismatch("wrong number of coordinate columns")
    memo: dict = {}

    def rec(node: Expr) -> np.ndarray:
        val = memo.get(id(node))
        if val is not None:
            return val
        k = node.kind
        if k == P_POLY:
            val = np.zeros_like(cols[0]) if cols else np.zeros(())
            for mono, coeff in node.poly.terms.items():
                term = np.full_like(cols[0], coeff)
                for c, exp in zip(cols, mono):
                    if exp:
                        term = term * c**exp
                val = val + term
        elif k == P_ADD:
            val = rec(node.children[0]) + rec(node.children[1])
        elif k == P_MUL:
            val = rec(node.children[0]) * rec(node.children[1])
        elif k == P_DIV:
            den = rec(node.children[1])
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.where(den == 0.0, np.nan, rec(node.children[0]) / den)
        elif k == P_MIN:
            val = np.minimum(rec(node.children[0]), rec(node.children[1]))
        elif k == P_MAX:
            val = np.maximum(rec(node.children[0]), rec(node.children[1]))
        elif k == P_ABS:
            val = np.abs(rec(node.children[0]))
        else:
            child = rec(node.children[0])
            q = node.root_exp
            with np.errstate(invalid="ignore"):
                if q % 2 == 0:
                    val = np.where(child < 0.0, np.nan, np.abs(child) ** (1.0 / q))
                else:
                    val = np.sign(child) * np.abs(child) ** (1.0 / q)
        memo[id(node)] = val
        return val

    return rec(e)


# ---------------------------------------------------------------------------
# boxes and interval arithmetic


@dataclass(frozen=True)
class Box:
    """Per-variable closed intervals; unbounded sides are +-inf."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DimensionMismatch("box bound lengths differ")
        for a, b in zip(self.lo, self.hi):
            if a > b:
                raise SemialgError(f"empty box side [{a}, {b}]")

    @classmethod
    def cube(cls, n_vars: int, lo: float, hi: float) -> "Box":
        return cls((float(lo),) * n_vars, (float(hi),) * n_vars)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def is_bounded(self) -> bool:
        return all(math.isfinite(a) and math.isfinite(b) for a, b in zip(self.lo, self.hi))

    def interval(self, i: int) -> "Interval":
        return Interval(self.lo[i], self.hi[i])


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.lo) or math.isinf(self.hi)

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def magnitude(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack


UNBOUNDED = Interval(-math.inf, math.inf)


def _imul_scalar(iv: Interval, c: float) -> Interval:
    if c >= 0:
        return Interval(_safe_prod(c, iv.lo), _safe_prod(c, iv.hi))
    return Interval(_safe_prod(c, iv.hi), _safe_prod(c, iv.lo))


def _safe_prod(a: float, b: float) -> float:
    # 0 * inf means "zero times some finite unknown", which is 0
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def _iadd(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def _imul(a: Interval, b: Interval) -> Interval:
    cands = [
        _safe_prod(a.lo, b.lo),
        _safe_prod(a.lo, b.hi),
        _safe_prod(a.hi, b.lo),
        _safe_prod(a.hi, b.hi),
    ]
    return Interval(min(cands), max(cands))


def _ipow(iv: Interval, e: int) -> Interval:
    if e == 0:
        return Interval(1.0, 1.0)
    if e % 2 == 1:
        return Interval(iv.lo**e if not math.isinf(iv.lo) else iv.lo, iv.hi**e if not math.isinf(iv.hi) else iv.hi)
    m = iv.magnitude() ** e if not math.isinf(iv.magnitude()) else math.inf
    if iv.contains_zero():
        return Interval(0.0, m)
    small = min(abs(iv.lo), abs(iv.hi))
    return Interval(small**e, m)


def _irecip(iv: Interval) -> Interval:
    if iv.contains_zero():
        return UNBOUNDED
    inv_lo = 1.0 / iv.hi if iv.hi != 0 else math.inf
    inv_hi = 1.0 / iv.lo if iv.lo != 0 else math.inf
    return Interval(min(inv_lo, inv_hi), max(inv_lo, inv_hi))


def _iroot(iv: Interval, q: int) -> Interval:
    def rt(v):
        if math.isinf(v):
            return v
        return math.copysign(abs(v) ** (1.0 / q), v)

    if q % 2 == 1:
        return Interval(rt(iv.lo), rt(iv.hi))
    if iv.hi < 0.0:
        raise EvenRootOfNegative("even root argument is negative over the whole box")
    return Interval(rt(max(iv.lo, 0.0)), rt(iv.hi))


def _poly_interval(p: Polynomial, box: Box) -> Interval:
    total = Interval(0.0, 0.0)
    for mono, coeff in p.terms.items():
        term = Interval(1.0, 1.0)
        for i, e in enumerate(mono):
            if e:
                term = _imul(term, _ipow(box.interval(i), e))
        total = _iadd(total, _imul_scalar(term, coeff))
    return total


def interval_eval(e: Expr, box: Box) -> Interval:
    """Sound enclosure of the expression's values over the box.

    Wherever the expression is well-defined on the box, its value lies in
    the returned interval.  Division across zero yields the unbounded
    marker interval, which then propagates.
    """
    if box.dim != e.n_vars:
        raise DimensionMismatch("box dimension does not match expression")
    memo: dict = {}

    def rec(node: Expr) -> Interval:
        val = memo.get(id(node))
        if val is not None:
            return val
        k = node.kind
        if k == P_POLY:
            val = _poly_interval(node.poly, box)
        elif k == P_ADD:
            val = _iadd(rec(node.children[0]), rec(node.children[1]))
        elif k == P_MUL:
            val = _imul(rec(node.children[0]), rec(node.children[1]))
        elif k == P_DIV:
            val = _imul(rec(node.children[0]), _irecip(rec(node.children[1])))
        elif k == P_MIN:
            a, b = rec(node.children[0]), rec(node.children[1])
            val = Interval(min(a.lo, b.lo), min(a.hi, b.hi))
        elif k == P_MAX:
            a, b = rec(node.children[0]), rec(node.children[1])
            val = Interval(max(a.lo, b.lo), max(a.hi, b.hi))
        elif k == P_ABS:
            a = rec(node.children[0])
            lo = 0.0 if a.contains_zero() else min(abs(a.lo), abs(a.hi))
            val = Interval(lo, a.magnitude())
        else:
            val = _iroot(rec(node.children[0]), node.root_exp)
        memo[id(node)] = val
        return val

    return rec(e)
