"""Render polynomials and expression DAGs back into DSL text.

The printer is the inverse of the parser up to polynomial folding:
``parse_expr(expr_to_dsl(e), names)`` returns the identical hash-consed
node.
"""

from __future__ import annotations

from . import expr as E
from .poly import Polynomial, mono_key


def default_names(n_vars: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n_vars)]


def _mono_str(mono, names) -> str:
    parts = []
    for i, e in enumerate(mono):
        if e == 1:
            parts.append(names[i])
        elif e > 1:
            parts.append(f"{names[i]}^{e}")
    return "*".join(parts)


def poly_to_dsl(p: Polynomial, names=None) -> str:
    if names is None:
        names = default_names(p.n_vars)
    if p.is_zero():
        return "0"
    items = sorted(p.terms.items(), key=lambda kv: mono_key(kv[0]), reverse=True)
    pieces = []
    for mono, coeff in items:
        mono_s = _mono_str(mono, names)
        mag = abs(coeff)
        if mono_s and mag == 1.0:
            body = mono_s
        elif mono_s:
            body = f"{repr(mag)}*{mono_s}"
        else:
            body = repr(mag)
        if not pieces:
            pieces.append(body if coeff > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
    return " ".join(pieces)


def _poly_atomic(p: Polynomial) -> bool:
    if len(p.terms) != 1:
        return p.is_zero()
    [(mono, coeff)] = p.terms.items()
    if sum(mono) == 0:
        return coeff >= 0
    return coeff == 1.0


# precedence: 1 = additive, 2 = multiplicative, 3 = atomic
_PREC = {E.P_ADD: 1, E.P_MUL: 2, E.P_DIV: 2}


def _prec(e: E.Expr) -> int:
    if e.kind == E.P_POLY:
        if _poly_atomic(e.poly):
            return 3
        return 2 if len(e.poly.terms) == 1 else 1
    return _PREC.get(e.kind, 3)


def expr_to_dsl(e: E.Expr, names=None) -> str:
    if names is None:
        names = default_names(e.n_vars)

    def wrap(child, min_prec):
        s = rec(child)
        return f"({s})" if _prec(child) < min_prec else s

    def rec(node: E.Expr) -> str:
        k = node.kind
        if k == E.P_POLY:
            return poly_to_dsl(node.poly, names)
        if k == E.P_ADD:
            left, right = node.children
            return f"{wrap(left, 1)} + {wrap(right, 2)}"
        if k == E.P_MUL:
            left, right = node.children
            return f"{wrap(left, 2)}*{wrap(right, 3)}"
        if k == E.P_DIV:
            num, den = node.children
            return f"{wrap(num, 2)}/{wrap(den, 3)}"
        if k == E.P_MIN:
            return f"min({rec(node.children[0])}, {rec(node.children[1])})"
        if k == E.P_MAX:
            return f"max({rec(node.children[0])}, {rec(node.children[1])})"
        if k == E.P_ABS:
            return f"abs({rec(node.children[0])})"
        if node.root_exp == 2:
            return f"sqrt({rec(node.children[0])})"
        return f"root({rec(node.children[0])}, {node.root_exp})"

    return rec(e)
