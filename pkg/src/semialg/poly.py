"""Sparse multivariate polynomial arithmetic and graded monomial indexing.

Monomials are plain tuples of nonnegative integer exponents; one tuple slot
per ambient variable.  The shared monomial order is graded: lower total
degree first, ties broken by decreasing lexicographic comparison of the
exponent tuple, so for two variables the order is
1, x1, x2, x1^2, x1*x2, x2^2, ...
"""

from __future__ import annotations

import math

from .errors import DimensionMismatch

Monomial = tuple


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_degree(a: Monomial) -> int:
    return sum(a)


def mono_key(a: Monomial):
    """Sort key realizing the graded order (strictly increasing along a basis)."""
    return (sum(a), tuple(-e for e in a))


def monomial_basis(n_vars: int, degree: int) -> list[Monomial]:
    """All monomials in ``n_vars`` variables of total degree <= ``degree``.

    Length is C(n_vars + degree, degree).
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if n_vars == 0:
        return [()]
    out: list[Monomial] = []

    def fill(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for e in range(remaining, -1, -1):
            fill(prefix + (e,), remaining - e, slots - 1)

    for d in range(degree + 1):
        fill((), d, n_vars)
    return out


class Polynomial:
    """Sparse polynomial: map from exponent tuple to float coefficient.

    Canonical form never stores a zero coefficient.  Instances are treated
    as immutable; all arithmetic returns fresh objects.
    """

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: dict | None = None):
        self.n_vars = n_vars
        clean = {}
        if terms:
            for mono, coeff in terms.items():
                if len(mono) != n_vars:
                    raise DimensionMismatch(
                        f"monomial {mono} does not have {n_vars} exponents"
                    )
                if coeff != 0.0:
                    clean[tuple(mono)] = float(coeff)
        self.terms = clean

    @classmethod
    def zero(cls, n_vars: int) -> "Polynomial":
        return cls(n_vars, {})

    @classmethod
    def constant(cls, n_vars: int, value: float) -> "Polynomial":
        return cls(n_vars, {(0,) * n_vars: value})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "Polynomial":
        if not 0 <= index < n_vars:
            raise DimensionMismatch(f"variable index {index} out of range")
        exps = [0] * n_vars
        exps[index] = 1
        return cls(n_vars, {tuple(exps): 1.0})

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return self.degree == 0

    def constant_value(self) -> float:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((0,) * self.n_vars, 0.0)

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def vars_used(self) -> set[int]:
        used = set()
        for mono in self.terms:
            for i, e in enumerate(mono):
                if e:
                    used.add(i)
        return used

    def pad(self, n_total: int) -> "Polynomial":
        """Embed into a larger ambient space by appending zero exponents."""
        if n_total == self.n_vars:
            return self
        if n_total < self.n_vars:
            raise DimensionMismatch("cannot shrink ambient space")
        extra = (0,) * (n_total - self.n_vars)
        return Polynomial(n_total, {m + extra: c for m, c in self.terms.items()})

    def _check(self, other: "Polynomial"):
        if self.n_vars != other.n_vars:
            raise DimensionMismatch(
                f"operands have {self.n_vars} and {other.n_vars} variables"
            )

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(self.n_vars, terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n_vars, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                terms[m] = terms.get(m, 0.0) + c1 * c2
        return Polynomial(self.n_vars, terms)

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.n_vars, {m: c * factor for m, c in self.terms.items()})

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise ValueError("negative polynomial power")
        result = Polynomial.constant(self.n_vars, 1.0)
        for _ in range(exponent):
            result = result * self
        return result

    def evaluate(self, point) -> float:
        """Plain coefficient-times-power sum at a point."""
        if len(point) != self.n_vars:
            raise DimensionMismatch(
                f"point has {len(point)} coordinates, expected {self.n_vars}"
            )
        total = 0.0
        for mono, coeff in self.terms.items():
            term = coeff
            for x, e in zip(point, mono):
                if e:
                    term *= float(x) ** e
            total += term
        return total

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.n_vars == other.n_vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.n_vars, frozenset(self.terms.items())))

    def __repr__(self):
        from .printing import poly_to_dsl

        return f"Polynomial({poly_to_dsl(self)})"


def squared_norm(n_vars: int) -> Polynomial:
    """The polynomial sum of squares of all ambient variables."""
    terms = {}
    for i in range(n_vars):
        exps = [0] * n_vars
        exps[i] = 2
        terms[tuple(exps)] = 1.0
    return Polynomial(n_vars, terms)


def basis_size(n_vars: int, degree: int) -> int:
    return math.comb(n_vars + degree, degree)
