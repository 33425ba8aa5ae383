"""Moment and localizing matrix assembly for the relaxation hierarchy.

An order-i relaxation is a linear matrix inequality problem in the moment
vector w, indexed by monomials of degree <= 2i.  Positive-semidefinite
blocks are, in order: the moment matrix, one localizer per base
inequality, one per sign-constrained auxiliary variable, and the ball
localizer last.  Equality constraints enter as linear rows (the distinct
entries of their localizers set to zero) together with the normalization
row fixing the moment of 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OrderTooSmall, SupportNotCovered, SemialgError
from .lift import LiftedProblem, ball_bound_for_vars
from .poly import Polynomial, mono_degree, mono_key, mono_mul, monomial_basis


@dataclass
class MatrixPencil:
    """Symmetric matrix whose entries are affine forms in w.

    ``entries[(r, c)]`` for r <= c maps w index -> coefficient;
    ``const[(r, c)]`` holds the affine offset.  ``basis`` is the monomial
    list indexing rows/columns and ``weight`` the localized polynomial
    (1 for the moment matrix itself); both are None for imported
    structure-only blocks.
    """

    size: int
    label: str
    entries: dict = field(default_factory=dict)
    const: dict = field(default_factory=dict)
    basis: list | None = None
    weight: Polynomial | None = None

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        mat = np.zeros((self.size, self.size))
        for (r, c), form in self.entries.items():
            val = sum(coeff * w[j] for j, coeff in form.items())
            mat[r, c] += val
            if r != c:
                mat[c, r] += val
        for (r, c), val in self.const.items():
            mat[r, c] += val
            if r != c:
                mat[c, r] += val
        return mat

    def active_indices(self) -> set[int]:
        active = set()
        for form in self.entries.values():
            active.update(form.keys())
        return active


@dataclass
class LmiRelaxation:
    """Order-i relaxation: PSD pencils plus linear equality rows in w."""

    m: int  # length of the moment vector
    blocks: list[MatrixPencil]
    eq_rows: list[dict]  # each row: w index -> coefficient
    eq_rhs: list[float]
    eq_meta: list[tuple]  # ("eq", equality index, shift monomial) or ("norm",)
    objective: dict  # w index -> coefficient, always minimized
    order: int | None = None
    n_vars: int | None = None
    w_index: list | None = None
    w_pos: dict | None = None
    degree_offsets: list[int] = field(default_factory=list)
    provenance_link: LiftedProblem | None = None
    cliques: list | None = None

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.m)
        for j, coeff in self.objective.items():
            c[j] = coeff
        return c

    def moment_blocks(self) -> list[MatrixPencil]:
        return [b for b in self.blocks if b.label.startswith("moment")]

    def total_psd_size(self) -> int:
        return sum(b.size for b in self.blocks)


def moment_entry(alpha, beta, w_pos: dict) -> int:
    """Index of the moment-matrix entry at row alpha, column beta."""
    mono = mono_mul(alpha, beta)
    idx = w_pos.get(mono)
    if idx is None:
        raise SemialgError(f"monomial {mono} exceeds the relaxation degree")
    return idx


def build_localizer(g: Polynomial, basis: list, w_pos: dict, label: str) -> MatrixPencil:
    """Localizing pencil of g over the given monomial basis.

    With g = 1 this is the moment matrix itself.
    """
    entries: dict = {}
    for r in range(len(basis)):
        for c in range(r, len(basis)):
            shift = mono_mul(basis[r], basis[c])
            form: dict = {}
            for mono, coeff in g.terms.items():
                idx = w_pos.get(mono_mul(shift, mono))
                if idx is None:
                    raise SemialgError(
                        f"localizer for {label} exceeds the relaxation degree"
                    )
                form[idx] = form.get(idx, 0.0) + coeff
            entries[(r, c)] = form
    return MatrixPencil(
        size=len(basis), label=label, entries=entries, basis=list(basis), weight=g
    )


def min_order(lp: LiftedProblem) -> int:
    """Smallest admissible relaxation order for a lifted problem."""
    i = max(1, math.ceil(lp.objective.degree / 2))
    for u in lp.equalities:
        i = max(i, math.ceil(u.degree / 2))
    for g in lp.base_ineqs:
        i = max(i, math.ceil(g.degree / 2))
    return i


def _ball_poly(M: float, n_total: int, var_indices) -> Polynomial:
    terms = {(0,) * n_total: M}
    for i in var_indices:
        exps = [0] * n_total
        exps[i] = 2
        terms[tuple(exps)] = -1.0
    return Polynomial(n_total, terms)


def _equality_rows(u: Polynomial, k: int, shift_degree: int, shifts: list, w_pos: dict):
    """Distinct entries of the order-(i - a_k) localizer of u, set to zero.

    Entries of a localizing matrix depend only on the row-column monomial
    product, so one row per shift monomial of degree <= 2(i - a_k) covers
    the whole entrywise-zero condition.
    """
    rows, meta = [], []
    for delta in shifts:
        if mono_degree(delta) > shift_degree:
            break
        row = {}
        for mono, coeff in u.terms.items():
            idx = w_pos[mono_mul(delta, mono)]
            row[idx] = row.get(idx, 0.0) + coeff
        rows.append(row)
        meta.append(("eq", k, delta))
    return rows, meta


def build_relaxation(lp: LiftedProblem, i: int) -> LmiRelaxation:
    """Dense order-i relaxation of a lifted problem."""
    imin = min_order(lp)
    if i < imin:
        raise OrderTooSmall(i, imin)
    N = lp.total_vars
    w_index = monomial_basis(N, 2 * i)
    w_pos = {m: j for j, m in enumerate(w_index)}

    blocks = [build_localizer(Polynomial.constant(N, 1.0), monomial_basis(N, i), w_pos, "moment")]
    offsets = []
    for j, g in enumerate(lp.base_ineqs):
        off = max(1, math.ceil(g.degree / 2)) if g.degree > 0 else 1
        offsets.append(off)
        blocks.append(build_localizer(g, monomial_basis(N, i - off), w_pos, f"ineq:{j}"))
    for a in lp.nonneg:
        offsets.append(1)
        blocks.append(
            build_localizer(
                Polynomial.variable(N, lp.n + a), monomial_basis(N, i - 1), w_pos, f"nonneg:{a}"
            )
        )
    theta = _ball_poly(lp.ball_M, N, range(N))
    offsets.append(1)
    blocks.append(build_localizer(theta, monomial_basis(N, i - 1), w_pos, "ball"))

    eq_rows: list[dict] = []
    eq_rhs: list[float] = []
    eq_meta: list[tuple] = []
    all_shifts = monomial_basis(N, 2 * i)
    for k, u in enumerate(lp.equalities):
        if u.is_zero():
            continue
        a_k = max(1, math.ceil(u.degree / 2))
        offsets.append(a_k)
        rows, meta = _equality_rows(u, k, 2 * (i - a_k), all_shifts, w_pos)
        eq_rows.extend(rows)
        eq_meta.extend(meta)
        eq_rhs.extend([0.0] * len(rows))
    eq_rows.append({0: 1.0})
    eq_rhs.append(1.0)
    eq_meta.append(("norm",))

    objective = {w_pos[m]: c for m, c in lp.objective.terms.items()}
    return LmiRelaxation(
        m=len(w_index),
        blocks=blocks,
        eq_rows=eq_rows,
        eq_rhs=eq_rhs,
        eq_meta=eq_meta,
        objective=objective,
        order=i,
        n_vars=N,
        w_index=w_index,
        w_pos=w_pos,
        degree_offsets=offsets,
        provenance_link=lp,
    )


def detect_cliques(lp: LiftedProblem) -> tuple[list[list[int]], bool]:
    """Variable groups, one per top-level lifted item, plus the RIP flag.

    Each group is the original variables together with the auxiliary
    variables the item depends on.  Groups subsumed by another group are
    dropped.  The running intersection property holds when every group
    meets the union of its predecessors inside a single predecessor; with
    one lifting per item and coupling only through the original variables
    this is true by construction.
    """
    x_set = set(range(lp.n))
    candidates = [x_set | {lp.n + a for a in g} for g in lp.groups]
    kept: list[set[int]] = []
    for c in candidates:
        if any(c < other for other in candidates):
            continue  # strictly contained in a larger group
        if c not in kept:
            kept.append(c)
    if not kept:
        kept = [set(x_set)]
    rip = True
    for idx in range(1, len(kept)):
        union = set()
        for prev in kept[:idx]:
            union |= prev
        inter = kept[idx] & union
        if not any(inter <= prev for prev in kept[:idx]):
            rip = False
    return [sorted(c) for c in kept], rip


def _clique_monomials(clique: list[int], degree: int, n_total: int) -> list:
    local = monomial_basis(len(clique), degree)
    out = []
    for m in local:
        full = [0] * n_total
        for pos, var in enumerate(clique):
            full[var] = m[pos]
        out.append(tuple(full))
    return out


def _owning_clique(support: set[int], cliques: list[list[int]], what: str) -> int:
    for ci, clique in enumerate(cliques):
        if support <= set(clique):
            return ci
    raise SupportNotCovered(f"{what} is supported on no single clique")


def build_sparse_relaxation(lp: LiftedProblem, i: int) -> LmiRelaxation:
    """Clique-sparse order-i relaxation; equals the dense one per clique.

    One moment block per clique, localizers assigned to the clique
    containing their support, and one ball localizer per clique with a
    clique-local radius bound.  Entries shared between cliques are
    identified through common w indices.
    """
    cliques, rip = detect_cliques(lp)
    if not rip:
        raise SemialgError("sparse relaxation requires the running intersection property")
    if len(cliques) == 1:
        rel = build_relaxation(lp, i)
        rel.cliques = cliques
        return rel

    imin = min_order(lp)
    if i < imin:
        raise OrderTooSmall(i, imin)
    N = lp.total_vars

    seen = {}
    for clique in cliques:
        for m in _clique_monomials(clique, 2 * i, N):
            seen[m] = True
    w_index = sorted(seen, key=mono_key)
    w_pos = {m: j for j, m in enumerate(w_index)}

    blocks = []
    offsets = []
    for ci, clique in enumerate(cliques):
        basis = _clique_monomials(clique, i, N)
        blocks.append(build_localizer(Polynomial.constant(N, 1.0), basis, w_pos, f"moment:c{ci}"))
    for j, g in enumerate(lp.base_ineqs):
        ci = _owning_clique(g.vars_used(), cliques, f"inequality {j}")
        off = max(1, math.ceil(g.degree / 2)) if g.degree > 0 else 1
        offsets.append(off)
        basis = _clique_monomials(cliques[ci], i - off, N)
        blocks.append(build_localizer(g, basis, w_pos, f"ineq:{j}"))
    for a in lp.nonneg:
        ci = _owning_clique({lp.n + a}, cliques, f"aux {a}")
        offsets.append(1)
        basis = _clique_monomials(cliques[ci], i - 1, N)
        blocks.append(build_localizer(Polynomial.variable(N, lp.n + a), basis, w_pos, f"nonneg:{a}"))
    for ci, clique in enumerate(cliques):
        M_c = ball_bound_for_vars(lp, clique, lp.box)
        offsets.append(1)
        basis = _clique_monomials(clique, i - 1, N)
        blocks.append(build_localizer(_ball_poly(M_c, N, clique), basis, w_pos, f"ball:c{ci}"))

    eq_rows: list[dict] = []
    eq_rhs: list[float] = []
    eq_meta: list[tuple] = []
    for k, u in enumerate(lp.equalities):
        if u.is_zero():
            continue
        ci = _owning_clique(u.vars_used(), cliques, f"equality {k}")
        a_k = max(1, math.ceil(u.degree / 2))
        offsets.append(a_k)
        shifts = _clique_monomials(cliques[ci], 2 * (i - a_k), N)
        rows, meta = _equality_rows(u, k, 2 * (i - a_k), shifts, w_pos)
        eq_rows.extend(rows)
        eq_meta.extend(meta)
        eq_rhs.extend([0.0] * len(rows))
    eq_rows.append({w_pos[(0,) * N]: 1.0})
    eq_rhs.append(1.0)
    eq_meta.append(("norm",))

    _owning_clique(lp.objective.vars_used(), cliques, "objective")
    objective = {w_pos[m]: c for m, c in lp.objective.terms.items()}
    return LmiRelaxation(
        m=len(w_index),
        blocks=blocks,
        eq_rows=eq_rows,
        eq_rhs=eq_rhs,
        eq_meta=eq_meta,
        objective=objective,
        order=i,
        n_vars=N,
        w_index=w_index,
        w_pos=w_pos,
        degree_offsets=offsets,
        provenance_link=lp,
        cliques=cliques,
    )


def moment_vector(rel: LmiRelaxation, point) -> np.ndarray:
    """Moments of the Dirac measure at a lifted point."""
    point = np.asarray(point, dtype=float)
    w = np.empty(rel.m)
    for j, mono in enumerate(rel.w_index):
        val = 1.0
        for x, e in zip(point, mono):
            if e:
                val *= x**e
        w[j] = val
    return w
