"""Optimality certification: rank test, atom extraction, SOS recovery.

The rank test compares the numerical rank of the solved moment matrix
with that of its leading principal submatrix c degrees down, where c is
the largest localizer degree offset in the relaxation (never below 1).
When the ranks agree at d, the moment vector is numerically the moment
sequence of a d-atomic measure and the atoms are recovered by the usual
moment-matrix machinery: truncated eigenfactorization, column-echelon
selection of a monomial basis, per-variable multiplication matrices, and
joint diagonalization of a random convex combination.

The dual side supplies a weighted sum-of-squares decomposition: each PSD
block's dual matrix is a Gram matrix over that block's monomial basis,
and the equality-row duals assemble into free polynomial multipliers.
The decomposition is verified numerically by sampling the identity on
the graph of the lifting; the residual is reported, never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ExtractionFailed, SemialgError
from .expr import eval_expr
from .lift import LiftedProblem, eval_lifting
from .moment import LmiRelaxation
from .poly import Polynomial, mono_degree
from .sdp import OPTIMAL, SdpSolution

DEFAULT_RANK_TOL = 1e-6
ATOM_DEDUP_TOL = 1e-6
FEASIBILITY_TOL = 1e-6
PROVENANCE_TOL = 1e-5
# sign-constrained aux sitting at zero: roots amplify moment noise, so the
# provenance check gets a looser budget there (the atom stays flagged)
BOUNDARY_PROVENANCE_TOL = 1e-3


@dataclass
class AtomReport:
    feasibility_residual: float
    provenance_residual: float  # worst over all aux coordinates
    strict_provenance_residual: float  # worst over non-boundary coordinates
    objective_value: float | None
    matches_rho: bool
    boundary_flags: list = field(default_factory=list)


@dataclass
class SosRecord:
    multipliers: list  # (block label, Gram matrix, monomial basis)
    eq_multipliers: list  # one free polynomial per equality constraint
    identity_residual: float
    dual_constant: float


@dataclass
class Certificate:
    rho: float  # in the problem's own sense
    rho_internal: float
    order: int | None
    flat: bool
    d: int | None
    c: int | None
    atoms: list  # lifted-space points
    atom_report: list
    sos: SosRecord | None
    rank_tol: float
    seed: int
    solver_status: str

    def all_atoms_verified(self) -> bool:
        return bool(self.atom_report) and all(
            r.feasibility_residual <= FEASIBILITY_TOL
            and r.strict_provenance_residual <= PROVENANCE_TOL
            and r.provenance_residual <= BOUNDARY_PROVENANCE_TOL
            for r in self.atom_report
        )


def numerical_rank(mat: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values above rel_tol times the largest one."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return 0
    svals = np.linalg.svd(0.5 * (mat + mat.T), compute_uv=False)
    top = svals[0]
    if top == 0.0:
        return 0
    return int(np.sum(svals > rel_tol * top))


def _moment_matrix(sol: SdpSolution, rel: LmiRelaxation) -> tuple[np.ndarray, list]:
    moments = rel.moment_blocks()
    if len(moments) != 1:
        raise SemialgError("rank certification needs a single dense moment block")
    pencil = moments[0]
    return pencil.evaluate(sol.w), pencil.basis


def rank_offset(rel: LmiRelaxation) -> int:
    """The degree offset c used in the rank comparison (at least 1)."""
    return max([1] + list(rel.degree_offsets))


def check_flatness(sol: SdpSolution, rel: LmiRelaxation, rank_tol: float = DEFAULT_RANK_TOL) -> int | None:
    """Return the atom count d when the rank condition holds, else None."""
    if sol.status != OPTIMAL:
        return None
    M, basis = _moment_matrix(sol, rel)
    c = rank_offset(rel)
    low_degree = max(rel.order - c, 0)
    k = sum(1 for m in basis if mono_degree(m) <= low_degree)
    r_full = numerical_rank(M, rank_tol)
    r_low = numerical_rank(M[:k, :k], rank_tol)
    return r_full if r_full == r_low else None


def extract_atoms(sol: SdpSolution, rel: LmiRelaxation, d: int, seed: int = 0) -> list[np.ndarray]:
    """Recover the d support points of the representing measure."""
    M, basis = _moment_matrix(sol, rel)
    n = rel.n_vars
    evals, evecs = np.linalg.eigh(M)
    order = np.argsort(evals)[::-1]
    lead = evals[order[:d]]
    if lead.min() <= 0.0:
        raise ExtractionFailed("moment matrix has too few positive eigenvalues")
    V = evecs[:, order[:d]] * np.sqrt(lead)

    # column echelon form of V^T: pivot columns name the monomial basis
    G = V.T.copy()
    pivot_tol = 1e-8 * max(1.0, float(np.abs(G).max()))
    pivots: list[int] = []
    row = 0
    for col in range(G.shape[1]):
        if row >= d:
            break
        lead_row = row + int(np.argmax(np.abs(G[row:, col])))
        if abs(G[lead_row, col]) < pivot_tol:
            continue
        G[[row, lead_row]] = G[[lead_row, row]]
        G[row] /= G[row, col]
        for r in range(d):
            if r != row:
                G[r] -= G[r, col] * G[row]
        pivots.append(col)
        row += 1
    if len(pivots) < d:
        raise ExtractionFailed("rank-deficient echelon reduction")

    pos = {mono: idx for idx, mono in enumerate(basis)}
    mult = []
    for var in range(n):
        N_var = np.zeros((d, d))
        for k, col in enumerate(pivots):
            mono = list(basis[col])
            mono[var] += 1
            target = pos.get(tuple(mono))
            if target is None:
                raise ExtractionFailed(
                    "monomial basis reaches the relaxation degree; extraction "
                    "needs a flat moment matrix"
                )
            N_var[k, :] = G[:, target]
        mult.append(N_var)

    rng = np.random.default_rng(seed)
    weights = rng.random(n)
    weights /= weights.sum()
    combo = sum(wt * Nv for wt, Nv in zip(weights, mult))
    T, Q = sla.schur(combo, output="real")
    for k in range(d - 1):
        if abs(T[k + 1, k]) > 1e-7 * max(1.0, float(np.abs(T).max())):
            raise ExtractionFailed("complex eigenvalue cluster in multiplication matrix")

    atoms = []
    for k in range(d):
        q = Q[:, k]
        atoms.append(np.array([float(q @ Nv @ q) for Nv in mult]))

    deduped: list[np.ndarray] = []
    for atom in atoms:
        if not any(np.max(np.abs(atom - other)) <= ATOM_DEDUP_TOL for other in deduped):
            deduped.append(atom)
    deduped.sort(key=lambda a: tuple(a))
    return deduped


def verify_atoms(
    atoms: list[np.ndarray],
    lp: LiftedProblem,
    rho: float,
    boundary_tol: float = 1e-4,
) -> list[AtomReport]:
    """Check each atom against the lifted constraints and the provenance.

    Atoms with a sign-constrained auxiliary sitting near zero are flagged:
    the lifting admits the domain boundary of even roots, but extraction
    accuracy degrades there (roots amplify moment noise), so those atoms
    deserve a second look.
    """
    reports = []
    for atom in atoms:
        feas = 0.0
        for u in lp.equalities:
            feas = max(feas, abs(u.evaluate(atom)))
        for g in lp.base_ineqs:
            feas = max(feas, max(0.0, -g.evaluate(atom)))
        for a in lp.nonneg:
            feas = max(feas, max(0.0, -float(atom[lp.n + a])))
        x_part = atom[: lp.n]
        prov = 0.0
        strict = 0.0
        objective_value: float | None = None
        boundary = []
        try:
            for k in range(lp.n_aux):
                expected = eval_expr(lp.provenance[k], x_part)
                deviation = abs(float(atom[lp.n + k]) - expected)
                prov = max(prov, deviation)
                at_boundary = k in lp.nonneg and (
                    min(abs(expected), abs(float(atom[lp.n + k]))) <= boundary_tol
                )
                if at_boundary:
                    boundary.append(lp.aux_names[k])
                else:
                    strict = max(strict, deviation)
            objective_value = eval_expr(lp.objective_expr, x_part)
        except SemialgError:
            prov = strict = math.inf
        matches = (
            objective_value is not None
            and abs(objective_value - rho) <= 1e-6 * (1.0 + abs(rho))
        )
        reports.append(
            AtomReport(
                feasibility_residual=feas,
                provenance_residual=prov,
                strict_provenance_residual=strict,
                objective_value=objective_value,
                matches_rho=matches,
                boundary_flags=boundary,
            )
        )
    return reports


def _eval_gram(gram: np.ndarray, basis: list, point: np.ndarray) -> float:
    vec = np.array([np.prod([float(x) ** e for x, e in zip(point, mono) if e]) for mono in basis])
    return float(vec @ gram @ vec)


def extract_sos_certificate(
    sol: SdpSolution,
    rel: LmiRelaxation,
    n_samples: int = 200,
    seed: int = 0,
) -> SosRecord:
    """Assemble the weighted-SOS decomposition carried by the dual.

    The sampled identity is, at every point v on the graph of the lifting,

        objective(v) - rho = Gram terms + inequality terms + equality terms

    and the reported residual is the largest sampled deviation, normalized
    by 1 + |rho|.
    """
    lp = rel.provenance_link
    if lp is None:
        raise SemialgError("SOS recovery needs the originating lifted problem")
    if any(p.weight is None or p.basis is None for p in rel.blocks):
        raise SemialgError("SOS recovery needs localizer weights on every block")
    multipliers = [
        (pencil.label, np.asarray(Z), list(pencil.basis))
        for pencil, Z in zip(rel.blocks, sol.dual_blocks)
    ]

    N = lp.total_vars
    eq_multipliers = [Polynomial.zero(N) for _ in lp.equalities]
    dual_constant = 0.0
    for meta, value in zip(rel.eq_meta, sol.dual_eq):
        if meta[0] == "eq":
            _, k, delta = meta
            eq_multipliers[k] = eq_multipliers[k] + Polynomial(N, {delta: float(value)})
        elif meta[0] == "norm":
            dual_constant += float(value)

    rho = sol.objective
    rng = np.random.default_rng(seed)
    lo = np.asarray(lp.box.lo)
    hi = np.asarray(lp.box.hi)
    residual = 0.0
    produced = 0
    attempts = 0
    while produced < n_samples and attempts < 20 * n_samples:
        attempts += 1
        x = lo + (hi - lo) * rng.random(lp.n)
        try:
            v = eval_lifting(lp, x)
        except SemialgError:
            continue
        produced += 1
        lhs = lp.objective.evaluate(v) - rho
        rhs = 0.0
        for (label, gram, basis), pencil in zip(multipliers, rel.blocks):
            rhs += _eval_gram(gram, basis, v) * pencil.weight.evaluate(v)
        for h, u in zip(eq_multipliers, lp.equalities):
            rhs += h.evaluate(v) * u.evaluate(v)
        residual = max(residual, abs(lhs - rhs))
    if produced == 0:
        raise SemialgError("could not sample well-defined points in the box")
    return SosRecord(
        multipliers=multipliers,
        eq_multipliers=eq_multipliers,
        identity_residual=residual / (1.0 + abs(rho)),
        dual_constant=dual_constant,
    )


def certify_solution(
    sol: SdpSolution,
    rel: LmiRelaxation,
    rank_tol: float = DEFAULT_RANK_TOL,
    seed: int = 0,
    with_sos: bool = True,
) -> Certificate:
    """Full certification pass; downgrades to a bound on any failure."""
    lp = rel.provenance_link
    rho_internal = sol.objective
    rho = lp.reported_value(rho_internal) if lp is not None else rho_internal
    c_used = rank_offset(rel)
    cert = Certificate(
        rho=rho,
        rho_internal=rho_internal,
        order=rel.order,
        flat=False,
        d=None,
        c=c_used,
        atoms=[],
        atom_report=[],
        sos=None,
        rank_tol=rank_tol,
        seed=seed,
        solver_status=sol.status,
    )
    if sol.status != OPTIMAL:
        return cert
    if with_sos and lp is not None:
        try:
            cert.sos = extract_sos_certificate(sol, rel, seed=seed)
        except SemialgError:
            cert.sos = None
    if len(rel.moment_blocks()) != 1:
        return cert
    d = check_flatness(sol, rel, rank_tol)
    if d is None:
        return cert
    cert.flat = True
    cert.d = d
    try:
        cert.atoms = extract_atoms(sol, rel, d, seed=seed)
    except ExtractionFailed:
        cert.flat = False
        cert.d = None
        return cert
    if lp is not None:
        cert.atom_report = verify_atoms(cert.atoms, lp, rho)
    return cert


def certificate_to_json(cert: Certificate, lp: LiftedProblem | None) -> dict:
    n = lp.n if lp is not None else None
    atoms = []
    for atom in cert.atoms:
        if n is None:
            atoms.append({"point": [float(v) for v in atom]})
        else:
            atoms.append(
                {
                    "x": [float(v) for v in atom[:n]],
                    "aux": [float(v) for v in atom[n:]],
                }
            )
    return {
        "schema": "certificate/1",
        "rho": cert.rho,
        "flat": cert.flat,
        "d": cert.d,
        "c": cert.c,
        "order": cert.order,
        "atoms": atoms,
        "atom_report": [
            {
                "feasibility_residual": r.feasibility_residual,
                "provenance_residual": r.provenance_residual,
                "strict_provenance_residual": r.strict_provenance_residual,
                "objective_value": r.objective_value,
                "matches_rho": r.matches_rho,
                "boundary_flags": r.boundary_flags,
            }
            for r in cert.atom_report
        ],
        "sos_identity_residual": cert.sos.identity_residual if cert.sos else None,
        "rank_tol": cert.rank_tol,
        "seed": cert.seed,
        "solver_status": cert.solver_status,
    }
