"""Embedded primal-dual interior-point solver for the LMI problems.

Solves

    min  c . w
    s.t. X_k = sum_j w_j F_kj + C_k0  is PSD for every block k
         A w = b

with a Mehrotra predictor-corrector iteration.  Moment relaxations with
equality rows are doubly degenerate (the optimal X has a kernel forced by
the rows and no strictly feasible point exists), so a plain implementation
stalls around sqrt(machine epsilon).  Three measures push through that:

* the Schur complement is assembled as an exact Gram matrix of the
  Cholesky-scaled pencils, H[j, l] = <L^-1 F_j R, L^-1 F_l R> with
  X = L L^T and Z = R R^T, which keeps it PSD and accurate;
* the primal iterate tracks a barrier-shifted pencil
  X = A(w) + C0 + tau I with tau proportional to the barrier parameter
  and monotonically decreasing, so the kernel eigenvalues of X stay at
  barrier scale instead of collapsing to machine zero (the final shift is
  below the residual tolerance, so the returned iterate still satisfies
  the advertised bounds);
* the Newton solves are iteratively refined in extended precision, and
  the reported dual variables are repaired by a well-conditioned
  least-squares projection onto exact dual feasibility.

Everything is deterministic: fixed identity-scaled start, no randomized
pivoting.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ProblemTooLarge
from .moment import LmiRelaxation

OPTIMAL = "Optimal"
MAX_ITER = "MaxIter"
INFEASIBLE = "Infeasible"
NUMERICAL_TROUBLE = "NumericalTrouble"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
_STEP_FRACTION = 0.98
_SHIFT_FRACTION = 0.3
_REFINE_ROUNDS = 3
_MAX_PSD_SIZE = 200
_MAX_W_LEN = 5000


@dataclass
class SdpSolution:
    w: np.ndarray
    objective: float
    dual_objective: float
    dual_blocks: list  # one PSD matrix per pencil, pencil order
    dual_eq: np.ndarray  # multiplier per original equality row
    status: str
    iterations: int
    residuals: dict = field(default_factory=dict)


class _NumBlock:
    """Dense numeric view of one pencil: stacked coefficient matrices."""

    def __init__(self, pencil):
        s = pencil.size
        self.size = s
        active = sorted(pencil.active_indices())
        self.idx = np.array(active, dtype=int)
        lookup = {j: t for t, j in enumerate(active)}
        F = np.zeros((len(active), s, s))
        for (r, c), form in pencil.entries.items():
            for j, coeff in form.items():
                t = lookup[j]
                F[t, r, c] += coeff
                if r != c:
                    F[t, c, r] += coeff
        self.F = F
        self.Fmat = F.reshape(len(active), s * s)
        C0 = np.zeros((s, s))
        for (r, c), val in pencil.const.items():
            C0[r, c] += val
            if r != c:
                C0[c, r] += val
        self.C0 = C0

    def apply_linear(self, w: np.ndarray) -> np.ndarray:
        if len(self.idx) == 0:
            return np.zeros((self.size, self.size))
        return np.tensordot(w[self.idx], self.F, axes=1)

    def adjoint_into(self, M: np.ndarray, out: np.ndarray):
        if len(self.idx):
            out[self.idx] += self.Fmat @ M.reshape(-1)


def _max_step(M: np.ndarray, dM: np.ndarray) -> float:
    """Largest t with M + t dM still PSD, for PD M."""
    L = np.linalg.cholesky(M)
    inner = sla.solve_triangular(L, dM, lower=True)
    S = sla.solve_triangular(L, inner.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (S + S.T)).min()
    if lam >= -1e-14:
        return math.inf
    return -1.0 / lam


class _ScaledCholesky:
    """Jacobi-equilibrated Cholesky with escalating diagonal jitter."""

    def __init__(self, M: np.ndarray):
        d = np.sqrt(np.maximum(np.diag(M), 1e-300))
        self.scale = 1.0 / d
        Me = M * self.scale[:, None] * self.scale[None, :]
        self.factor = None
        jitter = 0.0
        for attempt in range(8):
            try:
                self.factor = sla.cho_factor(Me + jitter * np.eye(M.shape[0]), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = 10.0 ** (-14 + 2 * attempt)

    @property
    def ok(self) -> bool:
        return self.factor is not None

    def solve(self, r: np.ndarray) -> np.ndarray:
        return self.scale * sla.cho_solve(self.factor, self.scale * r)


def _size_limits():
    psd = int(os.environ.get("SEMIALG_MAX_PSD_SIZE", _MAX_PSD_SIZE))
    return psd, _MAX_W_LEN


def solve(rel: LmiRelaxation, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    """Solve the relaxation; see the module docstring for the method."""
    if not 0.0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    psd_limit, w_limit = _size_limits()
    total_psd = rel.total_psd_size()
    if total_psd > psd_limit:
        raise ProblemTooLarge(
            f"total PSD size {total_psd} exceeds limit {psd_limit} "
            "(set SEMIALG_MAX_PSD_SIZE to override)"
        )
    if rel.m > w_limit:
        raise ProblemTooLarge(f"moment vector length {rel.m} exceeds limit {w_limit}")

    m = rel.m
    c = rel.objective_vector()
    blocks = [_NumBlock(p) for p in rel.blocks]
    p_rows = len(rel.eq_rows)
    A = np.zeros((p_rows, m))
    for r, row in enumerate(rel.eq_rows):
        for j, coeff in row.items():
            A[r, j] = coeff
    b = np.asarray(rel.eq_rhs, dtype=float)

    def failed(status):
        return SdpSolution(
            w=np.zeros(m),
            objective=math.nan,
            dual_objective=math.nan,
            dual_blocks=[np.zeros((blk.size, blk.size)) for blk in blocks],
            dual_eq=np.zeros(p_rows),
            status=status,
            iterations=0,
            residuals={"primal": math.inf, "dual": math.inf, "gap": math.inf},
        )

    # Row-reduce the equality system so the KKT Schur complement stays
    # invertible; duals are mapped back to the original rows afterwards.
    if p_rows:
        U, svals, Vt = np.linalg.svd(A, full_matrices=False)
        smax = svals[0] if len(svals) else 0.0
        rank = int(np.sum(svals > max(smax, 1.0) * 1e-12))
        U_r = U[:, :rank]
        A_red = svals[:rank, None] * Vt[:rank]
        b_red = U_r.T @ b
        if np.linalg.norm(b - U_r @ b_red) > 1e-9 * (1.0 + np.linalg.norm(b)):
            return failed(INFEASIBLE)
    else:
        rank = 0
        U_r = np.zeros((0, 0))
        A_red = np.zeros((0, m))
        b_red = np.zeros(0)

    # Constant Gram matrix of the dual-feasibility normals, used to project
    # (Z, mu) onto  adj(Z) + A^T mu = c  when reporting and when testing
    # convergence.
    Gram = A_red.T @ A_red
    for blk in blocks:
        if len(blk.idx):
            Gram[np.ix_(blk.idx, blk.idx)] += blk.Fmat @ blk.Fmat.T
    Gram_fac = _ScaledCholesky(Gram)
    if not Gram_fac.ok:
        return failed(NUMERICAL_TROUBLE)

    def adjoint(mats) -> np.ndarray:
        out = np.zeros(m)
        for blk, M in zip(blocks, mats):
            blk.adjoint_into(M, out)
        return out

    def dual_repair(Z, mu, rd):
        lam = Gram_fac.solve(rd)
        Zr = [
            Zk + (np.tensordot(lam[blk.idx], blk.F, axes=1) if len(blk.idx) else 0.0)
            for blk, Zk in zip(blocks, Z)
        ]
        return Zr, (mu + A_red @ lam if rank else mu)

    ntot = sum(blk.size for blk in blocks)
    eta = max(10.0, float(np.abs(c).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    X = [eta * np.eye(blk.size) for blk in blocks]
    Z = [eta * np.eye(blk.size) for blk in blocks]
    w = np.zeros(m)
    mu = np.zeros(rank)
    tau = math.inf

    norm_b = 1.0 + float(np.abs(b).max(initial=0.0))
    norm_c = 1.0 + float(np.abs(c).max(initial=0.0))

    status = MAX_ITER
    iterations = 0
    errs = {"primal": math.inf, "dual": math.inf, "gap": math.inf}
    best_dual = None
    stall = 0

    for it in range(1, max_iter + 1):
        iterations = it
        gap = sum(float(np.tensordot(Xk, Zk)) for Xk, Zk in zip(X, Z))
        mubar = gap / ntot
        tau = min(tau, _SHIFT_FRACTION * mubar)
        shift = [tau * np.eye(blk.size) for blk in blocks]
        Rp = [blk.apply_linear(w) + blk.C0 + Sh - Xk for blk, Sh, Xk in zip(blocks, shift, X)]
        re = b_red - A_red @ w
        rd = c - adjoint(Z) - (A_red.T @ mu if rank else 0.0)
        pobj = float(c @ w)
        dobj = float(b_red @ mu) - sum(float(np.tensordot(blk.C0, Zk)) for blk, Zk in zip(blocks, Z))

        err_p = (
            max(
                float(np.abs(re).max(initial=0.0)),
                max((float(np.abs(R).max(initial=0.0)) for R in Rp), default=0.0) + tau,
            )
            / norm_b
        )
        err_g = max(abs(pobj - dobj), gap) / (1.0 + abs(pobj) + abs(dobj))
        if err_p <= tol and err_g <= tol:
            Zr, mur = dual_repair(Z, mu, rd)
            rdr = c - adjoint(Zr) - (A_red.T @ mur if rank else 0.0)
            err_d = float(np.abs(rdr).max(initial=0.0)) / norm_c
            min_eig = min(
                (float(np.linalg.eigvalsh(Zk).min()) for Zk in Zr), default=0.0
            )
            errs = {"primal": err_p, "dual": err_d, "gap": err_g}
            if err_d <= tol and min_eig >= -10.0 * tol and abs(pobj - dobj) <= tol * (1.0 + abs(pobj)):
                status = OPTIMAL
                best_dual = (Zr, mur)
                break
        errs = {
            "primal": err_p,
            "dual": float(np.abs(rd).max(initial=0.0)) / norm_c,
            "gap": err_g,
        }

        # A diverging dual iterate that is almost a feasible improving ray
        # certifies primal infeasibility.
        dual_scale = max((float(np.abs(Zk).max(initial=0.0)) for Zk in Z), default=0.0) + float(
            np.abs(mu).max(initial=0.0)
        )
        if dobj > 0 and dual_scale > 1e7 and dobj > 1e6 * norm_c:
            hom = adjoint(Z) + (A_red.T @ mu if rank else 0.0)
            if float(np.abs(hom - c).max()) <= 1e-6 * dobj:
                status = INFEASIBLE
                break

        try:
            Lx = [np.linalg.cholesky(Xk) for Xk in X]
            Rz = [np.linalg.cholesky(Zk) for Zk in Z]
        except np.linalg.LinAlgError:
            status = NUMERICAL_TROUBLE
            break

        H = np.zeros((m, m))
        for blk, L, R in zip(blocks, Lx, Rz):
            if len(blk.idx) == 0:
                continue
            s = blk.size
            nj = len(blk.idx)
            flat = blk.F.transpose(1, 0, 2).reshape(s, nj * s)
            scaled = sla.solve_triangular(L, flat, lower=True)
            scaled = np.matmul(scaled.reshape(s, nj, s).transpose(1, 0, 2), R)
            Fm = scaled.reshape(nj, s * s)
            H[np.ix_(blk.idx, blk.idx)] += Fm @ Fm.T
        H = 0.5 * (H + H.T)
        H_fac = _ScaledCholesky(H)
        if not H_fac.ok:
            status = NUMERICAL_TROUBLE
            break
        if rank:
            HA = np.column_stack([H_fac.solve(A_red[r]) for r in range(rank)])
            S = A_red @ HA
            S_fac = _ScaledCholesky(0.5 * (S + S.T))
            if not S_fac.ok:
                status = NUMERICAL_TROUBLE
                break
        else:
            HA = None
            S_fac = None

        H_ext = H.astype(np.longdouble)
        A_ext = A_red.astype(np.longdouble)

        def kkt(r1, r2):
            u1 = H_fac.solve(r1)
            if rank:
                dmu = S_fac.solve(r2 - A_red @ u1)
                return u1 + HA @ dmu, dmu
            return u1, np.zeros(0)

        def kkt_refined(r1, r2):
            dw, dmu = kkt(r1, r2)
            r1_ext = r1.astype(np.longdouble)
            r2_ext = r2.astype(np.longdouble)
            for _ in range(_REFINE_ROUNDS):
                dw_ext = dw.astype(np.longdouble)
                res1 = np.asarray(
                    r1_ext - (H_ext @ dw_ext - (A_ext.T @ dmu.astype(np.longdouble) if rank else 0.0)),
                    dtype=float,
                )
                res2 = np.asarray(r2_ext - A_ext @ dw_ext, dtype=float) if rank else r2
                cw, cmu = kkt(res1, res2)
                dw = dw + cw
                dmu = dmu + cmu
            return dw, dmu

        def direction(Rc):
            G = [
                sla.cho_solve((L, True), Rck - Rpk @ Zk)
                for L, Rck, Rpk, Zk in zip(Lx, Rc, Rp, Z)
            ]
            r1 = adjoint(G) - rd
            dw, dmu = kkt_refined(r1, re)
            dX = [blk.apply_linear(dw) + Rpk for blk, Rpk in zip(blocks, Rp)]
            dZ = []
            for L, Rck, dXk, Zk in zip(Lx, Rc, dX, Z):
                M = sla.cho_solve((L, True), Rck - dXk @ Zk)
                dZ.append(0.5 * (M + M.T))
            return dw, dmu, dX, dZ

        # predictor
        Rc_aff = [-Xk @ Zk for Xk, Zk in zip(X, Z)]
        try:
            dw_a, dmu_a, dX_a, dZ_a = direction(Rc_aff)
            ap_aff = min(1.0, min((_max_step(Xk, D) for Xk, D in zip(X, dX_a)), default=math.inf))
            ad_aff = min(1.0, min((_max_step(Zk, D) for Zk, D in zip(Z, dZ_a)), default=math.inf))
        except np.linalg.LinAlgError:
            status = NUMERICAL_TROUBLE
            break
        gap_aff = sum(
            float(np.tensordot(Xk + ap_aff * dXk, Zk + ad_aff * dZk))
            for Xk, dXk, Zk, dZk in zip(X, dX_a, Z, dZ_a)
        )
        sigma = min(1.0, max(gap_aff / gap, 0.0) ** 3) if gap > 0 else 0.1

        # corrector
        Rc = [
            sigma * mubar * np.eye(blk.size) - Xk @ Zk - dXk @ dZk
            for blk, Xk, Zk, dXk, dZk in zip(blocks, X, Z, dX_a, dZ_a)
        ]
        try:
            dw, dmu, dX, dZ = direction(Rc)
            alpha_p = min(1.0, _STEP_FRACTION * min((_max_step(Xk, D) for Xk, D in zip(X, dX)), default=math.inf))
            alpha_d = min(1.0, _STEP_FRACTION * min((_max_step(Zk, D) for Zk, D in zip(Z, dZ)), default=math.inf))
        except np.linalg.LinAlgError:
            status = NUMERICAL_TROUBLE
            break

        w = w + alpha_p * dw
        X = [Xk + alpha_p * dXk for Xk, dXk in zip(X, dX)]
        mu = mu + alpha_d * dmu
        Z = [Zk + alpha_d * dZk for Zk, dZk in zip(Z, dZ)]

        # Pull the dual back onto exact feasibility whenever that keeps it
        # positive definite; prevents drift from accumulating.
        rd_now = c - adjoint(Z) - (A_red.T @ mu if rank else 0.0)
        Z_rep, mu_rep = dual_repair(Z, mu, rd_now)
        try:
            for Zk in Z_rep:
                np.linalg.cholesky(Zk)
            Z, mu = Z_rep, mu_rep
        except np.linalg.LinAlgError:
            pass

        if max(alpha_p, alpha_d) < 1e-10:
            stall += 1
            if stall >= 3:
                status = NUMERICAL_TROUBLE
                break
        else:
            stall = 0

    if best_dual is not None:
        Z, mu = best_dual
    else:
        rd = c - adjoint(Z) - (A_red.T @ mu if rank else 0.0)
        Zr, mur = dual_repair(Z, mu, rd)
        ok = all(float(np.linalg.eigvalsh(Zk).min()) >= -10.0 * tol for Zk in Zr)
        if ok:
            Z, mu = Zr, mur

    dual_eq = U_r @ mu if rank else np.zeros(p_rows)
    pobj = float(c @ w)
    dobj = float(b_red @ mu) - sum(float(np.tensordot(blk.C0, Zk)) for blk, Zk in zip(blocks, Z))
    return SdpSolution(
        w=w,
        objective=pobj,
        dual_objective=dobj,
        dual_blocks=[np.asarray(0.5 * (Zk + Zk.T)) for Zk in Z],
        dual_eq=dual_eq,
        status=status,
        iterations=iterations,
        residuals=errs,
    )
