"""Brute-force reference optimizer over the original expression problem.

Dense grid scan with a feasibility slack band (equalities are invisible
to grids otherwise), followed by penalty-weighted Nelder-Mead polish with
the slack halved at every stage.  Touches only expression evaluation,
never the lifting, so it is an independent check on the hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import NoFeasiblePoint, SemialgError
from .expr import Box, Expr, eval_expr, eval_expr_array

MAX_GRID_DIM = 4


@dataclass
class OracleResult:
    value: float
    argmin: tuple
    grid_resolution: int
    refined: bool
    feasibility_slack: float


def _violation(constraints, x, slack_scale=1.0) -> float:
    worst = 0.0
    for h, rel in constraints:
        v = eval_expr(h, x)
        if rel == "==":
            worst = max(worst, abs(v))
        elif rel == ">=":
            worst = max(worst, -v)
        else:
            worst = max(worst, v)
    return worst * slack_scale


def grid_search(
    objective: Expr,
    constraints: list[tuple[Expr, str]],
    box: Box,
    resolution: int = 101,
    slack: float = 1e-2,
    sense: str = "min",
    refine: bool = True,
    refine_stages: int = 5,
) -> OracleResult:
    """Best objective value over the grid, then local polish.

    ``constraints`` are (expression, relation) pairs with relation one of
    ">=", "==", "<=", all against zero.
    """
    n = box.dim
    if n > MAX_GRID_DIM:
        raise SemialgError(f"grid search supports at most {MAX_GRID_DIM} variables")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if not box.is_bounded():
        raise SemialgError("grid search needs a bounded box")
    sign = 1.0 if sense == "min" else -1.0

    axes = [np.linspace(box.lo[i], box.hi[i], resolution) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = [m.reshape(-1) for m in mesh]

    feasible = np.ones(cols[0].shape, dtype=bool)
    for h, rel in constraints:
        vals = eval_expr_array(h, cols)
        with np.errstate(invalid="ignore"):
            if rel == "==":
                ok = np.abs(vals) <= slack
            elif rel == ">=":
                ok = vals >= -slack
            else:
                ok = vals <= slack
        feasible &= np.where(np.isnan(vals), False, ok)
    obj_vals = eval_expr_array(objective, cols)
    feasible &= ~np.isnan(obj_vals)
    if not feasible.any():
        raise NoFeasiblePoint(
            "no grid point satisfies the constraints within the slack; "
            "increase the resolution or the slack"
        )
    scored = np.where(feasible, sign * obj_vals, np.inf)
    best_idx = int(np.argmin(scored))
    best_x = np.array([c[best_idx] for c in cols])
    best_val = float(obj_vals[best_idx])
    band = slack

    if refine:
        penalty = 1e3
        x0 = best_x
        for _ in range(refine_stages):
            def penalized(x):
                x = np.clip(x, box.lo, box.hi)
                try:
                    val = sign * eval_expr(objective, x)
                except SemialgError:
                    return 1e30
                total = val
                for h, rel in constraints:
                    try:
                        v = eval_expr(h, x)
                    except SemialgError:
                        return 1e30
                    if rel == "==":
                        total += penalty * v * v
                    elif rel == ">=":
                        total += penalty * min(v, 0.0) ** 2
                    else:
                        total += penalty * max(v, 0.0) ** 2
                return total

            res = minimize(penalized, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
            x0 = np.clip(res.x, box.lo, box.hi)
            penalty *= 4.0
            band *= 0.5
        # The grid winner may sit slightly off the feasible set (slack band),
        # so the polished point replaces it whenever the tightened band holds,
        # even when its objective looks worse.
        cand_violation = _violation(constraints, x0)
        if cand_violation <= max(band, 1e-7):
            try:
                cand_val = eval_expr(objective, x0)
                return OracleResult(
                    value=float(cand_val),
                    argmin=tuple(float(v) for v in x0),
                    grid_resolution=resolution,
                    refined=True,
                    feasibility_slack=max(band, 1e-7),
                )
            except SemialgError:
                pass

    return OracleResult(
        value=best_val,
        argmin=tuple(float(v) for v in best_x),
        grid_resolution=resolution,
        refined=False,
        feasibility_slack=slack,
    )
