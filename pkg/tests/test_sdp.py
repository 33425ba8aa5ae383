import numpy as np
import pytest

from semialg import solve
from semialg.errors import ProblemTooLarge
from semialg.moment import LmiRelaxation, MatrixPencil
from semialg.sdp import INFEASIBLE, OPTIMAL


def two_by_two(objective_coeff=1.0):
    pencil = MatrixPencil(
        size=2,
        label="block:0",
        entries={(0, 1): {0: 1.0}},
        const={(0, 0): 1.0, (1, 1): 1.0},
    )
    return LmiRelaxation(
        m=1, blocks=[pencil], eq_rows=[], eq_rhs=[], eq_meta=[],
        objective={0: objective_coeff},
    )


class TestAnalytic:
    def test_two_by_two_corner(self):
        sol = solve(two_by_two())
        assert sol.status == OPTIMAL
        assert sol.w[0] == pytest.approx(-1.0, abs=1e-6)
        assert sol.objective == pytest.approx(-1.0, abs=1e-6)

    def test_residual_contract_on_optimal(self):
        sol = solve(two_by_two(), tol=1e-8)
        assert sol.residuals["primal"] <= 1e-8
        assert sol.residuals["dual"] <= 1e-8
        assert sol.residuals["gap"] <= 1e-8
        assert abs(sol.objective - sol.dual_objective) <= 1e-8 * (1 + abs(sol.objective))
        for Z in sol.dual_blocks:
            assert np.linalg.eigvalsh(Z).min() >= -1e-7

    def test_scaling_invariance_of_argmin(self):
        base = solve(two_by_two(1.0))
        scaled = solve(two_by_two(5.0))
        assert np.abs(base.w - scaled.w).max() <= 1e-7


class TestMomentSolves:
    def test_example1_value(self, example1):
        sol = example1.solutions[2]
        assert sol.status == OPTIMAL
        rho = example1.lp.reported_value(sol.objective)
        assert rho == pytest.approx(0.2071, abs=1e-4)

    def test_example2_value(self, example2):
        sol = example2.solutions[2]
        assert sol.status == OPTIMAL
        rho = example2.lp.reported_value(sol.objective)
        assert rho == pytest.approx(1.6180, abs=1e-4)

    def test_weak_duality_on_optimal_solves(self, all_pipelines):
        for pipe in all_pipelines:
            for sol in pipe.solutions.values():
                if sol.status == OPTIMAL:
                    assert abs(sol.objective - sol.dual_objective) <= 1e-8 * (
                        1 + abs(sol.objective)
                    )

    def test_dual_blocks_near_psd(self, all_pipelines):
        for pipe in all_pipelines:
            for sol in pipe.solutions.values():
                if sol.status == OPTIMAL:
                    for Z in sol.dual_blocks:
                        assert np.linalg.eigvalsh(Z).min() >= -1e-7

    def test_determinism(self, example1):
        rel = example1.relaxations[2]
        a = solve(rel)
        b = solve(rel)
        assert a.iterations == b.iterations
        assert a.objective == b.objective
        assert np.array_equal(a.w, b.w)


class TestInfeasible:
    def test_contradictory_bounds_certified(self):
        lower = MatrixPencil(size=1, label="lo", entries={(0, 0): {0: 1.0}}, const={(0, 0): -1.0})
        upper = MatrixPencil(size=1, label="hi", entries={(0, 0): {0: -1.0}}, const={(0, 0): -1.0})
        rel = LmiRelaxation(
            m=1, blocks=[lower, upper], eq_rows=[], eq_rhs=[], eq_meta=[], objective={0: 1.0}
        )
        sol = solve(rel)
        assert sol.status == INFEASIBLE

    def test_inconsistent_equality_rows(self):
        pencil = MatrixPencil(size=1, label="b", entries={(0, 0): {0: 1.0}})
        rel = LmiRelaxation(
            m=1,
            blocks=[pencil],
            eq_rows=[{0: 1.0}, {0: 1.0}],
            eq_rhs=[0.0, 1.0],
            eq_meta=[("norm",), ("norm",)],
            objective={0: 1.0},
        )
        assert solve(rel).status == INFEASIBLE


class TestGuards:
    def test_tolerance_domain(self):
        with pytest.raises(ValueError):
            solve(two_by_two(), tol=0.5)

    def test_size_guard(self, monkeypatch, example1):
        monkeypatch.setenv("SEMIALG_MAX_PSD_SIZE", "4")
        with pytest.raises(ProblemTooLarge):
            solve(example1.relaxations[2])

    def test_size_guard_override(self, monkeypatch, example1):
        monkeypatch.setenv("SEMIALG_MAX_PSD_SIZE", "500")
        sol = solve(example1.relaxations[1])
        assert sol.status == OPTIMAL
