import pytest

import helpers
from semialg import Box, grid_search, parse_expr, parse_problem
from semialg.errors import NoFeasiblePoint, SemialgError


class TestGridSearch:
    def test_example1_reference_value(self):
        spec = parse_problem(helpers.EXAMPLE1)
        result = grid_search(
            spec.objective, spec.constraints, spec.box,
            resolution=2001, slack=2e-3, sense="max",
        )
        assert result.value == pytest.approx(0.2071, abs=1e-3)
        assert abs(result.argmin[0]) == pytest.approx(0.3827, abs=1e-2)
        assert abs(result.argmin[1]) == pytest.approx(0.9239, abs=1e-2)

    def test_example2_reference_value(self):
        spec = parse_problem(helpers.EXAMPLE2)
        result = grid_search(
            spec.objective, spec.constraints, spec.box,
            resolution=2001, slack=2e-3, sense="max",
        )
        assert result.value == pytest.approx(1.6180, abs=1e-3)
        assert result.argmin == pytest.approx((0.8507, -0.5257), abs=1e-2)

    def test_constant_objective(self):
        e = parse_expr("2.5 + 0*x1", ["x1"])
        result = grid_search(e, [], Box.cube(1, -1.0, 1.0), resolution=11)
        assert result.value == 2.5

    def test_no_feasible_point(self):
        e = parse_expr("x1", ["x1"])
        con = parse_expr("x1 - 10", ["x1"])
        with pytest.raises(NoFeasiblePoint):
            grid_search(e, [(con, ">=")], Box.cube(1, -1.0, 1.0), resolution=21)

    def test_dimension_guard(self):
        e = parse_expr("x1 + x2 + x3 + x4 + x5", ["x1", "x2", "x3", "x4", "x5"])
        with pytest.raises(SemialgError):
            grid_search(e, [], Box.cube(5, -1.0, 1.0), resolution=3)

    def test_undefined_regions_skipped(self):
        # objective undefined at x1 = 0; grid and polish must avoid NaN
        e = parse_expr("1/x1 + x1", ["x1"])
        result = grid_search(e, [], Box((0.1,), (2.0,)), resolution=101)
        assert result.value == pytest.approx(2.0, abs=1e-4)  # min of x + 1/x

    def test_oracle_upper_bounds_hierarchy(self, all_pipelines):
        # internal minimization: any relaxation value stays below the oracle
        for pipe in all_pipelines:
            internal = (
                -pipe.oracle.value if pipe.spec.sense == "max" else pipe.oracle.value
            )
            for sol in pipe.solutions.values():
                if sol.status == "Optimal":
                    assert sol.objective <= internal + 1e-3
