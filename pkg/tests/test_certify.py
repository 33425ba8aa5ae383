import numpy as np
import pytest

from semialg import Box, build_problem, build_relaxation, moment_vector, parse_expr, solve
from semialg.certify import (
    certify_solution,
    check_flatness,
    extract_atoms,
    extract_sos_certificate,
    numerical_rank,
    verify_atoms,
)
from semialg.lift import eval_lifting
from semialg.sdp import SdpSolution


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(5)) == 5

    def test_rank_one_outer_product(self):
        v = np.array([1.0, -2.0, 0.5])
        assert numerical_rank(np.outer(v, v)) == 1

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((3, 3))) == 0

    def test_example1_moment_matrix_rank(self, example1):
        rel = example1.relaxations[2]
        sol = example1.solutions[2]
        M = rel.blocks[0].evaluate(sol.w)
        assert numerical_rank(M) == 2


class TestFlatness:
    def test_example1_d2(self, example1):
        assert check_flatness(example1.solutions[2], example1.relaxations[2]) == 2

    def test_example2_d1(self, example2):
        assert check_flatness(example2.solutions[2], example2.relaxations[2]) == 1

    def test_loose_relaxation_not_flat(self, motzkin):
        # the lowest-order relaxation of this sextic is strictly below the
        # optimum (oracle value 0), so the rank test must not fire
        sol = motzkin.solutions[3]
        assert sol.objective < motzkin.oracle.value - 1e-3
        assert check_flatness(sol, motzkin.relaxations[3]) is None

    def test_example1_order1_not_flat(self, example1):
        assert check_flatness(example1.solutions[1], example1.relaxations[1]) is None


class TestAtoms:
    def test_example1_two_symmetric_atoms(self, example1):
        cert = example1.certificates[2]
        assert cert.flat and cert.d == 2
        atoms = sorted(cert.atoms, key=lambda a: a[0])
        assert atoms[0] == pytest.approx([-0.3827, 0.9239, 0.3827], abs=1e-2)
        assert atoms[1] == pytest.approx([0.3827, 0.9239, 0.3827], abs=1e-2)

    def test_example2_single_atom(self, example2):
        cert = example2.certificates[2]
        assert cert.flat and cert.d == 1
        assert cert.atoms[0] == pytest.approx([0.8507, -0.5257, 1.9021], abs=1e-2)

    def test_dirac_vector_extraction_is_exact(self, example1):
        rel = example1.relaxations[2]
        point = eval_lifting(example1.lp, [0.6, -0.8])
        w = moment_vector(rel, point)
        sol = SdpSolution(
            w=w, objective=0.0, dual_objective=0.0, dual_blocks=[], dual_eq=np.zeros(0),
            status="Optimal", iterations=0,
        )
        atoms = extract_atoms(sol, rel, d=1)
        assert len(atoms) == 1
        assert atoms[0] == pytest.approx(point, abs=1e-8)

    def test_atomic_measure_reproduces_low_order_moments(self, example1):
        rel = example1.relaxations[2]
        sol = example1.solutions[2]
        cert = example1.certificates[2]
        M = rel.blocks[0].evaluate(sol.w)
        rebuilt = np.zeros(rel.m)
        for atom in cert.atoms:
            rebuilt += moment_vector(rel, atom) / len(cert.atoms)
        M_atoms = rel.blocks[0].evaluate(rebuilt)
        c = cert.c
        k = sum(1 for mono in rel.blocks[0].basis if sum(mono) <= rel.order - c)
        diff = np.linalg.norm(M_atoms[:k, :k] - M[:k, :k])
        assert diff <= 1e-4 * max(1.0, np.linalg.norm(M[:k, :k]))

    def test_extraction_seeded_deterministic(self, example1):
        rel = example1.relaxations[2]
        sol = example1.solutions[2]
        a = extract_atoms(sol, rel, 2, seed=3)
        b = extract_atoms(sol, rel, 2, seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestVerifyAtoms:
    def test_example1_reports(self, example1):
        cert = example1.certificates[2]
        for report in cert.atom_report:
            assert report.feasibility_residual <= 1e-6
            assert report.provenance_residual <= 1e-5
            assert report.matches_rho
            assert report.objective_value == pytest.approx(0.2071, abs=1e-3)

    def test_sign_violation_caught(self, example1):
        atom = np.array([0.3827, 0.9239, -0.3827])  # z = -|x1|
        reports = verify_atoms([atom], example1.lp, example1.certificates[2].rho)
        assert reports[0].provenance_residual > 1e-2

    def test_example2_provenance(self, example2):
        cert = example2.certificates[2]
        report = cert.atom_report[0]
        assert report.provenance_residual <= 1e-5
        assert cert.atoms[0][2] == pytest.approx(1.9021, abs=1e-2)

    def test_best_atom_matches_rho(self, all_pipelines):
        for pipe in all_pipelines:
            for cert in pipe.certificates.values():
                if cert.flat and cert.all_atoms_verified():
                    best = min(
                        abs(r.objective_value - cert.rho) for r in cert.atom_report
                    )
                    assert best <= 1e-6 * (1 + abs(cert.rho))


class TestSos:
    def test_example1_identity_residual(self, example1):
        sos = example1.certificates[2].sos
        assert sos is not None
        assert sos.identity_residual <= 1e-5

    def test_example2_identity_residual(self, example2):
        sos = example2.certificates[2].sos
        assert sos.identity_residual <= 1e-5

    def test_gram_blocks_near_psd(self, example1):
        for _, gram, _ in example1.certificates[2].sos.multipliers:
            assert np.linalg.eigvalsh(gram).min() >= -1e-7

    def test_constant_objective(self):
        # f = 1 over the unit circle with an abs-lifting present
        obj = parse_expr("1 + 0*x1", ["x1", "x2"])
        circle = parse_expr("x1^2 + x2^2 - 1", ["x1", "x2"])
        guard = parse_expr("abs(x1) - 0.0", ["x1", "x2"])
        lp = build_problem(
            obj, "min", [(circle, "=="), (guard, ">=")], Box.cube(2, -1.0, 1.0)
        )
        rel = build_relaxation(lp, 2)
        sol = solve(rel)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-6)
        sos = extract_sos_certificate(sol, rel)
        assert sos.identity_residual <= 1e-6


class TestCertifyDowngrades:
    def test_non_optimal_solution_gives_bound_only(self, example1):
        rel = example1.relaxations[2]
        sol = solve(rel, max_iter=2)
        cert = certify_solution(sol, rel)
        assert not cert.flat
        assert cert.atoms == []

    def test_loose_order_bound_only(self, motzkin):
        cert = motzkin.certificates[3]
        assert not cert.flat and cert.d is None


def test_sos_identity_holds_for_sparse_relaxation(two_abs):
    from semialg import build_sparse_relaxation, solve

    rel = build_sparse_relaxation(two_abs.lp, 2)
    sol = solve(rel)
    assert sol.status == "Optimal"
    sos = extract_sos_certificate(sol, rel)
    assert sos.identity_residual <= 1e-5


def test_boundary_atom_flagged():
    # the minimizer of sqrt(x1) on [0, 1] sits on the even-root domain
    # boundary; the certificate must flag the aux variable
    from semialg import parse_problem, build_problem

    spec = parse_problem("vars x1;\nminimize sqrt(x1);\nbox x1 in [0, 1];\n")
    lp = build_problem(
        spec.objective, spec.sense, spec.constraints, spec.box, var_names=spec.variables
    )
    rel = build_relaxation(lp, 2)
    sol = solve(rel)
    cert = certify_solution(sol, rel)
    assert sol.status == "Optimal"
    assert cert.rho == pytest.approx(0.0, abs=1e-6)
    assert cert.flat and cert.d == 1
    assert cert.atom_report[0].boundary_flags == ["y1"]


def test_boundary_atom_accepted_with_loose_budget():
    # optimum where |x1 - x2| = 0: the abs aux sits on the boundary of its
    # sign constraint; verification flags it and accepts a looser deviation
    from semialg import parse_problem, build_problem, min_order

    spec = parse_problem(
        "vars x1 x2;\nmaximize x1 + x2;\nmin(x1, x2) >= 0.2;\n"
        "x1^2 + x2^2 <= 1;\nbox x1 in [-1, 1];\nbox x2 in [-1, 1];\n"
    )
    lp = build_problem(
        spec.objective, spec.sense, spec.constraints, spec.box, var_names=spec.variables
    )
    rel = build_relaxation(lp, min_order(lp))
    sol = solve(rel)
    cert = certify_solution(sol, rel, with_sos=False)
    assert cert.flat and cert.d == 1
    assert cert.rho == pytest.approx(2**0.5, abs=1e-4)
    report = cert.atom_report[0]
    assert report.boundary_flags == ["y1"]
    assert report.strict_provenance_residual <= 1e-5
    assert cert.all_atoms_verified()
