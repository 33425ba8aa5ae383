"""Session-scoped pipelines shared across test modules (solves are cached)."""

from __future__ import annotations

from dataclasses import dataclass

import pytest
from hypothesis import settings

import helpers
from semialg import build_relaxation, grid_search, solve
from semialg.certify import certify_solution

settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")


@dataclass
class Pipeline:
    name: str
    spec: object
    lp: object
    relaxations: dict  # order -> LmiRelaxation
    solutions: dict  # order -> SdpSolution
    certificates: dict  # order -> Certificate
    oracle: object


def _run(name, text, orders, oracle_kwargs):
    spec, lp = helpers.build(text)
    relaxations, solutions, certificates = {}, {}, {}
    for order in orders:
        rel = build_relaxation(lp, order)
        sol = solve(rel)
        relaxations[order] = rel
        solutions[order] = sol
        certificates[order] = certify_solution(sol, rel)
    oracle = grid_search(
        spec.objective, spec.constraints, spec.box, sense=spec.sense, **oracle_kwargs
    )
    return Pipeline(name, spec, lp, relaxations, solutions, certificates, oracle)


@pytest.fixture(scope="session")
def example1():
    return _run("example1", helpers.EXAMPLE1, [1, 2, 3], {"resolution": 401, "slack": 5e-3})


@pytest.fixture(scope="session")
def example2():
    return _run("example2", helpers.EXAMPLE2, [1, 2, 3], {"resolution": 401, "slack": 5e-3})


@pytest.fixture(scope="session")
def two_abs():
    return _run("two_abs", helpers.TWO_ABS, [1, 2], {"resolution": 201, "slack": 1e-2})


@pytest.fixture(scope="session")
def pure_poly():
    return _run("pure_poly", helpers.PURE_POLY, [1, 2], {"resolution": 201, "slack": 1e-2})


@pytest.fixture(scope="session")
def motzkin():
    return _run("motzkin", helpers.MOTZKIN, [3, 4], {"resolution": 201, "slack": 1e-2})


@pytest.fixture(scope="session")
def all_pipelines(example1, example2, two_abs, pure_poly, motzkin):
    return [example1, example2, two_abs, pure_poly, motzkin]
