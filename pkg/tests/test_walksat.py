import itertools

import numpy as np
import pytest

from dmmsat.cnf import Formula, LengthMismatch, verify
from dmmsat.gen import generate_uniform
from dmmsat.walksat import WalkSatParams, walksat_solve

from helpers import planted


def test_already_satisfied_start():
    f = Formula.from_clauses(3, [(1, 2, 3), (1, -2, 3)])
    rec = walksat_solve(f, initial=[1, 1, 1])
    assert rec.solved and rec.steps == 0 and rec.solver == "walksat"


def test_single_clause_one_flip():
    f = Formula.from_clauses(3, [(1, 2, 3)])
    rec = walksat_solve(f, initial=[-1, -1, -1])
    assert rec.solved and rec.steps == 1 and verify(f, rec.assignment)


def test_initial_length_checked():
    f = Formula.from_clauses(3, [(1, 2, 3)])
    with pytest.raises(LengthMismatch):
        walksat_solve(f, initial=[1, 1])


def test_small_sat_instances_solved():
    rng = np.random.default_rng(0)
    checked = 0
    for k in range(60):
        n = int(rng.integers(5, 11))
        f = generate_uniform(n, float(rng.uniform(3, 5)), seed=k)
        sat = any(verify(f, np.array(b)) for b in itertools.product((-1, 1), repeat=n))
        if not sat:
            continue
        checked += 1
        assert any(walksat_solve(f, WalkSatParams(seed=r, max_flips=10**4)).solved for r in range(10))
    assert checked > 20


def test_unsat_instance_never_reports_model():
    # all 8 sign patterns on vars 1..3
    clauses = [tuple(s * v for s, v in zip(signs, (1, 2, 3))) for signs in itertools.product((1, -1), repeat=3)]
    f = Formula.from_clauses(3, clauses)
    rec = walksat_solve(f, WalkSatParams(max_flips=5000))
    assert not rec.solved and rec.steps == 5000 and rec.assignment is None


def test_deterministic_and_planted():
    f = planted(80, seed=1).formula
    a = walksat_solve(f, WalkSatParams(seed=4))
    b = walksat_solve(f, WalkSatParams(seed=4))
    assert a.solved and a.steps == b.steps and np.array_equal(a.assignment, b.assignment)
    assert verify(f, a.assignment)


def test_params_validation():
    with pytest.raises(ValueError):
        WalkSatParams(noise=1.5)
    with pytest.raises(ValueError):
        WalkSatParams(max_flips=-1)
