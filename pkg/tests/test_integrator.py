import numpy as np
import pytest

from dmmsat.cnf import Formula, verify
from dmmsat.dynamics import CompiledFormula, SolverParams, SolverState
from dmmsat.integrator import (
    InitPolicy,
    Integrator,
    RunConfig,
    check_solved,
    euler_step,
    init_state,
    iterate_states,
    solve,
    solve_from_orthant,
    write_trajectory_csv,
)

from helpers import planted, random_state


def test_init_state_deterministic_and_bounded():
    f = planted(30, seed=1).formula
    p = SolverParams.for_formula(f)
    a = init_state(f, p, RunConfig(seed=5))
    b = init_state(f, p, RunConfig(seed=5))
    assert np.array_equal(a.v, b.v)
    a.check_bounds(f, p.xl_max)


def test_init_explicit_verbatim():
    f = planted(10, seed=1).formula
    p = SolverParams.for_formula(f)
    s = random_state(f, np.random.default_rng(0))
    got = init_state(f, p, RunConfig(init_policy=InitPolicy.EXPLICIT, initial_state=s))
    assert np.array_equal(got.v, s.v) and np.array_equal(got.x_s, s.x_s) and np.array_equal(got.x_l, s.x_l)


def test_zero_derivative_step():
    # all literals satisfied, x_s and x_l at their floors: only dxs, dxl < 0 pushing into the faces
    f = Formula.from_clauses(3, [(1, 2, 3)])
    p = SolverParams.for_formula(f)
    s = SolverState(v=np.ones(3), x_s=np.zeros(1), x_l=np.ones(1))
    new, ok = euler_step(f, p, s)
    assert ok
    assert np.array_equal(new.v, s.v) and np.array_equal(new.x_s, s.x_s) and np.array_equal(new.x_l, s.x_l)
    assert new.steps == 1 and new.t == s.dt


def test_projection_to_faces():
    f = Formula.from_clauses(3, [(1, 2, 3)])
    p = SolverParams.for_formula(f)
    # gradient-like drive on v_1 is x_l * 1 = 10; one step of 0.1 would reach 1.9
    s = SolverState(v=np.array([0.9, -1.0, -1.0]), x_s=np.ones(1), x_l=np.full(1, 10.0), dt=0.1)
    new, ok = euler_step(f, p, s)
    assert ok
    assert new.v[0] == 1.0


def test_reject_halves_dt():
    f = planted(20, seed=1).formula
    p = SolverParams.for_formula(f, max_change=1e-3)
    s = init_state(f, p, RunConfig())
    s.dt = 1.0
    new, ok = euler_step(f, p, s)
    assert not ok and new.dt == 0.5 and new.steps == 0 and new.rejects == 1


def test_dt_bounds_and_containment():
    f = planted(40, seed=2).formula
    p = SolverParams.for_formula(f)
    seen = []

    def check(s):
        s.check_bounds(f, p.xl_max)
        seen.append(s.dt)

    iterate_states(f, p, RunConfig(max_steps=3000, seed=1), check)
    assert min(seen) >= p.dt_min and max(seen) <= p.dt_max


def test_check_solved():
    f = Formula.from_clauses(3, [(1, 2, 3)])
    s = SolverState(v=np.ones(3), x_s=np.zeros(1), x_l=np.ones(1))
    a = check_solved(f, s)
    assert a is not None and verify(f, a)
    s.v = np.array([-0.2, -1.0, -1.0])  # C = 0.6
    assert check_solved(f, s) is None
    # v_1 == 0 with the clause satisfied by another literal -> TRUE, still verifies
    f2 = Formula.from_clauses(3, [(-1, 2, 3)])
    s.v = np.array([0.0, 1.0, -1.0])
    a = check_solved(f2, s)
    assert a[0] == 1 and verify(f2, a)


def test_single_clause_solved_quickly():
    f = Formula.from_clauses(3, [(-1, 2, -3)])
    for seed in range(20):
        rec = solve(f, cfg=RunConfig(max_steps=1000, seed=seed))
        assert rec.solved and rec.steps <= 1000 and verify(f, rec.assignment)


def test_planted_n50_solved():
    inst = planted(50, seed=9)
    rec = solve(inst.formula, cfg=RunConfig(max_steps=10**6, seed=0))
    assert rec.solved and verify(inst.formula, rec.assignment)
    assert rec.steps > 0 and rec.integrated_time > 0


def test_step_cap():
    f = planted(200, seed=3).formula
    rec = solve(f, cfg=RunConfig(max_steps=1))
    assert not rec.solved and rec.steps == 1 and rec.assignment is None


def test_deterministic_record():
    f = planted(60, seed=4).formula
    a = solve(f, cfg=RunConfig(seed=3))
    b = solve(f, cfg=RunConfig(seed=3))
    assert (a.steps, a.integrated_time, a.max_xl_seen, a.rejects) == (b.steps, b.integrated_time, b.max_xl_seen, b.rejects)
    assert np.array_equal(a.assignment, b.assignment)


def test_compiled_loop_matches_python_loop():
    f = planted(40, seed=5).formula
    p = SolverParams.for_formula(f)
    cfg = RunConfig(seed=2, max_steps=10**5)
    rec = solve(f, p, cfg)
    final = iterate_states(f, p, cfg, lambda s: None)
    assert final.steps == rec.steps
    assert final.t == rec.integrated_time
    assert np.array_equal(np.where(final.v < 0, -1, 1), rec.assignment)


def test_trajectory(tmp_path):
    f = planted(40, seed=6).formula
    rec = solve(f, cfg=RunConfig(seed=1, record_trajectory=True, snapshot_stride=10))
    steps = [r["step"] for r in rec.trajectory]
    assert steps[0] == 0 and steps[-1] == rec.steps
    assert all(s % 10 == 0 for s in steps[:-1])
    assert rec.trajectory[-1]["num_unsat"] == 0
    # recording does not change the run
    assert solve(f, cfg=RunConfig(seed=1)).steps == rec.steps
    path = tmp_path / "t.csv"
    write_trajectory_csv(rec.trajectory, path)
    assert path.read_text().splitlines()[0] == "step,t,dt,num_unsat,max_xl"


def test_gauge_invariant_trajectories():
    rng = np.random.default_rng(7)
    inst = planted(50, seed=7)
    f = inst.formula
    p = SolverParams.for_formula(f)
    g = rng.choice([-1, 1], f.num_vars)
    s0 = init_state(f, p, RunConfig(seed=7))
    sg = s0.copy()
    sg.v = g * s0.v
    a, b = s0.copy(), sg.copy()
    Integrator(f, p).advance(a, np.full(f.num_clauses, p.alpha), 1000)
    Integrator(f.gauged(g), p).advance(b, np.full(f.num_clauses, p.alpha), 1000)
    assert a.steps == b.steps and a.t == b.t
    assert np.array_equal(b.v, g * a.v)
    assert np.array_equal(a.x_s, b.x_s) and np.array_equal(a.x_l, b.x_l)


def test_orthant_basin():
    inst = planted(100, seed=8)
    f = inst.formula.gauged(inst.planted)
    rec, stats = solve_from_orthant(f, seed=1, extra_steps=50)
    assert rec.solved and verify(f, rec.assignment)
    assert stats["max_c"] <= 0.25 and stats["monotone"]


def test_orthant_all_true_start_solved_at_step_one():
    inst = planted(30, seed=9)
    f = inst.formula.gauged(inst.planted)
    p = SolverParams.for_formula(f)
    s = SolverState(v=np.ones(f.num_vars), x_s=np.zeros(f.num_clauses), x_l=np.ones(f.num_clauses))
    rec = solve(f, p, RunConfig(init_policy=InitPolicy.EXPLICIT, initial_state=s))
    assert rec.solved and rec.steps == 1


def test_orthant_requires_gauged_formula():
    inst = planted(30, seed=10)
    if not np.all(inst.planted == 1):
        with pytest.raises(ValueError):
            solve_from_orthant(inst.formula)


def test_run_record_json():
    f = planted(30, seed=11).formula
    d = solve(f).to_json()
    assert d["solved"] and isinstance(d["assignment"], list) and d["solver"] == "dmm"
