"""Adaptive forward-Euler integration of the memcomputing dynamics.

Step control: the derivative at the current state is fixed, so a step of
size dt moves every component by dt * |d|.  A step is accepted when that
largest move is at most ``params.max_change``; otherwise dt halves (never
below dt_min, where the step is accepted unconditionally).  After an
accepted step dt grows by ``params.dt_growth`` up to dt_max.  The new state
is clamped to [-1,1]^n x [0,1]^m x [1,xl_max]^m, which discards the outward
components of the field at the faces.

``steps`` counts accepted steps only; halvings are tallied in ``rejects``.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

from .cnf import Formula, verify
from .dynamics import (
    CompiledFormula,
    SolverParams,
    SolverState,
    _rhs_kernel,
    constraints,
    fast_flow_field,
)
from .rng import stream


class NonFiniteDerivative(FloatingPointError):
    pass


class InitPolicy(enum.Enum):
    RANDOM = "random"
    EXPLICIT = "explicit"


@dataclass
class RunConfig:
    max_steps: int = 10**8
    seed: int = 0
    init_policy: InitPolicy = InitPolicy.RANDOM
    initial_state: Optional[SolverState] = None
    record_trajectory: bool = False
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.init_policy is InitPolicy.EXPLICIT and self.initial_state is None:
            raise ValueError("explicit init policy needs an initial_state")


@dataclass
class RunRecord:
    solved: bool
    assignment: Optional[np.ndarray]
    steps: int
    integrated_time: float
    wall_time: float
    max_xl_seen: float
    mean_dt: Optional[float]
    seed: int
    rejects: int = 0
    solver: str = "dmm"
    failure: Optional[str] = None
    trajectory: Optional[list] = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("trajectory")
        if self.assignment is not None:
            d["assignment"] = [int(x) for x in self.assignment]
        return d


# -- single step API ---------------------------------------------------------


def init_state(f: Formula, params: SolverParams, cfg: RunConfig) -> SolverState:
    if cfg.init_policy is InitPolicy.EXPLICIT:
        s = cfg.initial_state.copy()
        s.v = np.asarray(s.v, dtype=np.float64)
        s.x_s = np.asarray(s.x_s, dtype=np.float64)
        s.x_l = np.asarray(s.x_l, dtype=np.float64)
        s.check_bounds(f, params.cap(f))
        return s
    rng = stream(cfg.seed, "init")
    return SolverState(
        v=rng.uniform(-1.0, 1.0, size=f.num_vars),
        x_s=np.full(f.num_clauses, 0.5),
        x_l=np.ones(f.num_clauses),
        t=0.0,
        dt=params.dt_min,
        steps=0,
    )


def _project(state: SolverState, xl_max: float) -> None:
    np.clip(state.v, -1.0, 1.0, out=state.v)
    np.clip(state.x_s, 0.0, 1.0, out=state.x_s)
    np.clip(state.x_l, 1.0, xl_max, out=state.x_l)


def euler_step(
    f: Formula | CompiledFormula,
    params: SolverParams,
    state: SolverState,
    alpha: Optional[np.ndarray] = None,
) -> tuple[SolverState, bool]:
    """One attempt at a forward-Euler step.

    Returns ``(new_state, True)`` on acceptance, or ``(state_with_halved_dt,
    False)`` when the step would move some component by more than
    ``params.max_change``.
    """
    cf = f if isinstance(f, CompiledFormula) else CompiledFormula(f)
    d = fast_flow_field(cf, params, state, alpha)
    mx = d.max_abs()
    if not math.isfinite(mx):
        raise NonFiniteDerivative("flow field is not finite")
    h = state.dt
    if h * mx > params.max_change and h > params.dt_min:
        new = state.copy()
        new.dt = max(h / 2.0, params.dt_min)
        new.rejects += 1
        return new, False
    new = state.copy()
    new.v += h * d.dv
    new.x_s += h * d.dxs
    new.x_l += h * d.dxl
    _project(new, params.cap(cf.formula))
    new.t += h
    new.steps += 1
    new.dt = min(h * params.dt_growth, params.dt_max)
    return new, True


def accepted_step(cf: CompiledFormula, params: SolverParams, state: SolverState, alpha=None) -> SolverState:
    while True:
        state, ok = euler_step(cf, params, state, alpha)
        if ok:
            return state


def check_solved(f: Formula, state: SolverState) -> Optional[np.ndarray]:
    """sign(v) if every clause has C_j < 1/2, else None.  v_i == 0 maps to TRUE."""
    if np.max(constraints(f, state.v)) >= 0.5:
        return None
    a = np.where(state.v < 0.0, -1, 1).astype(np.int64)
    assert verify(f, a)
    return a


# -- compiled run loop -------------------------------------------------------

SOLVED, EXHAUSTED, PAUSED, NONFINITE = 1, 0, 2, 3


@numba.njit(cache=True)
def _advance(
    var, q, v, xs, xl, alpha,
    beta, gamma, delta, eps, zeta,
    dt_min, dt_max, max_change, growth, xl_max,
    t, dt, steps, rejects, max_xl,
    max_steps, step_budget, t_stop,
    dv, dxs, dxl, C,
):
    n = v.shape[0]
    m = xs.shape[0]
    done = 0
    while True:
        cmax, mx = _rhs_kernel(var, q, v, xs, xl, alpha, beta, gamma, delta, eps, zeta, dv, dxs, dxl, C)
        if steps > 0 and cmax < 0.5:
            return SOLVED, t, dt, steps, rejects, max_xl
        if steps >= max_steps:
            return EXHAUSTED, t, dt, steps, rejects, max_xl
        if done >= step_budget or t >= t_stop:
            return PAUSED, t, dt, steps, rejects, max_xl
        for i in range(n):
            a = abs(dv[i])
            if a > mx:
                mx = a
        if not np.isfinite(mx):
            return NONFINITE, t, dt, steps, rejects, max_xl
        h = dt
        while h * mx > max_change and h > dt_min:
            h = max(h / 2.0, dt_min)
            rejects += 1
        for i in range(n):
            x = v[i] + h * dv[i]
            if x > 1.0:
                x = 1.0
            elif x < -1.0:
                x = -1.0
            v[i] = x
        for j in range(m):
            x = xs[j] + h * dxs[j]
            if x > 1.0:
                x = 1.0
            elif x < 0.0:
                x = 0.0
            xs[j] = x
            x = xl[j] + h * dxl[j]
            if x > xl_max:
                x = xl_max
            elif x < 1.0:
                x = 1.0
            xl[j] = x
            if x > max_xl:
                max_xl = x
        t += h
        steps += 1
        done += 1
        dt = min(h * growth, dt_max)


class Integrator:
    """Drives the compiled loop for one formula, optionally pausing for hooks."""

    def __init__(self, f: Formula, params: SolverParams):
        self.cf = CompiledFormula(f)
        self.params = params
        self.xl_max = params.cap(f)
        m = f.num_clauses
        self._dv = np.empty(f.num_vars)
        self._dxs = np.empty(m)
        self._dxl = np.empty(m)
        self._C = np.empty(m)
        self.max_xl = 1.0

    def advance(self, state: SolverState, alpha, max_steps, step_budget=2**62, t_stop=math.inf) -> int:
        p = self.params
        status, t, dt, steps, rejects, mxl = _advance(
            self.cf.var, self.cf.q, state.v, state.x_s, state.x_l, alpha,
            p.beta, p.gamma, p.delta, p.epsilon, p.zeta,
            p.dt_min, p.dt_max, p.max_change, p.dt_growth, self.xl_max,
            state.t, state.dt, state.steps, state.rejects, self.max_xl,
            max_steps, step_budget, t_stop,
            self._dv, self._dxs, self._dxl, self._C,
        )
        state.t, state.dt, state.steps, state.rejects = t, dt, steps, rejects
        self.max_xl = mxl
        return status


def solve(
    f: Formula,
    params: Optional[SolverParams] = None,
    cfg: Optional[RunConfig] = None,
    schedule=None,
) -> RunRecord:
    """Integrate until every clause has C_j < 1/2 or ``cfg.max_steps`` accepted steps.

    ``schedule`` is an optional :class:`~dmmsat.heuristics.CompetitionSchedule`
    whose per-clause growth rates replace alpha and are adapted between
    integration intervals.
    """
    params = (params or SolverParams.for_formula(f)).resolved(f)
    cfg = cfg or RunConfig()
    start = time.perf_counter()
    state = init_state(f, params, cfg)
    integ = Integrator(f, params)
    integ.max_xl = float(state.x_l.max())
    if schedule is not None:
        schedule = schedule.bind(f)
        alpha = schedule.per_clause_alpha
    else:
        alpha = np.full(f.num_clauses, params.alpha)

    trajectory = [] if cfg.record_trajectory else None
    if trajectory is not None:
        trajectory.append(_snapshot(f, state, integ.max_xl))
    failure = None
    while True:
        t_stop = schedule.next_time(state.t) if schedule is not None else math.inf
        budget = cfg.snapshot_stride - state.steps % cfg.snapshot_stride if cfg.record_trajectory else 2**62
        status = integ.advance(state, alpha, cfg.max_steps, budget, t_stop)
        if status == NONFINITE:
            failure = "non-finite derivative"
            break
        if trajectory is not None and (status != PAUSED or state.steps % cfg.snapshot_stride == 0):
            if state.steps != trajectory[-1]["step"]:
                trajectory.append(_snapshot(f, state, integ.max_xl))
        if status != PAUSED:
            break
        if schedule is not None and state.t >= t_stop:
            schedule.maybe_adapt(state, params.cap(f))
            alpha = schedule.per_clause_alpha

    assignment = check_solved(f, state) if status == SOLVED else None
    return RunRecord(
        solved=assignment is not None,
        assignment=assignment,
        steps=state.steps,
        integrated_time=state.t,
        wall_time=time.perf_counter() - start,
        max_xl_seen=integ.max_xl,
        mean_dt=state.t / state.steps if state.steps else None,
        seed=cfg.seed,
        rejects=state.rejects,
        solver="dmm" if schedule is None else "dmm-competition",
        failure=failure,
        trajectory=trajectory,
    )


def _snapshot(f: Formula, state: SolverState, max_xl: float) -> dict:
    return {
        "step": state.steps,
        "t": state.t,
        "dt": state.dt,
        "num_unsat": int(np.sum(constraints(f, state.v) >= 0.5)),
        "max_xl": max_xl,
    }


def write_trajectory_csv(trajectory: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["step", "t", "dt", "num_unsat", "max_xl"])
        w.writeheader()
        w.writerows(trajectory)


def iterate_states(
    f: Formula,
    params: SolverParams,
    cfg: RunConfig,
    on_step: Callable[[SolverState], Optional[bool]],
) -> SolverState:
    """Python-level loop over accepted states, matching :func:`solve` step for step.

    ``on_step`` sees each accepted state (never mutate it); returning True stops.
    Stops by itself when solved or at ``cfg.max_steps``.
    """
    params = params.resolved(f)
    cf = CompiledFormula(f)
    alpha = np.full(f.num_clauses, params.alpha)
    state = init_state(f, params, cfg)
    on_step(state)
    while state.steps < cfg.max_steps:
        state = accepted_step(cf, params, state, alpha)
        if on_step(state):
            break
        if check_solved(f, state) is not None:
            break
    return state


def solve_from_orthant(
    inst_formula: Formula,
    params: Optional[SolverParams] = None,
    gamma: Optional[float] = None,
    seed: int = 0,
    extra_steps: int = 0,
    max_steps: int = 10**6,
) -> tuple[RunRecord, dict]:
    """Start inside the restricted solution orthant of the all-true assignment.

    ``inst_formula`` must be gauged so that all-true satisfies it.  Voltages
    start uniformly in [1 - 2 gamma, 1], x_s = 0 and x_l = 1.  The run goes
    on for ``extra_steps`` accepted steps past the first solved state, so
    the trajectory can be checked for the basin properties.  Returns the
    run record and a dict with ``max_c`` (largest C_j seen on the
    trajectory) and ``monotone`` (no voltage ever decreased).
    """
    f = inst_formula
    params = (params or SolverParams.for_formula(f)).resolved(f)
    gamma = params.gamma if gamma is None else gamma
    if not verify(f, np.ones(f.num_vars, dtype=np.int64)):
        raise ValueError("formula is not gauged to the all-true solution")
    rng = stream(seed, "orthant")
    s0 = SolverState(
        v=rng.uniform(1.0 - 2.0 * gamma, 1.0, size=f.num_vars),
        x_s=np.zeros(f.num_clauses),
        x_l=np.ones(f.num_clauses),
        dt=params.dt_min,
    )
    stats = {"max_c": float(constraints(f, s0.v).max()), "monotone": True, "max_xl": 1.0}
    prev = [s0.v.copy()]
    solved_at = []

    def watch(s):
        stats["max_c"] = max(stats["max_c"], float(constraints(f, s.v).max()))
        stats["max_xl"] = max(stats["max_xl"], float(s.x_l.max()))
        if np.any(s.v < prev[0]):
            stats["monotone"] = False
        prev[0] = s.v.copy()
        if not solved_at and s.steps > 0 and check_solved(f, s) is not None:
            solved_at.append(s.steps)
        return bool(solved_at) and s.steps >= solved_at[0] + extra_steps

    start = time.perf_counter()
    cf = CompiledFormula(f)
    state = s0
    watch(state)
    while state.steps < max_steps:
        state = accepted_step(cf, params, state)
        if watch(state):
            break
    assignment = np.where(state.v < 0, -1, 1).astype(np.int64) if solved_at else None
    rec = RunRecord(
        solved=bool(solved_at),
        assignment=assignment,
        steps=solved_at[0] if solved_at else state.steps,
        integrated_time=state.t,
        wall_time=time.perf_counter() - start,
        max_xl_seen=stats["max_xl"],
        mean_dt=state.t / state.steps if state.steps else None,
        seed=seed,
        rejects=state.rejects,
    )
    return rec, stats
