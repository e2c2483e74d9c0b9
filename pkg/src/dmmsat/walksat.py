"""WalkSAT/SKC baseline.  One step is one variable flip."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numba
import numpy as np

from .cnf import Formula, LengthMismatch, as_assignment, verify
from .integrator import RunRecord
from .rng import stream


@dataclass(frozen=True)
class WalkSatParams:
    noise: float = 0.5
    max_flips: int = 10**7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must lie in [0, 1], got {self.noise}")
        if self.max_flips < 0:
            raise ValueError("max_flips must be non-negative")


def _occurrences(var: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    flat = var.ravel()
    order = np.argsort(flat, kind="stable")
    clause_of = (order // 3).astype(np.int64)
    start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=n), out=start[1:])
    return start, clause_of


@numba.njit(cache=True)
def _break_count(x, a, occ_start, occ_clause, var, sgn, numtrue):
    b = 0
    for k in range(occ_start[x], occ_start[x + 1]):
        j = occ_clause[k]
        if numtrue[j] == 1:
            for s in range(3):
                if var[j, s] == x and sgn[j, s] * a[x] > 0:
                    b += 1
    return b


@numba.njit(cache=True)
def _walk(var, sgn, a, occ_start, occ_clause, noise, max_flips, rng):
    m = var.shape[0]
    numtrue = np.zeros(m, dtype=np.int64)
    false_list = np.empty(m, dtype=np.int64)
    where = np.full(m, -1, dtype=np.int64)
    nfalse = 0
    for j in range(m):
        c = 0
        for s in range(3):
            if sgn[j, s] * a[var[j, s]] > 0:
                c += 1
        numtrue[j] = c
        if c == 0:
            where[j] = nfalse
            false_list[nfalse] = j
            nfalse += 1

    flips = 0
    while nfalse > 0 and flips < max_flips:
        j = false_list[rng.integers(0, nfalse)]
        best = -1
        best_break = 1 << 62
        for s in range(3):  # literals are sorted by variable index
            b = _break_count(var[j, s], a, occ_start, occ_clause, var, sgn, numtrue)
            if b < best_break:
                best_break = b
                best = var[j, s]
        if best_break == 0:
            x = best
        elif rng.random() < noise:
            x = var[j, rng.integers(0, 3)]
        else:
            x = best

        a[x] = -a[x]
        flips += 1
        for k in range(occ_start[x], occ_start[x + 1]):
            jj = occ_clause[k]
            for s in range(3):
                if var[jj, s] == x:
                    if sgn[jj, s] * a[x] > 0:
                        numtrue[jj] += 1
                        if numtrue[jj] == 1:
                            # remove from false list
                            p = where[jj]
                            last = false_list[nfalse - 1]
                            false_list[p] = last
                            where[last] = p
                            where[jj] = -1
                            nfalse -= 1
                    else:
                        numtrue[jj] -= 1
                        if numtrue[jj] == 0:
                            where[jj] = nfalse
                            false_list[nfalse] = jj
                            nfalse += 1
    return flips, nfalse == 0


def walksat_solve(f: Formula, params: WalkSatParams | None = None, initial=None) -> RunRecord:
    """Run WalkSAT from ``initial`` (±1 per variable) or a uniformly random assignment.

    Each flip picks a uniformly random unsatisfied clause.  A variable whose
    flip breaks no satisfied clause is taken if there is one; otherwise with
    probability ``noise`` a random variable of the clause is flipped, else
    the one with the fewest breaks.  Ties go to the lowest variable index.
    """
    params = params or WalkSatParams()
    start = time.perf_counter()
    order = np.argsort(f.variables, axis=1, kind="stable")
    var = np.ascontiguousarray(np.take_along_axis(f.variables, order, axis=1))
    sgn = np.ascontiguousarray(np.take_along_axis(f.signs, order, axis=1))
    occ_start, occ_clause = _occurrences(var, f.num_vars)
    rng = stream(params.seed, "walksat")
    a = rng.integers(0, 2, size=f.num_vars) * 2 - 1
    if initial is not None:
        init = as_assignment(initial)
        if init.size != f.num_vars:
            raise LengthMismatch(f"assignment has {init.size} entries, formula has {f.num_vars} variables")
        a = init.astype(a.dtype)
    flips, solved = _walk(var, sgn, a, occ_start, occ_clause, float(params.noise), int(params.max_flips), rng)
    solved = bool(solved)
    if solved:
        assert verify(f, a)
    return RunRecord(
        solved=solved,
        assignment=a.astype(np.int64) if solved else None,
        steps=int(flips),
        integrated_time=float(flips),
        wall_time=time.perf_counter() - start,
        max_xl_seen=None,
        mean_dt=None,
        seed=params.seed,
        solver="walksat",
    )
