import warnings

import numpy as np

from dmmsat.dynamics import SolverState
from dmmsat.gen import CdcParams, generate_cdc, HardnessWarning


def planted(n, ratio=4.3, p0=0.08, seed=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HardnessWarning)
        return generate_cdc(CdcParams(n, ratio, p0, seed))


def random_state(f, rng, xl_hi=50.0):
    return SolverState(
        v=rng.uniform(-1, 1, f.num_vars),
        x_s=rng.uniform(0, 1, f.num_clauses),
        x_l=rng.uniform(1, xl_hi, f.num_clauses),
    )


def nondegenerate_state(f, rng, sep=1e-3, margin=1e-3):
    """Interior state where the three values 1 - q v of every clause are pairwise >= sep apart."""
    while True:
        s = random_state(f, rng)
        s.v = rng.uniform(-1 + margin, 1 - margin, f.num_vars)
        t = 1.0 - f.signs * s.v[f.variables]
        gaps = np.abs(t[:, [0, 0, 1]] - t[:, [1, 2, 2]])
        if gaps.min() >= sep:
            return s


def fd_divergence(f, params, state, field, h=1e-6):
    """Central-difference trace of d(field_v)/dv."""
    total = 0.0
    for i in range(f.num_vars):
        plus, minus = state.copy(), state.copy()
        plus.v[i] += h
        minus.v[i] -= h
        total += (field(plus)[i] - field(minus)[i]) / (2 * h)
    return total


def fd_diagonal(f, state, field, h=1e-6):
    out = np.empty(f.num_vars)
    for i in range(f.num_vars):
        plus, minus = state.copy(), state.copy()
        plus.v[i] += h
        minus.v[i] -= h
        out[i] = (field(plus)[i] - field(minus)[i]) / (2 * h)
    return out
