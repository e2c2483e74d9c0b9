"""Flow field of the memcomputing 3-SAT dynamics.

State: voltages v in [-1, 1]^n, short-term memory x_s in [0, 1]^m and
long-term memory x_l in [1, xl_max]^m.  Per clause j with literals
(i, q_ij):

    C_j   = 1/2 min_i (1 - q_ij v_i)
    G_ij  = 1/2 q_ij min over the other two literals of (1 - q v)
    R_ij  = 1/2 (q_ij - v_i)  if i is the clause's minimizing literal, else 0

    dv_i  = sum_j x_l,j x_s,j G_ij + (1 + zeta x_l,j)(1 - x_s,j) R_ij
    dx_s,j = beta (x_s,j + eps)(C_j - gamma)
    dx_l,j = alpha_j (C_j - delta)

Ties in the minimum go to the lowest variable index.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numba
import numpy as np

from .cnf import Formula


class NotInClause(ValueError):
    pass


class OutOfBoundsState(ValueError):
    pass


def default_zeta(ratio: float) -> float:
    """Rigidity learning rate by clause density.

    1e-1 away from the complexity peak (ratio >= 6, or easy ratios below 4),
    1e-2 around ratio 5 and for uniform instances at 4.25, 1e-3 at the
    CDC benchmark ratio 4.3.
    """
    if ratio >= 6.0 or ratio < 4.0:
        return 1e-1
    if ratio < 4.28 or ratio >= 4.65:
        return 1e-2
    return 1e-3


@dataclass(frozen=True)
class SolverParams:
    alpha: float = 5.0
    beta: float = 20.0
    gamma: float = 0.25
    delta: float = 0.05
    epsilon: float = 1e-3
    zeta: float = 1e-3
    xl_max: Optional[float] = None  # None: 1e4 * m, resolved per formula
    dt_min: float = 2.0**-7
    dt_max: float = 1e3
    # adaptive step control: largest accepted per-step change of any component
    max_change: float = 2.0
    dt_growth: float = 1.2

    def __post_init__(self):
        if not 0 < self.delta < self.gamma < 0.5:
            raise ValueError("need 0 < delta < gamma < 1/2")
        if not 0 < self.epsilon < 1:
            raise ValueError("need 0 < epsilon << 1")
        if self.zeta <= 0 or self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha, beta and zeta must be positive")
        if not 0 < self.dt_min < self.dt_max:
            raise ValueError("need 0 < dt_min < dt_max")
        if self.xl_max is not None and self.xl_max <= 1:
            raise ValueError("xl_max must exceed 1")
        if self.max_change <= 0 or self.dt_growth < 1:
            raise ValueError("need max_change > 0 and dt_growth >= 1")

    @classmethod
    def for_formula(cls, f: Formula, **overrides) -> "SolverParams":
        """Defaults with zeta picked from the clause density and xl_max = 1e4 m."""
        overrides.setdefault("zeta", default_zeta(f.ratio))
        return cls(**overrides).resolved(f)

    def resolved(self, f: Formula) -> "SolverParams":
        if self.xl_max is not None:
            return self
        return replace(self, xl_max=1e4 * f.num_clauses)

    def cap(self, f: Formula) -> float:
        return self.xl_max if self.xl_max is not None else 1e4 * f.num_clauses

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverParams":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver parameters: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SolverState:
    v: np.ndarray
    x_s: np.ndarray
    x_l: np.ndarray
    t: float = 0.0
    dt: float = 2.0**-7
    steps: int = 0
    rejects: int = 0

    def copy(self) -> "SolverState":
        return replace(self, v=self.v.copy(), x_s=self.x_s.copy(), x_l=self.x_l.copy())

    def check_bounds(self, f: Formula, xl_max: float) -> None:
        n, m = f.num_vars, f.num_clauses
        if self.v.shape != (n,) or self.x_s.shape != (m,) or self.x_l.shape != (m,):
            raise OutOfBoundsState("state dimensions do not match the formula")
        ok = (
            np.all(np.abs(self.v) <= 1.0)
            and np.all((self.x_s >= 0.0) & (self.x_s <= 1.0))
            and np.all((self.x_l >= 1.0) & (self.x_l <= xl_max))
        )
        if not ok:
            raise OutOfBoundsState("state outside [-1,1]^n x [0,1]^m x [1,xl_max]^m")


@dataclass
class Derivative:
    dv: np.ndarray
    dxs: np.ndarray
    dxl: np.ndarray
    C: np.ndarray = field(repr=False, default=None)

    def max_abs(self) -> float:
        return max(np.abs(self.dv).max(), np.abs(self.dxs).max(), np.abs(self.dxl).max())


# -- single-clause functions -------------------------------------------------


def _terms(f: Formula, v, j: int) -> np.ndarray:
    return 1.0 - f.signs[j] * np.asarray(v, dtype=float)[f.variables[j]]


def _sigma_slot(f: Formula, terms: np.ndarray, j: int) -> int:
    lo = terms.min()
    tied = np.flatnonzero(terms == lo)
    return int(tied[np.argmin(f.variables[j][tied])])


def _slot(f: Formula, j: int, i: int) -> int:
    hit = np.flatnonzero(f.variables[j] == i)
    if hit.size == 0:
        raise NotInClause(f"variable {i} does not appear in clause {j}")
    return int(hit[0])


def clause_constraint(f: Formula, v, j: int) -> float:
    return 0.5 * float(_terms(f, v, j).min())


def argmin_literal(f: Formula, v, j: int) -> int:
    """Variable index of the literal closest to satisfying clause ``j``."""
    terms = _terms(f, v, j)
    return int(f.variables[j][_sigma_slot(f, terms, j)])


def gradient_term(f: Formula, v, j: int, i: int) -> float:
    k = _slot(f, j, i)
    terms = _terms(f, v, j)
    others = np.delete(terms, k)
    return 0.5 * f.signs[j][k] * float(others.min())


def rigidity_term(f: Formula, v, j: int, i: int) -> float:
    k = _slot(f, j, i)
    terms = _terms(f, v, j)
    if _sigma_slot(f, terms, j) != k:
        return 0.0
    return 0.5 * (f.signs[j][k] - float(np.asarray(v, dtype=float)[i]))


def clause_energy(f: Formula, v, j: int) -> float:
    return float(np.prod(_terms(f, v, j))) / 8.0


# -- vectorized reference ----------------------------------------------------


def _sorted_literals(f: Formula) -> tuple[np.ndarray, np.ndarray]:
    # within-clause order by variable index; first-min then means lowest var
    order = np.argsort(f.variables, axis=1, kind="stable")
    return (
        np.ascontiguousarray(np.take_along_axis(f.variables, order, axis=1)),
        np.ascontiguousarray(np.take_along_axis(f.signs, order, axis=1).astype(np.float64)),
    )


def constraints(f: Formula, v) -> np.ndarray:
    """All clause constraints C_j as a length-m vector."""
    return 0.5 * np.min(1.0 - f.signs * np.asarray(v)[f.variables], axis=1)


def energies(f: Formula, v) -> np.ndarray:
    return np.prod(1.0 - f.signs * np.asarray(v)[f.variables], axis=1) / 8.0


def flow_field(
    f: Formula,
    params: SolverParams,
    state: SolverState,
    alpha: Optional[np.ndarray] = None,
    check: bool = True,
) -> Derivative:
    """Right-hand side of the dynamics at ``state`` (numpy implementation)."""
    if check:
        state.check_bounds(f, params.cap(f))
    var, q = _sorted_literals(f)
    v, xs, xl = state.v, state.x_s, state.x_l
    t = 1.0 - q * v[var]
    k = np.argmin(t, axis=1)
    rows = np.arange(t.shape[0])
    cmin = t[rows, k]
    C = 0.5 * cmin

    # min over the other two literals, per slot
    other = np.stack(
        [np.minimum(t[:, 1], t[:, 2]), np.minimum(t[:, 0], t[:, 2]), np.minimum(t[:, 0], t[:, 1])],
        axis=1,
    )
    G = 0.5 * q * other
    R = np.zeros_like(t)
    R[rows, k] = 0.5 * (q[rows, k] - v[var[rows, k]])

    a = (xl * xs)[:, None]
    b = ((1.0 + params.zeta * xl) * (1.0 - xs))[:, None]
    contrib = a * G + b * R
    dv = np.zeros_like(v, dtype=np.float64)
    np.add.at(dv, var.ravel(), contrib.ravel())

    alpha_vec = params.alpha if alpha is None else alpha
    dxs = params.beta * (xs + params.epsilon) * (C - params.gamma)
    dxl = alpha_vec * (C - params.delta)
    d = Derivative(dv, dxs, dxl, C)
    if check and not (np.all(np.isfinite(dv)) and np.all(np.isfinite(dxs)) and np.all(np.isfinite(dxl))):
        raise OutOfBoundsState("non-finite derivative")
    return d


def gradient_like_field(f: Formula, state: SolverState) -> np.ndarray:
    """The gradient-like part sum_j x_l x_s G_ij of dv alone."""
    var, q = _sorted_literals(f)
    t = 1.0 - q * state.v[var]
    other = np.stack(
        [np.minimum(t[:, 1], t[:, 2]), np.minimum(t[:, 0], t[:, 2]), np.minimum(t[:, 0], t[:, 1])],
        axis=1,
    )
    contrib = (state.x_l * state.x_s)[:, None] * 0.5 * q * other
    dv = np.zeros(f.num_vars)
    np.add.at(dv, var.ravel(), contrib.ravel())
    return dv


def divergence_v(f: Formula, params: SolverParams, state: SolverState) -> float:
    """Closed form of div_v F_v away from the hyperplanes where the min switches."""
    return -0.5 * float(np.sum((1.0 + params.zeta * state.x_l) * (1.0 - state.x_s)))


# -- compiled kernel ---------------------------------------------------------


@numba.njit(cache=True)
def _rhs_kernel(var, q, v, xs, xl, alpha, beta, gamma, delta, eps, zeta, dv, dxs, dxl, C):
    """Fill dv, dxs, dxl, C in place.

    Returns (max_j C_j, max_j max(|dxs_j|, |dxl_j|)).
    """
    m = var.shape[0]
    for i in range(dv.shape[0]):
        dv[i] = 0.0
    cmax = 0.0
    xmax = 0.0
    for j in range(m):
        i0 = var[j, 0]
        i1 = var[j, 1]
        i2 = var[j, 2]
        q0 = q[j, 0]
        q1 = q[j, 1]
        q2 = q[j, 2]
        t0 = 1.0 - q0 * v[i0]
        t1 = 1.0 - q1 * v[i1]
        t2 = 1.0 - q2 * v[i2]
        if t0 <= t1 and t0 <= t2:
            k = 0
            cmin = t0
        elif t1 <= t2:
            k = 1
            cmin = t1
        else:
            k = 2
            cmin = t2
        c = 0.5 * cmin
        C[j] = c
        if c > cmax:
            cmax = c
        a = xl[j] * xs[j]
        b = (1.0 + zeta * xl[j]) * (1.0 - xs[j])
        r0 = 0.0
        r1 = 0.0
        r2 = 0.0
        if k == 0:
            r0 = 0.5 * (q0 - v[i0])
        elif k == 1:
            r1 = 0.5 * (q1 - v[i1])
        else:
            r2 = 0.5 * (q2 - v[i2])
        dv[i0] += a * (0.5 * q0 * min(t1, t2)) + b * r0
        dv[i1] += a * (0.5 * q1 * min(t0, t2)) + b * r1
        dv[i2] += a * (0.5 * q2 * min(t0, t1)) + b * r2
        ds = beta * (xs[j] + eps) * (c - gamma)
        dl = alpha[j] * (c - delta)
        dxs[j] = ds
        dxl[j] = dl
        xmax = max(xmax, abs(ds), abs(dl))
    return cmax, xmax


class CompiledFormula:
    """Kernel-ready arrays for a formula (literals sorted by variable per clause)."""

    def __init__(self, f: Formula):
        self.formula = f
        self.var, self.q = _sorted_literals(f)
        self.n = f.num_vars
        self.m = f.num_clauses


def fast_flow_field(
    cf: CompiledFormula, params: SolverParams, state: SolverState, alpha: Optional[np.ndarray] = None
) -> Derivative:
    """Same field as :func:`flow_field`, evaluated by the compiled kernel."""
    if alpha is None:
        alpha = np.full(cf.m, params.alpha)
    dv = np.empty(cf.n)
    dxs = np.empty(cf.m)
    dxl = np.empty(cf.m)
    C = np.empty(cf.m)
    _rhs_kernel(
        cf.var, cf.q, state.v, state.x_s, state.x_l, alpha,
        params.beta, params.gamma, params.delta, params.epsilon, params.zeta,
        dv, dxs, dxl, C,
    )
    return Derivative(dv, dxs, dxl, C)
