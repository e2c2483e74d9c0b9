"""Planted (CDC) and uniform random 3-SAT generators."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .cnf import Formula, verify
from .rng import stream


class OutOfRange(ValueError):
    pass


class HardnessWarning(UserWarning):
    """Parameters fall outside the regime where CDC instances are hard."""


def cdc_probabilities(p0: float) -> tuple[float, float, float]:
    """Per-type probabilities (p0, p1, p2) of a clause-distribution-controlled instance.

    A clause with k negations relative to the planted assignment has
    probability p_k for each of its C(3, k) negation patterns.  The triple
    obeys p0 + 3 p1 + 3 p2 = 1 and p0 + p1 - p2 = 0.
    """
    if not 0.0 < p0 <= 0.25:
        raise OutOfRange(f"p0 must lie in (0, 0.25], got {p0}")
    return p0, (1.0 - 4.0 * p0) / 6.0, (1.0 + 2.0 * p0) / 6.0


@dataclass(frozen=True)
class CdcParams:
    n: int
    ratio: float
    p0: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise OutOfRange(f"need n >= 3, got {self.n}")
        if not self.ratio > 0:
            raise OutOfRange(f"ratio must be positive, got {self.ratio}")
        cdc_probabilities(self.p0)
        if self.num_clauses < 1:
            raise OutOfRange("round(ratio * n) must be at least 1")

    @property
    def num_clauses(self) -> int:
        return num_clauses(self.n, self.ratio)

    def probabilities(self) -> tuple[float, float, float]:
        return cdc_probabilities(self.p0)


@dataclass(frozen=True)
class PlantedInstance:
    formula: Formula
    planted: np.ndarray
    params: CdcParams

    def metadata(self, include_planted: bool = True) -> dict:
        p0, p1, p2 = self.params.probabilities()
        meta = {
            "generator": "cdc",
            **asdict(self.params),
            "m": self.formula.num_clauses,
            "p1": p1,
            "p2": p2,
            "duplicate_clauses": "allowed",
        }
        if include_planted:
            meta["planted"] = [int(x) for x in self.planted]
        return meta


def num_clauses(n: int, ratio: float) -> int:
    return int(round(ratio * n))


def _distinct_triples(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    # uniform 3-subsets, ordered uniformly at random: redraw rows with repeats
    out = rng.integers(0, n, size=(m, 3))
    while True:
        bad = (out[:, 0] == out[:, 1]) | (out[:, 0] == out[:, 2]) | (out[:, 1] == out[:, 2])
        k = int(bad.sum())
        if k == 0:
            return out
        out[bad] = rng.integers(0, n, size=(k, 3))


def clause_types(signs: np.ndarray) -> np.ndarray:
    """Number of negated literals per clause (0..3)."""
    return np.sum(np.asarray(signs) < 0, axis=1)


def _check_hardness(ratio: float, p0: float) -> None:
    if not (0.077 < p0 < 0.25) or ratio <= 4.25:
        warnings.warn(
            f"ratio={ratio}, p0={p0} is outside the hard CDC regime "
            "(ratio > 4.25 and 0.077 < p0 < 0.25)",
            HardnessWarning,
            stacklevel=3,
        )


def generate_cdc(params: CdcParams) -> PlantedInstance:
    """Sample a CDC instance with a hidden planted solution.

    Clauses are drawn i.i.d.: three distinct variables, then a negation
    pattern relative to the all-true assignment (0 negations w.p. p0, one
    w.p. 3 p1, two w.p. 3 p2, the negated positions uniform).  Finally a
    uniformly random planted assignment x is applied as the gauge
    q_ij -> x_i q_ij, so that x satisfies the formula.
    """
    _check_hardness(params.ratio, params.p0)
    p0, p1, p2 = params.probabilities()
    n, m = params.n, params.num_clauses
    rng = stream(params.seed, "gen")

    variables = _distinct_triples(rng, n, m)
    kind = rng.choice(3, size=m, p=[p0, 3 * p1, 3 * p2])
    slot = rng.integers(0, 3, size=m)
    # kind 1: negate `slot`; kind 2: keep only `slot` positive
    signs = np.ones((m, 3), dtype=np.int64)
    rows = np.arange(m)
    one = kind == 1
    signs[rows[one], slot[one]] = -1
    two = kind == 2
    signs[two] = -1
    signs[rows[two], slot[two]] = 1

    planted = rng.choice(np.array([-1, 1], dtype=np.int64), size=n)
    formula = Formula(n, variables, signs * planted[variables])
    inst = PlantedInstance(formula, planted, params)
    assert verify(formula, planted)
    return inst


def generate_uniform(n: int, ratio: float, seed: int = 0) -> Formula:
    """Random 3-SAT: distinct variables per clause, independent fair signs."""
    if n < 3 or not ratio > 0:
        raise OutOfRange(f"need n >= 3 and ratio > 0, got n={n}, ratio={ratio}")
    m = num_clauses(n, ratio)
    if m < 1:
        raise OutOfRange("round(ratio * n) must be at least 1")
    rng = stream(seed, "uniform")
    variables = _distinct_triples(rng, n, m)
    signs = rng.choice(np.array([-1, 1], dtype=np.int64), size=(m, 3))
    return Formula(n, variables, signs)
