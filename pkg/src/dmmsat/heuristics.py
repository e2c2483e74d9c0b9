"""Per-clause growth-rate adaptation used for competition runs.

Every ``interval`` units of integration time the long-term memories are
compared with their (lower) median: clauses strictly above it get their
growth rate alpha_j multiplied by ``up_factor``, all others by
``down_factor``, with ``alpha_floor`` as the minimum.  A clause whose
long-term memory has reached the cap restarts with x_l = 1 and alpha = 1.
Nothing else in the state is touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cnf import Formula
from .dynamics import SolverState


@dataclass
class CompetitionSchedule:
    interval: float = 1e4
    up_factor: float = 1.1
    down_factor: float = 0.9
    alpha_floor: float = 1.0
    alpha_init: float = 5.0
    per_clause_alpha: Optional[np.ndarray] = field(default=None, repr=False)
    adaptations: int = 0

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        if self.alpha_init < self.alpha_floor:
            raise ValueError("alpha_init below alpha_floor")

    def bind(self, f: Formula) -> "CompetitionSchedule":
        """Fresh schedule for one run on ``f`` (the receiver is left untouched)."""
        return CompetitionSchedule(
            self.interval,
            self.up_factor,
            self.down_factor,
            self.alpha_floor,
            self.alpha_init,
            np.full(f.num_clauses, float(self.alpha_init)),
        )

    def next_time(self, t: float) -> float:
        """First adaptation instant strictly after ``t``."""
        return (math.floor(t / self.interval) + 1) * self.interval

    def maybe_adapt(self, state: SolverState, xl_max: float, t_prev: Optional[float] = None) -> bool:
        """Adapt if the integration time has crossed a multiple of ``interval``.

        ``t_prev`` is the time before the last accepted step; by default the
        schedule remembers how many adaptations it has done.  Mutates
        ``state.x_l`` (cap resets only) and ``per_clause_alpha``.
        """
        due = math.floor(state.t / self.interval)
        if t_prev is not None:
            crossed = due > math.floor(t_prev / self.interval)
        else:
            crossed = due > self.adaptations
        if not crossed:
            return False
        self.adaptations = due
        xl = state.x_l
        med = np.sort(xl)[(xl.size - 1) // 2]
        alpha = self.per_clause_alpha
        alpha[:] = np.where(xl > med, alpha * self.up_factor, alpha * self.down_factor)
        np.maximum(alpha, self.alpha_floor, out=alpha)
        capped = xl >= xl_max
        xl[capped] = 1.0
        alpha[capped] = 1.0
        return True
