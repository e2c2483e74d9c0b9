"""3-SAT formulas, DIMACS I/O and assignment checking.

Internally a clause is three ``(var, sign)`` literals with 0-based variable
indices and signs in {+1, -1}.  DIMACS' 1-based signed integers only appear
at the parse/serialize boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class CnfError(ValueError):
    """Base class for formula construction and parsing errors."""


class DimacsSyntaxError(CnfError):
    pass


class NotThreeSat(CnfError):
    pass


class VarOutOfRange(CnfError):
    pass


class DuplicateVarInClause(CnfError):
    pass


class InvalidFormula(CnfError):
    pass


class LengthMismatch(CnfError):
    pass


class Literal(NamedTuple):
    var: int
    sign: int

    def to_dimacs(self) -> int:
        return self.sign * (self.var + 1)

    @classmethod
    def from_dimacs(cls, lit: int) -> "Literal":
        return cls(abs(lit) - 1, 1 if lit > 0 else -1)


@dataclass(frozen=True, eq=False)
class Formula:
    """An immutable 3-SAT formula.

    ``variables`` and ``signs`` are ``(m, 3)`` arrays; row ``j`` holds the
    variable indices and polarities (the nonzero entries of column ``j`` of
    the polarity matrix) of clause ``j`` in their original literal order.
    """

    num_vars: int
    variables: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        variables = np.ascontiguousarray(self.variables, dtype=np.int64)
        signs = np.ascontiguousarray(self.signs, dtype=np.int64)
        if variables.ndim != 2 or variables.shape[1] != 3 or signs.shape != variables.shape:
            raise NotThreeSat("clauses must be an (m, 3) array of literals")
        if variables.shape[0] < 1:
            raise InvalidFormula("formula needs at least one clause")
        if self.num_vars < 3:
            raise InvalidFormula(f"3-SAT needs at least 3 variables, got {self.num_vars}")
        if variables.min() < 0 or variables.max() >= self.num_vars:
            raise VarOutOfRange(f"variable index outside [0, {self.num_vars})")
        if not np.all(np.abs(signs) == 1):
            raise InvalidFormula("literal signs must be +1 or -1")
        a, b, c = variables.T
        if np.any((a == b) | (a == c) | (b == c)):
            j = int(np.flatnonzero((a == b) | (a == c) | (b == c))[0])
            raise DuplicateVarInClause(f"clause {j} repeats a variable")
        variables.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_clauses(cls, num_vars: int, clauses: Iterable[Iterable[int]]) -> "Formula":
        """Build from DIMACS-style clauses, e.g. ``[(1, -2, 3)]``."""
        rows = [tuple(c) for c in clauses]
        for j, row in enumerate(rows):
            if len(row) != 3:
                raise NotThreeSat(f"clause {j} has {len(row)} literals")
            if 0 in row:
                raise DimacsSyntaxError(f"clause {j} contains literal 0")
        if not rows:
            raise InvalidFormula("formula needs at least one clause")
        arr = np.array(rows, dtype=np.int64)
        return cls(num_vars, np.abs(arr) - 1, np.sign(arr))

    @property
    def num_clauses(self) -> int:
        return self.variables.shape[0]

    @property
    def ratio(self) -> float:
        return self.num_clauses / self.num_vars

    def clause(self, j: int) -> tuple[Literal, Literal, Literal]:
        return tuple(Literal(int(v), int(s)) for v, s in zip(self.variables[j], self.signs[j]))

    def clauses(self) -> list[tuple[Literal, Literal, Literal]]:
        return [self.clause(j) for j in range(self.num_clauses)]

    def to_dimacs_clauses(self) -> list[tuple[int, int, int]]:
        lits = self.signs * (self.variables + 1)
        return [tuple(int(x) for x in row) for row in lits]

    def polarity_matrix(self) -> np.ndarray:
        """Dense ``(n, m)`` matrix Q with entries in {-1, 0, +1}."""
        q = np.zeros((self.num_vars, self.num_clauses), dtype=np.int64)
        cols = np.repeat(np.arange(self.num_clauses), 3)
        q[self.variables.ravel(), cols] = self.signs.ravel()
        return q

    def gauged(self, gauge) -> "Formula":
        """Return the formula with every polarity q_ij replaced by gauge_i * q_ij."""
        g = np.asarray(gauge, dtype=np.int64)
        if g.shape != (self.num_vars,) or not np.all(np.abs(g) == 1):
            raise LengthMismatch("gauge must be a +/-1 vector of length num_vars")
        return Formula(self.num_vars, self.variables, self.signs * g[self.variables])

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and np.array_equal(self.variables, other.variables)
            and np.array_equal(self.signs, other.signs)
        )

    __hash__ = None

    def __repr__(self):
        return f"Formula(num_vars={self.num_vars}, num_clauses={self.num_clauses})"


def parse_dimacs(data: bytes | str) -> Formula:
    """Parse a DIMACS CNF document containing only 3-literal clauses."""
    if isinstance(data, bytes):
        data = data.decode("ascii", errors="strict")
    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(data.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            # SATLIB files end with "%\n0"
            break
        if line.startswith("p"):
            if header is not None:
                raise DimacsSyntaxError(f"line {lineno}: duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsSyntaxError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsSyntaxError(f"line {lineno}: malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsSyntaxError(f"line {lineno}: negative counts in header")
            continue
        if header is None:
            raise DimacsSyntaxError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsSyntaxError(f"line {lineno}: bad token {tok!r}") from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if abs(lit) > header[0]:
                    raise VarOutOfRange(f"line {lineno}: literal {lit} exceeds {header[0]} variables")
                current.append(lit)
    if header is None:
        raise DimacsSyntaxError("missing 'p cnf' header")
    if current:
        clauses.append(current)
    for j, c in enumerate(clauses):
        if len(c) != 3:
            raise NotThreeSat(f"clause {j + 1} has {len(c)} literals")
        if len({abs(x) for x in c}) != 3:
            raise DuplicateVarInClause(f"clause {j + 1} repeats a variable: {c}")
    if len(clauses) != header[1]:
        raise DimacsSyntaxError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Formula.from_clauses(header[0], clauses)


def serialize_dimacs(f: Formula) -> bytes:
    if not isinstance(f, Formula):
        raise InvalidFormula("expected a Formula")
    lines = [f"p cnf {f.num_vars} {f.num_clauses}"]
    lines.extend(f"{a} {b} {c} 0" for a, b, c in f.to_dimacs_clauses())
    return ("\n".join(lines) + "\n").encode("ascii")


def read_dimacs(path) -> Formula:
    with open(path, "rb") as fh:
        return parse_dimacs(fh.read())


def write_dimacs(f: Formula, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_dimacs(f))


def as_assignment(values) -> np.ndarray:
    a = np.asarray(values, dtype=np.int64)
    if a.ndim != 1 or not np.all(np.abs(a) == 1):
        raise ValueError("assignment entries must be +1 (TRUE) or -1 (FALSE)")
    return a


def clause_satisfied(f: Formula, a) -> np.ndarray:
    """Boolean vector: which clauses have at least one true literal under ``a``."""
    a = np.asarray(a)
    if a.shape != (f.num_vars,):
        raise LengthMismatch(f"assignment has length {a.shape}, formula has {f.num_vars} variables")
    return np.any(f.signs * a[f.variables] > 0, axis=1)


def verify(f: Formula, a) -> bool:
    return bool(np.all(clause_satisfied(f, as_assignment(a))))


def format_model(a) -> str:
    """DIMACS solution line ``v 1 -2 3 ... 0``."""
    return "v " + " ".join(str(int(s) * (i + 1)) for i, s in enumerate(a)) + " 0"
