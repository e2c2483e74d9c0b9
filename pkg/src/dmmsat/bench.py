"""Ensemble sweeps, typical-case statistics, scaling fits and unsat-graph analysis."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .cnf import Formula
from .dynamics import SolverParams, SolverState, constraints
from .gen import CdcParams, generate_cdc
from .heuristics import CompetitionSchedule
from .integrator import RunConfig, solve
from .rng import derive_seed
from .walksat import WalkSatParams, walksat_solve

log = logging.getLogger(__name__)


class InsufficientPoints(ValueError):
    pass


class Solver(str, enum.Enum):
    DMM = "dmm"
    DMM_COMPETITION = "dmm-competition"
    WALKSAT = "walksat"


@dataclass
class SweepConfig:
    solver: Solver = Solver.DMM
    n_values: Sequence[int] = (100, 150, 200, 250, 300, 350, 400)
    ratio: float = 4.3
    p0: float = 0.08
    instances_per_n: int = 50
    seed: int = 0
    budget: int = 10**7
    parallel_workers: int = 1
    params: dict = field(default_factory=dict)  # SolverParams overrides
    noise: float = 0.5  # WalkSAT only

    def __post_init__(self):
        self.solver = Solver(self.solver)
        self.n_values = tuple(int(n) for n in self.n_values)
        if self.instances_per_n < 1:
            raise ValueError("instances_per_n must be >= 1")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sweep options: {sorted(unknown)}")
        return cls(**d)

    def fingerprint(self) -> str:
        """Identifies the run population; the worker count is not part of it."""
        d = asdict(self)
        d.pop("parallel_workers")
        d["solver"] = self.solver.value
        d["n_values"] = list(self.n_values)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def instance_seed(self, n: int, index: int) -> int:
        return derive_seed(self.seed, n, index)


# -- single runs -------------------------------------------------------------


def run_instance(cfg: SweepConfig, n: int, index: int) -> dict:
    """Generate instance (n, index) and run the configured solver on it."""
    seed = cfg.instance_seed(n, index)
    rec = {"key": f"{n}:{index}", "config": cfg.fingerprint(), "solver": cfg.solver.value,
           "n": n, "index": index, "instance_seed": seed}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inst = generate_cdc(CdcParams(n, cfg.ratio, cfg.p0, seed))
        f = inst.formula
        if cfg.solver is Solver.WALKSAT:
            rr = walksat_solve(f, WalkSatParams(cfg.noise, cfg.budget, seed))
        else:
            params = SolverParams.for_formula(f, **cfg.params)
            schedule = CompetitionSchedule() if cfg.solver is Solver.DMM_COMPETITION else None
            rr = solve(f, params, RunConfig(max_steps=cfg.budget, seed=seed), schedule=schedule)
        out = rr.to_json()
        out.pop("assignment", None)
        out.pop("seed", None)
        out.pop("solver", None)
        rec.update(out)
    except Exception as exc:  # recorded, never fatal for the sweep
        log.exception("run %s failed", rec["key"])
        rec.update(solved=False, steps=None, failure=f"{type(exc).__name__}: {exc}")
    return rec


def _run_task(args):
    return run_instance(*args)


# -- statistics --------------------------------------------------------------


def censored_quantile(values: Iterable[float], q: float) -> Optional[float]:
    """Linear-interpolated quantile where unsolved runs count as +inf.

    Returns None when the interpolation touches an unsolved run, i.e. when
    the quantile is not determined by the solved runs.
    """
    x = np.sort(np.asarray(list(values), dtype=float))
    if x.size == 0:
        return None
    pos = (x.size - 1) * q
    lo, hi = math.floor(pos), math.ceil(pos)
    if not np.isfinite(x[hi]):
        return None
    return float(x[lo] + (x[hi] - x[lo]) * (pos - lo))


@dataclass
class SizeSummary:
    n: int
    instances: int
    solved: int
    median_steps: Optional[float]
    p10: Optional[float]
    p90: Optional[float]
    median_t: Optional[float]
    median_max_xl: Optional[float]
    mean_dt: Optional[float]
    failures: int = 0

    @property
    def median_defined(self) -> bool:
        return self.median_steps is not None

    @property
    def solved_fraction(self) -> float:
        return self.solved / self.instances


def summarize_size(n: int, records: list[dict]) -> SizeSummary:
    steps = [r["steps"] if r["solved"] else math.inf for r in records]
    times = [r["integrated_time"] if r["solved"] else math.inf for r in records]
    solved = [r for r in records if r["solved"]]
    xl = [r["max_xl_seen"] for r in solved if r.get("max_xl_seen") is not None]
    dts = [r["mean_dt"] for r in solved if r.get("mean_dt") is not None]
    med = censored_quantile(steps, 0.5)
    return SizeSummary(
        n=n,
        instances=len(records),
        solved=len(solved),
        median_steps=med,
        p10=censored_quantile(steps, 0.1),
        p90=censored_quantile(steps, 0.9),
        median_t=censored_quantile(times, 0.5),
        median_max_xl=float(np.median(xl)) if xl and med is not None else None,
        mean_dt=float(np.median(dts)) if dts and med is not None else None,
        failures=sum(1 for r in records if r.get("failure")),
    )


@dataclass
class Fit:
    model: str
    slope: float
    stderr: float
    intercept: float
    ssr: float
    points: int


def _fit(x: np.ndarray, y: np.ndarray, model: str) -> Fit:
    if x.size < 3:
        raise InsufficientPoints(f"need at least 3 points, got {x.size}")
    if np.any(y <= 0):
        raise ValueError("medians must be positive")
    ly = np.log(y)
    res = stats.linregress(x, ly)
    resid = ly - (res.intercept + res.slope * x)
    return Fit(model, float(res.slope), float(res.stderr), float(res.intercept), float(resid @ resid), int(x.size))


def fit_power_law(points: Sequence[tuple[float, float]]) -> Fit:
    """OLS slope of log(median) against log(n): median ~ n^slope."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(p[:, 0] <= 0):
        raise ValueError("n must be positive")
    return _fit(np.log(p[:, 0]), p[:, 1], "power")


def fit_exponential(points: Sequence[tuple[float, float]]) -> Fit:
    """OLS slope of log(median) against n: median ~ exp(slope * n)."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return _fit(p[:, 0], p[:, 1], "exponential")


@dataclass
class SweepResult:
    config: SweepConfig
    sizes: list[SizeSummary]
    power: Optional[Fit] = None
    exponential: Optional[Fit] = None
    records: list[dict] = field(default_factory=list, repr=False)

    @property
    def preferred_model(self) -> Optional[str]:
        if self.power is None or self.exponential is None:
            return None
        return "power" if self.power.ssr < self.exponential.ssr else "exponential"

    def size(self, n: int) -> SizeSummary:
        return next(s for s in self.sizes if s.n == n)

    def summary_rows(self) -> list[dict]:
        return [
            {
                "solver": self.config.solver.value,
                "n": s.n,
                "ratio": self.config.ratio,
                "p0": self.config.p0,
                "solved": s.solved,
                "median_steps": s.median_steps,
                "p10": s.p10,
                "p90": s.p90,
                "median_t": s.median_t,
                "median_max_xl": s.median_max_xl,
                "mean_dt": s.mean_dt,
            }
            for s in self.sizes
        ]

    def to_json(self) -> dict:
        cfg = asdict(self.config)
        cfg["solver"] = self.config.solver.value
        cfg["n_values"] = list(self.config.n_values)
        return {
            "config": cfg,
            "sizes": [asdict(s) for s in self.sizes],
            "power": asdict(self.power) if self.power else None,
            "exponential": asdict(self.exponential) if self.exponential else None,
            "preferred_model": self.preferred_model,
        }


SUMMARY_COLUMNS = [
    "solver", "n", "ratio", "p0", "solved", "median_steps", "p10", "p90",
    "median_t", "median_max_xl", "mean_dt",
]


def write_summary_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in result.summary_rows():
            w.writerow({k: "" if v is None else v for k, v in row.items()})


def aggregate(cfg: SweepConfig, records: Iterable[dict]) -> SweepResult:
    by_n: dict[int, list[dict]] = {n: [] for n in cfg.n_values}
    for r in sorted(records, key=lambda r: (r["n"], r["index"])):
        if r["n"] in by_n:
            by_n[r["n"]].append(r)
    sizes = [summarize_size(n, rs) for n, rs in by_n.items() if rs]
    pts = [(s.n, s.median_steps) for s in sizes if s.median_defined and s.median_steps > 0]
    power = expo = None
    if len(pts) >= 3:
        power, expo = fit_power_law(pts), fit_exponential(pts)
    recs = [r for n in by_n for r in by_n[n]]
    return SweepResult(cfg, sizes, power, expo, recs)


def _load_jsonl(path: Path, fingerprint: str) -> dict[str, dict]:
    done = {}
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    r = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn last line of an interrupted sweep
                if r.get("config") == fingerprint:
                    done[r["key"]] = r
    return done


def run_sweep(cfg: SweepConfig, out_dir=None, progress=None) -> SweepResult:
    """Run (or resume) a sweep.

    With ``out_dir``, every finished run is appended to ``runs.jsonl`` and
    runs already present for the same configuration are skipped; the
    per-size table goes to ``summary.csv``.  Results are keyed by
    ``(n, index)`` and do not depend on scheduling or worker count.
    """
    jsonl = None
    done: dict[str, dict] = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jsonl = out / "runs.jsonl"
        done = _load_jsonl(jsonl, cfg.fingerprint())
    tasks = [
        (cfg, n, i)
        for n in cfg.n_values
        for i in range(cfg.instances_per_n)
        if f"{n}:{i}" not in done
    ]
    results = dict(done)

    def record(r):
        results[r["key"]] = r
        if jsonl is not None:
            with open(jsonl, "a") as fh:
                fh.write(json.dumps(r) + "\n")
        if progress is not None:
            progress(r)

    if cfg.parallel_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel_workers) as ex:
            for r in ex.map(_run_task, tasks, chunksize=1):
                record(r)
    else:
        for t in tasks:
            record(_run_task(t))

    result = aggregate(cfg, results.values())
    if out_dir is not None:
        write_summary_csv(result, Path(out_dir) / "summary.csv")
        with open(Path(out_dir) / "fits.json", "w") as fh:
            json.dump(result.to_json(), fh, indent=2)
    return result


# -- collective events -------------------------------------------------------


@dataclass
class UnsatGraphSnapshot:
    step: int
    unsat: np.ndarray
    recent: np.ndarray
    variables: np.ndarray
    component_sizes: list[int]
    component_labels: np.ndarray = field(repr=False, default=None)


@dataclass
class Transition:
    before: UnsatGraphSnapshot
    after: UnsatGraphSnapshot
    newly_satisfied: int
    newly_unsatisfied: int

    @property
    def delta(self) -> tuple[int, int]:
        return self.newly_satisfied, self.newly_unsatisfied

    @property
    def collective(self) -> bool:
        return self.newly_satisfied >= 2 and self.newly_unsatisfied == 0


def unsat_graph(f: Formula, state: SolverState) -> UnsatGraphSnapshot:
    """Factor subgraph of unsatisfied and recently unsatisfied clauses.

    A clause is unsatisfied when C_j >= 1/2 and recently unsatisfied when it
    is satisfied but still has x_s > 0.  Nodes are those clauses plus their
    variables; edges join a clause to its variables.  Component sizes count
    both kinds of node, largest first.
    """
    C = constraints(f, state.v)
    unsat_mask = C >= 0.5
    recent_mask = ~unsat_mask & (state.x_s > 0.0)
    clauses = np.flatnonzero(unsat_mask | recent_mask)
    variables = np.unique(f.variables[clauses]) if clauses.size else np.empty(0, dtype=np.int64)
    k, nv = clauses.size, variables.size
    labels = np.empty(0, dtype=np.int64)
    sizes: list[int] = []
    if k:
        col = np.searchsorted(variables, f.variables[clauses].ravel()) + k
        row = np.repeat(np.arange(k), 3)
        adj = coo_matrix((np.ones(row.size), (row, col)), shape=(k + nv, k + nv))
        _, labels = connected_components(adj, directed=False)
        sizes = sorted(np.bincount(labels).tolist(), reverse=True)
    return UnsatGraphSnapshot(
        step=state.steps,
        unsat=np.flatnonzero(unsat_mask),
        recent=np.flatnonzero(recent_mask),
        variables=variables,
        component_sizes=sizes,
        component_labels=labels,
    )


def analyze_transition(f: Formula, before: SolverState, after: SolverState) -> Transition:
    """Compare two consecutive accepted states of a run."""
    was = constraints(f, before.v) >= 0.5
    now = constraints(f, after.v) >= 0.5
    return Transition(
        before=unsat_graph(f, before),
        after=unsat_graph(f, after),
        newly_satisfied=int(np.sum(was & ~now)),
        newly_unsatisfied=int(np.sum(~was & now)),
    )
