"""Command-line interface.

Exit codes: 10 model found, 20 no model within budget, 0 other success,
1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import bench
from .cnf import CnfError, format_model, read_dimacs, serialize_dimacs, verify
from .dynamics import SolverParams
from .gen import CdcParams, HardnessWarning, generate_cdc, generate_uniform
from .heuristics import CompetitionSchedule
from .integrator import RunConfig, iterate_states, solve, write_trajectory_csv
from .walksat import WalkSatParams, walksat_solve

EXIT_OK, EXIT_ERROR, EXIT_SAT, EXIT_UNKNOWN = 0, 1, 10, 20

log = logging.getLogger("dmmsat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_params(path, formula) -> SolverParams:
    overrides = {}
    if path:
        with open(path) as fh:
            overrides = json.load(fh)
        SolverParams.from_dict(overrides)  # reject unknown keys early
    return SolverParams.for_formula(formula, **overrides)


def _emit(path, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _report(rec, formula) -> int:
    if rec.solved:
        if not verify(formula, rec.assignment):
            raise RuntimeError("internal error: model does not verify")
        print("s SATISFIABLE")
        print(format_model(rec.assignment))
        return EXIT_SAT
    print("s UNKNOWN")
    return EXIT_UNKNOWN


def cmd_solve(args) -> int:
    f = read_dimacs(args.file)
    params = _load_params(args.params_file, f)
    cfg = RunConfig(
        max_steps=args.max_steps,
        seed=args.seed,
        record_trajectory=args.trajectory is not None,
        snapshot_stride=args.stride,
    )
    schedule = CompetitionSchedule() if args.competition else None
    rec = solve(f, params, cfg, schedule=schedule)
    print(f"c steps {rec.steps} t {rec.integrated_time:.6g} mean_dt {rec.mean_dt} "
          f"max_xl {rec.max_xl_seen:.6g} wall {rec.wall_time:.3f}s")
    if args.trajectory:
        write_trajectory_csv(rec.trajectory, args.trajectory)
    if args.out:
        Path(args.out).write_text(json.dumps(rec.to_json(), indent=2) + "\n")
    return _report(rec, f)


def cmd_walksat(args) -> int:
    f = read_dimacs(args.file)
    rec = walksat_solve(f, WalkSatParams(args.noise, args.max_flips, args.seed))
    print(f"c flips {rec.steps} wall {rec.wall_time:.3f}s")
    if args.out:
        Path(args.out).write_text(json.dumps(rec.to_json(), indent=2) + "\n")
    return _report(rec, f)


def cmd_gen(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HardnessWarning)
        if args.uniform:
            f = generate_uniform(args.n, args.ratio, args.seed)
            meta = {"generator": "uniform", "n": args.n, "ratio": args.ratio, "seed": args.seed,
                    "m": f.num_clauses}
        else:
            inst = generate_cdc(CdcParams(args.n, args.ratio, args.p0, args.seed))
            f = inst.formula
            meta = inst.metadata(include_planted=not args.withhold_planted)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(args.out, serialize_dimacs(f).decode())
    if args.out:
        Path(str(args.out) + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg_dict = {}
    if args.config:
        with open(args.config) as fh:
            cfg_dict = json.load(fh)
    if args.params_file:
        with open(args.params_file) as fh:
            cfg_dict["params"] = json.load(fh)
    if args.workers is not None:
        cfg_dict["parallel_workers"] = args.workers
    if args.seed or "seed" not in cfg_dict:
        cfg_dict["seed"] = args.seed
    cfg = bench.SweepConfig.from_dict(cfg_dict)
    out = args.out or "bench-out"

    def progress(r):
        log.info("n=%s #%s solved=%s steps=%s", r["n"], r["index"], r["solved"], r["steps"])

    result = bench.run_sweep(cfg, out, progress=progress)
    print("solver,n,solved,median_steps,p10,p90")
    for s in result.sizes:
        print(f"{cfg.solver.value},{s.n},{s.solved},{s.median_steps},{s.p10},{s.p90}")
    for fit in (result.power, result.exponential):
        if fit:
            print(f"c fit {fit.model}: slope {fit.slope:.4g} +- {fit.stderr:.2g}, ssr {fit.ssr:.4g}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    f = read_dimacs(args.file)
    params = _load_params(args.params_file, f)
    cfg = RunConfig(max_steps=args.max_steps, seed=args.seed)
    prev = []
    rows = []

    def on_step(state):
        if prev:
            tr = bench.analyze_transition(f, prev[0], state)
            rows.append({
                "step": state.steps,
                "newly_satisfied": tr.newly_satisfied,
                "newly_unsatisfied": tr.newly_unsatisfied,
                "unsat": int(tr.after.unsat.size),
                "recent": int(tr.after.recent.size),
                "components": tr.after.component_sizes,
            })
        prev[:] = [state]

    final = iterate_states(f, params, cfg, on_step)
    text = "".join(json.dumps(r) + "\n" for r in rows)
    _emit(args.out, text)
    collective = [r for r in rows if r["newly_satisfied"] >= 2 and r["newly_unsatisfied"] == 0]
    print(f"c steps {final.steps}, collective events {len(collective)}, "
          f"largest {max((r['newly_satisfied'] for r in collective), default=0)}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    common.add_argument("--params-file", help="JSON object of SolverParams overrides")
    common.add_argument("--out", help="output path")

    p = _Parser(prog="dmmsat", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve a DIMACS 3-SAT file with the DMM")
    s.add_argument("file")
    s.add_argument("--max-steps", type=int, default=10**8)
    s.add_argument("--competition", action="store_true", help="per-clause alpha adaptation")
    s.add_argument("--trajectory", help="write (step, t, dt, num_unsat, max_xl) CSV here")
    s.add_argument("--stride", type=int, default=100, help="trajectory snapshot stride")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("walksat", parents=[common], help="solve with the WalkSAT baseline")
    w.add_argument("file")
    w.add_argument("--noise", type=float, default=0.5)
    w.add_argument("--max-flips", type=int, default=10**7)
    w.set_defaults(func=cmd_walksat)

    g = sub.add_parser("gen", parents=[common], help="generate a CDC planted or uniform instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--ratio", type=float, default=4.3)
    g.add_argument("--p0", type=float, default=0.08)
    g.add_argument("--uniform", action="store_true", help="random 3-SAT without a planted solution")
    g.add_argument("--withhold-planted", action="store_true", help="omit the planted assignment from the sidecar")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", parents=[common], help="run a scaling sweep")
    b.add_argument("--config", help="JSON SweepConfig")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("analyze", parents=[common], help="per-step unsat-graph analysis of a run (JSONL)")
    a.add_argument("file")
    a.add_argument("--max-steps", type=int, default=10**5)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"dmmsat: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, CnfError, ValueError) as exc:
        print(f"dmmsat: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
