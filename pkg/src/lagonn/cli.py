"""Command-line entry point: ``lagonn <command> ...``.

Every command writes CSV (and usually a JSON summary) next to a run manifest
``<out>.manifest.json`` holding the exact argument list, the seed, the
configuration, package versions and SHA-256 digests of all outputs.
``lagonn replay <manifest>`` reruns the command into a scratch directory and
checks that every output is byte-identical.

Exit codes: 0 success, 10 nothing solved, 2 usage or input error, 1 internal
error or replay mismatch.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numba
import numpy as np

from . import __version__
from .baselines import SasatConfig, WalksatConfig, sasat_run
from .bench import (
    CSV_COLUMNS,
    Campaign,
    Ladder,
    OscillatorSolver,
    SasatSolver,
    WalksatSolver,
    default_jobs,
    run_campaign,
    write_json,
)
from .cnf import CnfError, read_dimacs, serialize_dimacs
from .copy_demo import run_copy_demo
from .instances import bundled_names, bundled_path, generate_satisfiable, generate_uniform_3sat, witness_comment
from .integrator import AdaptiveStep, FixedStep, TraceWriter, run_trial, trial_seed
from .lagrange import SystemConfig

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_UNSOLVED = 10

OUTPUT_FLAGS = ("--out", "--trace", "--cost-trace")
DISCRETIZE_GRID = "16,32,64,128,256,512,1024,2048,4096,8192"


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def resolve_instances(args) -> list:
    """Instances from file/directory arguments, bundled names and ``--bundled N``."""
    paths: list[Path] = []
    for token in args.instances:
        p = Path(token)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.cnf")))
        elif p.exists():
            paths.append(p)
        else:
            try:
                paths.append(bundled_path(token))
            except FileNotFoundError:
                raise InputError(f"no such file or bundled instance: {token}") from None
    for n in getattr(args, "bundled", None) or []:
        names = bundled_names(n)
        if not names:
            raise InputError(f"no bundled instances with N={n}")
        paths.extend(bundled_path(name) for name in names)
    if getattr(args, "first", None):
        paths = paths[: args.first]
    if not paths:
        raise InputError("no instances given")
    return [read_dimacs(p) for p in paths]


def system_config(args) -> SystemConfig:
    return SystemConfig(
        tau=args.tau,
        tau_lambda=args.tau_lambda,
        beta=args.beta,
        shil_k_max=args.shil_kmax,
        shil_ramp_time=args.shil_ramp,
        shil_start=args.shil_start,
        lagrange_freeze_time=math.inf if args.freeze_at is None else args.freeze_at,
    )


def dt_policy(args):
    if args.adaptive_eps is not None:
        return AdaptiveStep(args.adaptive_eps, dt0=args.dt)
    return FixedStep(args.dt)


def oscillator_solver(args, **overrides) -> OscillatorSolver:
    kw = dict(config=system_config(args), mode="onn_only" if args.mode == "onn" else "lagonn",
              dt_policy=dt_policy(args), n_states=args.nstates)
    kw.update(overrides)
    return OscillatorSolver(**kw)


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def campaign_rows(c: Campaign, prefix: list | None = None) -> list[list]:
    prefix = prefix or []
    return [prefix + [r.instance_name, r.solver, r.num_vars, r.num_clauses, float(r.t_max),
                      r.trials, r.successes, r.p_s, r.tts, r.unstable, r.errors] for r in c.rows]


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_manifest(out: Path, argv: list[str], args, config: dict, outputs: list[Path]) -> Path:
    manifest = {
        "argv": argv,
        "command": args.command,
        "master_seed": getattr(args, "seed", None),
        "config": _jsonable(config),
        "versions": {
            "lagonn": __version__,
            "numpy": np.__version__,
            "numba": numba.__version__,
            "python": platform.python_version(),
        },
        "outputs": {p.name: sha256(p) for p in outputs},
    }
    path = out.with_name(out.name + ".manifest.json")
    write_json(manifest, path)
    return path


def out_prefix(args) -> Path:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def suffixed(out: Path, suffix: str) -> Path:
    return out.with_name(out.name + suffix)


# ---------------------------------------------------------------- commands

def cmd_solve(args, argv):
    (inst,) = resolve_instances(args)
    solver = oscillator_solver(args)
    out = out_prefix(args)
    rows = []
    any_solved = False
    seeds = [trial_seed(args.seed, inst.name, i) for i in range(args.trials)]
    results = _map_trials(solver, inst, seeds, args.tmax, args.jobs)
    for i, (seed, r) in enumerate(zip(seeds, results)):
        any_solved |= r.solved
        print(f"trial {i:3d} solved={int(r.solved)} stop_time={r.stop_time:.4g} "
              f"final_cost={r.final_cost:.4g} unsat={r.final_unsat} status={r.status}")
        rows.append([i, seed, int(r.solved), r.status, float(r.stop_time), float(r.final_cost),
                     r.final_unsat, float(r.min_cost), r.steps])
    outputs = [suffixed(out, ".csv")]
    write_table(outputs[0], ["trial", "seed", "solved", "status", "stop_time", "final_cost",
                             "final_unsat", "min_cost", "steps"], rows)
    if args.trace:
        tw = TraceWriter(with_phases=args.trace_phases)
        run_trial(inst, solver.config, solver.mode, seeds[0], args.tmax, solver.dt_policy,
                  solver.n_states, trace=tw, keep_state=False)
        tw.write_csv(args.trace, inst.num_vars, inst.num_clauses)
        outputs.append(Path(args.trace))
    solved = sum(r[2] for r in rows)
    print(f"{inst.name}: {solved}/{args.trials} trials solved")
    write_manifest(out, argv, args, {"system": asdict(solver.config), "mode": solver.mode,
                                     "dt_policy": repr(solver.dt_policy), "n_states": solver.n_states,
                                     "t_max": args.tmax, "trials": args.trials}, outputs)
    return EXIT_OK if any_solved else EXIT_UNSOLVED


def _run_one(task):
    solver, inst, seed, budget = task
    return solver.run(inst, seed, budget)


def _map_trials(solver, inst, seeds, budget, jobs):
    tasks = [(solver, inst, s, budget) for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_run_one(t) for t in tasks]


def _ladder(args, start, cap):
    return Ladder(args.tmax_start or start, args.tmax_cap or cap, args.tmax_factor)


def _emit_campaign(args, argv, campaigns: list[tuple[list, Campaign]], prefix_cols: list[str],
                   config: dict, extra_summary: dict | None = None):
    out = out_prefix(args)
    rows = []
    for prefix, c in campaigns:
        rows.extend(campaign_rows(c, prefix))
        for r in c.rows:
            print(" ".join(f"{v}" for v in prefix) + (" " if prefix else "")
                  + f"{r.instance_name} t_max={r.t_max:g} p_s={r.p_s:.3f} tts={r.tts:.4g}")
    csv_path = suffixed(out, ".csv")
    write_table(csv_path, prefix_cols + CSV_COLUMNS, rows)
    summary = {"campaigns": [
        {"key": prefix, "median_tts": c.median_tts(), **c.summary()} for prefix, c in campaigns
    ]}
    if extra_summary:
        summary.update(extra_summary)
    json_path = suffixed(out, ".json")
    write_json(_jsonable(summary), json_path)
    write_manifest(out, argv, args, config, [csv_path, json_path])
    any_success = any(r.successes > 0 for _, c in campaigns for r in c.rows)
    return EXIT_OK if any_success else EXIT_UNSOLVED


def cmd_bench(args, argv):
    insts = resolve_instances(args)
    if args.solver in ("lagonn", "onn"):
        args.mode = args.solver
        solver = oscillator_solver(args)
        ladder = _ladder(args, 1.0, 1000.0)
        config = {"system": asdict(solver.config), "mode": solver.mode,
                  "dt_policy": repr(solver.dt_policy), "n_states": solver.n_states}
    elif args.solver == "sasat":
        solver = SasatSolver(sasat_config(args))
        ladder = _ladder(args, 100.0, 1e7)
        config = asdict(solver.config)
    else:
        solver = WalksatSolver(WalksatConfig(noise_p=args.noise))
        ladder = _ladder(args, 10.0, 1e6)
        config = asdict(solver.config)
    c = run_campaign(insts, solver, args.trials, ladder, args.seed, args.jobs)
    config.update(solver=args.solver, ladder=ladder.rungs, trials=args.trials)
    print(f"median TTS {c.median_tts():.4g} {solver.units}")
    return _emit_campaign(args, argv, [([], c)], [], config)


def sasat_config(args) -> SasatConfig:
    return SasatConfig(max_trials=args.max_trials, max_temp=args.max_temp,
                       min_temp=args.min_temp, decay_scale=args.decay_scale)


def cmd_anneal(args, argv):
    insts = resolve_instances(args)
    cfg = sasat_config(args)
    if args.cost_trace:
        inst = insts[0]
        init = np.ones(inst.num_vars, dtype=np.int64) if args.all_true_init else None
        _, tr = sasat_run(inst, cfg, trial_seed(args.seed, inst.name, 0), budget=args.trace_steps,
                          init=init, record=True)
        rows = [[0, tr.initial_cost if tr.initial_cost is not None else "", ""]]
        rows += [[k + 1, int(c), float(t)] for k, (c, t) in enumerate(zip(tr.cost, tr.temperature))]
        write_table(Path(args.cost_trace), ["step", "cost", "temperature"], rows)
        if tr.initial_cost is not None and len(tr.cost) >= inst.num_vars:
            print(f"first sweep: {tr.initial_cost} -> {tr.cost[inst.num_vars - 1]} unsatisfied clauses")
    ladder = _ladder(args, 100.0, 1e7)
    c = run_campaign(insts, SasatSolver(cfg), args.trials, ladder, args.seed, args.jobs)
    print(f"median TTS {c.median_tts():.4g} steps")
    status = _emit_campaign(args, argv, [([], c)], [],
                            {**asdict(cfg), "ladder": ladder.rungs, "trials": args.trials})
    if args.cost_trace:
        _append_output(args, Path(args.cost_trace))
    return status


def _append_output(args, path: Path):
    mpath = suffixed(Path(args.out), ".manifest.json")
    manifest = json.loads(mpath.read_text())
    manifest["outputs"][path.name] = sha256(path)
    write_json(manifest, mpath)


def cmd_walksat(args, argv):
    insts = resolve_instances(args)
    cfg = WalksatConfig(noise_p=args.noise)
    ladder = _ladder(args, 10.0, 1e6)
    c = run_campaign(insts, WalksatSolver(cfg), args.trials, ladder, args.seed, args.jobs)
    print(f"median TTS {c.median_tts():.4g} flips")
    return _emit_campaign(args, argv, [([], c)], [],
                          {**asdict(cfg), "ladder": ladder.rungs, "trials": args.trials})


def _parse_grid(text: str, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad grid {text!r}") from None


def cmd_sweep_tau(args, argv):
    insts = resolve_instances(args)
    grid = _parse_grid(args.grid, float)
    ladder = _ladder(args, 1.0, 1000.0)
    campaigns = []
    for tl in grid:
        args.tau_lambda = tl
        c = run_campaign(insts, oscillator_solver(args), args.trials, ladder, args.seed, args.jobs)
        campaigns.append(([tl], c))
    medians = {repr(k[0]): c.median_tts() for k, c in campaigns}
    best = min(campaigns, key=lambda kc: kc[1].median_tts())[0][0]
    for k, c in campaigns:
        print(f"tau_lambda={k[0]:g} median TTS {c.median_tts():.4g}")
    print(f"best tau_lambda {best:g}")
    return _emit_campaign(args, argv, campaigns, ["tau_lambda"],
                          {"grid": grid, "ladder": ladder.rungs, "trials": args.trials,
                           "dt_policy": repr(dt_policy(args))},
                          {"median_tts": medians, "best_tau_lambda": best})


def cmd_discretize(args, argv):
    insts = resolve_instances(args)
    grid = [0] + _parse_grid(args.grid, int)
    ladder = _ladder(args, 1.0, 1000.0)
    campaigns = []
    for ns in grid:
        solver = oscillator_solver(args, n_states=ns or None)
        c = run_campaign(insts, solver, args.trials, ladder, args.seed, args.jobs)
        campaigns.append(([ns], c))
        label = "continuous" if ns == 0 else f"n_states={ns}"
        print(f"{label} median TTS {c.median_tts():.4g} unstable={sum(r.unstable for r in c.rows)}")
    medians = {str(k[0]): c.median_tts() for k, c in campaigns}
    return _emit_campaign(args, argv, campaigns, ["n_states"],
                          {"grid": grid, "ladder": ladder.rungs, "trials": args.trials,
                           "dt_policy": repr(dt_policy(args))},
                          {"median_tts": medians, "continuous_key": "0"})


def cmd_copy_demo(args, argv):
    out = out_prefix(args)
    rows = []
    passed = 0
    for k in range(args.seeds):
        seed = args.seed + k
        tr = run_copy_demo(args.mode, args.strength, seed=seed, t_max=args.tmax, dt=args.dt)
        r = tr.final_residuals
        ok = bool(np.all(r < args.tol))
        passed += ok
        rows.append([seed, float(r[0]), float(r[1]), int(ok)])
        print(f"seed {seed}: residuals {r[0]:.3g} {r[1]:.3g}")
        if k == 0 and args.trace:
            tr.write_csv(args.trace)
    print(f"{args.mode}({args.strength:g}): {passed}/{args.seeds} runs with residuals < {args.tol:g}")
    csv_path = suffixed(out, ".csv")
    write_table(csv_path, ["seed", "residual_0_1", "residual_2_3", "below_tol"], rows)
    outputs = [csv_path] + ([Path(args.trace)] if args.trace else [])
    write_manifest(out, argv, args, {"mode": args.mode, "strength": args.strength, "t_max": args.tmax,
                                     "dt": args.dt, "seeds": args.seeds, "tol": args.tol}, outputs)
    return EXIT_OK


def cmd_gen(args, argv):
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    name = out.stem
    if args.certify:
        inst, witness, _ = generate_satisfiable(args.vars, args.clauses, args.seed, name)
        comments = [f"{name}: uniform random 3-SAT, seed {args.seed}", witness_comment(witness)]
    else:
        inst = generate_uniform_3sat(args.vars, args.clauses, args.seed, name)
        comments = [f"{name}: uniform random 3-SAT, seed {args.seed}"]
    out.write_text(serialize_dimacs(inst, comments))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_replay(args, argv):
    mpath = Path(args.manifest)
    try:
        manifest = json.loads(mpath.read_text())
        old_argv = list(manifest["argv"])
        expected = manifest["outputs"]
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"unreadable manifest {mpath}: {exc}") from None
    with tempfile.TemporaryDirectory() as tmp:
        new_argv = list(old_argv)
        for i, tok in enumerate(new_argv[:-1]):
            if tok in OUTPUT_FLAGS:
                new_argv[i + 1] = str(Path(tmp) / Path(new_argv[i + 1]).name)
        status = main(new_argv)
        mismatched = []
        for name, digest in expected.items():
            if name.endswith(".manifest.json"):
                continue
            p = Path(tmp) / name
            if not p.exists() or sha256(p) != digest:
                mismatched.append(name)
    if mismatched:
        print("replay mismatch: " + ", ".join(mismatched), file=sys.stderr)
        return EXIT_INTERNAL
    print(f"replay reproduced {len(expected)} output(s) byte-for-byte (exit {status})")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_instances(p, single=False):
    if single:
        p.add_argument("instances", nargs=1, metavar="CNF", help="DIMACS file or bundled instance name")
    else:
        p.add_argument("instances", nargs="*", metavar="CNF",
                       help="DIMACS files, directories or bundled instance names")
        p.add_argument("--bundled", type=int, action="append", metavar="N",
                       help="add every bundled instance with N variables")
        p.add_argument("--first", type=int, help="keep only the first K instances")


def _add_common(p, out_default):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes")
    p.add_argument("--out", default=out_default, help="output path prefix")


def _add_oscillator(p):
    p.add_argument("--mode", choices=("lagonn", "onn"), default="lagonn")
    p.add_argument("--dt", type=float, default=0.15, help="fixed step, or initial step when adaptive")
    p.add_argument("--adaptive-eps", type=float, help="enable error-controlled stepping")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--tau-lambda", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=20.0)
    p.add_argument("--shil-kmax", type=float, default=0.0)
    p.add_argument("--shil-ramp", type=float, default=0.0)
    p.add_argument("--shil-start", type=float, default=0.0)
    p.add_argument("--freeze-at", type=float, help="freeze Lagrange phases from this time on")
    p.add_argument("--nstates", type=int, help="quantize phases to this many levels")


def _add_ladder(p):
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tmax-start", type=float, help="first budget of the t_max ladder")
    p.add_argument("--tmax-cap", type=float, help="largest budget of the t_max ladder")
    p.add_argument("--tmax-factor", type=float, default=4.0)


def _add_sasat(p):
    p.add_argument("--max-trials", type=int, default=1_000_000)
    p.add_argument("--max-temp", type=float, default=1.0)
    p.add_argument("--min-temp", type=float, default=0.01)
    p.add_argument("--decay-scale", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagonn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run seeded trials on one instance")
    _add_instances(p, single=True)
    _add_common(p, "solve")
    _add_oscillator(p)
    p.add_argument("--tmax", type=float, default=1000.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--trace", help="write the trajectory of trial 0 to this CSV")
    p.add_argument("--trace-phases", action="store_true", help="include every phase in the trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="TTS campaign for any solver")
    _add_instances(p)
    _add_common(p, "bench")
    _add_oscillator(p)
    _add_ladder(p)
    _add_sasat(p)
    p.add_argument("--solver", choices=("lagonn", "onn", "sasat", "walksat"), default="lagonn")
    p.add_argument("--noise", type=float, default=0.5)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("anneal", help="SASAT campaign")
    _add_instances(p)
    _add_common(p, "anneal")
    _add_ladder(p)
    _add_sasat(p)
    p.add_argument("--cost-trace", help="write step, cost, temperature of one run on the first instance")
    p.add_argument("--trace-steps", type=int, default=1000)
    p.add_argument("--all-true-init", action="store_true", help="start the traced run from all-TRUE")
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("walksat", help="WalkSAT campaign")
    _add_instances(p)
    _add_common(p, "walksat")
    _add_ladder(p)
    p.add_argument("--noise", type=float, default=0.5)
    p.set_defaults(func=cmd_walksat)

    p = sub.add_parser("sweep-tau", help="TTS versus Lagrange time constant")
    _add_instances(p)
    _add_common(p, "sweep_tau")
    _add_oscillator(p)
    _add_ladder(p)
    p.add_argument("--grid", default="0.1,0.25,1,4,10")
    p.set_defaults(func=cmd_sweep_tau)

    p = sub.add_parser("discretize", help="TTS versus number of phase levels")
    _add_instances(p)
    _add_common(p, "discretize")
    _add_oscillator(p)
    _add_ladder(p)
    p.add_argument("--grid", default=DISCRETIZE_GRID)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("copy-demo", help="phase copying with penalty or Lagrange coupling")
    p.add_argument("--mode", choices=("penalty", "lagrange"), default="lagrange")
    p.add_argument("--strength", type=float, default=1.0, help="J_c (penalty) or Lagrange coupling")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--tmax", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--trace", help="write the trajectory of the first seed to this CSV")
    p.add_argument("--out", default="copy_demo")
    p.set_defaults(func=cmd_copy_demo)

    p = sub.add_parser("gen", help="generate a uniform random 3-SAT instance")
    p.add_argument("--vars", type=int, default=20)
    p.add_argument("--clauses", type=int, default=91)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--certify", action="store_true", help="redraw until WalkSAT finds a witness")
    p.add_argument("--out", required=True, help="output .cnf path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("replay", help="rerun a manifest and compare outputs byte-for-byte")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def _canonical_argv(parser, argv: list[str], args) -> list[str]:
    """argv with the output prefix made explicit, so replays can redirect it."""
    if hasattr(args, "out") and "--out" not in argv and args.command != "gen":
        return argv + ["--out", args.out]
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, _canonical_argv(parser, argv, args))
    except (InputError, CnfError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
