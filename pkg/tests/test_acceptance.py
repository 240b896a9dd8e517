"""Acceptance criteria, one test per criterion.

Each criterion function returns ``(passed, detail)``. The tests record a
one-line verdict that is printed in the pytest summary; running this file as a
script prints the same lines without pytest.

Step sizes: benchmark criteria (4, 5, 10, 11) use the production fixed step
0.15. Criteria about properties of the continuous flow (6, 12) use 0.05, where
the stepper tracks the flow closely.
"""
from __future__ import annotations

import itertools
import math
import sys
from functools import lru_cache

import numpy as np
import pytest

from lagonn.baselines import sasat_run
from lagonn.bench import (
    Ladder,
    OscillatorSolver,
    SasatSolver,
    WalksatSolver,
    clamp_probability,
    run_campaign,
    select_rung,
    tts,
)
from lagonn.clause_energy import binary_phases, clause_hamiltonian, clause_z
from lagonn.cnf import Clause, Instance, evaluate_assignment
from lagonn.copy_demo import (
    DEMO_PAIRS,
    CopyConstraint,
    copy_lagrange_gradient,
    copy_lagrange_value,
    demo_graph,
    run_copy_demo,
)
from lagonn.instances import bundled_names, load_bundled
from lagonn.integrator import (
    FixedStep,
    TraceWriter,
    adapt_step,
    fehlberg_update,
    run_trial,
    trial_seed,
    verify_solution,
)
from lagonn.lagrange import (
    PhaseState,
    SystemConfig,
    lagrange_gradients,
    lagrange_value,
    onn_gradient,
    saddle_rates,
    shil_gradient,
    shil_potential,
    z_values,
)

BENCH_DT = FixedStep(0.15)
FLOW_DT = FixedStep(0.05)
TRIALS = 100
OSC_LADDER = Ladder(1.0, 1000.0)
U20 = [f"u20-{k:02d}" for k in range(1, 11)]


def _u20(count=10):
    return [load_bundled(n) for n in U20[:count]]


def _fd(fn, x, h=1e-5):
    out = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        out[k] = (fn(x + e) - fn(x - e)) / (2 * h)
    return out


def _relerr(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def crit_1():
    worst = 0.0
    consistent = True
    for t, spins in itertools.product((1, 2, 3, 4), itertools.product((1, -1), repeat=3)):
        h = clause_hamiltonian(t, spins)
        z = clause_z(t, binary_phases(spins))
        worst = max(worst, abs(z - h))
        # canonical type t negates its first t-1 literals
        lits = [(-1 if k < t - 1 else 1) * (k + 1) for k in range(3)]
        truth = evaluate_assignment(Instance(3, (Clause.of(*lits),)), np.array(spins)) == 0
        consistent &= h in (0, 8) and (h == 0) == truth
    return worst < 1e-12 and consistent, f"max |Z-H|={worst:.1e}, H in {{0,8}} and H=0 iff TRUE: {consistent}"


def crit_2():
    inst = load_bundled("u20-01")
    n, m = inst.num_vars, inst.num_clauses
    rng = np.random.default_rng(2)
    cfg = SystemConfig(shil_k_max=0.7)
    graph = demo_graph()
    cons = [CopyConstraint(p, 1.0) for p in DEMO_PAIRS]
    worst = {"lagrange_x": 0.0, "lagrange_lambda": 0.0, "onn": 0.0, "shil": 0.0,
             "copy_phi": 0.0, "copy_lambda": 0.0}
    for _ in range(100):
        px = rng.uniform(0, 2 * np.pi, n)
        pl = rng.uniform(0, 2 * np.pi, m)
        gx, gl = lagrange_gradients(inst, PhaseState(px, pl))
        worst["lagrange_x"] = max(worst["lagrange_x"], _relerr(
            gx, _fd(lambda v: lagrange_value(inst, PhaseState(v, pl)), px)))
        worst["lagrange_lambda"] = max(worst["lagrange_lambda"], _relerr(
            gl, _fd(lambda v: lagrange_value(inst, PhaseState(px, v)), pl)))
        worst["onn"] = max(worst["onn"], _relerr(
            onn_gradient(inst, PhaseState(px, pl)), _fd(lambda v: float(np.sum(z_values(inst, v).real)), px)))
        worst["shil"] = max(worst["shil"], _relerr(
            shil_gradient(PhaseState(px, pl), 1.0, cfg), _fd(lambda v: shil_potential(v, 1.0, cfg), px)))
        cphi = rng.uniform(0, 2 * np.pi, 6)
        clam = rng.uniform(0, 2 * np.pi, 2)
        g_phi, g_lam = copy_lagrange_gradient(graph, cons, cphi, clam)
        worst["copy_phi"] = max(worst["copy_phi"], _relerr(
            g_phi, _fd(lambda v: copy_lagrange_value(graph, cons, v, clam), cphi)))
        worst["copy_lambda"] = max(worst["copy_lambda"], _relerr(
            g_lam, _fd(lambda v: copy_lagrange_value(graph, cons, cphi, v), clam)))
    ok = all(v < 1e-6 for v in worst.values())
    return ok, "max rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


def crit_3():
    rng = np.random.default_rng(3)
    ascent_ok = descent_ok = 0
    chain_err = 0.0
    for _ in range(10_000):
        t = int(rng.integers(1, 5))
        a_chain, a_closed, d_chain, d_closed = saddle_rates(
            t, rng.uniform(0, 2 * np.pi, 3), rng.uniform(0, 2 * np.pi),
            tau=rng.uniform(0.2, 5), tau_lambda=rng.uniform(0.2, 5))
        ascent_ok += a_closed >= 0
        descent_ok += d_closed <= 0
        scale = max(1.0, abs(a_closed), abs(d_closed))
        chain_err = max(chain_err, abs(a_chain - a_closed) / scale, abs(d_chain - d_closed) / scale)
    ok = ascent_ok == descent_ok == 10_000 and chain_err < 1e-9
    return ok, f"ascent>=0 {ascent_ok}/10000, descent<=0 {descent_ok}/10000, chain-rule mismatch {chain_err:.1e}"


@lru_cache(maxsize=None)
def _u20_lagonn_runs():
    out = {}
    for inst in _u20():
        out[inst.name] = [
            run_trial(inst, SystemConfig(), "lagonn", trial_seed(0, inst.name, i), t_max=1000.0,
                      dt_policy=BENCH_DT)
            for i in range(TRIALS)
        ]
    return out


def crit_4():
    runs = _u20_lagonn_runs()
    rates = {}
    bad = 0
    for inst in _u20():
        res = runs[inst.name]
        rates[inst.name] = sum(r.solved for r in res)
        bad += sum(r.solved and not verify_solution(inst, r) for r in res)
    ok = min(rates.values()) >= 90 and bad == 0
    return ok, f"solved/100 per instance {list(rates.values())}, verifier failures {bad}"


def crit_5():
    runs = _u20_lagonn_runs()
    rungs = OSC_LADDER.rungs
    values = []
    for name in U20:
        hits = [r.first_hit for r in runs[name]]
        k = select_rung(rungs, hits)
        s = sum(h is not None and h <= rungs[k] + 1e-9 for h in hits)
        values.append(tts(rungs[k], clamp_probability(s, len(hits))))
    med = float(np.median(values))
    return 10 <= med <= 400, f"median TTS {med:.1f} cycles (reference fit {math.exp(0.056 * 20 + 2.43):.1f})"


def crit_6():
    inst = load_bundled("u20-01")
    contrast = onn_stuck = 0
    for i in range(TRIALS):
        seed = trial_seed(0, inst.name, i)
        onn = run_trial(inst, SystemConfig(), "onn_only", seed, t_max=1000.0, dt_policy=FLOW_DT)
        stuck = onn.status == "stalled" and onn.final_unsat >= 1
        onn_stuck += stuck
        if stuck:
            lag = run_trial(inst, SystemConfig(), "lagonn", seed, t_max=1000.0, dt_policy=BENCH_DT)
            contrast += lag.solved and verify_solution(inst, lag)
    return contrast >= 10, (f"{contrast}/100 seeds: onn_only stalls unsatisfied and lagonn solves "
                            f"(onn_only stalled unsatisfied on {onn_stuck})")


def crit_7():
    inst = load_bundled("u100-01")
    n = inst.num_vars
    drops = []
    for i in range(20):
        _, tr = sasat_run(inst, seed=trial_seed(0, inst.name, i), budget=n,
                          init=np.ones(n, dtype=np.int64), record=True)
        drops.append(tr.initial_cost - int(tr.cost[n - 1]))
    drop = float(np.median(drops))
    ladder = Ladder(100.0, 1e7)
    m20 = run_campaign([load_bundled(x) for x in bundled_names(20)], SasatSolver(), TRIALS, ladder).median_tts()
    m50 = run_campaign([load_bundled(x) for x in bundled_names(50)], SasatSolver(), TRIALS, ladder).median_tts()
    ok = 15 <= drop <= 45 and m50 > m20
    return ok, f"first-sweep drop median {drop:.0f} (range {min(drops)}..{max(drops)}); SASAT median TTS N=20 {m20:.0f}, N=50 {m50:.0f} steps"


@lru_cache(maxsize=None)
def _u20_sasat_tts():
    return run_campaign(_u20(), SasatSolver(), TRIALS, Ladder(100.0, 1e7)).median_tts()


def crit_8():
    walk = run_campaign(_u20(), WalksatSolver(), TRIALS, Ladder(10.0, 1e6)).median_tts()
    sa = _u20_sasat_tts()
    return walk < sa, f"median TTS WalkSAT {walk:.0f} flips vs SASAT {sa:.0f} steps"


def crit_9():
    a = np.array([[-0.3, 1.0], [-1.0, -0.3]])
    y0 = np.array([1.0, 0.5])

    def exact(dt):
        w, v = np.linalg.eig(a)
        return (v @ np.diag(np.exp(w * dt)) @ np.linalg.solve(v, y0)).real

    errs = [np.linalg.norm(fehlberg_update(lambda y, t: a @ y, y0, 0.0, dt)[0] - exact(dt))
            for dt in (0.2, 0.1, 0.05)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    order_ok = all(14 < r < 18 for r in ratios)
    # gamma = sqrt(dt * eps / e_r) by hand
    cases = [
        ((0.1, 1e-4, 1e-3), (0.09, True)),       # gamma = 1
        ((0.1, 4e-4, 1e-3), (0.045, False)),     # gamma = 0.5
        ((0.1, 1e-6, 1e-3), (0.9, True)),        # gamma = 10
        ((0.5, 1e-6, 1e-3), (1.0, True)),        # clamped to 1
        ((1e-6, 1.0, 1e-6), (1e-6, False)),      # clamped to 1e-6
        ((0.2, 0.0, 1e-3), (0.4, True)),         # zero error doubles
    ]
    gamma_ok = all(adapt_step(*args) == (pytest.approx(dt), acc) for args, (dt, acc) in cases)
    return order_ok and gamma_ok, f"error ratios {ratios[0]:.2f}, {ratios[1]:.2f}; adapt_step cases ok: {gamma_ok}"


def crit_10():
    insts = _u20(5)
    grid = [0, 16, 256, 512, 1024, 2048, 4096, 8192]
    med = {}
    for ns in grid:
        solver = OscillatorSolver(dt_policy=BENCH_DT, n_states=ns or None)
        med[ns] = run_campaign(insts, solver, TRIALS, OSC_LADDER).median_tts()
    coarse = med[16] >= 2 * med[4096]
    fine = all(0.5 <= med[ns] / med[0] <= 2 for ns in grid if ns >= 256)
    detail = ", ".join(f"{'cont' if k == 0 else k}={v:.0f}" for k, v in med.items())
    return coarse and fine, f"(a) 16 vs 4096 >=2x: {coarse}; (b) 256..8192 within 2x of continuous: {fine}; medians {detail}"


def crit_11():
    insts = _u20(5)
    grid = [0.1, 0.25, 1.0, 4.0, 10.0]
    med = {tl: run_campaign(insts, OscillatorSolver(SystemConfig(tau_lambda=tl), dt_policy=BENCH_DT),
                            TRIALS, OSC_LADDER).median_tts() for tl in grid}
    ok = all(med[1.0] <= v for v in med.values())
    return ok, "median TTS " + ", ".join(f"{k:g}={v:.0f}" for k, v in med.items())


def crit_12():
    inst = load_bundled("u20-01")
    dt = FLOW_DT.dt
    freeze = SystemConfig(lagrange_freeze_time=50.0)
    worst_rise = -math.inf
    for s in range(10):
        tr = TraceWriter()
        run_trial(inst, freeze, "lagonn", trial_seed(0, inst.name, s), t_max=150.0, dt_policy=FLOW_DT,
                  stop_on_solve=False, trace=tr)
        rows = np.array(tr.rows)
        after = rows[rows[:, 0] >= 50.0 - 1e-9, 2]
        worst_rise = max(worst_rise, float(np.max(np.diff(after))))
    freeze_ok = worst_rise <= dt * dt
    shil = SystemConfig(shil_k_max=1.0, shil_start=100.0, shil_ramp_time=100.0)
    worst_dev = 0.0
    for s in range(20):
        res = run_trial(inst, shil, "lagonn", trial_seed(0, inst.name, s), t_max=200.0, dt_policy=FLOW_DT,
                        stop_on_solve=False)
        phi = res.final_state.phi_x
        worst_dev = max(worst_dev, float(np.max(np.abs(phi - np.pi * np.round(phi / np.pi)))))
    shil_ok = worst_dev < 1e-3
    return freeze_ok and shil_ok, (f"(a) max step-to-step L_T rise after freeze {worst_rise:.1e} "
                                   f"(slack {dt * dt:.1e}); (b) max distance to k*pi {worst_dev:.1e} rad")


def crit_13():
    seeds = range(20)
    lag = [run_copy_demo("lagrange", 1.0, seed=s).final_residuals.max() for s in seeds]
    pen = [run_copy_demo("penalty", 0.5, seed=s).final_residuals.max() for s in seeds]
    lag_frac = float(np.mean(np.array(lag) < 0.01))
    pen_frac = float(np.mean(np.array(pen) > 0.05))
    ok = lag_frac >= 0.8 and pen_frac >= 0.5
    return ok, f"(a) lagrange residual<0.01 in {lag_frac:.0%} (need 80%); (b) penalty residual>0.05 in {pen_frac:.0%} (need 50%)"


def crit_14():
    import contextlib
    import io
    import os
    import tempfile

    from lagonn.cli import main

    commands = [
        ["solve", "u20-01", "--trials", "5", "--trace", "s_trace.csv", "--out", "s"],
        ["bench", "--bundled", "20", "--first", "2", "--solver", "sasat", "--trials", "5", "--out", "b"],
        ["walksat", "u20-02", "--trials", "5", "--out", "w"],
        ["anneal", "u100-01", "--trials", "2", "--tmax-cap", "20000", "--cost-trace", "a_cost.csv",
         "--all-true-init", "--out", "a"],
        ["sweep-tau", "u20-03", "--grid", "0.5,1", "--trials", "5", "--out", "t"],
        ["discretize", "u20-03", "--grid", "64", "--trials", "5", "--out", "d"],
        ["copy-demo", "--seeds", "2", "--tmax", "20", "--trace", "c_trace.csv", "--out", "c"],
    ]
    failed = []
    cwd = os.getcwd()
    with tempfile.TemporaryDirectory() as tmp:
        os.chdir(tmp)
        try:
            with contextlib.redirect_stdout(io.StringIO()):
                for cmd in commands:
                    main(cmd + ["--jobs", "1"] if cmd[0] != "copy-demo" else cmd)
                    if main(["replay", f"{cmd[-1]}.manifest.json"]) != 0:
                        failed.append(cmd[0])
        finally:
            os.chdir(cwd)
    return not failed, f"{len(commands) - len(failed)}/{len(commands)} commands replay byte-identical {failed or ''}"


CRITERIA = [crit_1, crit_2, crit_3, crit_4, crit_5, crit_6, crit_7, crit_8, crit_9, crit_10,
            crit_11, crit_12, crit_13, crit_14]


def _line(k, passed, detail):
    return f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


@pytest.mark.slow
@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1), ids=lambda k: f"criterion_{k:02d}")
def test_criterion(k):
    from conftest import ACCEPTANCE_LINES

    passed, detail = CRITERIA[k - 1]()
    line = _line(k, passed, detail)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def main() -> int:
    failures = 0
    for k, fn in enumerate(CRITERIA, 1):
        passed, detail = fn()
        failures += not passed
        print(_line(k, passed, detail), flush=True)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
