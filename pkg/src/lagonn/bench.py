"""Time-to-solution campaigns over instance sets.

Every trial is run once at the largest budget of the ladder. Because a run is
deterministic and its steps never overshoot the budget, a trial that first
reaches a satisfying state at time t would also have succeeded in any rerun
with budget >= t, so success at each smaller rung is read off ``first_hit``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .baselines import SasatConfig, WalksatConfig, sasat_run, walksat_run
from .cnf import Instance
from .integrator import DtPolicy, FixedStep, TrialResult, run_trial, trial_seed
from .lagrange import SystemConfig


class NoTrials(ValueError):
    pass


class InsufficientPoints(ValueError):
    pass


class NonPositiveTts(ValueError):
    pass


def clamp_probability(successes: int, trials: int) -> float:
    """successes / trials, clamped to [1/(2T), 1 - 1/(2T)]."""
    if trials < 1:
        raise NoTrials("no trials")
    lo = 1.0 / (2 * trials)
    return min(max(successes / trials, lo), 1.0 - lo)


def tts(t_max: float, p_s: float, trials: int | None = None) -> float:
    """Expected time to reach a solution with 99% probability.

    With ``trials`` given, ``p_s`` is first clamped as in :func:`clamp_probability`.
    """
    if trials is not None:
        if trials < 1:
            raise NoTrials("no trials")
        lo = 1.0 / (2 * trials)
        p_s = min(max(p_s, lo), 1.0 - lo)
    if not 0.0 < p_s < 1.0:
        raise ValueError(f"p_s={p_s} must lie strictly between 0 and 1")
    return t_max * math.log(0.01) / math.log(1.0 - p_s)


def estimate_success(results: Sequence[TrialResult], budget: float | None = None) -> float:
    """Clamped success probability; with ``budget``, success means first_hit <= budget."""
    if not results:
        raise NoTrials("no trial results")
    if budget is None:
        hits = sum(r.solved for r in results)
    else:
        hits = sum(r.solved_within(budget) for r in results)
    return clamp_probability(hits, len(results))


@dataclass
class ScalingFit:
    model: str
    params: tuple[float, float]
    residual: float


def fit_exp_scaling(points: Sequence[tuple[float, float]], model: str = "exp_linear") -> ScalingFit:
    """Least-squares fit of ln(TTS) against N (exp_linear) or sqrt(N) (exp_sqrt)."""
    if model not in ("exp_linear", "exp_sqrt"):
        raise ValueError(f"unknown model {model!r}")
    if len(points) < 3:
        raise InsufficientPoints(f"need at least 3 points, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=float)
    t = np.array([p[1] for p in points], dtype=float)
    if np.any(t <= 0):
        raise NonPositiveTts("TTS values must be positive")
    x = n if model == "exp_linear" else np.sqrt(n)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, np.log(t), rcond=None)
    resid = np.log(t) - A @ coef
    return ScalingFit(model, (float(coef[0]), float(coef[1])), float(np.sqrt(np.mean(resid**2))))


def box_stats(values: Sequence[float]) -> dict[str, float]:
    """min, quartiles, max and mean (linear-interpolated percentiles)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise NoTrials("no values")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(v.max()), "mean": float(v.mean())}


@dataclass(frozen=True)
class Ladder:
    """Geometric t_max schedule ``start * factor**k`` capped at ``cap``."""

    start: float
    cap: float
    factor: float = 4.0

    def __post_init__(self):
        if not (0 < self.start <= self.cap and self.factor > 1):
            raise ValueError("need 0 < start <= cap and factor > 1")

    @property
    def rungs(self) -> list[float]:
        out = []
        t = self.start
        while t < self.cap * (1 - 1e-12):
            out.append(t)
            t *= self.factor
        out.append(self.cap)
        return out


@dataclass(frozen=True)
class OscillatorSolver:
    config: SystemConfig = SystemConfig()
    mode: str = "lagonn"
    dt_policy: DtPolicy = FixedStep()
    n_states: int | None = None
    units = "cycles"

    @property
    def label(self) -> str:
        return "onn" if self.mode == "onn_only" else "lagonn"

    def run(self, inst: Instance, seed: int, budget: float) -> TrialResult:
        return run_trial(inst, self.config, self.mode, seed, t_max=budget,
                         dt_policy=self.dt_policy, n_states=self.n_states, keep_state=False)


@dataclass(frozen=True)
class SasatSolver:
    config: SasatConfig = SasatConfig()
    units = "steps"
    label = "sasat"

    def run(self, inst: Instance, seed: int, budget: float) -> TrialResult:
        return sasat_run(inst, self.config, seed, budget=int(budget))


@dataclass(frozen=True)
class WalksatSolver:
    config: WalksatConfig = WalksatConfig()
    units = "flips"
    label = "walksat"

    def run(self, inst: Instance, seed: int, budget: float) -> TrialResult:
        return walksat_run(inst, self.config, seed, budget=int(budget))


@dataclass
class TtsEstimate:
    instance_name: str
    solver: str
    num_vars: int
    num_clauses: int
    t_max: float
    trials: int
    successes: int
    p_s: float
    tts: float
    unstable: int = 0
    errors: int = 0


CSV_COLUMNS = ["instance", "solver", "N", "M", "t_max", "trials", "successes", "p_s", "tts",
               "unstable", "errors"]


@dataclass
class Campaign:
    rows: list[TtsEstimate]
    first_hits: dict[str, list[float | None]] = field(default_factory=dict)

    def median_tts(self) -> float:
        return float(np.median([r.tts for r in self.rows]))

    def summary(self) -> dict:
        by_size: dict[int, list[float]] = {}
        for r in self.rows:
            by_size.setdefault(r.num_vars, []).append(r.tts)
        out = {"sizes": {str(n): box_stats(v) for n, v in sorted(by_size.items())}}
        if len(by_size) >= 3:
            pts = [(n, float(np.median(v))) for n, v in sorted(by_size.items())]
            out["fits"] = {m: asdict(fit_exp_scaling(pts, m)) for m in ("exp_linear", "exp_sqrt")}
        return out


def _instance_trials(args):
    solver, inst, seeds, budget = args
    hits: list[float | None] = []
    unstable = errors = 0
    for seed in seeds:
        try:
            res = solver.run(inst, seed, budget)
        except (ArithmeticError, ValueError):
            hits.append(None)
            errors += 1
            continue
        hits.append(res.first_hit)
        if res.min_cost is not None and res.min_cost >= inst.num_clauses / 2:
            unstable += 1
    return hits, unstable, errors


def select_rung(rungs: Sequence[float], hits: Sequence[float | None]) -> int:
    """Index of the first rung whose success rate exceeds 0.1, else the last rung."""
    n = len(hits)
    for k, budget in enumerate(rungs):
        s = sum(h is not None and h <= budget + 1e-9 for h in hits)
        if s / n > 0.1:
            return k
    return len(rungs) - 1


def run_campaign(instances: Sequence[Instance], solver, trials: int, ladder: Ladder,
                 master_seed: int = 0, jobs: int = 1) -> Campaign:
    """Run ``trials`` seeded trials per instance and estimate TTS on the ladder.

    Rows come back in input order and do not depend on ``jobs``.
    """
    if trials < 1:
        raise NoTrials("trials must be positive")
    tasks = [
        (solver, inst, [trial_seed(master_seed, inst.name, i) for i in range(trials)], ladder.cap)
        for inst in instances
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_instance_trials, tasks))
    else:
        outcomes = [_instance_trials(t) for t in tasks]
    rows = []
    first_hits = {}
    rungs = ladder.rungs
    for inst, (hits, unstable, errors) in zip(instances, outcomes):
        k = select_rung(rungs, hits)
        successes = sum(h is not None and h <= rungs[k] + 1e-9 for h in hits)
        p_s = clamp_probability(successes, trials)
        rows.append(TtsEstimate(inst.name, solver.label, inst.num_vars, inst.num_clauses,
                                rungs[k], trials, successes, p_s, tts(rungs[k], p_s),
                                unstable, errors))
        first_hits[inst.name] = hits
    return Campaign(rows, first_hits)


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def write_csv(rows: Sequence[TtsEstimate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.instance_name, r.solver, r.num_vars, r.num_clauses, repr(float(r.t_max)),
                        r.trials, r.successes, repr(r.p_s), repr(r.tts), r.unstable, r.errors])


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
