"""Time integration of the oscillator dynamics and single-trial runs.

Variable phases descend the Lagrange function while Lagrange phases ascend
it. Integration uses a three-evaluation predictor/corrector pair: Heun's
method predicts, Simpson's rule corrects, and the RMS gap between them is the
local error estimate driving the optional adaptive step.
"""
from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from . import _kernels
from .clause_energy import TERM_COEFFS
from .cnf import Instance, evaluate_assignment, spins_from_phases
from .lagrange import (
    KAPPA_THRESHOLD,
    NonFiniteState,
    PhaseState,
    SystemConfig,
    cost_kappa,
    lagrange_gradients,
    lagrange_value,
    onn_gradient,
    shil_gradient,
)

Mode = Literal["lagonn", "onn_only"]
MODES = ("lagonn", "onn_only")

DT_MIN = 1e-6
DT_MAX = 1.0


class InvalidStateCount(ValueError):
    pass


@dataclass(frozen=True)
class FixedStep:
    dt: float = 0.15

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class AdaptiveStep:
    """Error-controlled stepping; ``eps`` is the tolerated phase error per unit time (rad)."""

    eps: float
    dt0: float = 0.01

    def __post_init__(self):
        if not (self.eps > 0 and self.dt0 > 0):
            raise ValueError("eps and dt0 must be positive")


DtPolicy = FixedStep | AdaptiveStep


@dataclass
class StepOutcome:
    state: PhaseState
    dt_next: float
    local_error: float
    accepted: bool = True


@dataclass
class TrialResult:
    """Outcome of one solver run.

    ``stop_time`` is in oscillation cycles for the oscillator solvers and in
    attempted flips for the discrete baselines. ``first_hit`` is when a
    satisfying assignment was first seen (None if never); TTS accounting uses it.
    """

    solved: bool
    stop_time: float
    final_cost: float
    steps: int
    seed: int = 0
    first_hit: float | None = None
    final_unsat: int | None = None
    min_cost: float | None = None
    status: str = ""
    final_state: PhaseState | None = None
    assignment: np.ndarray | None = None
    restarts: int | None = None

    def solved_within(self, budget: float) -> bool:
        return self.first_hit is not None and self.first_hit <= budget + 1e-9


def derivative(inst: Instance, state: PhaseState, config: SystemConfig, mode: Mode = "lagonn"):
    """Phase velocities (dphi_x, dphi_lambda) at ``state``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    state.check(inst)
    if mode == "onn_only":
        dx = -(onn_gradient(inst, state) + shil_gradient(state, state.t, config)) / config.tau
        return dx, np.zeros(inst.num_clauses)
    grad_x, grad_l = lagrange_gradients(inst, state)
    dx = -(grad_x + shil_gradient(state, state.t, config)) / config.tau
    if state.t >= config.lagrange_freeze_time:
        return dx, np.zeros(inst.num_clauses)
    return dx, grad_l / config.tau_lambda


def fehlberg_update(f: Callable[[np.ndarray, float], np.ndarray], y: np.ndarray, t: float, dt: float):
    """Generic predictor/corrector step for ``dy/dt = f(y, t)``.

    Returns ``(y_corrected, y_predicted, local_error)``.
    """
    y = np.asarray(y, dtype=np.float64)
    f1 = f(y, t)
    f2 = f(y + dt * f1, t + dt)
    f3 = f(y + dt * (f1 + f2) / 4.0, t + 0.5 * dt)
    y_pred = y + dt * (f1 + f2) / 2.0
    y_corr = y + dt * (f1 + f2 + 4.0 * f3) / 6.0
    err = math.sqrt(float(np.dot(y_pred - y_corr, y_pred - y_corr)) / y.size)
    return y_corr, y_pred, err


def adapt_step(dt: float, e_r: float, epsilon: float) -> tuple[float, bool]:
    """Next step size and acceptance from the local error.

    ``gamma = sqrt(dt * epsilon / e_r)``; the step is accepted when gamma >= 1
    and the next step is ``0.9 * dt * gamma`` clamped to [1e-6, 1]. A zero
    error estimate accepts and at most doubles the step.
    """
    if not (epsilon > 0 and dt > 0 and e_r >= 0):
        raise ValueError("need epsilon > 0, dt > 0, e_r >= 0")
    if e_r == 0.0:
        return min(2.0 * dt, DT_MAX), True
    gamma = math.sqrt(dt * epsilon / e_r)
    return min(max(0.9 * dt * gamma, DT_MIN), DT_MAX), gamma >= 1.0


def _vector_field(inst: Instance, config: SystemConfig, mode: Mode):
    n = inst.num_vars

    def f(y, t):
        dx, dl = derivative(inst, PhaseState.from_vector(y, n, t), config, mode)
        return np.concatenate([dx, dl])

    return f


def fehlberg_step(inst: Instance, state: PhaseState, dt: float, config: SystemConfig,
                  mode: Mode = "lagonn", epsilon: float | None = None) -> StepOutcome:
    """Advance one step of size ``dt``.

    With ``epsilon`` set, the outcome also carries the adaptive verdict; a
    rejected step returns the unchanged state.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    state.check(inst)
    y = state.as_vector()
    y_new, _, err = fehlberg_update(_vector_field(inst, config, mode), y, state.t, dt)
    if not np.all(np.isfinite(y_new)):
        raise NonFiniteState(f"non-finite phases after step at t={state.t}")
    if epsilon is None:
        return StepOutcome(PhaseState.from_vector(y_new, inst.num_vars, state.t + dt), dt, err)
    dt_next, accept = adapt_step(dt, err, epsilon)
    if not accept:
        return StepOutcome(state, dt_next, err, accepted=False)
    return StepOutcome(PhaseState.from_vector(y_new, inst.num_vars, state.t + dt), dt_next, err)


def quantize_phases(state: PhaseState, n_states: int) -> PhaseState:
    """Snap every phase to the nearest of ``n_states`` equally spaced angles in [0, 2 pi)."""
    if n_states < 2:
        raise InvalidStateCount(f"need at least 2 phase states, got {n_states}")
    step = 2 * math.pi / n_states

    def snap(a):
        return (np.rint(np.asarray(a) / step) % n_states) * step

    return PhaseState(snap(state.phi_x), snap(state.phi_lambda), state.t)


def trial_seed(master_seed: int, instance_name: str, trial_index: int) -> int:
    """64-bit per-trial seed derived from the campaign seed, instance and trial index."""
    ss = np.random.SeedSequence([master_seed, zlib.crc32(instance_name.encode()), trial_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def initial_state(inst: Instance, seed: int) -> PhaseState:
    """Uniform random phases on [0, 2 pi); variable phases are drawn first."""
    rng = np.random.default_rng(seed)
    phi_x = rng.uniform(0.0, 2 * math.pi, inst.num_vars)
    phi_l = rng.uniform(0.0, 2 * math.pi, inst.num_clauses)
    return PhaseState(phi_x, phi_l, 0.0)


class CompiledSystem:
    """Flat arrays of an instance, laid out for the compiled kernels."""

    def __init__(self, inst: Instance, config: SystemConfig, mode: Mode):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        types, vars_ = inst.canonical
        self.n = inst.num_vars
        self.vars = np.ascontiguousarray(vars_)
        self.coef = np.ascontiguousarray(TERM_COEFFS[types])
        # canonical order puts the negated literals first
        self.negated = np.arange(3)[None, :] < (types - 1)[:, None]
        self.params = np.array([
            config.tau, config.tau_lambda, config.shil_k_max, config.shil_start,
            config.shil_ramp_time, config.lagrange_freeze_time,
        ])
        self.beta = config.beta
        self.onn_only = mode == "onn_only"

    def rhs(self, y: np.ndarray, t: float) -> np.ndarray:
        out = np.empty_like(y)
        _kernels.rhs(y, t, self.n, self.vars, self.coef, self.params, self.onn_only, out)
        return out

    def kappa(self, y: np.ndarray) -> float:
        return _kernels.kappa(y, self.vars, self.negated, self.beta)

    def lagrange(self, y: np.ndarray) -> float:
        return _kernels.lagrange_value(y, self.n, self.vars, self.coef)


_STATUS = {
    _kernels.SOLVED: "solved",
    _kernels.BUDGET: "budget",
    _kernels.STALLED: "stalled",
    _kernels.RUNNING: "running",
}


def run_trial(
    inst: Instance,
    config: SystemConfig = SystemConfig(),
    mode: Mode = "lagonn",
    seed: int = 0,
    t_max: float = 1000.0,
    dt_policy: DtPolicy = FixedStep(),
    n_states: int | None = None,
    stop_on_solve: bool = True,
    fixed_point_tol: float | None = None,
    initial: PhaseState | None = None,
    trace: "TraceWriter | None" = None,
    keep_state: bool = True,
) -> TrialResult:
    """Integrate one trial from a seeded uniform initialization.

    Stops as soon as the soft cost drops below 0.125 (checked after every
    accepted step), when the budget ``t_max`` is exhausted, or at a fixed
    point. Fixed-point stopping defaults to on (tolerance 1e-6 rad/cycle) for
    ``onn_only`` and off for ``lagonn``; with phase quantization a step that
    leaves the state unchanged always ends the run, since nothing can move
    afterwards.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if n_states is not None and n_states < 2:
        raise InvalidStateCount(f"need at least 2 phase states, got {n_states}")
    if fixed_point_tol is None:
        fixed_point_tol = 1e-6 if mode == "onn_only" else 0.0
    system = CompiledSystem(inst, config, mode)
    state = initial if initial is not None else initial_state(inst, seed)
    state.check(inst)
    if n_states:
        state = quantize_phases(state, n_states)
    y = state.as_vector()

    if isinstance(dt_policy, FixedStep):
        eps, dt, dt_fixed = 0.0, dt_policy.dt, dt_policy.dt
    else:
        eps, dt, dt_fixed = dt_policy.eps, dt_policy.dt0, 0.0
    t, steps, rejected_total = state.t, 0, 0
    cost = system.kappa(y)
    min_cost = cost
    chunk = 1 if trace is not None else 1 << 62
    if trace is not None:
        trace.record(t, cost, system.lagrange(y), y, inst.num_vars)
    while True:
        status, t, dt, steps, cost, min_cost, rejected = _kernels.advance(
            y, t, dt, steps, t_max, chunk, eps, n_states or 0, stop_on_solve,
            fixed_point_tol, system.n, system.vars, system.coef, system.negated,
            system.params, system.beta, system.onn_only, dt_fixed, min_cost,
        )
        rejected_total += rejected
        if trace is not None and status in (_kernels.RUNNING, _kernels.SOLVED):
            trace.record(t, cost, system.lagrange(y), y, inst.num_vars)
        if status == _kernels.NONFINITE:
            raise NonFiniteState(f"non-finite phases at t={t} (seed {seed})")
        if status != _kernels.RUNNING:
            break
    solved = cost < KAPPA_THRESHOLD
    final_unsat = evaluate_assignment(inst, spins_from_phases(y[: inst.num_vars]))
    return TrialResult(
        solved=solved,
        stop_time=t,
        final_cost=cost,
        steps=steps,
        seed=seed,
        first_hit=t if (solved and stop_on_solve) else None,
        final_unsat=final_unsat,
        min_cost=min_cost,
        status=_STATUS[status],
        final_state=PhaseState.from_vector(y, inst.num_vars, t) if keep_state else None,
    )


class TraceWriter:
    """Per-step trajectory rows: t, kappa, L_T and optionally every phase."""

    def __init__(self, with_phases: bool = False):
        self.with_phases = with_phases
        self.rows: list[list[float]] = []

    def record(self, t, cost, lagrangian, y, n):
        row = [t, cost, lagrangian]
        if self.with_phases:
            row.extend(y.tolist())
        self.rows.append(row)

    def header(self, n: int, m: int) -> list[str]:
        cols = ["t", "kappa", "lagrangian"]
        if self.with_phases:
            cols += [f"phi_x{j}" for j in range(n)] + [f"phi_lambda{k}" for k in range(m)]
        return cols

    def write_csv(self, path, n: int, m: int):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header(n, m))
            for row in self.rows:
                w.writerow([repr(float(v)) for v in row])


def run_trials(inst: Instance, seeds: Sequence[int], **kwargs) -> list[TrialResult]:
    return [run_trial(inst, seed=s, **kwargs) for s in seeds]


def verify_solution(inst: Instance, result: TrialResult) -> bool:
    """True when the rounded final phases satisfy every clause."""
    if result.final_state is None:
        raise ValueError("trial was run without keep_state")
    return evaluate_assignment(inst, spins_from_phases(result.final_state.phi_x)) == 0


__all__ = [
    "AdaptiveStep",
    "CompiledSystem",
    "FixedStep",
    "NonFiniteState",
    "StepOutcome",
    "TraceWriter",
    "TrialResult",
    "adapt_step",
    "cost_kappa",
    "derivative",
    "fehlberg_step",
    "fehlberg_update",
    "initial_state",
    "lagrange_value",
    "quantize_phases",
    "run_trial",
    "run_trials",
    "trial_seed",
    "verify_solution",
]
