"""Discrete comparison solvers: SASAT simulated annealing and WalkSAT.

Both keep, for every clause, the number of currently true literals, so a
flip and its cost change cost O(variable degree). Inner loops are compiled
with numba and draw from a numpy ``Generator`` passed in from Python, so runs
are reproducible from their seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .cnf import Instance, evaluate_assignment
from .integrator import TrialResult


@dataclass(frozen=True)
class SasatConfig:
    """Annealing schedule: T = max_temp * exp(-sweep * decay_scale / N)."""

    max_trials: int = 1_000_000
    max_temp: float = 1.0
    min_temp: float = 0.01
    decay_scale: float = 0.2

    def __post_init__(self):
        if not self.max_temp > self.min_temp > 0:
            raise ValueError("need max_temp > min_temp > 0")
        if self.max_trials < 1 or self.decay_scale <= 0:
            raise ValueError("max_trials and decay_scale must be positive")


@dataclass(frozen=True)
class WalksatConfig:
    noise_p: float = 0.5
    max_flips: int = 1_000_000

    def __post_init__(self):
        if not 0.0 <= self.noise_p <= 1.0:
            raise ValueError("noise_p must lie in [0, 1]")


class _Occurrences:
    """CSR view of variable -> (clause, negated) occurrences."""

    def __init__(self, inst: Instance):
        counts = np.zeros(inst.num_vars + 1, dtype=np.int64)
        np.add.at(counts, inst.literal_vars.ravel() + 1, 1)
        self.ptr = np.cumsum(counts)
        order = np.argsort(inst.literal_vars.ravel(), kind="stable")
        self.clause = (order // 3).astype(np.int64)
        self.negated = inst.literal_negated.ravel()[order].copy()
        self.lit_vars = np.ascontiguousarray(inst.literal_vars)
        self.lit_neg = np.ascontiguousarray(inst.literal_negated)


def flip_delta(inst: Instance, spins, var_index: int) -> int:
    """Change in the number of unsatisfied clauses if ``var_index`` is flipped."""
    if not 0 <= var_index < inst.num_vars:
        raise IndexError(f"variable {var_index} outside 0..{inst.num_vars - 1}")
    spins = np.asarray(spins)
    delta = 0
    for m, negated in inst.occurrences[var_index]:
        clause = inst.clauses[m]
        others = sum(
            1 for lit in clause.lits
            if lit.var_index != var_index and lit.value(spins[lit.var_index])
        )
        if others:
            continue
        own_true = (spins[var_index] > 0) != negated
        delta += 1 if own_true else -1
    return delta


def flip_probability(delta: float, temperature: float) -> float:
    """Sigmoid acceptance 1 / (1 + exp(delta / T))."""
    x = delta / temperature
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


@njit(cache=True)
def _true_counts(spins, lit_vars, lit_neg):
    m_count = lit_vars.shape[0]
    counts = np.zeros(m_count, dtype=np.int64)
    for m in range(m_count):
        for p in range(3):
            if (spins[lit_vars[m, p]] > 0) != lit_neg[m, p]:
                counts[m] += 1
    return counts


@njit(cache=True)
def _delta(i, spins, counts, ptr, occ_clause, occ_neg):
    make = 0
    brk = 0
    for k in range(ptr[i], ptr[i + 1]):
        c = occ_clause[k]
        if (spins[i] > 0) != occ_neg[k]:
            if counts[c] == 1:
                brk += 1
        elif counts[c] == 0:
            make += 1
    return brk - make


@njit(cache=True)
def _flip(i, spins, counts, ptr, occ_clause, occ_neg):
    for k in range(ptr[i], ptr[i + 1]):
        c = occ_clause[k]
        if (spins[i] > 0) != occ_neg[k]:
            counts[c] -= 1
        else:
            counts[c] += 1
    spins[i] = -spins[i]


@njit(cache=True)
def _sasat(rng, n, ptr, occ_clause, occ_neg, lit_vars, lit_neg, init, use_init,
           max_trials, max_temp, min_temp, decay, budget, record,
           rec_cost, rec_temp):
    spins = np.empty(n, dtype=np.int64)
    steps = 0
    first_hit = -1
    restarts = 0
    unsat = 0
    while restarts < max_trials:
        if restarts == 0 and use_init:
            for i in range(n):
                spins[i] = init[i]
        else:
            for i in range(n):
                spins[i] = 1 if rng.random() < 0.5 else -1
        restarts += 1
        counts = _true_counts(spins, lit_vars, lit_neg)
        unsat = 0
        for c in range(counts.shape[0]):
            if counts[c] == 0:
                unsat += 1
        if unsat == 0 and first_hit < 0:
            first_hit = steps
        j = 0
        temp = max_temp
        while temp >= min_temp:
            if unsat == 0:
                return True, steps, first_hit, unsat, spins, restarts
            temp = max_temp * math.exp(-j * decay)
            for i in range(n):
                if steps >= budget:
                    return False, steps, first_hit, unsat, spins, restarts
                d = _delta(i, spins, counts, ptr, occ_clause, occ_neg)
                x = d / temp
                p = 0.0 if x > 700.0 else 1.0 / (1.0 + math.exp(x))
                steps += 1
                if rng.random() < p:
                    _flip(i, spins, counts, ptr, occ_clause, occ_neg)
                    unsat += d
                    if unsat == 0 and first_hit < 0:
                        first_hit = steps
                if record:
                    rec_cost[steps - 1] = unsat
                    rec_temp[steps - 1] = temp
            j += 1
    return unsat == 0, steps, first_hit, unsat, spins, restarts


@dataclass
class SasatTrace:
    """Per-step unsatisfied-clause count and temperature of a SASAT run."""

    initial_cost: int
    cost: np.ndarray
    temperature: np.ndarray


def sasat_run(inst: Instance, config: SasatConfig = SasatConfig(), seed: int = 0,
              budget: int | None = None, init=None, record: bool = False):
    """Run SASAT until a satisfying assignment is returned or the budget runs out.

    ``budget`` caps the total number of attempted flips across restarts. The
    satisfaction test happens at the top of each sweep as in the original
    algorithm; ``first_hit`` additionally records the first step at which no
    clause was unsatisfied. With ``record`` the per-step trace is returned too.
    """
    occ = _Occurrences(inst)
    rng = np.random.default_rng(seed)
    if budget is None:
        budget = np.iinfo(np.int64).max
    use_init = init is not None
    init_arr = np.asarray(init if use_init else np.ones(inst.num_vars), dtype=np.int64)
    if record and budget > 50_000_000:
        raise ValueError("recording needs a finite budget")
    rec_len = budget if record else 0
    rec_cost = np.zeros(rec_len, dtype=np.int64)
    rec_temp = np.zeros(rec_len, dtype=np.float64)
    solved, steps, first_hit, unsat, spins, restarts = _sasat(
        rng, inst.num_vars, occ.ptr, occ.clause, occ.negated, occ.lit_vars, occ.lit_neg,
        init_arr, use_init, config.max_trials, config.max_temp, config.min_temp,
        config.decay_scale / inst.num_vars, budget, record, rec_cost, rec_temp,
    )
    result = TrialResult(
        solved=bool(solved),
        stop_time=float(steps),
        final_cost=float(unsat),
        steps=int(steps),
        seed=seed,
        first_hit=float(first_hit) if first_hit >= 0 else None,
        final_unsat=int(unsat),
        status="solved" if solved else "budget",
        assignment=spins.copy(),
        restarts=int(restarts),
    )
    if not record:
        return result
    initial = evaluate_assignment(inst, init_arr) if use_init else None
    return result, SasatTrace(initial, rec_cost[:steps].copy(), rec_temp[:steps].copy())


@njit(cache=True)
def _walksat(rng, n, ptr, occ_clause, occ_neg, lit_vars, lit_neg, noise_p, max_flips):
    m_count = lit_vars.shape[0]
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        spins[i] = 1 if rng.random() < 0.5 else -1
    counts = _true_counts(spins, lit_vars, lit_neg)
    unsat_list = np.empty(m_count, dtype=np.int64)
    where = np.full(m_count, -1, dtype=np.int64)
    n_unsat = 0
    for c in range(m_count):
        if counts[c] == 0:
            unsat_list[n_unsat] = c
            where[c] = n_unsat
            n_unsat += 1
    breaks = np.empty(3, dtype=np.int64)
    flips = 0
    while n_unsat > 0 and flips < max_flips:
        c = unsat_list[rng.integers(0, n_unsat)]
        best = 1 << 30
        chosen = 0
        for p in range(3):
            v = lit_vars[c, p]
            b = 0
            for k in range(ptr[v], ptr[v + 1]):
                if (spins[v] > 0) != occ_neg[k] and counts[occ_clause[k]] == 1:
                    b += 1
            breaks[p] = b
            best = min(best, b)
        if best == 0 or rng.random() >= noise_p:
            ties = 0
            for p in range(3):
                if breaks[p] == best:
                    ties += 1
            pick = rng.integers(0, ties)
            for p in range(3):
                if breaks[p] == best:
                    if pick == 0:
                        chosen = p
                        break
                    pick -= 1
        else:
            chosen = rng.integers(0, 3)
        v = lit_vars[c, chosen]
        for k in range(ptr[v], ptr[v + 1]):
            c2 = occ_clause[k]
            if (spins[v] > 0) != occ_neg[k]:
                counts[c2] -= 1
                if counts[c2] == 0:
                    unsat_list[n_unsat] = c2
                    where[c2] = n_unsat
                    n_unsat += 1
            else:
                counts[c2] += 1
                if counts[c2] == 1:
                    pos = where[c2]
                    last = unsat_list[n_unsat - 1]
                    unsat_list[pos] = last
                    where[last] = pos
                    where[c2] = -1
                    n_unsat -= 1
        spins[v] = -spins[v]
        flips += 1
    return n_unsat == 0, flips, n_unsat, spins


def walksat_run(inst: Instance, config: WalksatConfig = WalksatConfig(), seed: int = 0,
                budget: int | None = None) -> TrialResult:
    """WalkSAT with zero-damage preference, noise ``noise_p`` and random tie-breaking."""
    occ = _Occurrences(inst)
    rng = np.random.default_rng(seed)
    max_flips = config.max_flips if budget is None else min(config.max_flips, budget)
    solved, flips, n_unsat, spins = _walksat(
        rng, inst.num_vars, occ.ptr, occ.clause, occ.negated, occ.lit_vars, occ.lit_neg,
        config.noise_p, max_flips,
    )
    result = TrialResult(
        solved=bool(solved),
        stop_time=float(flips),
        final_cost=float(n_unsat),
        steps=int(flips),
        seed=seed,
        first_hit=float(flips) if solved else None,
        final_unsat=int(n_unsat),
        status="solved" if solved else "budget",
        assignment=spins.copy(),
    )
    return result
