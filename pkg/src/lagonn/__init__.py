"""Lagrange oscillatory neural networks for Max-3-SAT.

Core pieces: DIMACS instances (:mod:`lagonn.cnf`), clause energies and their
complex relaxation (:mod:`lagonn.clause_energy`), the Lagrange system
(:mod:`lagonn.lagrange`), time integration (:mod:`lagonn.integrator`), the
SASAT and WalkSAT baselines (:mod:`lagonn.baselines`) and the benchmark
harness (:mod:`lagonn.bench`).
"""
from .cnf import Clause, Instance, Literal, evaluate_assignment, parse_dimacs, read_dimacs
from .integrator import AdaptiveStep, FixedStep, TrialResult, run_trial
from .lagrange import PhaseState, SystemConfig

__version__ = "0.1.0"

__all__ = [
    "AdaptiveStep",
    "Clause",
    "FixedStep",
    "Instance",
    "Literal",
    "PhaseState",
    "SystemConfig",
    "TrialResult",
    "evaluate_assignment",
    "parse_dimacs",
    "read_dimacs",
    "run_trial",
]
