"""Uniform random 3-SAT generation and the bundled benchmark set.

The bundled files ``uNN-XX.cnf`` are satisfiable uniform random instances at
clause/variable ratio ~4.3 (N=20/M=91, N=50/M=218, N=100/M=430). Each file
carries a satisfying assignment in a ``c witness`` comment so satisfiability
can be re-checked without a solver.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .cnf import Clause, Instance, Literal, evaluate_assignment, parse_dimacs, serialize_dimacs

SIZES = {20: 91, 50: 218, 100: 430}


def generate_uniform_3sat(num_vars: int, num_clauses: int, seed: int, name: str = "") -> Instance:
    """Clauses of three distinct variables chosen uniformly, each negated with probability 1/2."""
    if num_vars < 3:
        raise ValueError("need at least 3 variables")
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(num_clauses):
        vars_ = rng.choice(num_vars, size=3, replace=False)
        signs = rng.random(3) < 0.5
        clauses.append(Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(vars_, signs))))
    return Instance(num_vars, tuple(clauses), name)


def find_witness(inst: Instance, seed: int = 0, max_flips: int = 10_000_000) -> np.ndarray | None:
    """Satisfying spins found by WalkSAT, or None."""
    from .baselines import WalksatConfig, walksat_run

    res = walksat_run(inst, WalksatConfig(max_flips=max_flips), seed=seed)
    return res.assignment if res.solved else None


def generate_satisfiable(num_vars: int, num_clauses: int, seed: int, name: str = ""):
    """Draw instances from consecutive sub-seeds until WalkSAT certifies one.

    Returns ``(instance, witness, attempts)``.
    """
    for attempt in range(1000):
        inst = generate_uniform_3sat(num_vars, num_clauses, seed * 1000 + attempt, name)
        witness = find_witness(inst, seed=attempt)
        if witness is not None:
            return inst, witness, attempt + 1
    raise RuntimeError("no satisfiable instance found in 1000 draws")


def witness_comment(witness) -> str:
    return "witness " + " ".join(str(j + 1 if s > 0 else -(j + 1)) for j, s in enumerate(witness))


def read_witness(text: str) -> np.ndarray | None:
    for line in text.splitlines():
        if line.startswith("c witness"):
            lits = [int(tok) for tok in line.split()[2:]]
            spins = np.empty(len(lits), dtype=np.int64)
            for lit in lits:
                spins[abs(lit) - 1] = 1 if lit > 0 else -1
            return spins
    return None


def write_bundle(directory: str | Path, count_per_size: dict[int, int], base_seed: int = 2024):
    """Regenerate the bundled instance files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for n, count in count_per_size.items():
        m = SIZES[n]
        for k in range(1, count + 1):
            name = f"u{n}-{k:02d}"
            inst, witness, attempts = generate_satisfiable(n, m, base_seed + 100 * n + k, name)
            assert evaluate_assignment(inst, witness) == 0
            text = serialize_dimacs(inst, [
                f"{name}: uniform random 3-SAT, N={n}, M={m}",
                f"generator seed {base_seed + 100 * n + k}, accepted draw {attempts}",
                witness_comment(witness),
            ])
            path = directory / f"{name}.cnf"
            path.write_text(text)
            written.append(path)
    return written


def bundled_names(num_vars: int | None = None) -> list[str]:
    """Names of the bundled instances, sorted lexicographically."""
    files = resources.files("lagonn").joinpath("data").iterdir()
    names = sorted(p.name[:-4] for p in files if p.name.endswith(".cnf"))
    if num_vars is not None:
        names = [s for s in names if s.startswith(f"u{num_vars}-")]
    return names


def bundled_path(name: str) -> Path:
    path = Path(str(resources.files("lagonn").joinpath("data", f"{name}.cnf")))
    if not path.exists():
        raise FileNotFoundError(f"no bundled instance {name!r}")
    return path


def load_bundled(name: str) -> Instance:
    return parse_dimacs(bundled_path(name).read_text(), name=name)


def bundled_witness(name: str) -> np.ndarray | None:
    return read_witness(bundled_path(name).read_text())
