"""DIMACS CNF reading/writing and Boolean evaluation of 3-SAT instances.

Variables are 0-based inside the package; the 1-based DIMACS numbering is
converted at the parser boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CnfError(ValueError):
    """Base class for instance parsing and validation errors."""


class MalformedHeader(CnfError):
    pass


class ClauseArity(CnfError):
    pass


class DuplicateVarInClause(CnfError):
    pass


class VarOutOfRange(CnfError):
    pass


class ClauseCountMismatch(CnfError):
    pass


class LengthMismatch(CnfError):
    pass


@dataclass(frozen=True)
class Literal:
    var_index: int
    negated: bool = False

    def value(self, spin: int) -> bool:
        """Truth value of the literal when its variable has the given spin."""
        return (spin > 0) != self.negated

    def to_dimacs(self) -> int:
        return -(self.var_index + 1) if self.negated else self.var_index + 1

    @classmethod
    def from_dimacs(cls, lit: int) -> "Literal":
        return cls(abs(lit) - 1, lit < 0)


@dataclass(frozen=True)
class Clause:
    lits: tuple[Literal, Literal, Literal]

    def __post_init__(self):
        if len(self.lits) != 3:
            raise ClauseArity(f"clause has {len(self.lits)} literals, expected 3")
        vars_ = {lit.var_index for lit in self.lits}
        if len(vars_) != 3:
            raise DuplicateVarInClause(
                f"clause {self.to_dimacs()} repeats a variable"
            )

    @classmethod
    def of(cls, *dimacs_lits: int) -> "Clause":
        """Build a clause from signed 1-based DIMACS literals, e.g. ``Clause.of(1, -2, 3)``."""
        return cls(tuple(Literal.from_dimacs(x) for x in dimacs_lits))

    @property
    def variables(self) -> tuple[int, int, int]:
        return tuple(lit.var_index for lit in self.lits)

    def is_satisfied(self, spins: Sequence[int]) -> bool:
        return any(lit.value(spins[lit.var_index]) for lit in self.lits)

    def to_dimacs(self) -> list[int]:
        return [lit.to_dimacs() for lit in self.lits]


@dataclass(frozen=True)
class Instance:
    num_vars: int
    clauses: tuple[Clause, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.num_vars < 1:
            raise MalformedHeader("instance needs at least one variable")
        if len(self.clauses) < 1:
            raise ClauseCountMismatch("instance needs at least one clause")
        for c in self.clauses:
            for lit in c.lits:
                if not 0 <= lit.var_index < self.num_vars:
                    raise VarOutOfRange(
                        f"variable {lit.var_index + 1} outside 1..{self.num_vars}"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @cached_property
    def literal_vars(self) -> np.ndarray:
        """(M, 3) int array of variable indices in file order."""
        return np.array([c.variables for c in self.clauses], dtype=np.int64)

    @cached_property
    def literal_negated(self) -> np.ndarray:
        """(M, 3) bool array, True where the literal is negated."""
        return np.array(
            [[lit.negated for lit in c.lits] for c in self.clauses], dtype=bool
        )

    @cached_property
    def canonical(self) -> tuple[np.ndarray, np.ndarray]:
        """Clause types (M,) and canonically ordered variables (M, 3)."""
        return canonical_arrays(self)

    @cached_property
    def occurrences(self) -> list[list[tuple[int, bool]]]:
        """For every variable, the (clause index, negated) pairs it appears in."""
        occ: list[list[tuple[int, bool]]] = [[] for _ in range(self.num_vars)]
        for m, c in enumerate(self.clauses):
            for lit in c.lits:
                occ[lit.var_index].append((m, lit.negated))
        return occ


def _as_lines(text: str | Iterable[str]) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return text


def parse_dimacs(text: str | Iterable[str], name: str = "") -> Instance:
    """Parse a DIMACS CNF document into an :class:`Instance`.

    Accepts ``c`` comment lines, a single ``p cnf N M`` header and clause
    literals terminated by ``0`` (clauses may span lines). A trailing ``%``
    line, as found in SATlib uniform instances, ends the clause section.
    """
    header: tuple[int, int] | None = None
    clauses: list[Clause] = []
    pending: list[int] = []
    for lineno, raw in enumerate(_as_lines(text), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise MalformedHeader(f"line {lineno}: second problem line")
            if len(parts) != 4 or parts[1] != "cnf":
                raise MalformedHeader(f"line {lineno}: expected 'p cnf N M', got {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise MalformedHeader(f"line {lineno}: non-integer counts in {line!r}") from None
            if header[0] < 1 or header[1] < 1:
                raise MalformedHeader(f"line {lineno}: counts must be positive")
            continue
        if header is None:
            raise MalformedHeader(f"line {lineno}: clause data before 'p cnf' line")
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise MalformedHeader(f"line {lineno}: non-integer token in {line!r}") from None
        for v in values:
            if v != 0:
                if abs(v) > header[0]:
                    raise VarOutOfRange(
                        f"line {lineno}: literal {v} outside 1..{header[0]}"
                    )
                pending.append(v)
                continue
            if len(pending) != 3:
                raise ClauseArity(
                    f"line {lineno}: clause {pending} has {len(pending)} literals"
                )
            clauses.append(Clause.of(*pending))
            pending = []
    if header is None:
        raise MalformedHeader("missing 'p cnf N M' line")
    if pending:
        raise ClauseArity(f"unterminated clause {pending}")
    if len(clauses) != header[1]:
        raise ClauseCountMismatch(
            f"header announces {header[1]} clauses, found {len(clauses)}"
        )
    return Instance(header[0], tuple(clauses), name)


def read_dimacs(path: str | Path) -> Instance:
    path = Path(path)
    with path.open() as fh:
        return parse_dimacs(fh, name=path.stem)


def serialize_dimacs(inst: Instance, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {inst.num_vars} {inst.num_clauses}")
    lines.extend(" ".join(map(str, c.to_dimacs())) + " 0" for c in inst.clauses)
    return "\n".join(lines) + "\n"


def evaluate_assignment(inst: Instance, spins: Sequence[int]) -> int:
    """Number of clauses falsified by ``spins`` (+1 is TRUE, -1 is FALSE)."""
    spins = np.asarray(spins)
    if spins.shape != (inst.num_vars,):
        raise LengthMismatch(
            f"assignment has shape {spins.shape}, expected ({inst.num_vars},)"
        )
    lit_true = (spins[inst.literal_vars] > 0) != inst.literal_negated
    return int(np.count_nonzero(~lit_true.any(axis=1)))


def spins_from_phases(phases: np.ndarray) -> np.ndarray:
    """Round phases to the nearest multiple of pi: cos >= 0 -> +1, else -1."""
    return np.where(np.cos(phases) >= 0.0, 1, -1)


def normalize_clause(clause: Clause) -> tuple[int, tuple[int, int, int]]:
    """Canonical clause type and the position permutation that realizes it.

    The type is ``1 + number of negated literals``. The permutation lists the
    original literal positions with negated literals first, so that
    ``clause.lits[perm[0]]`` binds to X, ``perm[1]`` to Y and ``perm[2]`` to Z
    in the canonical forms X|Y|Z, ~X|Y|Z, ~X|~Y|Z and ~X|~Y|~Z. Relative order
    is kept inside each group.
    """
    negated = [i for i, lit in enumerate(clause.lits) if lit.negated]
    positive = [i for i, lit in enumerate(clause.lits) if not lit.negated]
    return 1 + len(negated), tuple(negated + positive)


def canonical_arrays(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Clause types (M,) and canonically ordered variable indices (M, 3)."""
    types = np.empty(inst.num_clauses, dtype=np.int64)
    vars_ = np.empty((inst.num_clauses, 3), dtype=np.int64)
    for m, c in enumerate(inst.clauses):
        t, perm = normalize_clause(c)
        types[m] = t
        vars_[m] = [c.lits[p].var_index for p in perm]
    return types, vars_
