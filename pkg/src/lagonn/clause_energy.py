"""Clause Hamiltonians and their complex phase relaxations.

Each canonical clause type (1: X|Y|Z, 2: ~X|Y|Z, 3: ~X|~Y|Z, 4: ~X|~Y|~Z) has
an Ising energy that is 0 when the clause holds and 8 when it fails. The
relaxation replaces spin products by complex exponentials of phase
combinations; at binary phases ``phi = pi * (1 - S) / 2`` both agree.

Every energy is a sum of eight terms ``c * exp(i * k . phi)`` where ``k`` is
an integer frequency vector over (phi_X, phi_Y, phi_Z).
"""
from __future__ import annotations

import math

import numpy as np


class InvalidTypeId(ValueError):
    pass


class NonFinitePhase(ValueError):
    pass


# Frequency vectors shared by all four clause types, in term order:
# constant, X-Y, X-Z, Z-Y, X, Y, Z, X-Y+Z.
TERM_FREQUENCIES = np.array(
    [
        [0, 0, 0],
        [1, -1, 0],
        [1, 0, -1],
        [0, -1, 1],
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, -1, 1],
    ],
    dtype=np.int64,
)

# Coefficient of each term, one row per clause type (row 0 unused).
TERM_COEFFS = np.array(
    [
        [0, 0, 0, 0, 0, 0, 0, 0],
        [1, +1, +1, +1, -1, -1, -1, -1],  # H1 = 1 + SxSy + SxSz + SySz - (Sx+Sy+Sz) - SxSySz
        [1, -1, -1, +1, +1, -1, -1, +1],  # H2 = 1 - SxSy - SxSz + SySz - (-Sx+Sy+Sz) + SxSySz
        [1, +1, -1, -1, +1, +1, -1, -1],  # H3 = 1 + SxSy - SxSz - SySz - (-Sx-Sy+Sz) - SxSySz
        [1, +1, +1, +1, +1, +1, +1, +1],  # H4 = 1 + SxSy + SxSz + SySz + (Sx+Sy+Sz) + SxSySz
    ],
    dtype=np.float64,
)


def _check_type(type_id) -> int:
    if type_id not in (1, 2, 3, 4):
        raise InvalidTypeId(f"clause type must be 1..4, got {type_id!r}")
    return int(type_id)


def clause_hamiltonian(type_id: int, spins) -> int:
    """Ising energy of a canonical clause: 0 if satisfied, 8 if not."""
    coeffs = TERM_COEFFS[_check_type(type_id)]
    sx, sy, sz = (int(s) for s in spins)
    if any(s not in (-1, 1) for s in (sx, sy, sz)):
        raise ValueError(f"spins must be +1/-1, got {spins!r}")
    monomials = (1, sx * sy, sx * sz, sz * sy, sx, sy, sz, sx * sy * sz)
    return int(sum(int(c) * v for c, v in zip(coeffs, monomials)))


def clause_z(type_id: int, phases) -> complex:
    """Complex relaxation Z of a canonical clause at the given phases."""
    coeffs = TERM_COEFFS[_check_type(type_id)]
    phases = np.asarray(phases, dtype=np.float64)
    if phases.shape != (3,) or not np.all(np.isfinite(phases)):
        raise NonFinitePhase(f"need three finite phases, got {phases!r}")
    args = TERM_FREQUENCIES @ phases
    return complex(np.sum(coeffs * np.exp(1j * args)))


def clause_z_gradient(type_id: int, phases) -> np.ndarray:
    """Partial derivatives dZ/dphi_X, dZ/dphi_Y, dZ/dphi_Z as a complex (3,) array."""
    coeffs = TERM_COEFFS[_check_type(type_id)]
    phases = np.asarray(phases, dtype=np.float64)
    if phases.shape != (3,) or not np.all(np.isfinite(phases)):
        raise NonFinitePhase(f"need three finite phases, got {phases!r}")
    terms = coeffs * np.exp(1j * (TERM_FREQUENCIES @ phases))
    return 1j * (terms @ TERM_FREQUENCIES)


def gradient_term_count(type_id: int, position: int) -> int:
    """Number of terms of Z that depend on the phase at ``position`` (0, 1, 2)."""
    coeffs = TERM_COEFFS[_check_type(type_id)]
    return int(np.count_nonzero((TERM_FREQUENCIES[:, position] != 0) & (coeffs != 0)))


def binary_phases(spins) -> np.ndarray:
    """Phases encoding spins: +1 -> 0, -1 -> pi."""
    return math.pi * (1 - np.asarray(spins, dtype=np.float64)) / 2


def clause_terms(types: np.ndarray, phases: np.ndarray):
    """Vectorized Z and dZ/dphi for many clauses.

    ``types`` has shape (M,) and ``phases`` shape (..., M, 3) in canonical
    order. Returns ``z`` of shape (..., M) and ``dz`` of shape (..., M, 3).
    """
    c = TERM_COEFFS[types]  # (M, 8)
    e = np.exp(1j * phases)
    ex, ey, ez = e[..., 0], e[..., 1], e[..., 2]
    exy = ex * np.conj(ey)
    exz = ex * np.conj(ez)
    ezy = ez * np.conj(ey)
    exyz = exy * ez
    z = (
        c[:, 0]
        + c[:, 1] * exy
        + c[:, 2] * exz
        + c[:, 3] * ezy
        + c[:, 4] * ex
        + c[:, 5] * ey
        + c[:, 6] * ez
        + c[:, 7] * exyz
    )
    dz = np.empty(z.shape + (3,), dtype=np.complex128)
    dz[..., 0] = 1j * (c[:, 1] * exy + c[:, 2] * exz + c[:, 4] * ex + c[:, 7] * exyz)
    dz[..., 1] = 1j * (-c[:, 1] * exy - c[:, 3] * ezy + c[:, 5] * ey - c[:, 7] * exyz)
    dz[..., 2] = 1j * (-c[:, 2] * exz + c[:, 3] * ezy + c[:, 6] * ez + c[:, 7] * exyz)
    return z, dz
