"""Total Lagrange function of a 3-SAT instance and the forces derived from it.

Each clause m owns a Lagrange oscillator with phase ``phi_lambda[m]`` whose
unit vector ``u = (cos, sin)`` weighs the real and imaginary parts of the
clause relaxation ``Z_m``. Using complex numbers, ``u . Z = Re(Z e^{-i phi_lambda})``
and ``u' . Z = Im(Z e^{-i phi_lambda})`` with ``u' = (-sin, cos)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clause_energy import clause_terms
from .cnf import Instance


class DimensionMismatch(ValueError):
    pass


class NonFiniteState(FloatingPointError):
    pass


KAPPA_THRESHOLD = 0.125


@dataclass
class PhaseState:
    phi_x: np.ndarray
    phi_lambda: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.phi_x = np.asarray(self.phi_x, dtype=np.float64)
        self.phi_lambda = np.asarray(self.phi_lambda, dtype=np.float64)

    @classmethod
    def from_vector(cls, y: np.ndarray, num_vars: int, t: float = 0.0) -> "PhaseState":
        y = np.asarray(y, dtype=np.float64)
        return cls(y[:num_vars].copy(), y[num_vars:].copy(), t)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.phi_x, self.phi_lambda])

    def check(self, inst: Instance) -> "PhaseState":
        if self.phi_x.shape != (inst.num_vars,) or self.phi_lambda.shape != (inst.num_clauses,):
            raise DimensionMismatch(
                f"state has {self.phi_x.shape} variable and {self.phi_lambda.shape} "
                f"Lagrange phases, instance needs ({inst.num_vars},) and ({inst.num_clauses},)"
            )
        if not (np.all(np.isfinite(self.phi_x)) and np.all(np.isfinite(self.phi_lambda))):
            raise NonFiniteState(f"state contains non-finite phases at t={self.t}")
        return self


@dataclass(frozen=True)
class SystemConfig:
    """Time constants, cost sharpness and the optional stabilization knobs.

    ``shil_k_max`` is reached ``shil_ramp_time`` cycles after ``shil_start``
    (linear ramp). Lagrange phases stop evolving once ``t >= lagrange_freeze_time``.
    """

    tau: float = 1.0
    tau_lambda: float = 1.0
    beta: float = 20.0
    shil_k_max: float = 0.0
    shil_ramp_time: float = 0.0
    shil_start: float = 0.0
    lagrange_freeze_time: float = math.inf

    def __post_init__(self):
        if not (self.tau > 0 and self.tau_lambda > 0 and self.beta > 0):
            raise ValueError("tau, tau_lambda and beta must be positive")
        if self.shil_k_max < 0 or self.shil_ramp_time < 0:
            raise ValueError("SHIL amplitude and ramp time must be non-negative")


def _clause_data(inst: Instance, phi_x: np.ndarray):
    types, vars_ = inst.canonical
    z, dz = clause_terms(types, phi_x[vars_])
    return vars_, z, dz


def z_values(inst: Instance, phi_x) -> np.ndarray:
    """Complex clause energies Z_m, shape (M,)."""
    return _clause_data(inst, np.asarray(phi_x, dtype=np.float64))[1]


def lagrange_value(inst: Instance, state: PhaseState) -> float:
    state.check(inst)
    _, z, _ = _clause_data(inst, state.phi_x)
    return float(np.sum((z * np.exp(-1j * state.phi_lambda)).real))


def lagrange_gradients(inst: Instance, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the total Lagrange function w.r.t. variable and Lagrange phases."""
    state.check(inst)
    vars_, z, dz = _clause_data(inst, state.phi_x)
    rot = np.exp(-1j * state.phi_lambda)
    contrib = (dz * rot[:, None]).real
    grad_x = np.bincount(vars_.ravel(), weights=contrib.ravel(), minlength=inst.num_vars)
    grad_lambda = (z * rot).imag
    return grad_x, grad_lambda


def onn_gradient(inst: Instance, state: PhaseState) -> np.ndarray:
    """Gradient of sum_m Re(Z_m), the energy of the plain oscillator network."""
    state.check(inst)
    vars_, _, dz = _clause_data(inst, state.phi_x)
    return np.bincount(vars_.ravel(), weights=dz.real.ravel(), minlength=inst.num_vars)


def shil_amplitude(t: float, config: SystemConfig) -> float:
    if config.shil_k_max == 0.0 or t < config.shil_start:
        return 0.0
    if config.shil_ramp_time == 0.0:
        return config.shil_k_max
    return config.shil_k_max * min(1.0, (t - config.shil_start) / config.shil_ramp_time)


def shil_potential(phi_x, t: float, config: SystemConfig) -> float:
    return -shil_amplitude(t, config) * float(np.sum(np.cos(2 * np.asarray(phi_x))))


def shil_gradient(state: PhaseState, t: float, config: SystemConfig) -> np.ndarray:
    """Gradient of the injection-locking potential -K(t) sum cos(2 phi)."""
    return 2.0 * shil_amplitude(t, config) * np.sin(2.0 * state.phi_x)


def clause_costs(inst: Instance, phi_x, beta: float) -> np.ndarray:
    """Soft unsatisfied indicator of every clause, each in [0, 1]."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if phi_x.shape != (inst.num_vars,):
        raise DimensionMismatch(f"expected {inst.num_vars} variable phases, got {phi_x.shape}")
    soft = np.tanh(beta * np.cos(phi_x[inst.literal_vars]))
    sign = np.where(inst.literal_negated, 1.0, -1.0)
    return np.prod(0.5 * (1.0 + sign * soft), axis=1)


def cost_kappa(inst: Instance, state: PhaseState | np.ndarray, beta: float = 20.0) -> float:
    """Smooth count of unsatisfied clauses; below 0.125 the rounded phases satisfy all clauses."""
    phi_x = state.phi_x if isinstance(state, PhaseState) else state
    return float(np.sum(clause_costs(inst, phi_x, beta)))


def saddle_rates(type_id: int, phases, phi_lambda: float, tau: float = 1.0, tau_lambda: float = 1.0):
    """Ascent and descent contributions to dL/dt for a single clause.

    Returns ``(ascent_chain, ascent_closed, descent_chain, descent_closed)``:
    the chain-rule values ``(du/dt) . Z`` and ``(dZ/dt) . u`` obtained from the
    actual phase velocities, next to the closed forms ``(Z . u')^2 / tau_lambda``
    and ``-sum_j (u . dZ/dphi_j)^2 / tau``.
    """
    z, dz = clause_terms(np.array([type_id]), np.asarray(phases, dtype=np.float64)[None, :])
    z, dz = z[0], dz[0]
    u = np.array([math.cos(phi_lambda), math.sin(phi_lambda)])
    du = np.array([-math.sin(phi_lambda), math.cos(phi_lambda)])
    zv = np.array([z.real, z.imag])
    dzv = np.stack([dz.real, dz.imag], axis=1)  # (3, 2)

    phi_dot = -(dzv @ u) / tau
    lam_dot = (du @ zv) / tau_lambda
    ascent_chain = float((du * lam_dot) @ zv)
    descent_chain = float((dzv.T @ phi_dot) @ u)
    ascent_closed = float((zv @ du) ** 2 / tau_lambda)
    descent_closed = float(-np.sum((dzv @ u) ** 2) / tau)
    return ascent_chain, ascent_closed, descent_chain, descent_closed
