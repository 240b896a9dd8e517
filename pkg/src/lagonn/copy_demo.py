"""Phase-copy constraints enforced by Lagrange oscillators on a small XY graph.

The demo graph has six nodes (0-based). Nodes 1 and 3 are copies of nodes 0
and 2. Antiferromagnetic edges (J = -1)::

    (0, 2) (0, 4) (1, 5) (2, 4) (3, 5) (4, 5)

Once the copies agree, merging 0~1 into A and 2~3 into B leaves the edges
A-B, A-C, A-D, B-C, B-D, C-D with C = 4, D = 5: a fully connected 4-node
antiferromagnet. Copy node 1 carries A's edge to D and copy node 3 carries
B's edge to D, so no original node needs more than three neighbours.

Two ways of making the copies agree are compared:

* ``penalty``: an extra ferromagnetic edge of strength J_c on each copy pair,
  i.e. the energy term -J_c cos(phi_a - phi_b);
* ``lagrange``: one Lagrange oscillator per pair adding
  strength * [cos(phi_a - phi_l) - cos(phi_b - phi_l)], the projection of
  exp(i phi_a) - exp(i phi_b) on the oscillator's unit vector. Node phases
  descend this function and the Lagrange phases ascend it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .integrator import NonFiniteState, fehlberg_update
from .lagrange import DimensionMismatch


@dataclass(frozen=True)
class XyGraph:
    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    fields_h: tuple[float, ...] = ()

    def __post_init__(self):
        for i, j, _ in self.edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.num_nodes - 1}")
        if self.fields_h and len(self.fields_h) != self.num_nodes:
            raise DimensionMismatch("need one field per node")

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.fields_h or np.zeros(self.num_nodes), dtype=float)

    def with_edges(self, extra: Sequence[tuple[int, int, float]]) -> "XyGraph":
        return XyGraph(self.num_nodes, self.edges + tuple(extra), self.fields_h)


@dataclass(frozen=True)
class CopyConstraint:
    pair: tuple[int, int]
    strength: float = 1.0

    def __post_init__(self):
        if self.pair[0] == self.pair[1]:
            raise ValueError("a node cannot copy itself")


DEMO_EDGES = ((0, 2, -1.0), (0, 4, -1.0), (1, 5, -1.0), (2, 4, -1.0), (3, 5, -1.0), (4, 5, -1.0))
DEMO_PAIRS = ((0, 1), (2, 3))


def demo_graph() -> XyGraph:
    return XyGraph(6, DEMO_EDGES)


def _check(graph: XyGraph, phases) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (graph.num_nodes,):
        raise DimensionMismatch(f"expected {graph.num_nodes} phases, got {phases.shape}")
    return phases


def xy_energy(graph: XyGraph, phases) -> float:
    """E = -sum_ij J_ij cos(phi_i - phi_j) - sum_i h_i cos(phi_i)."""
    phi = _check(graph, phases)
    e = -float(np.dot(graph.h, np.cos(phi)))
    for i, j, w in graph.edges:
        e -= w * math.cos(phi[i] - phi[j])
    return e


def xy_gradient(graph: XyGraph, phases) -> np.ndarray:
    phi = _check(graph, phases)
    g = graph.h * np.sin(phi)
    for i, j, w in graph.edges:
        s = w * math.sin(phi[i] - phi[j])
        g[i] += s
        g[j] -= s
    return g


def copy_lagrange_value(graph: XyGraph, constraints: Sequence[CopyConstraint], phases,
                        lambda_phases) -> float:
    phi = _check(graph, phases)
    lam = np.asarray(lambda_phases, dtype=float)
    if lam.shape != (len(constraints),):
        raise DimensionMismatch(f"expected {len(constraints)} Lagrange phases, got {lam.shape}")
    total = xy_energy(graph, phi)
    for c, l in zip(constraints, lam):
        a, b = c.pair
        total += c.strength * (math.cos(phi[a] - l) - math.cos(phi[b] - l))
    return total


def copy_lagrange_gradient(graph: XyGraph, constraints: Sequence[CopyConstraint], phases,
                           lambda_phases) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`copy_lagrange_value` w.r.t. node and Lagrange phases."""
    phi = _check(graph, phases)
    lam = np.asarray(lambda_phases, dtype=float)
    if lam.shape != (len(constraints),):
        raise DimensionMismatch(f"expected {len(constraints)} Lagrange phases, got {lam.shape}")
    g_phi = xy_gradient(graph, phi)
    g_lam = np.zeros(len(constraints))
    for k, (c, l) in enumerate(zip(constraints, lam)):
        a, b = c.pair
        sa, sb = math.sin(phi[a] - l), math.sin(phi[b] - l)
        g_phi[a] -= c.strength * sa
        g_phi[b] += c.strength * sb
        g_lam[k] = c.strength * (sa - sb)
    return g_phi, g_lam


@dataclass
class CopyTrace:
    num_nodes: int
    pairs: tuple[tuple[int, int], ...]
    rows: list[list[float]] = field(default_factory=list)

    def record(self, t: float, phi: np.ndarray):
        c = np.cos(phi)
        self.rows.append([t, *c.tolist(), *(abs(c[a] - c[b]) for a, b in self.pairs)])

    @property
    def final_residuals(self) -> np.ndarray:
        return np.array(self.rows[-1][1 + self.num_nodes:])

    def header(self) -> list[str]:
        return (["t"] + [f"cos_phi{i}" for i in range(self.num_nodes)]
                + [f"residual_{a}_{b}" for a, b in self.pairs])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for row in self.rows:
                w.writerow([repr(float(v)) for v in row])


def run_copy_demo(mode: Literal["penalty", "lagrange"] = "lagrange", strength: float = 1.0,
                  seed: int = 0, t_max: float = 200.0, dt: float = 0.05,
                  initial=None) -> CopyTrace:
    """Integrate the demo graph and trace cos(phi) plus the copy residuals.

    ``strength`` is J_c in penalty mode and the Lagrange coupling in
    lagrange mode. ``initial`` optionally gives the 6 node phases; Lagrange
    phases are drawn from the seed after the node phases.
    """
    if mode not in ("penalty", "lagrange"):
        raise ValueError(f"unknown mode {mode!r}")
    graph = demo_graph()
    rng = np.random.default_rng(seed)
    phi0 = rng.uniform(0, 2 * math.pi, graph.num_nodes)
    lam0 = rng.uniform(0, 2 * math.pi, len(DEMO_PAIRS))
    if initial is not None:
        phi0 = _check(graph, initial).copy()
    n = graph.num_nodes
    if mode == "penalty":
        graph = graph.with_edges([(a, b, strength) for a, b in DEMO_PAIRS])
        constraints: list[CopyConstraint] = []
        y = phi0
    else:
        constraints = [CopyConstraint(p, strength) for p in DEMO_PAIRS]
        y = np.concatenate([phi0, lam0])

    def f(y, t):
        g_phi, g_lam = copy_lagrange_gradient(graph, constraints, y[:n], y[n:])
        return np.concatenate([-g_phi, g_lam])

    trace = CopyTrace(n, DEMO_PAIRS)
    trace.record(0.0, y[:n])
    steps = int(round(t_max / dt))
    for k in range(1, steps + 1):
        y, _, _ = fehlberg_update(f, y, (k - 1) * dt, dt)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"copy demo diverged at t={k * dt}")
        trace.record(k * dt, y[:n])
    return trace
