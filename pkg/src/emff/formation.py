"""Formation graph, feedback gains and the desired force-shape law.

Satellites are identified by integers ``1..n``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .amff import pair_key
from .em_model import C0, _unit


class DecentralizationError(LookupError):
    """A control loop tried to read data of a pair it is not part of."""


@dataclass
class FormationGraph:
    """Undirected, connected feedback graph with per-edge gains.

    ``alpha`` and ``rho`` are keyed by unordered edge; ``gamma`` and
    ``desired`` are keyed by ordered pair and completed from the given
    orientation (``gamma_ji = 1/gamma_ij``, ``d_ji = -d_ij``).
    """

    n: int
    edges: set[tuple[int, int]]
    alpha: dict[tuple[int, int], float]
    beta: float
    desired: dict[tuple[int, int], np.ndarray]
    rho: dict[tuple[int, int], float] = field(default_factory=dict)
    gamma: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        edges = set()
        for i, j in self.edges:
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"invalid edge ({i}, {j}) for n={self.n}")
            edges.add(pair_key(i, j))
        self.edges = edges
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

        alpha = {pair_key(*k): float(v) for k, v in self.alpha.items()}
        for e in self.edges:
            if not alpha.get(e, 0.0) > 0:
                raise ValueError(f"alpha for edge {e} must be > 0")
        for k, v in alpha.items():
            if k not in self.edges and v != 0.0:
                raise ValueError(f"alpha for non-edge pair {k} must be 0, got {v}")
        self.alpha = {e: alpha[e] for e in self.edges}

        rho = {pair_key(*k): float(v) for k, v in self.rho.items()}
        for k, v in rho.items():
            if not v >= 0:
                raise ValueError(f"rho for pair {k} must be >= 0, got {v}")
        self.rho = {e: rho.get(e, 0.0) for e in self.edges}

        self.gamma = _complete_reciprocal(self.gamma, self.edges)
        self.desired = _complete_antisymmetric(self.desired, self.edges)

        if not self.is_connected():
            raise ValueError("formation graph must be connected")

    def neighbors(self, i: int) -> list[int]:
        if not 1 <= i <= self.n:
            raise KeyError(f"unknown satellite {i}")
        return sorted(b if a == i else a for a, b in self.edges if i in (a, b))

    def ordered_pairs(self) -> list[tuple[int, int]]:
        return sorted([(a, b) for a, b in self.edges] + [(b, a) for a, b in self.edges])

    def is_connected(self) -> bool:
        seen = {1}
        stack = [1]
        while stack:
            i = stack.pop()
            for j in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    def gains(self, i: int, j: int) -> tuple[float, float, float, float]:
        """``(alpha, beta, rho, gamma)`` seen by satellite ``i`` for neighbor ``j``."""
        key = pair_key(i, j)
        if key not in self.edges:
            return 0.0, self.beta, 0.0, 1.0
        return self.alpha[key], self.beta, self.rho[key], self.gamma[(i, j)]


def _complete_reciprocal(given: Mapping, edges) -> dict:
    out = {}
    for (i, j), g in given.items():
        g = float(g)
        if not g > 0:
            raise ValueError(f"gamma_{i}{j} must be > 0, got {g}")
        if (j, i) in given and abs(float(given[(j, i)]) * g - 1.0) > 1e-9:
            raise ValueError(f"gamma_{j}{i} must equal 1/gamma_{i}{j}")
        out[(i, j)] = g
        out.setdefault((j, i), 1.0 / g)
    for a, b in edges:
        out.setdefault((a, b), 1.0)
        out.setdefault((b, a), 1.0)
    return out


def _complete_antisymmetric(given: Mapping, edges) -> dict:
    out = {}
    for (i, j), d in given.items():
        d = np.asarray(d, dtype=float).reshape(3)
        if (j, i) in given:
            other = np.asarray(given[(j, i)], dtype=float).reshape(3)
            if not np.allclose(other, -d, rtol=0, atol=1e-12):
                raise ValueError(f"d_{j}{i} must equal -d_{i}{j}")
        out[(i, j)] = d
        out[(j, i)] = -d
    for a, b in edges:
        if (a, b) not in out:
            raise ValueError(f"missing desired offset for edge ({a}, {b})")
    return out


def desired_force_shape(r, v, d, alpha: float, beta: float, m_sat: float) -> np.ndarray:
    """Force shape that makes the averaged force a virtual spring-dashpot.

    Fed through :func:`emff.amff.allocate_pair` and
    :func:`emff.amff.approx_avg_force` it yields
    ``-m_sat * alpha * ((r - d) + beta * v)``.
    """
    if not alpha >= 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    r = np.asarray(r, dtype=float)
    _, rn = _unit(r)
    err = (r - np.asarray(d, dtype=float)) + beta * np.asarray(v, dtype=float)
    return -(2.0 * m_sat * rn**4 / C0) * alpha * err


def neighbor_views(graph: FormationGraph, i: int) -> list[int]:
    """Neighbors whose pair data satellite ``i`` may use for feedback."""
    return graph.neighbors(i)


class LocalView:
    """Read-only window onto pair-indexed data for one satellite's control loop.

    Readable pairs are ``(i, j)`` / ``(j, i)`` with ``j`` a neighbor of ``i``,
    plus edges joining two neighbors of ``i`` (needed for common-neighbor
    force terms). Anything else raises :class:`DecentralizationError`. Every
    read is appended to ``log`` so tests can audit the information pattern.
    """

    def __init__(self, graph: FormationGraph, owner: int, data: Mapping[tuple[int, int], object]):
        self.owner = owner
        nbrs = graph.neighbors(owner)
        self.allowed = {(owner, j) for j in nbrs}
        self.allowed |= {(a, b) for a in nbrs for b in nbrs if pair_key(a, b) in graph.edges}
        self.allowed |= {(j, i) for i, j in self.allowed}
        self._data = data
        self.log: list[tuple[int, int]] = []

    def __getitem__(self, pair: tuple[int, int]):
        if pair not in self.allowed:
            raise DecentralizationError(f"satellite {self.owner} may not read pair {pair}")
        self.log.append(pair)
        return self._data[pair]

    def get(self, pair, default=None):
        try:
            return self[pair]
        except KeyError:
            return default
