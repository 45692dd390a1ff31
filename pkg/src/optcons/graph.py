"""Weighted digraphs, their Laplacians and the spectral data used for gain tuning.

Convention: ``weights[i, j] = a_ij > 0`` means agent ``i`` receives from agent ``j``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidDimensionError, InvalidGraphError

BALANCE_RTOL = 1e-12


@dataclass(frozen=True)
class Digraph:
    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        try:
            a = np.array(self.weights, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidGraphError(f"adjacency is not a numeric matrix: {exc}") from exc
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidGraphError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidGraphError("adjacency has non-finite entries")
        if np.any(a < 0):
            raise InvalidGraphError("adjacency has negative weights")
        if np.any(np.diag(a) != 0):
            raise InvalidGraphError("adjacency must have a zero diagonal (no self loops)")
        a.setflags(write=False)
        object.__setattr__(self, "weights", a)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> list[int]:
        """In-neighbors of ``i``: the agents ``i`` listens to."""
        return [int(j) for j in np.flatnonzero(self.weights[i] > 0)]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Digraph":
        """Build from ``[src, dst, weight]`` triples (0-based): sets ``a[dst, src] = weight``."""
        if n < 1:
            raise InvalidGraphError("graph needs at least one node")
        a = np.zeros((n, n))
        for edge in edges:
            if len(edge) == 2:
                src, dst, w = edge[0], edge[1], 1.0
            elif len(edge) == 3:
                src, dst, w = edge
            else:
                raise InvalidGraphError(f"edge must be [src, dst] or [src, dst, weight], got {edge!r}")
            src, dst = int(src), int(dst)
            if not (0 <= src < n and 0 <= dst < n):
                raise InvalidGraphError(f"edge {edge!r} references a node outside 0..{n - 1}")
            if src == dst:
                raise InvalidGraphError(f"self loop on node {src}")
            a[dst, src] = float(w)
        return cls(a)

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Digraph":
        try:
            return cls.from_edges(int(obj["n"]), obj.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise InvalidGraphError(f"graph entry must look like {{'n': N, 'edges': [...]}}: {exc}") from exc

    def to_json(self) -> dict:
        n = self.n_nodes
        edges = [[j, i, float(self.weights[i, j])] for i in range(n) for j in range(n) if self.weights[i, j] > 0]
        return {"n": n, "edges": edges}


@dataclass(frozen=True)
class LaplacianReport:
    laplacian: NDArray[np.float64]
    sym_eigenvalues: NDArray[np.float64]
    lambda2: float
    lambdaN: float
    weight_balanced: bool
    strongly_connected: bool
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def satisfies_assumption(self) -> bool:
        return self.weight_balanced and self.strongly_connected

    def to_json(self) -> dict:
        return {
            "laplacian": self.laplacian.tolist(),
            "sym_eigenvalues": self.sym_eigenvalues.tolist(),
            "lambda2": self.lambda2,
            "lambdaN": self.lambdaN,
            "weight_balanced": self.weight_balanced,
            "strongly_connected": self.strongly_connected,
        }


@dataclass(frozen=True)
class ComplementBasis:
    m1: NDArray[np.float64]
    m2: NDArray[np.float64]


def laplacian(g: Digraph) -> NDArray[np.float64]:
    a = g.weights
    return np.diag(a.sum(axis=1)) - a


def is_weight_balanced(g: Digraph) -> bool:
    a = g.weights
    d_in = a.sum(axis=1)
    d_out = a.sum(axis=0)
    scale = max(1.0, float(np.max(np.maximum(d_in, d_out))))
    return bool(np.all(np.abs(d_in - d_out) <= BALANCE_RTOL * scale))


def _reachable(adj: NDArray[np.bool_], start: int) -> NDArray[np.bool_]:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        k = queue.popleft()
        for nxt in np.flatnonzero(adj[k] & ~seen):
            seen[nxt] = True
            queue.append(int(nxt))
    return seen


def is_strongly_connected(g: Digraph) -> bool:
    """Every node reaches node 0 and node 0 reaches every node."""
    # edge j -> i exists iff a_ij > 0, so forward successors of j are column j
    forward = (g.weights > 0).T
    if not _reachable(forward, 0).all():
        return False
    return bool(_reachable(forward.T, 0).all())


def sym_part(m: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (m + m.T)


def build_laplacian(g: Digraph) -> LaplacianReport:
    lap = laplacian(g)
    eig = np.sort(np.linalg.eigvalsh(sym_part(lap)))
    n = g.n_nodes
    lam2 = float(eig[1]) if n > 1 else 0.0
    return LaplacianReport(
        laplacian=lap,
        sym_eigenvalues=eig,
        lambda2=lam2,
        lambdaN=float(eig[-1]),
        weight_balanced=is_weight_balanced(g),
        strongly_connected=is_strongly_connected(g),
    )


def complement_basis(n: int) -> ComplementBasis:
    """Orthonormal basis ``m2`` of the complement of ``1/sqrt(n) * 1``.

    Built from the Householder reflector that maps ``e_1`` to ``m1``: its
    remaining columns are orthonormal and orthogonal to ``m1``.
    """
    if n < 2:
        raise InvalidDimensionError(f"complement basis needs n >= 2, got {n}")
    m1 = np.full(n, 1.0 / np.sqrt(n))
    u = m1.copy()
    u[0] -= 1.0
    u /= np.linalg.norm(u)
    reflector = np.eye(n) - 2.0 * np.outer(u, u)
    return ComplementBasis(m1=m1, m2=reflector[:, 1:].copy())


def example_digraph() -> Digraph:
    """Four-node ring 1->2->3->4->1 plus the two-way chords 1<->3 and 2<->4."""
    ring = [[0, 1], [1, 2], [2, 3], [3, 0]]
    chords = [[0, 2], [2, 0], [1, 3], [3, 1]]
    return Digraph.from_edges(4, ring + chords)
