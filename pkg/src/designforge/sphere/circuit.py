"""Euler circuits on doubled graphs and quantization of their weight measure."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError
from .graph import EmbeddedGraph

__all__ = ["Circuit", "QuantizedPoints", "euler_circuit", "quantize_circuit"]


@dataclass
class Circuit:
    """Closed walk as a list of ``(edge, forward)`` traversals."""

    graph: EmbeddedGraph
    edges: np.ndarray
    forward: np.ndarray

    def __len__(self):
        return len(self.edges)

    def endpoints(self, k: int):
        e = self.edges[k]
        g = self.graph
        if self.forward[k]:
            return g.edge_points(e, g.t0[e])[0], g.edge_points(e, g.t1[e])[0]
        return g.edge_points(e, g.t1[e])[0], g.edge_points(e, g.t0[e])[0]

    def vertex_sequence(self) -> np.ndarray:
        g = self.graph
        start = np.where(self.forward, g.u[self.edges], g.v[self.edges])
        return start

    def is_closed(self) -> bool:
        g = self.graph
        start = np.where(self.forward, g.u[self.edges], g.v[self.edges])
        stop = np.where(self.forward, g.v[self.edges], g.u[self.edges])
        return bool(np.all(stop[:-1] == start[1:]) and stop[-1] == start[0])

    def traversal_counts(self) -> np.ndarray:
        return np.bincount(self.edges, minlength=self.graph.n_edges)

    @property
    def length(self) -> float:
        return float(self.graph.lengths[self.edges].sum())

    @property
    def weights(self) -> np.ndarray:
        """Weight carried by each traversal (half its edge's weight)."""
        return 0.5 * self.graph.weight[self.edges]


def euler_circuit(graph: EmbeddedGraph, start: int = 0) -> Circuit:
    """Hierholzer's algorithm on the multigraph with every edge doubled."""
    if not graph.is_connected():
        raise ArgumentError("graph is not connected")
    V = graph.n_vertices
    adj = [[] for _ in range(V)]
    for e in range(graph.n_edges):
        u, v = int(graph.u[e]), int(graph.v[e])
        for copy in (0, 1):
            h = 2 * e + copy
            adj[u].append((h, v, True))
            adj[v].append((h, u, False))
    used = np.zeros(2 * graph.n_edges, dtype=bool)
    ptr = [0] * V
    stack = [(start, -1, True)]
    popped = []
    while stack:
        vtx, h, fwd = stack[-1]
        lst = adj[vtx]
        p = ptr[vtx]
        while p < len(lst) and used[lst[p][0]]:
            p += 1
        ptr[vtx] = p
        if p == len(lst):
            stack.pop()
            if h >= 0:
                popped.append((h // 2, fwd))
        else:
            hh, other, f = lst[p]
            used[hh] = True
            stack.append((other, hh, f))
    # popped order walks each pushed edge against its push direction
    edges = np.array([e for e, _ in popped], dtype=int)
    forward = np.array([not f for _, f in popped], dtype=bool)
    return Circuit(graph, edges, forward)


@dataclass
class QuantizedPoints:
    points: np.ndarray
    edge_ids: np.ndarray
    thetas: np.ndarray
    counts: dict
    coarse: bool


def quantize_circuit(graph: EmbeddedGraph, circuit: Circuit, N: int) -> QuantizedPoints:
    """Place N points where the circuit's cumulative weight crosses (i - 1/2)/N.

    Weighted circles are taken in order of first traversal and each carries
    its full weight as one block, so a circle of weight ``w`` receives
    ``N w`` points up to rounding by less than one; its points are then
    spread evenly in angle.  Zero-weight connectors receive nothing.
    """
    if int(N) != N or N < 1:
        raise ArgumentError("N must be a positive integer")
    N = int(N)
    order = []
    seen = set()
    for e in circuit.edges:
        p = int(graph.parent[e])
        if graph.parent_weight[p] > 0 and p not in seen:
            seen.add(p)
            order.append(p)
    weights = graph.parent_weight[order]
    weights = weights / weights.sum()
    cum = np.concatenate([[0.0], np.cumsum(weights)])
    marks = np.ceil(N * cum + 0.5 - 1e-12).astype(int)
    marks[-1] = N + 1
    marks[0] = 1
    counts = np.diff(marks)
    coarse = N < len(order)
    if coarse:
        warnings.warn(f"N={N} is below the number of weighted circles ({len(order)})", RuntimeWarning,
                      stacklevel=2)
    pts, eids, ths = [], [], []
    count_map = {}
    for p, c in zip(order, counts):
        count_map[p] = int(c)
        if c == 0:
            continue
        edges = np.flatnonzero(graph.parent == p)
        base = graph.t0[edges].min()
        t = base + 2 * np.pi * (np.arange(c) + 0.5) / c
        for tk in t:
            hit = edges[(graph.t0[edges] <= tk) & (tk <= graph.t1[edges])][0]
            eids.append(int(hit))
            ths.append(float(tk))
            pts.append(graph.edge_points(hit, tk)[0])
    points = np.array(pts)
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    return QuantizedPoints(points, np.array(eids, dtype=int), np.array(ths), count_map, coarse)
