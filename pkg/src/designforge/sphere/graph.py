"""Recursive embedded graphs on S^d carrying a weighted family of circles.

Every curve in the construction is an arc ``c + a cos t + b sin t`` with
``a``, ``b`` orthogonal of equal length: the base cases are circles and the
recursion only applies scaled isometries.  Curves are collected with their
junction parameters, then split into edges between junctions; vertices are
the junction points merged by coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .. import orthopoly
from ..errors import ArgumentError, UnsupportedDimensionError

__all__ = [
    "RadialDesign",
    "SphereGraphParams",
    "EmbeddedGraph",
    "half_design",
    "build_sphere_graph",
    "graph_length",
    "MAX_DEPTH",
]

MAX_DEPTH = 8
TWO_PI = 2.0 * np.pi
_MERGE_TOL = 1e-9
_RADIAL_GAP = 1e-3


@dataclass
class RadialDesign:
    """Weighted design ``(w_i, r_i)`` for ``(d+1) r^d dr`` on [0, 1], exact in r^2 up to ``strength``."""

    radii: np.ndarray
    weights: np.ndarray
    dim_param: int
    strength: int

    def __post_init__(self):
        n = max(self.strength, 1)
        if not (self.radii.min() >= _RADIAL_GAP / n and self.radii.max() <= 1.0 - _RADIAL_GAP / n**2):
            raise ArgumentError("radial design nodes too close to the endpoints")
        if np.any(self.weights <= 0):
            raise ArgumentError("radial weights must be positive")

    def __len__(self):
        return len(self.radii)


def half_design(d_exp: int, n: int) -> RadialDesign:
    """Radii and weights integrating polynomials of degree <= 2n+1 in r^2 against (d+1) r^d dr.

    Substituting ``s = r^2`` turns the measure into one proportional to
    ``s^((d-1)/2) ds``; its (n+1)-point Gauss rule gives ``r_i = sqrt(s_i)``.
    """
    if d_exp < 0 or n < 1:
        raise ArgumentError("need d_exp >= 0 and n >= 1")
    rule = orthopoly.shifted_rule_01(0.5 * (d_exp - 1), 0.0, n + 1)
    return RadialDesign(np.sqrt(rule.nodes), rule.weights.copy(), int(d_exp), int(n))


@dataclass(frozen=True)
class SphereGraphParams:
    A: float = 8.0
    B: float = 4.0
    d: int = 2
    n: int = 1

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise ArgumentError("A and B must be positive")
        if self.d < 1 or self.n < 1:
            raise ArgumentError("need d >= 1 and n >= 1")

    def scaled(self, factor: float) -> "SphereGraphParams":
        return SphereGraphParams(self.A * factor, self.B * factor, self.d, self.n)


@dataclass
class _Curves:
    """Mutable accumulator of arcs before splitting."""

    D: int
    center: list = field(default_factory=list)
    a: list = field(default_factory=list)
    b: list = field(default_factory=list)
    t0: list = field(default_factory=list)
    t1: list = field(default_factory=list)
    weight: list = field(default_factory=list)
    circle: list = field(default_factory=list)
    junctions: list = field(default_factory=list)

    def add(self, center, a, b, t0, t1, weight, circle, junctions=()):
        self.center.append(np.asarray(center, dtype=float))
        self.a.append(np.asarray(a, dtype=float))
        self.b.append(np.asarray(b, dtype=float))
        self.t0.append(float(t0))
        self.t1.append(float(t1))
        self.weight.append(float(weight))
        self.circle.append(bool(circle))
        self.junctions.append(list(junctions))
        return len(self.t0) - 1

    def __len__(self):
        return len(self.t0)


@dataclass
class EmbeddedGraph:
    """Graph on S^d whose edges are arcs ``center + a cos t + b sin t`` for t in [t0, t1].

    ``parent`` maps each edge to the curve it was cut from; weighted curves
    are full circles and their weight is spread uniformly in ``t``.
    """

    d: int
    vertices: np.ndarray
    center: np.ndarray
    a: np.ndarray
    b: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    weight: np.ndarray
    circle: np.ndarray
    u: np.ndarray
    v: np.ndarray
    parent: np.ndarray
    parent_weight: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def n_edges(self) -> int:
        return len(self.t0)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.a, axis=1)

    @property
    def lengths(self) -> np.ndarray:
        return self.radius * (self.t1 - self.t0)

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def edge_points(self, e: int, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.center[e] + np.outer(np.cos(t), self.a[e]) + np.outer(np.sin(t), self.b[e])

    def circle_parents(self) -> np.ndarray:
        """Indices of weighted parent curves (circles with positive weight)."""
        return np.flatnonzero(self.parent_weight > 0)

    def parent_arc(self, p: int):
        """(center, a, b) of parent curve p, recovered from any of its edges."""
        e = int(np.flatnonzero(self.parent == p)[0])
        return self.center[e], self.a[e], self.b[e]

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        parent = np.arange(self.n_vertices)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for x, y in zip(self.u, self.v):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry
        root = find(0)
        return all(find(x) == root for x in range(self.n_vertices))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        np.add.at(deg, self.u, 1)
        np.add.at(deg, self.v, 1)
        return deg

    def to_json(self) -> list:
        """Edge dump: one dict per edge with its arc geometry and weight."""
        out = []
        for e in range(self.n_edges):
            rho = float(np.linalg.norm(self.a[e]))
            out.append({
                "type": "circle" if self.circle[e] else "connector",
                "base_point": self.center[e].tolist(),
                "axis": [(self.a[e] / rho).tolist(), (self.b[e] / rho).tolist()],
                "radius": rho,
                "theta": [float(self.t0[e]), float(self.t1[e])],
                "weight": float(self.weight[e]),
                "length": float(rho * (self.t1[e] - self.t0[e])),
            })
        return out


def _finalize(d: int, curves: _Curves, info: dict) -> EmbeddedGraph:
    D = curves.D
    rows = {k: [] for k in ("center", "a", "b", "t0", "t1", "weight", "circle", "parent")}
    ends = []
    for c in range(len(curves)):
        t0, t1 = curves.t0[c], curves.t1[c]
        span = t1 - t0
        closed = abs(span - TWO_PI) < 1e-12
        js = np.asarray(curves.junctions[c], dtype=float)
        if closed:
            js = t0 + np.mod(js - t0, TWO_PI) if js.size else np.array([t0])
            js = np.unique(np.round(js, 13))
            cuts = np.concatenate([js, [js[0] + TWO_PI]])
        else:
            inner = js[(js > t0 + 1e-13) & (js < t1 - 1e-13)] if js.size else js
            cuts = np.unique(np.concatenate([[t0], np.round(inner, 13), [t1]]))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            rows["center"].append(curves.center[c])
            rows["a"].append(curves.a[c])
            rows["b"].append(curves.b[c])
            rows["t0"].append(lo)
            rows["t1"].append(hi)
            rows["weight"].append(curves.weight[c] * (hi - lo) / span)
            rows["circle"].append(curves.circle[c])
            rows["parent"].append(c)
    center = np.array(rows["center"]).reshape(-1, D)
    a = np.array(rows["a"]).reshape(-1, D)
    b = np.array(rows["b"]).reshape(-1, D)
    t0 = np.array(rows["t0"])
    t1 = np.array(rows["t1"])
    start = center + np.cos(t0)[:, None] * a + np.sin(t0)[:, None] * b
    stop = center + np.cos(t1)[:, None] * a + np.sin(t1)[:, None] * b
    ends = np.vstack([start, stop])
    labels = _merge_points(ends)
    uniq, inv = np.unique(labels, return_inverse=True)
    vertices = np.zeros((len(uniq), D))
    vertices[inv] = ends  # any representative is within the merge tolerance
    E = len(t0)
    parent_weight = np.array(curves.weight)
    return EmbeddedGraph(
        d=d, vertices=vertices, center=center, a=a, b=b, t0=t0, t1=t1,
        weight=np.array(rows["weight"]), circle=np.array(rows["circle"], dtype=bool),
        u=inv[:E], v=inv[E:], parent=np.array(rows["parent"], dtype=int),
        parent_weight=parent_weight, info=info,
    )


def _merge_points(points):
    n = len(points)
    label = np.arange(n)

    def find(x):
        while label[x] != x:
            label[x] = label[label[x]]
            x = label[x]
        return x

    for i, j in cKDTree(points).query_pairs(_MERGE_TOL, output_type="ndarray"):
        ri, rj = find(i), find(j)
        if ri != rj:
            label[max(ri, rj)] = min(ri, rj)
    return np.array([find(i) for i in range(n)])


def _rotation_to(src, dst):
    """Rotation matrix taking unit vector src to unit vector dst (acting in their plane)."""
    D = len(src)
    c = float(np.clip(src @ dst, -1.0, 1.0))
    w = dst - c * src
    s = np.linalg.norm(w)
    if s < 1e-14:
        if c > 0:
            return np.eye(D)
        # antipodal: rotate by pi in a plane containing src
        w = np.eye(D)[np.argmin(np.abs(src))]
        w = w - (w @ src) * src
        w /= np.linalg.norm(w)
        return np.eye(D) - 2 * np.outer(src, src) - 2 * np.outer(w, w)
    w /= s
    return (np.eye(D) + (c - 1.0) * (np.outer(src, src) + np.outer(w, w))
            + s * (np.outer(w, src) - np.outer(src, w)))


def _swap(D, i, j):
    P = np.eye(D)
    P[[i, j]] = P[[j, i]]
    return P


def _component_sizes(params: SphereGraphParams, radii):
    d, n = params.d, params.n
    log_n = math.log(n) if n > 1 else 0.0
    big_n = params.A * n ** (d - 2) * log_n ** (d - 2)
    sizes, strengths = [], []
    for r in radii:
        sizes.append(max(1, int(math.floor(r ** (d - 2) * big_n))))
        denom = math.log(n * r * log_n) if n * r * log_n > 0 else 0.0
        k = params.B * r * n * log_n / max(denom, 1.0)
        strengths.append(max(1, int(math.floor(k))))
    return sizes, strengths


def build_sphere_graph(params: SphereGraphParams, max_depth: int = MAX_DEPTH,
                       refine_components: bool = False) -> EmbeddedGraph:
    """Construct the connected graph ``G^d_n``.

    d = 1 gives the circle itself; d = 2 uses latitude circles at heights
    ``+-r_i`` plus a copy rotated by 90 degrees; d > 2 places circles over
    designs on recursively built graphs for S^{d-2}, joined at theta = 0 by
    the lifted sub-graphs, and adds the image under the x_2 <-> x_d swap.
    Circle edges carry weights ``w_i / N_i`` (normalized to total one over
    the whole graph); connector edges carry zero weight.
    """
    if params.d > max_depth:
        raise UnsupportedDimensionError(f"d={params.d} exceeds the recursion cap {max_depth}")
    return _build(params, max_depth, refine_components, {})


def graph_length(params: SphereGraphParams, max_depth: int = MAX_DEPTH) -> float:
    """Total edge length of ``G^d_n`` computed from the construction without building it.

    Scaled copies of a sub-graph scale its length by ``r_i``, so the count
    recurses on the radii and component sizes alone.
    """
    if params.d > max_depth:
        raise UnsupportedDimensionError(f"d={params.d} exceeds the recursion cap {max_depth}")
    return _graph_length(params.d, params.n, params.A, params.B)


def _graph_length(d, n, A, B):
    if d == 1:
        return TWO_PI
    if d == 2:
        r = half_design(0, 2 * n).radii
        return 4.0 * TWO_PI * float(np.sqrt(1.0 - r**2).sum())
    r = half_design(d - 2, 2 * n).radii
    sizes, strengths = _component_sizes(SphereGraphParams(A, B, d, n), r)
    one_copy = sum(N_i * TWO_PI * math.sqrt(1.0 - r_i**2) + r_i * _graph_length(d - 2, k_i, A, B)
                   for r_i, N_i, k_i in zip(r, sizes, strengths))
    return 2.0 * one_copy


def _build(params, max_depth, refine_components, cache):
    key = (params.d, params.n, params.A, params.B)
    if key in cache:
        return cache[key]
    d, n = params.d, params.n
    D = d + 1
    curves = _Curves(D)
    info = {"d": d, "n": n, "A": params.A, "B": params.B, "drift": 0.0}
    if d == 1:
        curves.add(np.zeros(2), [1.0, 0.0], [0.0, 1.0], 0.0, TWO_PI, 1.0, True, [0.0])
        info["radii"] = []
    elif d == 2:
        _build_d2(params, curves, info)
    else:
        _build_high(params, curves, info, max_depth, refine_components, cache)
    total = sum(curves.weight)
    curves.weight = [w / total for w in curves.weight]
    graph = _finalize(d, curves, info)
    cache[key] = graph
    return graph


def _build_d2(params, curves, info):
    n = params.n
    rd = half_design(0, 2 * n)
    r, w = rd.radii, rd.weights
    rho = np.sqrt(1.0 - r**2)
    info["radii"] = r.tolist()
    i1 = int(np.argmin(r))
    if r[i1] ** 2 + r.max() ** 2 > 1.0:
        raise ArgumentError("central rotated circle misses the outermost latitude")
    e = np.eye(3)
    P = _swap(3, 0, 1)
    ids_h, ids_hp = {}, {}
    for i in range(len(r)):
        for s in (1.0, -1.0):
            ids_h[i, s] = curves.add(s * r[i] * e[0], rho[i] * e[1], rho[i] * e[2], 0.0, TWO_PI, w[i] / 2, True)
    for i in range(len(r)):
        for s in (1.0, -1.0):
            ids_hp[i, s] = curves.add(P @ (s * r[i] * e[0]), P @ (rho[i] * e[1]), P @ (rho[i] * e[2]),
                                      0.0, TWO_PI, w[i] / 2, True)
    # the innermost circle of each copy meets every circle of the other copy
    for own, other in ((ids_hp, ids_h), (ids_h, ids_hp)):
        central = own[i1, 1.0]
        for (i, s), cid in other.items():
            # central: x_own_axis = r1, point  (s r_i) along the other axis
            cos_phi = s * r[i] / rho[i1]
            cos_th = r[i1] / rho[i]
            phi = math.atan2(math.sqrt(max(0.0, 1 - cos_phi**2)), cos_phi)
            th = math.atan2(math.sqrt(max(0.0, 1 - cos_th**2)), cos_th)
            curves.junctions[central].append(phi)
            curves.junctions[cid].append(th)


def _build_high(params, curves, info, max_depth, refine_components, cache):
    from .circuit import euler_circuit, quantize_circuit

    d, n = params.d, params.n
    D = d + 1
    rd = half_design(d - 2, 2 * n)
    r, w = rd.radii, rd.weights
    rho = np.sqrt(1.0 - r**2)
    sizes, strengths = _component_sizes(params, r)
    info.update(radii=r.tolist(), component_sizes=sizes, component_strengths=strengths)
    i1 = int(np.argmin(r))
    e = np.eye(D)
    drift = 0.0
    first_circle = {}
    h_start = len(curves)
    for i in range(len(r)):
        sub = _build(SphereGraphParams(params.A, params.B, d - 2, strengths[i]), max_depth,
                     refine_components, cache)
        with warnings.catch_warnings():
            # component designs only need to lie on the sub-graph
            warnings.simplefilter("ignore", RuntimeWarning)
            q = quantize_circuit(sub, euler_circuit(sub), sizes[i])
        u = q.points
        if refine_components and d - 2 >= 2 and strengths[i] < sizes[i]:
            from .design import refine_points

            u_ref = refine_points(d - 2, strengths[i], u)
            drift = max(drift, float(np.max(np.linalg.norm(u_ref - u, axis=1))))
            u = u_ref
        target = np.zeros(d - 1)
        target[0] = r[i1] / r[i]
        if d - 1 > 1:
            target[1] = math.sqrt(max(0.0, 1.0 - target[0] ** 2))
        R = _rotation_to(u[0] / np.linalg.norm(u[0]), target)
        lin = np.zeros((D, d - 1))
        lin[: d - 1] = r[i] * R
        offset = rho[i] * e[d - 1]
        # lifted connector graph at theta = 0, split where circles attach
        sub_junctions = {}
        for k, (edge, t) in enumerate(zip(q.edge_ids, q.thetas)):
            sub_junctions.setdefault(int(edge), []).append(float(t))
        for edge in range(sub.n_edges):
            curves.add(lin @ sub.center[edge] + offset, lin @ sub.a[edge], lin @ sub.b[edge],
                       sub.t0[edge], sub.t1[edge], 0.0, False,
                       sub_junctions.get(edge, []) + [float(sub.t0[edge])])
        for j in range(len(u)):
            cid = curves.add(np.concatenate([r[i] * R @ u[j], [0.0, 0.0]]), rho[i] * e[d - 1], rho[i] * e[d],
                             0.0, TWO_PI, w[i] / len(u), True, [0.0])
            if j == 0:
                first_circle[i] = cid
    h_end = len(curves)
    P = _swap(D, 1, d - 1)
    mirror = {}
    for c in range(h_start, h_end):
        mirror[c] = curves.add(P @ curves.center[c], P @ curves.a[c], P @ curves.b[c], curves.t0[c],
                               curves.t1[c], curves.weight[c], curves.circle[c], curves.junctions[c])
    # circle over u_{1,1} in each copy meets the circle over u_{i,1} of the other copy
    for i, cid in first_circle.items():
        cos_phi = math.sqrt(max(0.0, r[i] ** 2 - r[i1] ** 2)) / rho[i1]
        phi = math.atan2(rho[i] / rho[i1], cos_phi)
        curves.junctions[mirror[first_circle[i1]]].append(phi)
        curves.junctions[cid].append(0.5 * np.pi)
        curves.junctions[first_circle[i1]].append(phi)
        curves.junctions[mirror[cid]].append(0.5 * np.pi)
    info["drift"] = drift
    info["n_circles"] = 2 * sum(sizes)
