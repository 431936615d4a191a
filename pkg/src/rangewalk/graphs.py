"""Weighted range graph of a lattice path and its electrical quantities.

The graph has one vertex per visited point and one edge per traversed
nearest-neighbour pair (deduplicated).  An edge {x, y} carries conductance
beta ** max(x1, y1) where x1 is the first coordinate, so for beta > 1 the
walk on the graph drifts toward increasing first coordinate.  Conductances
are kept in log space throughout: raw values overflow float64 once first
coordinates pass roughly 700 / log(beta), and every consumer either needs
ratios (transition probabilities) or log magnitudes (resistances).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ._coding import as_point_array, order_keys, row_bytes
from .errors import NumericalError, ValidationError
from .walks import LatticePath

__all__ = [
    "RangeGraph",
    "build_range_graph",
    "effective_resistance",
    "log_effective_resistance",
    "check_resistance_bounds",
    "normalized_weights",
]


def normalized_weights(log_weights: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Probabilities proportional to exp(log_weights), max-rescaled.

    Returns (probs, rescale, total) where the unnormalized rescaled mass of
    entry i is exp(log_weights[i] - rescale) and total is their sum.  Every
    module that converts conductances to probabilities goes through here so
    coupled simulations agree bit for bit.
    """
    rescale = float(np.max(log_weights))
    scaled = np.exp(log_weights - rescale)
    total = float(scaled.sum())
    return scaled / total, rescale, total


class RangeGraph:
    """Immutable weighted graph over the generated window of a path."""

    def __init__(self, path: LatticePath, beta: float):
        if beta < 1:
            raise ValidationError("bias parameter beta must be >= 1")
        self.beta = float(beta)
        self.log_beta = float(np.log(beta))
        self.path = path
        self.d = path.d

        window = path.positions()
        keys = order_keys(window)
        uniq_keys, first_rows, inverse = np.unique(
            keys, return_index=True, return_inverse=True
        )
        self.coords = np.ascontiguousarray(window[first_rows])
        self._id_of = {k: i for i, k in enumerate(row_bytes(self.coords))}
        n_v = self.coords.shape[0]

        u = inverse[:-1]
        v = inverse[1:]
        lo_id = np.minimum(u, v).astype(np.int64)
        hi_id = np.maximum(u, v).astype(np.int64)
        packed = np.unique(lo_id * np.int64(n_v) + hi_id)
        self.edge_u = (packed // n_v).astype(np.int64)
        self.edge_v = (packed % n_v).astype(np.int64)
        self._packed_edges = packed
        first_coord = self.coords[:, 0].astype(np.float64)
        self.edge_log_c = self.log_beta * np.maximum(
            first_coord[self.edge_u], first_coord[self.edge_v]
        )

        # symmetric CSR; within each vertex the neighbour order is the
        # canonical (numeric lexicographic) vertex order
        src = np.concatenate([self.edge_u, self.edge_v])
        dst = np.concatenate([self.edge_v, self.edge_u])
        logc = np.concatenate([self.edge_log_c, self.edge_log_c])
        order = np.lexsort((dst, src))
        self.indptr = np.zeros(n_v + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_v), out=self.indptr[1:])
        self.nbr = dst[order]
        self.nbr_log_c = logc[order]

        # vertex measure mu(x) = sum of incident conductances, stored as
        # (rescale, plain sum) so beta = 1 recovers integer degrees exactly
        degrees = np.diff(self.indptr)
        self._mu_rescale = np.maximum.reduceat(self.nbr_log_c, self.indptr[:-1])
        scaled = np.exp(self.nbr_log_c - np.repeat(self._mu_rescale, degrees))
        self._mu_sum = np.add.reduceat(scaled, self.indptr[:-1])

    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_u.shape[0]

    def vertex_id(self, point) -> int:
        key = np.ascontiguousarray(point, dtype=np.int64).tobytes()
        vid = self._id_of.get(key)
        if vid is None:
            raise ValidationError(f"point {np.asarray(point).tolist()} not a vertex")
        return vid

    def degree(self, point) -> int:
        x = self.vertex_id(point)
        return int(self.indptr[x + 1] - self.indptr[x])

    def neighbours(self, point) -> np.ndarray:
        x = self.vertex_id(point)
        return self.coords[self.nbr[self.indptr[x] : self.indptr[x + 1]]].copy()

    def _edge_slot(self, x: int, y: int) -> int:
        lo, hi = (x, y) if x < y else (y, x)
        packed = lo * np.int64(self.n_vertices) + hi
        i = int(np.searchsorted(self._packed_edges, packed))
        if i >= self._packed_edges.shape[0] or self._packed_edges[i] != packed:
            raise ValidationError("requested pair is not an edge")
        return i

    def log_conductance(self, point_a, point_b) -> float:
        i = self._edge_slot(self.vertex_id(point_a), self.vertex_id(point_b))
        return float(self.edge_log_c[i])

    def conductance(self, point_a, point_b) -> float:
        return float(np.exp(self.log_conductance(point_a, point_b)))

    def log_vertex_measure(self, point) -> float:
        x = self.vertex_id(point)
        return float(self._mu_rescale[x] + np.log(self._mu_sum[x]))

    def vertex_measure(self, point) -> float:
        x = self.vertex_id(point)
        return float(np.exp(self._mu_rescale[x]) * self._mu_sum[x])

    def transition_probs(self, point) -> tuple[np.ndarray, np.ndarray]:
        """(neighbour coords, probabilities) for one step from the point."""
        x = self.vertex_id(point)
        sl = slice(self.indptr[x], self.indptr[x + 1])
        probs, _, _ = normalized_weights(self.nbr_log_c[sl])
        return self.coords[self.nbr[sl]].copy(), probs

    def transition_prob(self, point_a, point_b) -> float:
        x = self.vertex_id(point_a)
        y = self.vertex_id(point_b)
        sl = slice(self.indptr[x], self.indptr[x + 1])
        probs, _, _ = normalized_weights(self.nbr_log_c[sl])
        hits = np.nonzero(self.nbr[sl] == y)[0]
        if hits.shape[0] == 0:
            return 0.0
        return float(probs[hits[0]])


def build_range_graph(path: LatticePath, beta: float) -> RangeGraph:
    """Range graph over the generated window with bias conductances."""
    return RangeGraph(path, beta)


def _induced_ids(graph: RangeGraph, support) -> np.ndarray:
    if support is None:
        return np.arange(graph.n_vertices, dtype=np.int64)
    pts = as_point_array(support)
    uniq = np.unique(order_keys(pts), return_index=True)[1]
    return np.unique(
        np.asarray([graph.vertex_id(pts[i]) for i in uniq], dtype=np.int64)
    )


def log_effective_resistance(
    graph: RangeGraph, source, sinks, support=None
) -> float:
    """log of the effective resistance between source and a sink set.

    Solves the harmonic problem on the subgraph induced by ``support``
    (unit potential at the source, zero on the sinks) and returns
    log(1 / current out of the source).  Conductances are max-rescaled
    inside the solve, so the result is finite wherever float64 logs are.
    """
    src = graph.vertex_id(source)
    sink_pts = as_point_array(sinks)
    sink_ids = np.asarray([graph.vertex_id(p) for p in sink_pts], dtype=np.int64)
    ids = _induced_ids(graph, support)
    local = {int(g): i for i, g in enumerate(ids)}
    if src not in local or any(int(s) not in local for s in sink_ids):
        raise ValidationError("source and sinks must lie inside the support")
    if src in set(int(s) for s in sink_ids):
        raise ValidationError("source cannot also be a sink")

    # induced edges, rescaled
    sub_edges = []
    for gi in ids:
        for slot in range(graph.indptr[gi], graph.indptr[gi + 1]):
            gj = int(graph.nbr[slot])
            if gj > gi and gj in local:
                sub_edges.append((local[int(gi)], local[gj], graph.nbr_log_c[slot]))
    if not sub_edges:
        raise ValidationError("support induces no edges")
    eu = np.asarray([e[0] for e in sub_edges], dtype=np.int64)
    ev = np.asarray([e[1] for e in sub_edges], dtype=np.int64)
    elc = np.asarray([e[2] for e in sub_edges], dtype=np.float64)
    rescale = float(elc.max())
    w = np.exp(elc - rescale)

    # connectivity of the induced subgraph
    n_local = ids.shape[0]
    adj: list[list[int]] = [[] for _ in range(n_local)]
    for a, b in zip(eu, ev):
        adj[a].append(int(b))
        adj[b].append(int(a))
    seen = np.zeros(n_local, dtype=bool)
    stack = [local[src]]
    seen[local[src]] = True
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if not seen[nxt]:
                seen[nxt] = True
                stack.append(nxt)
    if not seen.all():
        raise ValidationError("support does not induce a connected subgraph")

    src_l = local[src]
    sink_l = np.asarray(sorted(local[int(s)] for s in sink_ids), dtype=np.int64)
    is_interior = np.ones(n_local, dtype=bool)
    is_interior[src_l] = False
    is_interior[sink_l] = False
    interior = np.nonzero(is_interior)[0]
    pos_of = -np.ones(n_local, dtype=np.int64)
    pos_of[interior] = np.arange(interior.shape[0])

    k = interior.shape[0]
    lap = np.zeros((k, k))
    rhs = np.zeros(k)
    boundary_v = np.zeros(n_local)
    boundary_v[src_l] = 1.0
    for a, b, cw in zip(eu, ev, w):
        for p, q in ((a, b), (b, a)):
            if is_interior[p]:
                i = pos_of[p]
                lap[i, i] += cw
                if is_interior[q]:
                    lap[i, pos_of[q]] -= cw
                else:
                    rhs[i] += cw * boundary_v[q]
    potential = np.zeros(n_local)
    potential[src_l] = 1.0
    if k:
        try:
            sol = scipy.linalg.solve(lap, rhs)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalError(
                f"singular harmonic system (cond ~ {np.linalg.cond(lap):.3g})"
            ) from exc
        potential[interior] = sol

    current = 0.0
    for a, b, cw in zip(eu, ev, w):
        if a == src_l:
            current += cw * (1.0 - potential[b])
        elif b == src_l:
            current += cw * (1.0 - potential[a])
    if current <= 0:
        raise NumericalError("non-positive current out of the source")
    return float(-np.log(current) - rescale)


def effective_resistance(graph: RangeGraph, source, sinks, support=None) -> float:
    """Linear-scale effective resistance (may overflow for extreme graphs)."""
    return float(np.exp(log_effective_resistance(graph, source, sinks, support)))


def check_resistance_bounds(graph: RangeGraph, cuts, n: int, rel_slack: float = 1e-12):
    """Compare R_eff(C_n, C_{n+1}) against its single-edge and series bounds.

    The resistance is at least the resistance of the forced first edge of
    the segment and at most the series sum bounded by (segment length)
    times the largest single-edge resistance along it.  Returns a dict with
    both log-scale gaps; negative gaps beyond ``rel_slack`` mean violation.
    """
    path = cuts.path
    t0, t1 = cuts.T(n), cuts.T(n + 1)
    seg = path.positions(t0, t1)
    log_r = log_effective_resistance(graph, seg[0], seg[-1], support=seg)
    lb = graph.log_beta
    first = seg[:, 0].astype(np.float64)
    log_lower = -lb * max(first[0], first[1])
    log_upper = float(np.log(t1 - t0) - lb * first[:-1].min())
    scale = max(1.0, abs(log_lower), abs(log_upper))
    return {
        "n": n,
        "log_resistance": log_r,
        "log_lower": log_lower,
        "log_upper": log_upper,
        "lower_gap": log_r - log_lower,
        "upper_gap": log_upper - log_r,
        "ok": (log_r - log_lower) >= -rel_slack * scale
        and (log_upper - log_r) >= -rel_slack * scale,
    }
