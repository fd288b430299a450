"""Mesh and Clos switching topologies over satellite clusters, with graph metrics.

Mesh graphs link satellites by physical proximity at the orbit start epoch.
Clos topologies are VL2-style multi-tier switching fabrics: top-of-rack (ToR)
nodes in pods, two mirrored planes of aggregation tiers, and a shared
intermediate (INT) tier. An L-layer fabric with even port count k supports at
most (k/2)^(L-1) ToRs and (k/2)^(L-1) + (2L-3)(k/2)^(L-2) total nodes for
L >= 3; pruning adapts the maximal fabric to an exact node budget while every
remaining ToR keeps both uplink planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial import cKDTree

from orbitfab.clusters import DEFAULT_CHIEF, Cluster, ClusterParams, generate

DEFAULT_MESH_ILOCAL = math.radians(43.8)
MESH_NEIGHBOR_SLACK = 1.01
THREE_D_MESH_NEIGHBORS = 8
FIEDLER_TOL = 1e-8
DENSE_EIG_CUTOFF = 2000


class DisconnectedGraphError(ValueError):
    """Raised when a metric requires a connected graph."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph as a symmetric boolean adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if a.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        a = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            a[u, v] = a[v, u] = True
        return cls(a)


def mesh_graph(cluster: Cluster) -> Graph:
    """Proximity mesh over the cluster's start-epoch positions.

    planar: neighbors within 1.01 r_min (hexagonal mesh, up to 6 links).
    three_d: 8 nearest neighbors, symmetrized by union.
    """
    design = cluster.params.design
    _, pos = cluster.trajectories()
    p0 = pos[:, 0, :]
    n = len(p0)
    a = np.zeros((n, n), dtype=bool)
    if n <= 1:
        return Graph(a)
    if design == "planar":
        tree = cKDTree(p0)
        for i, j in tree.query_pairs(MESH_NEIGHBOR_SLACK * cluster.params.r_min):
            a[i, j] = a[j, i] = True
    elif design == "three_d":
        tree = cKDTree(p0)
        k = min(THREE_D_MESH_NEIGHBORS + 1, n)
        _, idx = tree.query(p0, k=k)
        for i in range(n):
            for j in idx[i, 1:]:
                a[i, j] = a[j, i] = True
    else:
        raise ValueError(f"no mesh rule for design {design!r}")
    return Graph(a)


@dataclass(frozen=True)
class GraphMetrics:
    """Hop-count and spectral summary of a connected graph."""

    diameter: int
    mean_path_length: float
    bisection_bandwidth_estimate: int
    fiedler_value: float


def _laplacian(a: np.ndarray) -> np.ndarray:
    lap = -a.astype(float)
    np.fill_diagonal(lap, a.sum(axis=1))
    return lap


def fiedler(g: Graph, method: str = "auto", tol: float = FIEDLER_TOL) -> tuple[float, np.ndarray]:
    """Second-smallest Laplacian eigenvalue and its eigenvector.

    Dense symmetric eigensolve at desk scale; above DENSE_EIG_CUTOFF nodes an
    iterative solver on the Laplacian with the all-ones vector deflated.
    """
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown fiedler method {method!r}")
    n = g.n
    if method == "auto":
        method = "dense" if n <= DENSE_EIG_CUTOFF else "iterative"
    lap = _laplacian(g.adjacency)
    if method == "dense":
        vals, vecs = np.linalg.eigh(lap)
        return float(vals[1]), vecs[:, 1]
    from scipy.sparse.linalg import lobpcg

    ones = np.ones((n, 1)) / math.sqrt(n)
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((n, 1))
    x0 -= ones * (ones.T @ x0)
    val, vec = lobpcg(csr_matrix(lap), x0, Y=ones, tol=tol, maxiter=5000, largest=False)
    return float(val[0]), vec[:, 0]


def spectral_bisection_cut(g: Graph, vector: np.ndarray) -> int:
    """Edges crossing the balanced split at the Fiedler vector's median."""
    order = np.argsort(vector, kind="stable")
    side = np.zeros(g.n, dtype=bool)
    side[order[g.n // 2 :]] = True
    return int(g.adjacency[np.ix_(side, ~side)].sum())


def graph_metrics(g: Graph, fiedler_method: str = "auto") -> GraphMetrics:
    """Diameter and mean path length by all-pairs BFS, Fiedler value, and a
    median-threshold spectral bisection cut estimate."""
    if g.n < 2:
        raise ValueError("metrics need at least 2 nodes")
    sparse = csr_matrix(g.adjacency)
    n_comp, _ = connected_components(sparse, directed=False)
    if n_comp != 1:
        raise DisconnectedGraphError(f"graph has {n_comp} components; metrics need 1")
    dist = shortest_path(sparse, method="D", directed=False, unweighted=True)
    off_diag = dist[~np.eye(g.n, dtype=bool)]
    lam2, vec = fiedler(g, fiedler_method)
    return GraphMetrics(
        diameter=int(off_diag.max()),
        mean_path_length=float(off_diag.mean()),
        bisection_bandwidth_estimate=spectral_bisection_cut(g, vec),
        fiedler_value=lam2,
    )


def mesh_scaling(
    design: str,
    ratios,
    r_min: float = 100.0,
    chief=DEFAULT_CHIEF,
    i_local: float = DEFAULT_MESH_ILOCAL,
    fiedler_method: str = "auto",
) -> list[tuple[int, GraphMetrics]]:
    """Mesh graph metrics per r_max/r_min ratio for a cluster design family."""
    out = []
    for ratio in ratios:
        if ratio <= 0:
            raise ValueError("ratios must be positive")
        params = ClusterParams(
            design,
            r_min,
            ratio * r_min,
            i_local if design == "three_d" else None,
            chief,
        )
        cluster = generate(params)
        metrics = graph_metrics(mesh_graph(cluster), fiedler_method)
        out.append((cluster.n_sats, metrics))
    return out


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("need at least two positive points")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------------------
# Clos switching fabrics


def clos_capacity(k: int, layers: int) -> int:
    """Maximum node count of an L-layer k-port fabric."""
    _check_clos_args(k, layers)
    if layers == 1:
        return k + 1
    if layers == 2:
        return 3 * k // 2
    b = k // 2
    return b ** (layers - 1) + (2 * layers - 3) * b ** (layers - 2)


def clos_tor_capacity(k: int, layers: int) -> int:
    """Maximum ToR count of an L-layer k-port fabric."""
    _check_clos_args(k, layers)
    if layers == 1:
        return k + 1
    if layers == 2:
        return k
    return (k // 2) ** (layers - 1)


def choose_layers(n_sats: int, k_max: int) -> int:
    """Smallest layer count whose capacity covers n_sats."""
    if n_sats < 1:
        raise ValueError("n_sats must be >= 1")
    _check_clos_args(k_max, 1)
    if n_sats <= k_max + 1:
        return 1
    if n_sats <= 3 * k_max // 2:
        return 2
    layers = 3
    while clos_capacity(k_max, layers) < n_sats:
        layers += 1
    return layers


def compute_ratio(k: int, layers: int) -> float:
    """Fraction of fabric nodes that are ToRs at full build-out, k/(k+4L-6)."""
    _check_clos_args(k, layers)
    if layers < 3:
        raise ValueError("ratio formula holds for layers >= 3")
    return k / (k + 4 * layers - 6)


def _check_clos_args(k: int, layers: int) -> None:
    if k < 2 or k % 2 != 0:
        raise ValueError(f"port count must be even and >= 2, got {k}")
    if layers < 1:
        raise ValueError(f"layer count must be >= 1, got {layers}")


@dataclass(frozen=True)
class ClosTopology:
    """L-layer k-port switching fabric over node ids 0..n-1.

    ``agg_levels[i]`` holds the aggregation ids of level i+1 (both planes);
    node degree of every non-ToR switch is at most k.
    """

    k: int
    layers: int
    tor_ids: tuple[int, ...]
    agg_levels: tuple[tuple[int, ...], ...]
    int_ids: tuple[int, ...]
    graph: Graph
    pod_of_tor: tuple[int, ...] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.graph.n

    @property
    def n_tor(self) -> int:
        return len(self.tor_ids)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "L": self.layers,
            "layers": {
                "tor": list(self.tor_ids),
                "agg": [list(level) for level in self.agg_levels],
                "int": list(self.int_ids),
            },
            "edges": [[u, v] for u, v in self.graph.edges()],
            "pods": list(self.pod_of_tor),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ClosTopology":
        layers = data["layers"]
        ids = (
            list(layers["tor"])
            + [g for level in layers["agg"] for g in level]
            + list(layers["int"])
        )
        return cls(
            k=data["k"],
            layers=data["L"],
            tor_ids=tuple(layers["tor"]),
            agg_levels=tuple(tuple(level) for level in layers["agg"]),
            int_ids=tuple(layers["int"]),
            graph=Graph.from_edges(len(ids), data["edges"]),
            pod_of_tor=tuple(data["pods"]),
        )


def _block_base(g: int, stride: int, b: int) -> int:
    # zero the varied digit: members of a block share all other digits
    return g - ((g // stride) % b) * stride


def _block_members(base: int, stride: int, b: int) -> list[int]:
    return [base + v * stride for v in range(b)]


def _assemble(
    k: int,
    layers: int,
    pod_tor_counts: list[int],
    level_sets: list[list[int]],
) -> ClosTopology:
    """Build the fabric over kept pods/aggregation sets, compactly labeled.

    ``pod_tor_counts[j]`` ToRs in pod j (0 = pruned pod); ``level_sets[i]``
    holds the kept level-(i+1) aggregation indices, mirrored in both planes.
    The INT tier is always complete.
    """
    b = k // 2
    width = b ** (layers - 2)
    tor_of = {}
    tor_ids: list[int] = []
    pod_of_tor: list[int] = []
    next_id = 0
    for pod, count in enumerate(pod_tor_counts):
        for m in range(count):
            tor_of[(pod, m)] = next_id
            tor_ids.append(next_id)
            pod_of_tor.append(pod)
            next_id += 1
    agg_of = {}
    agg_levels: list[tuple[int, ...]] = []
    for li, kept in enumerate(level_sets):
        level_ids = []
        for plane in range(2):
            for g in kept:
                agg_of[(plane, li, g)] = next_id
                level_ids.append(next_id)
                next_id += 1
        agg_levels.append(tuple(level_ids))
    int_of = {h: next_id + h for h in range(width)}
    int_ids = tuple(int_of.values())
    next_id += width

    edges: list[tuple[int, int]] = []
    for (pod, _m), tid in tor_of.items():
        for plane in range(2):
            edges.append((tid, agg_of[(plane, 0, pod)]))
    for li in range(len(level_sets) - 1):
        stride = b**li
        upper = set(level_sets[li + 1])
        for plane in range(2):
            for g in level_sets[li]:
                base = _block_base(g, stride, b)
                for h in _block_members(base, stride, b):
                    if h in upper:
                        edges.append((agg_of[(plane, li, g)], agg_of[(plane, li + 1, h)]))
    top_li = len(level_sets) - 1
    top_stride = b ** (layers - 3)
    for plane in range(2):
        for g in level_sets[top_li]:
            base = _block_base(g, top_stride, b)
            for h in _block_members(base, top_stride, b):
                edges.append((agg_of[(plane, top_li, g)], int_of[h]))

    graph = Graph.from_edges(next_id, edges)
    deg = graph.degree()
    for nid in list(agg_of.values()) + list(int_ids):
        assert deg[nid] <= k, "port budget exceeded"
    return ClosTopology(
        k=k,
        layers=layers,
        tor_ids=tuple(tor_ids),
        agg_levels=tuple(agg_levels),
        int_ids=int_ids,
        graph=graph,
        pod_of_tor=tuple(pod_of_tor),
    )


def clos_generate(k: int, layers: int) -> ClosTopology:
    """Maximal L-layer k-port fabric.

    L=1: complete graph on k+1 ToRs. L=2: k ToRs each linked to all k/2 INTs.
    L>=3: (k/2)^(L-2) pods of k/2 ToRs; each pod feeds one level-1 node per
    plane; consecutive aggregation levels are block-complete over index blocks
    whose stride grows by k/2 per level; the top level feeds the INT tier the
    same way (complete bipartite per plane at L=3).
    """
    _check_clos_args(k, layers)
    if layers == 1:
        n = k + 1
        a = ~np.eye(n, dtype=bool)
        return ClosTopology(
            k, 1, tuple(range(n)), (), (), Graph(a), tuple(range(n))
        )
    if layers == 2:
        edges = [(t, k + h) for t in range(k) for h in range(k // 2)]
        return ClosTopology(
            k,
            2,
            tuple(range(k)),
            (),
            tuple(range(k, k + k // 2)),
            Graph.from_edges(k + k // 2, edges),
            tuple(range(k)),
        )
    b = k // 2
    width = b ** (layers - 2)
    pod_tor_counts = [b] * width
    level_sets = [list(range(width)) for _ in range(layers - 2)]
    return _assemble(k, layers, pod_tor_counts, level_sets)


def _cover_and_closure(prev: list[int], stride: int, b: int) -> tuple[list[int], list[int]]:
    bases = sorted({_block_base(g, stride, b) for g in prev})
    closure = [m for base in bases for m in _block_members(base, stride, b)]
    return bases, sorted(closure)


def _plan_levels(
    k: int, layers: int, n_pods: int, agg_budget: int
) -> list[list[int]] | None:
    """Kept aggregation sets per level summing to agg_budget per plane.

    Level 1 is pinned to the kept pods. Each deeper level must contain at
    least one parent per occupied block below it (so every kept switch keeps
    an uplink) and may extend to the full closure of the level below; the top
    level must additionally reach every INT block. Returns None when the
    budget cannot be met.
    """
    b = k // 2
    width = b ** (layers - 2)
    n_levels = layers - 2
    top_stride = b ** (layers - 3)

    def extend(level_sets: list[list[int]], remaining: int) -> list[list[int]] | None:
        li = len(level_sets)
        if li == n_levels:
            return level_sets if remaining == 0 else None
        stride = b ** (li - 1)
        required, closure = _cover_and_closure(level_sets[li - 1], stride, b)
        if li == n_levels - 1:
            # top level feeds INT: every INT block needs a kept parent
            int_cover: dict[int, int] = {}
            for g in closure:
                int_cover.setdefault(_block_base(g, top_stride, b), g)
            if len(int_cover) < width // b:
                return None
            required = sorted(set(required) | set(int_cover.values()))
        extras = [g for g in closure if g not in set(required)]
        lo = len(required)
        hi = len(closure)
        levels_after = n_levels - 1 - li
        for m in range(min(hi, remaining - levels_after), lo - 1, -1):
            if remaining - m < levels_after or remaining - m > levels_after * width:
                continue
            kept = sorted(required + extras[: m - lo])
            result = extend(level_sets + [kept], remaining - m)
            if result is not None:
                return result
        return None

    return extend([list(range(n_pods))], agg_budget - n_pods)


def clos_prune(topo: ClosTopology, n_target: int) -> ClosTopology:
    """Adapt the maximal (k, L) fabric to exactly n_target nodes.

    ToRs are trimmed round-robin starting from the fullest pods; a pod that
    empties gives up its aggregation chain, and deeper aggregation switches
    are kept between the minimum that preserves every remaining switch's
    uplinks and the full structure. The INT tier is never pruned.
    """
    k, layers = topo.k, topo.layers
    cap = clos_capacity(k, layers)
    if n_target > topo.n_nodes:
        raise ValueError(f"target {n_target} exceeds fabric size {topo.n_nodes}")
    if n_target == topo.n_nodes:
        return topo
    if layers == 1:
        if n_target < 1:
            raise ValueError("need at least one node")
        a = ~np.eye(n_target, dtype=bool)
        return ClosTopology(
            k, 1, tuple(range(n_target)), (), (), Graph(a), tuple(range(n_target))
        )
    if layers == 2:
        n_int = k // 2
        if n_target < n_int + 1:
            raise ValueError(f"target {n_target} below skeleton size {n_int + 1}")
        n_tor = n_target - n_int
        edges = [(t, n_tor + h) for t in range(n_tor) for h in range(n_int)]
        return ClosTopology(
            k,
            2,
            tuple(range(n_tor)),
            (),
            tuple(range(n_tor, n_target)),
            Graph.from_edges(n_target, edges),
            tuple(range(n_tor)),
        )

    b = k // 2
    width = b ** (layers - 2)
    for n_pods in range(width, 0, -1):
        # budget identity: n_target = tors + 2 * per-plane agg count + width
        for tors in range(n_pods, b * n_pods + 1):
            spare = n_target - width - tors
            if spare < 0 or spare % 2 != 0:
                continue
            level_sets = _plan_levels(k, layers, n_pods, spare // 2)
            if level_sets is None:
                continue
            removals = b * n_pods - tors
            counts = [
                b - removals // n_pods - (1 if j < removals % n_pods else 0)
                for j in range(n_pods)
            ]
            pruned = _assemble(k, layers, counts, level_sets)
            n_comp, _ = connected_components(
                csr_matrix(pruned.graph.adjacency), directed=False
            )
            if n_comp == 1:
                return pruned
    raise ValueError(
        f"no {layers}-layer fabric with k={k} reaches exactly {n_target} nodes "
        f"(capacity {cap})"
    )
