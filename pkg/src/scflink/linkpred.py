"""The three benchmark applications: graph clustering (GC), overlapping
community detection (OCD), and redundant graph detection (RGD).

GC composes PageRank, Adamic-Adar affinities, and power iteration clustering.
OCD is weighted label propagation with threshold pruning. RGD enumerates
triangles through a redundant-then-distinct staged pipeline so the duplicate
count is observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAffinityError, VertexNotFoundError
from .graph import Graph, SuperstepStats, partition_graph, run_supersteps


# ---------------------------------------------------------------------------
# PageRank
# ---------------------------------------------------------------------------

@dataclass
class RankVector:
    scores: np.ndarray            # per-vertex, mean 1 (sums to V)
    damping: float
    iterations_run: int
    converged: bool
    score_sums: list = field(default_factory=list)  # sum after each iteration


class _PageRankProgram:
    """Superstep PageRank with dangling-mass redistribution.

    Superstep 1 only distributes the initial scores; iteration t of the power
    method completes at superstep t+1.
    """

    def __init__(self, damping: float, tol: float):
        self.damping = damping
        self.tol = tol
        self.prev: np.ndarray | None = None
        self.l1_change = math.inf
        self.score_sums: list[float] = []
        self.iterations = 0

    def init(self, v, g):
        return 1.0

    def combine(self, a, b):
        return a + b

    def pre_superstep(self, superstep, states, g):
        dangling = 0.0
        out_deg = g.out_degrees()
        for v in range(g.vertex_count):
            if out_deg[v] == 0:
                dangling += states[v]
        self.prev = np.asarray(states, dtype=float)
        return (superstep, dangling)

    def step(self, v, state, combined, g, ctx):
        superstep, dangling = ctx
        d = self.damping
        if superstep > 1:
            incoming = combined if combined is not None else 0.0
            state = (1.0 - d) + d * (incoming + dangling / g.vertex_count)
        deg = g.out_degree(v)
        out = []
        if deg > 0:
            share = state / deg
            out = [(int(u), share) for u in g.out_neighbors(v)]
        return state, out, False

    def post_superstep(self, superstep, states, g):
        if superstep == 1:
            return False
        self.iterations = superstep - 1
        cur = np.asarray(states, dtype=float)
        self.score_sums.append(float(cur.sum()))
        self.l1_change = float(np.abs(cur - self.prev).sum())
        return self.l1_change < self.tol


def pagerank(g: Graph, damping: float = 0.85, max_iter: int = 100,
             tol: float = 1e-10, workers: int = 1,
             partitions: int | None = None,
             stats: SuperstepStats | None = None) -> RankVector:
    """Power iteration with per-vertex-mean-1 normalization (scores sum to V).

    Dangling vertices redistribute their mass uniformly, which preserves the
    sum at every iteration. Non-convergence is reported, not raised.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0,1), got {damping}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if g.vertex_count == 0:
        raise ValueError("pagerank requires a nonempty graph")
    prog = _PageRankProgram(damping, tol)
    states = run_supersteps(g, prog, max_iter=max_iter + 1, workers=workers,
                            partitions=partitions, stats=stats)
    scores = np.asarray(states, dtype=float)
    return RankVector(
        scores=scores,
        damping=damping,
        iterations_run=prog.iterations,
        converged=prog.l1_change < tol,
        score_sums=prog.score_sums,
    )


# ---------------------------------------------------------------------------
# Adamic-Adar
# ---------------------------------------------------------------------------

def adamic_adar(g: Graph, u: int, v: int) -> float:
    """Similarity of (u, v): sum of 1/ln(deg(z)) over common neighbors z of
    the symmetrized graph. A common neighbor always has degree >= 2."""
    if u == v:
        raise ValueError(f"adamic_adar requires distinct vertices, got {u} == {v}")
    for x in (u, v):
        if not 0 <= x < g.vertex_count:
            raise VertexNotFoundError(f"vertex {x} not in graph")
    common = np.intersect1d(g.sym_neighbors(u), g.sym_neighbors(v),
                            assume_unique=True)
    degs = g.sym_degrees()
    return float(sum(1.0 / math.log(degs[z]) for z in common))


class _NeighborExchangeProgram:
    """Two supersteps: vertices exchange neighbor lists, then each vertex
    computes Adamic-Adar scores for its own (symmetrized) edges."""

    def __init__(self):
        self.edge_scores: dict[int, list] = {}

    def init(self, v, g):
        return None

    def combine(self, a, b):
        merged = dict(a)
        merged.update(b)
        return merged

    def step(self, v, state, combined, g, ctx):
        if combined is None and state is None:
            nbrs = tuple(int(x) for x in g.sym_neighbors(v))
            payload = {v: nbrs}
            return "sent", [(u, payload) for u in nbrs], False
        scores = []
        if combined:
            my = set(int(x) for x in g.sym_neighbors(v))
            degs = g.sym_degrees()
            for src in sorted(combined):
                shared = my.intersection(combined[src])
                val = sum(1.0 / math.log(int(degs[z])) for z in sorted(shared))
                scores.append((src, float(val)))
        self.edge_scores[v] = scores
        return "done", [], True


def adamic_adar_affinity(g: Graph, workers: int = 1,
                         partitions: int | None = None,
                         stats: SuperstepStats | None = None):
    """Per-edge Adamic-Adar affinity over the symmetrized graph.

    Returns (indptr, indices, weights) aligned with Graph.symmetrized().
    """
    prog = _NeighborExchangeProgram()
    run_supersteps(g, prog, max_iter=2, workers=workers,
                   partitions=partitions, stats=stats)
    indptr, indices = g.symmetrized()
    weights = np.zeros(len(indices), dtype=float)
    for v in range(g.vertex_count):
        lookup = dict(prog.edge_scores.get(v, ()))
        row = indices[indptr[v]:indptr[v + 1]]
        for j, z in enumerate(row):
            weights[indptr[v] + j] = lookup.get(int(z), 0.0)
    return indptr, indices, weights


# ---------------------------------------------------------------------------
# Power iteration clustering
# ---------------------------------------------------------------------------

@dataclass
class ClusterAssignment:
    k: int
    vertex_to_cluster: np.ndarray


class _PicProgram:
    """Power iteration of the row-normalized affinity matrix. Senders emit
    value * affinity; receivers divide by their own row sum."""

    def __init__(self, v0: np.ndarray, row_sums: np.ndarray, weights_by_vertex,
                 accel_tol: float):
        self.v0 = v0
        self.row_sums = row_sums
        self.weights_by_vertex = weights_by_vertex   # v -> [(nbr, w), ...]
        self.accel_tol = accel_tol
        self.prev_embedding = v0.copy()
        self.prev_delta: np.ndarray | None = None
        self.embedding = v0.copy()
        self.iterations = 0

    def init(self, v, g):
        return float(self.v0[v])

    def combine(self, a, b):
        return a + b

    def step(self, v, state, combined, g, ctx):
        superstep = ctx
        if superstep > 1:
            incoming = combined if combined is not None else 0.0
            rs = self.row_sums[v]
            state = incoming / rs if rs > 0 else 0.0
        out = [(u, state * w) for u, w in self.weights_by_vertex[v]]
        return state, out, False

    def pre_superstep(self, superstep, states, g):
        return superstep

    def post_superstep(self, superstep, states, g):
        if superstep == 1:
            return False
        cur = np.asarray(states, dtype=float)
        norm = np.abs(cur).sum()
        if norm > 0:
            cur = cur / norm
        for v in range(len(states)):
            states[v] = float(cur[v])
        self.iterations = superstep - 1
        delta = np.abs(cur - self.prev_embedding)
        self.prev_embedding = cur
        self.embedding = cur
        stop = False
        if self.prev_delta is not None:
            stop = float(np.max(np.abs(delta - self.prev_delta))) < self.accel_tol
        self.prev_delta = delta
        return stop


def _kmeans_1d(values: np.ndarray, k: int, seed: int, max_rounds: int = 100):
    """k-means++ seeded Lloyd iteration on a 1-D embedding, deterministic."""
    rng = np.random.default_rng(seed)
    n = len(values)
    centers = [values[int(rng.integers(n))]]
    while len(centers) < k:
        d2 = np.min([(values - c) ** 2 for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(centers[0])
            continue
        r = rng.random() * total
        centers.append(values[int(np.searchsorted(np.cumsum(d2), r))])
    centers = np.asarray(centers, dtype=float)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_rounds):
        dists = np.abs(values[:, None] - centers[None, :])
        new_labels = np.argmin(dists, axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for c in range(k):
            members = values[labels == c]
            if len(members):
                centers[c] = members.mean()
    # canonical labels in order of first appearance
    remap: dict[int, int] = {}
    out = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = remap.setdefault(int(lab), len(remap))
    return out


def power_iteration_clustering(g: Graph, k: int, max_iter: int = 100,
                               accel_tol: float = 1e-6, seed: int = 0,
                               workers: int = 1,
                               partitions: int | None = None,
                               stats: SuperstepStats | None = None,
                               affinity=None) -> ClusterAssignment:
    """Cluster via power iteration of the row-normalized Adamic-Adar affinity.

    The start vector is degree-proportional with a small seeded perturbation
    (a uniform start cannot distinguish isomorphic components). Stops when the
    per-vertex acceleration of the iterate falls below accel_tol.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > g.vertex_count:
        raise ValueError(f"k={k} exceeds vertex count {g.vertex_count}")
    if affinity is None:
        affinity = adamic_adar_affinity(g, workers=workers,
                                        partitions=partitions, stats=stats)
    indptr, indices, weights = affinity
    if not np.any(weights > 0):
        raise DegenerateAffinityError("affinity matrix is identically zero")

    row_sums = np.zeros(g.vertex_count, dtype=float)
    weights_by_vertex = []
    for v in range(g.vertex_count):
        row = [(int(indices[j]), float(weights[j]))
               for j in range(indptr[v], indptr[v + 1]) if weights[j] > 0]
        weights_by_vertex.append(row)
        row_sums[v] = sum(w for _, w in row)

    rng = np.random.default_rng(seed)
    v0 = row_sums + row_sums.max() * 0.01 * rng.random(g.vertex_count)
    total = np.abs(v0).sum()
    if total > 0:
        v0 = v0 / total
    prog = _PicProgram(v0, row_sums, weights_by_vertex, accel_tol)
    run_supersteps(g, prog, max_iter=max_iter + 1, workers=workers,
                   partitions=partitions, stats=stats)
    labels = _kmeans_1d(prog.embedding, k, seed=seed)
    return ClusterAssignment(k=k, vertex_to_cluster=labels)


@dataclass
class GcResult:
    assignment: ClusterAssignment
    rank: RankVector
    report: dict


def gc_app(g: Graph, k: int, damping: float = 0.85, max_iter: int = 100,
           tol: float = 1e-10, seed: int = 0, workers: int = 1,
           partitions: int | None = None,
           stats: SuperstepStats | None = None) -> GcResult:
    """Graph clustering pipeline: PageRank (reported), Adamic-Adar affinity,
    power iteration clustering."""
    rank = pagerank(g, damping=damping, max_iter=max_iter, tol=tol,
                    workers=workers, partitions=partitions, stats=stats)
    assignment = power_iteration_clustering(
        g, k, max_iter=max_iter, seed=seed, workers=workers,
        partitions=partitions, stats=stats)
    report = {
        "pagerank_iterations": rank.iterations_run,
        "pagerank_converged": rank.converged,
        "clusters": int(len(np.unique(assignment.vertex_to_cluster))),
    }
    return GcResult(assignment=assignment, rank=rank, report=report)


# ---------------------------------------------------------------------------
# Overlapping community detection
# ---------------------------------------------------------------------------

@dataclass
class CommunityMembership:
    memberships: list            # per-vertex dict {label: weight}
    threshold: float

    def overlapping_vertices(self) -> list[int]:
        return [v for v, m in enumerate(self.memberships) if len(m) >= 2]


def affiliate_communities(g: Graph, n: int, seed: int = 0) -> CommunityMembership:
    """Initial labelling: vertex v joins community v mod n with weight 1."""
    if n < 1:
        raise ValueError(f"community count must be >= 1, got {n}")
    memberships = [{v % n: 1.0} for v in range(g.vertex_count)]
    return CommunityMembership(memberships=memberships, threshold=1.0 / n)


def _prune_and_normalize(weights: dict, threshold: float) -> dict:
    kept = {lab: w for lab, w in weights.items() if w >= threshold}
    if not kept:
        best = max(weights.items(), key=lambda kv: (kv[1], -kv[0]))[0]
        kept = {best: weights[best]}
    total = sum(kept.values())
    return {lab: w / total for lab, w in sorted(kept.items())}


class _CopraProgram:
    """Weighted label propagation: each vertex averages its neighbors' label
    weights, prunes below the threshold, and renormalizes."""

    def __init__(self, init_memberships, m: int, threshold: float):
        self.init_memberships = init_memberships
        self.m = m
        self.threshold = threshold

    def init(self, v, g):
        return dict(self.init_memberships[v])

    def combine(self, a, b):
        merged = dict(a)
        for lab, w in b.items():
            merged[lab] = merged.get(lab, 0.0) + w
        return merged

    def pre_superstep(self, superstep, states, g):
        return superstep

    def step(self, v, state, combined, g, ctx):
        superstep = ctx
        if superstep > 1 and combined is not None:
            deg = g.sym_degree(v)
            averaged = {lab: w / deg for lab, w in combined.items()}
            state = _prune_and_normalize(averaged, self.threshold)
        out = []
        if superstep <= self.m:  # last superstep only folds in messages
            out = [(int(u), state) for u in g.sym_neighbors(v)]
        return state, out, False


def detect_overlapping_communities(g: Graph, init: CommunityMembership,
                                   m: int, threshold: float | None = None,
                                   workers: int = 1,
                                   partitions: int | None = None,
                                   stats: SuperstepStats | None = None
                                   ) -> CommunityMembership:
    """Run m propagation iterations from the given initial memberships.

    Isolated vertices keep their initial label; a vertex whose labels all fall
    below the threshold keeps its arg-max label (lowest id on ties).
    """
    if m < 0:
        raise ValueError(f"iteration count must be >= 0, got {m}")
    if threshold is None:
        threshold = init.threshold
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0,1], got {threshold}")
    if m == 0:
        return CommunityMembership(
            memberships=[dict(x) for x in init.memberships], threshold=threshold)
    prog = _CopraProgram(init.memberships, m, threshold)
    states = run_supersteps(g, prog, max_iter=m + 1, workers=workers,
                            partitions=partitions, stats=stats)
    return CommunityMembership(memberships=states, threshold=threshold)


def ocd_app(g: Graph, n: int, m: int, threshold: float | None = None,
            seed: int = 0, workers: int = 1, partitions: int | None = None,
            stats: SuperstepStats | None = None) -> CommunityMembership:
    """Full OCD pipeline: affiliate then propagate."""
    init = affiliate_communities(g, n, seed=seed)
    return detect_overlapping_communities(
        g, init, m, threshold=threshold, workers=workers,
        partitions=partitions, stats=stats)


# ---------------------------------------------------------------------------
# Redundant graph detection (triangles)
# ---------------------------------------------------------------------------

@dataclass
class TriangleResult:
    triangles: set               # of sorted (a, b, c) tuples
    duplicates_detected: int


def detect_triangles(g: Graph, workers: int = 1,
                     partitions: int | None = None) -> TriangleResult:
    """Staged triangle pipeline over the symmetrized graph.

    Stage 1 emits neighbor pairs per vertex (triad candidates), stage 2 keeps
    pairs whose closing edge exists (triangles with duplicates: each triangle
    is found once per apex vertex), stage 3 canonicalizes and dedups.
    """
    indptr, indices = g.symmetrized()
    edge_set = set()
    for v in range(g.vertex_count):
        for u in indices[indptr[v]:indptr[v + 1]]:
            edge_set.add((v, int(u)))

    assignment = partition_graph(g, max(1, partitions or workers))

    def scan(vertices):
        found = []
        for v in vertices:
            v = int(v)
            nbrs = indices[indptr[v]:indptr[v + 1]]
            for i in range(len(nbrs)):
                a = int(nbrs[i])
                for j in range(i + 1, len(nbrs)):
                    b = int(nbrs[j])
                    if (a, b) in edge_set:
                        found.append(tuple(sorted((v, a, b))))
        return found

    with_duplicates: list = []
    for p in range(assignment.partition_count):
        with_duplicates.extend(scan(assignment.members(p)))
    unique = set(with_duplicates)
    return TriangleResult(
        triangles=unique,
        duplicates_detected=len(with_duplicates) - len(unique),
    )
