"""Directed graph ingestion, partitioning, and a synchronous superstep engine.

The graph is immutable after construction: edges are deduplicated, self-loops
dropped, and adjacency lists kept sorted so every downstream computation is
deterministic regardless of worker count.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EdgeListParseError,
    EmptyGraphError,
    SuperstepNumericError,
    VertexNotFoundError,
)


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph with dense internal vertex ids 0..V-1."""

    vertex_count: int
    edges: np.ndarray                 # shape (E, 2), internal ids
    external_ids: np.ndarray          # internal id -> original external id
    out_indptr: np.ndarray
    out_indices: np.ndarray           # sorted per vertex
    in_indptr: np.ndarray
    in_indices: np.ndarray            # sorted per vertex
    dropped_duplicates: int = 0
    dropped_self_loops: int = 0
    _sym_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[v]:self.out_indptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[v]:self.in_indptr[v + 1]]

    def out_degree(self, v: int) -> int:
        return int(self.out_indptr[v + 1] - self.out_indptr[v])

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def internal_id(self, external_id: int) -> int:
        if "ext_map" not in self._sym_cache:
            self._sym_cache["ext_map"] = {
                int(e): i for i, e in enumerate(self.external_ids)
            }
        try:
            return self._sym_cache["ext_map"][int(external_id)]
        except KeyError:
            raise VertexNotFoundError(f"external vertex id {external_id} not in graph")

    def symmetrized(self) -> tuple[np.ndarray, np.ndarray]:
        """Undirected adjacency (indptr, indices): union of out- and in-edges,
        sorted, without duplicates or self-loops."""
        if "sym" not in self._sym_cache:
            if self.edge_count == 0:
                indptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
                self._sym_cache["sym"] = (indptr, np.empty(0, dtype=np.int64))
            else:
                src = self.edges[:, 0]
                dst = self.edges[:, 1]
                u = np.concatenate([src, dst])
                v = np.concatenate([dst, src])
                code = u.astype(np.int64) * self.vertex_count + v
                code = np.unique(code)
                uu = code // self.vertex_count
                vv = code % self.vertex_count
                indptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
                np.add.at(indptr, uu + 1, 1)
                indptr = np.cumsum(indptr)
                self._sym_cache["sym"] = (indptr, vv)
        return self._sym_cache["sym"]

    def sym_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.symmetrized()
        return indices[indptr[v]:indptr[v + 1]]

    def sym_degree(self, v: int) -> int:
        indptr, _ = self.symmetrized()
        return int(indptr[v + 1] - indptr[v])

    def sym_degrees(self) -> np.ndarray:
        indptr, _ = self.symmetrized()
        return np.diff(indptr)


def _build_csr(vertex_count: int, src: np.ndarray, dst: np.ndarray):
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(vertex_count + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst.astype(np.int64)


def from_edge_array(src_ext: np.ndarray, dst_ext: np.ndarray,
                    dropped_dup: int = 0, dropped_self: int = 0) -> Graph:
    """Build a Graph from external-id edge arrays, remapping ids densely in
    order of first appearance and applying dedup/self-loop rules."""
    if len(src_ext) == 0:
        raise EmptyGraphError("no edges: graph has no vertices")
    interleaved = np.empty(2 * len(src_ext), dtype=np.int64)
    interleaved[0::2] = src_ext
    interleaved[1::2] = dst_ext
    uniq, first_pos = np.unique(interleaved, return_index=True)
    ext_ids = uniq[np.argsort(first_pos)]
    remap = {int(e): i for i, e in enumerate(ext_ids)}
    src = np.fromiter((remap[int(x)] for x in src_ext), dtype=np.int64,
                      count=len(src_ext))
    dst = np.fromiter((remap[int(x)] for x in dst_ext), dtype=np.int64,
                      count=len(dst_ext))

    keep = src != dst
    n_self = int(len(src) - keep.sum())
    src, dst = src[keep], dst[keep]
    v = len(ext_ids)
    code = src * v + dst
    uniq_code, counts = np.unique(code, return_counts=True)
    n_dup = int(code.size - uniq_code.size)
    src = uniq_code // v
    dst = uniq_code % v
    if v == 0:
        raise EmptyGraphError("no vertices after ingestion")

    out_indptr, out_indices = _build_csr(v, src, dst)
    in_indptr, in_indices = _build_csr(v, dst, src)
    edges = np.stack([src, dst], axis=1)
    return Graph(
        vertex_count=v,
        edges=edges,
        external_ids=ext_ids,
        out_indptr=out_indptr,
        out_indices=out_indices,
        in_indptr=in_indptr,
        in_indices=in_indices,
        dropped_duplicates=dropped_dup + n_dup,
        dropped_self_loops=dropped_self + n_self,
    )


def load_edge_list(path: str) -> Graph:
    """Read a UTF-8 edge-list file: `src dst` per line, `#` comments and blank
    lines ignored. Raises EdgeListParseError / EmptyGraphError / OSError."""
    srcs: list[int] = []
    dsts: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise EdgeListParseError(
                    line_no, f"expected 2 tokens, got {len(tokens)}")
            try:
                s, d = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListParseError(line_no, f"non-integer token in {tokens}")
            if s < 0 or d < 0:
                raise EdgeListParseError(line_no, "negative vertex id")
            srcs.append(s)
            dsts.append(d)
    if not srcs:
        raise EmptyGraphError(f"{path}: no edges found")
    return from_edge_array(np.asarray(srcs, dtype=np.int64),
                           np.asarray(dsts, dtype=np.int64))


def write_edge_list(g: Graph, path: str) -> None:
    """Canonical writer: one `src dst` line per edge (external ids), edges in
    internal (src, dst) order."""
    ext = g.external_ids
    with open(path, "w", encoding="utf-8") as fh:
        for s, d in g.edges:
            fh.write(f"{ext[s]} {ext[d]}\n")


@dataclass(frozen=True)
class PartitionAssignment:
    partition_count: int
    vertex_to_partition: np.ndarray

    def members(self, p: int) -> np.ndarray:
        return np.nonzero(self.vertex_to_partition == p)[0]


def partition_graph(g: Graph, n: int) -> PartitionAssignment:
    """Deterministic hash partitioning: vertex v goes to partition v mod n."""
    if n < 1:
        raise ValueError(f"partition count must be >= 1, got {n}")
    v2p = np.arange(g.vertex_count, dtype=np.int64) % n
    return PartitionAssignment(partition_count=n, vertex_to_partition=v2p)


@dataclass
class SuperstepStats:
    supersteps: int = 0
    messages_sent: int = 0
    messages_delivered: int = 0
    peak_tracked_bytes: int = 0


def _approx_payload_bytes(payload) -> int:
    if isinstance(payload, dict):
        return sys.getsizeof(payload) + 64 * len(payload)
    return sys.getsizeof(payload)


def _check_finite(value, superstep: int, vertex: int) -> None:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SuperstepNumericError(superstep, vertex)
    elif isinstance(value, dict):
        for x in value.values():
            if isinstance(x, float) and not math.isfinite(x):
                raise SuperstepNumericError(superstep, vertex)
    elif isinstance(value, (tuple, list)):
        for x in value:
            _check_finite(x, superstep, vertex)


def run_supersteps(g: Graph, program, max_iter: int, workers: int = 1,
                   partitions: int | None = None,
                   stats: SuperstepStats | None = None) -> list:
    """Run a vertex program under bulk-synchronous supersteps.

    The program supplies:
      init(v, g) -> state
      combine(a, b) -> combined message (commutative + associative)
      step(v, state, combined, g, ctx) -> (state, [(dst, msg), ...], halt)
    and optionally:
      pre_superstep(superstep, states, g) -> ctx passed to step
      post_superstep(superstep, states, g) -> True to stop early

    Messages are delivered only across the barrier; at each receiver they are
    combined in ascending source-vertex order, so the result is identical for
    any worker count.
    """
    if max_iter < 0:
        raise ValueError(f"max_iter must be >= 0, got {max_iter}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    n_parts = partitions if partitions is not None else workers
    assignment = partition_graph(g, max(1, n_parts))
    part_vertices = [assignment.members(p) for p in range(assignment.partition_count)]

    states = [program.init(v, g) for v in range(g.vertex_count)]
    active = [True] * g.vertex_count
    inbox: dict[int, list] = {}
    if stats is None:
        stats = SuperstepStats()

    def run_partition(vertices, superstep, ctx):
        outgoing = []
        sent = 0
        for v in vertices:
            v = int(v)
            msgs = inbox.get(v)
            if msgs is None and not active[v]:
                continue
            combined = None
            if msgs:
                msgs.sort(key=lambda m: m[0])
                combined = msgs[0][1]
                for _, payload in msgs[1:]:
                    combined = program.combine(combined, payload)
            new_state, out, halt = program.step(v, states[v], combined, g, ctx)
            _check_finite(new_state, superstep, v)
            states[v] = new_state
            active[v] = not halt
            for dst, payload in out:
                outgoing.append((int(dst), payload, v))
            sent += len(out)
        return outgoing, sent

    for superstep in range(1, max_iter + 1):
        if not inbox and not any(active):
            break
        ctx = None
        if hasattr(program, "pre_superstep"):
            ctx = program.pre_superstep(superstep, states, g)

        if workers == 1 or assignment.partition_count == 1:
            results = [run_partition(pv, superstep, ctx) for pv in part_vertices]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(
                    lambda pv: run_partition(pv, superstep, ctx), part_vertices))

        next_inbox: dict[int, list] = {}
        sent_total = 0
        sample_bytes = 0
        sampled = 0
        for outgoing, sent in results:
            sent_total += sent
            for dst, payload, src in outgoing:
                next_inbox.setdefault(dst, []).append((src, payload))
                if sampled < 100:
                    sample_bytes += _approx_payload_bytes(payload)
                    sampled += 1
        delivered = sum(len(v) for v in next_inbox.values())
        avg = (sample_bytes / sampled) if sampled else 0.0
        tracked = int(delivered * (avg + 72)) + 64 * len(states)
        stats.supersteps = superstep
        stats.messages_sent += sent_total
        stats.messages_delivered += delivered
        stats.peak_tracked_bytes = max(stats.peak_tracked_bytes, tracked)
        inbox = next_inbox

        if hasattr(program, "post_superstep"):
            if program.post_superstep(superstep, states, g):
                break
        if not inbox and not any(active):
            break
    return states
