"""Benchmark harness: runs an application under an execution configuration on
the local worker pool, samples resources, and produces default-vs-SCF
comparison reports."""

from __future__ import annotations

import csv
import math
import statistics
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import psutil

from .errors import InsufficientMemoryError
from .features import FeatureVector
from .gbdt import GbdtModel
from .graph import Graph, SuperstepStats, from_edge_array
from .linkpred import detect_triangles, gc_app, ocd_app
from .scf import (
    ClusterSpec,
    ExecConfig,
    UpperBounds,
    decide,
    runtime_settings,
    workload_level,
)

APPS = ("gc", "ocd", "rgd")

REPORT_HEADER = ("app", "mode", "edges", "memory_mb", "wall_ms", "cpu_pct",
                 "mem_pct", "pdr", "util_rate", "improvement_pct")


@dataclass
class RunMetrics:
    wall_time_ms: float
    cpu_pct: float               # mean process CPU utilization per sample
    mem_pct: float               # peak tracked memory as % of the budget
    pdr: float                   # messages consumed at barrier / sent
    utilization_rate: float = field(init=False)

    def __post_init__(self):
        self.utilization_rate = self.cpu_pct + self.mem_pct + 100.0 * self.pdr


@dataclass
class BenchScenario:
    app: str
    edge_counts: list
    memory_budget_mb: int = 4096
    modes: tuple = ("default", "scf")
    repetitions: int = 3
    vertices: int | None = None   # per edge count; default edges // 10

    def __post_init__(self):
        if self.app not in APPS:
            raise ValueError(f"unknown app {self.app!r}, expected one of {APPS}")
        if self.repetitions < 3:
            raise ValueError("repetitions must be >= 3 (median reported)")


class _CpuSampler:
    """Samples process CPU utilization on a background thread."""

    def __init__(self, interval_ms: int):
        self.interval = max(0.001, interval_ms / 1000.0)
        self.samples: list[float] = []
        self._stop = threading.Event()
        self._proc = psutil.Process()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        self._proc.cpu_percent(interval=None)  # prime the counter
        while not self._stop.wait(self.interval):
            self.samples.append(self._proc.cpu_percent(interval=None))

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        if not self.samples:  # run shorter than one interval
            self.samples.append(self._proc.cpu_percent(interval=None))

    def mean(self) -> float:
        return float(np.mean(self.samples)) if self.samples else 0.0


_DEFAULT_APP_PARAMS = {
    "gc": {"k": 4},
    "ocd": {"n": 4, "m": 3},
    "rgd": {},
}


def run_app(app: str, g: Graph, workers: int, partitions: int,
            params: dict | None = None, seed: int = 0,
            stats: SuperstepStats | None = None):
    """Run one application and return its canonical output."""
    merged = dict(_DEFAULT_APP_PARAMS[app])
    merged.update(params or {})
    if app == "gc":
        result = gc_app(g, k=merged["k"], seed=seed, workers=workers,
                        partitions=partitions, stats=stats)
        return tuple(int(c) for c in result.assignment.vertex_to_cluster)
    if app == "ocd":
        result = ocd_app(g, n=merged["n"], m=merged["m"],
                         threshold=merged.get("threshold"), seed=seed,
                         workers=workers, partitions=partitions, stats=stats)
        return tuple(tuple(sorted(m.items())) for m in result.memberships)
    result = detect_triangles(g, workers=workers, partitions=partitions)
    return tuple(sorted(result.triangles))


def execute_app(app: str, g: Graph, cfg: ExecConfig,
                params: dict | None = None, seed: int = 0,
                memory_budget_mb: int | None = None,
                sample_ms: int = 100) -> tuple[object, RunMetrics]:
    """Run the app under cfg (worker pool = min(host cores, ti*ec),
    partitions = parallelism) and measure RunMetrics."""
    workers, partitions = runtime_settings(cfg)
    if memory_budget_mb is None:
        memory_budget_mb = cfg.ti * (cfg.mpe + cfg.ompe) + cfg.dm + cfg.odm
    budget_bytes = memory_budget_mb * 2**20
    stats = SuperstepStats()
    with _CpuSampler(sample_ms) as sampler:
        t0 = time.perf_counter()
        output = run_app(app, g, workers, partitions, params=params,
                         seed=seed, stats=stats)
        wall_ms = (time.perf_counter() - t0) * 1000.0
    if stats.peak_tracked_bytes > budget_bytes * 1.5:
        raise InsufficientMemoryError(
            f"tracked memory {stats.peak_tracked_bytes} exceeds 1.5x budget "
            f"({memory_budget_mb} MB)")
    pdr = (stats.messages_delivered / stats.messages_sent
           if stats.messages_sent else 1.0)
    metrics = RunMetrics(
        wall_time_ms=wall_ms,
        cpu_pct=sampler.mean(),
        mem_pct=100.0 * stats.peak_tracked_bytes / budget_bytes,
        pdr=pdr,
    )
    return output, metrics


def default_config(cluster: ClusterSpec, bounds: UpperBounds | None = None
                   ) -> ExecConfig:
    """The untuned baseline: one 1-core, 1 GB executor per node and no
    parallelism multiplier; independent of data size and workload."""
    if bounds is None:
        from .scf import default_bounds
        bounds = default_bounds(cluster)
    ompe = max(bounds.MOC, int(math.floor(bounds.ORM * 1024 + 0.5)))
    odm = max(bounds.MOC, int(math.floor(bounds.ORC * 1024 + 0.5)))
    return ExecConfig(dc=1, odm=odm, dm=1024, ti=cluster.wn, ompe=ompe,
                      mpe=1024, ec=1, parallelism=cluster.wn, epn=1)


def edge_list_size_mb(g: Graph) -> float:
    """Size of the canonical edge-list serialization, in MB."""
    ext = g.external_ids
    nbytes = sum(len(f"{ext[s]} {ext[d]}") + 1 for s, d in g.edges)
    return nbytes / 2**20


def scf_config(app: str, g: Graph, cluster: ClusterSpec, model: GbdtModel,
               bounds: UpperBounds) -> ExecConfig:
    """Build the feature vector for a loaded graph and let the model decide."""
    ac = workload_level(0, app)
    fv = FeatureVector(mm=cluster.mm, mc=cluster.mc, wn=cluster.wn,
                       wmn=cluster.wmn, wcn=cluster.wcn,
                       ds=edge_list_size_mb(g), ac=ac,
                       mec=cluster.wn * cluster.wmn)
    return decide(fv, model, bounds, cluster)


def generate_synthetic_graph(vertices: int, edges: int, kind: str = "erdos_renyi",
                             seed: int = 0) -> Graph:
    """Deterministic synthetic directed graph with exactly `edges` distinct
    edges and no self-loops."""
    if vertices < 2:
        raise ValueError("need at least 2 vertices")
    feasible = vertices * (vertices - 1)
    if edges < 1 or edges > feasible:
        raise ValueError(f"edge count {edges} infeasible for V={vertices}")
    rng = np.random.default_rng(seed)
    if kind == "erdos_renyi":
        codes: set[int] = set()
        need = edges
        while need > 0:
            draw = rng.integers(0, feasible, size=int(need * 1.3) + 16)
            for c in draw:
                if len(codes) < edges:
                    codes.add(int(c))
            need = edges - len(codes)
        code_arr = np.fromiter(codes, dtype=np.int64, count=edges)
        src = code_arr // (vertices - 1)
        rem = code_arr % (vertices - 1)
        dst = np.where(rem >= src, rem + 1, rem)  # skip the self-loop slot
    elif kind == "preferential":
        src_list: list[int] = []
        dst_list: list[int] = []
        seen: set[tuple[int, int]] = set()
        endpoints = [0, 1]
        while len(src_list) < edges:
            s = int(rng.integers(0, vertices))
            d = endpoints[int(rng.integers(0, len(endpoints)))]
            if s == d or (s, d) in seen:
                d = int(rng.integers(0, vertices))
                if s == d or (s, d) in seen:
                    continue
            seen.add((s, d))
            src_list.append(s)
            dst_list.append(d)
            endpoints.append(s)
            endpoints.append(d)
        src = np.asarray(src_list, dtype=np.int64)
        dst = np.asarray(dst_list, dtype=np.int64)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return from_edge_array(src, dst)


def bench_compare(scenario: BenchScenario, cluster: ClusterSpec,
                  model: GbdtModel, bounds: UpperBounds, seed: int = 0,
                  sample_ms: int = 100) -> list[dict]:
    """Run the scenario grid and return one median-metrics row per
    edge count x mode. Application outputs must match across modes."""
    rows = []
    for edges in scenario.edge_counts:
        vertices = scenario.vertices or max(16, edges // 10)
        g = generate_synthetic_graph(vertices, edges, seed=seed + edges)
        configs = {}
        for mode in scenario.modes:
            if mode == "default":
                configs[mode] = default_config(cluster, bounds)
            elif mode == "scf":
                configs[mode] = scf_config(scenario.app, g, cluster, model, bounds)
            else:
                raise ValueError(f"unknown mode {mode!r}")
        outputs = {}
        mode_rows = {}
        for mode, cfg in configs.items():
            walls, cpus, mems, pdrs = [], [], [], []
            for _ in range(scenario.repetitions):
                output, metrics = execute_app(
                    scenario.app, g, cfg, seed=seed,
                    memory_budget_mb=scenario.memory_budget_mb,
                    sample_ms=sample_ms)
                walls.append(metrics.wall_time_ms)
                cpus.append(metrics.cpu_pct)
                mems.append(metrics.mem_pct)
                pdrs.append(metrics.pdr)
            outputs[mode] = output
            mode_rows[mode] = {
                "app": scenario.app,
                "mode": mode,
                "edges": edges,
                "memory_mb": scenario.memory_budget_mb,
                "wall_ms": statistics.median(walls),
                "cpu_pct": statistics.median(cpus),
                "mem_pct": statistics.median(mems),
                "pdr": statistics.median(pdrs),
            }
        first = next(iter(outputs.values()))
        if any(out != first for out in outputs.values()):
            raise AssertionError(
                "application output differs across configurations")
        t_default = mode_rows.get("default", {}).get("wall_ms")
        for mode in scenario.modes:
            row = mode_rows[mode]
            row["util_rate"] = row["cpu_pct"] + row["mem_pct"] + 100.0 * row["pdr"]
            if mode != "default" and t_default:
                row["improvement_pct"] = 100.0 * (t_default - row["wall_ms"]) / t_default
            else:
                row["improvement_pct"] = 0.0
            rows.append(row)
    return rows


def write_report_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(REPORT_HEADER))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in REPORT_HEADER})


def load_scenario(path: str) -> BenchScenario:
    """Scenario from key=value lines: app, edge_counts (comma separated),
    memory_budget_mb, repetitions, vertices, modes."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    kwargs: dict = {"app": values["app"]}
    if "edge_counts" in values:
        kwargs["edge_counts"] = [int(x) for x in values["edge_counts"].split(",")]
    else:
        raise ValueError("scenario file must set edge_counts")
    if "memory_budget_mb" in values:
        kwargs["memory_budget_mb"] = int(values["memory_budget_mb"])
    if "repetitions" in values:
        kwargs["repetitions"] = int(values["repetitions"])
    if "vertices" in values:
        kwargs["vertices"] = int(values["vertices"])
    if "modes" in values:
        kwargs["modes"] = tuple(values["modes"].split(","))
    return BenchScenario(**kwargs)
