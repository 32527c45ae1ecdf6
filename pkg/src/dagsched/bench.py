"""Random DAG-collection generator and the experiment harness.

Collections of random DAGs are generated from a seeded configuration, each
collection is scheduled both by the semi-partitioned scheduler and by the
non-preemptive global-EDF baseline across a sweep of core counts, and the
per-core-count success rates and used-core utilizations are aggregated into
a report that can be exported as JSON plus a CSV row table.

Everything is reproducible: per-collection RNG streams are derived from
(seed, collection index, dag index), so the report bytes are a pure function
of the configuration and the core sweep.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .baseline import gedf_np_simulate
from .model import DagSpec, ScheduleMap, TaskSet, build_dag, validate_schedule
from .scheduler import DAG_INFEASIBLE, schedule_taskset

MAX_DRAWS = 1000  # attempts per DAG before the generator gives up

PROPOSED = "proposed"
BASELINE = "gedf-np"

UTILIZATION_DEFINITION = (
    "utilization = busy_ticks / (used_cores * hyperperiod), "
    "averaged over collections where the algorithm succeeded"
)


class GenerationError(RuntimeError):
    """The generator exhausted its retry budget for one DAG."""


class ExperimentError(RuntimeError):
    """A schedule claimed success but failed validation (a scheduler bug)."""


@dataclass(frozen=True)
class GenConfig:
    """Knobs for random collection generation.

    Defaults are desk-scale: small node counts and a period menu whose least
    common multiple stays at 200 ticks, keeping hyperperiod extension cheap.
    """

    collections: int = 200
    dags_per_collection: int = 5
    edge_prob: float = 0.6
    nodes_per_dag: tuple[int, int] = (5, 15)
    wcet_range: tuple[int, int] = (1, 10)
    period_menu: tuple[int, ...] = (10, 20, 40, 50, 100)
    seed: int = 0

    def __post_init__(self):
        if self.collections < 0 or self.dags_per_collection < 1:
            raise ValueError("collections must be >= 0 and dags_per_collection >= 1")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError(f"edge_prob must be in [0, 1], got {self.edge_prob}")
        for lo, hi in (self.nodes_per_dag, self.wcet_range):
            if lo < 1 or hi < lo:
                raise ValueError(f"range [{lo}, {hi}] must be nonempty and positive")
        if not self.period_menu or any(p < 1 for p in self.period_menu):
            raise ValueError("period_menu must list positive periods")

    def to_doc(self) -> dict:
        return {
            "collections": self.collections,
            "dags_per_collection": self.dags_per_collection,
            "edge_prob": self.edge_prob,
            "nodes_per_dag": list(self.nodes_per_dag),
            "wcet_range": list(self.wcet_range),
            "period_menu": list(self.period_menu),
            "seed": self.seed,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GenConfig":
        if not isinstance(doc, dict):
            raise ValueError("config document must be an object")
        unknown = set(doc) - {
            "collections", "dags_per_collection", "seed", "edge_prob",
            "nodes_per_dag", "wcet_range", "period_menu",
        }
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = {}
        for name in ("collections", "dags_per_collection", "seed"):
            if name in doc:
                kwargs[name] = int(doc[name])
        if "edge_prob" in doc:
            kwargs["edge_prob"] = float(doc["edge_prob"])
        for name in ("nodes_per_dag", "wcet_range", "period_menu"):
            if name in doc:
                kwargs[name] = tuple(int(x) for x in doc[name])
        return cls(**kwargs)


def stream(seed: int, *parts) -> random.Random:
    """Deterministic named RNG substream, stable across runs and platforms."""
    return random.Random(f"{seed}:" + ":".join(str(p) for p in parts))


def _draw_dag(cfg: GenConfig, rng: random.Random, dag_id: int) -> DagSpec:
    n = rng.randint(*cfg.nodes_per_dag)
    wcets = {nid: rng.randint(*cfg.wcet_range) for nid in range(1, n + 1)}
    edges = []
    # Forward edges only (low id to high id), so the result is acyclic by
    # construction; the node labelling is the topological order.
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < cfg.edge_prob:
                edges.append((i, j))
    period = rng.choice(cfg.period_menu)
    return build_dag(dag_id, period, wcets, edges)


def generate_dag(cfg: GenConfig, rng: random.Random, dag_id: int = 1) -> DagSpec:
    """Draw one random DAG, redrawing until its critical path fits the period.

    Infeasible draws (critical path longer than the drawn period) measure
    nothing about a scheduler, so they are rejected wholesale and the DAG is
    redrawn; after MAX_DRAWS attempts a GenerationError names the config.
    """
    for _ in range(MAX_DRAWS):
        dag = _draw_dag(cfg, rng, dag_id)
        if dag.cp_length <= dag.period:
            return dag
    raise GenerationError(f"no feasible DAG after {MAX_DRAWS} draws with config {cfg.to_doc()}")


def generate_taskset(cfg: GenConfig, collection_index: int) -> tuple[TaskSet, int]:
    """Build one collection. Returns the task set and the number of redraws."""
    dags = []
    redraws = 0
    for d in range(1, cfg.dags_per_collection + 1):
        rng = stream(cfg.seed, "collection", collection_index, "dag", d)
        attempts = 0
        while True:
            attempts += 1
            if attempts > MAX_DRAWS:
                raise GenerationError(
                    f"no feasible DAG after {MAX_DRAWS} draws "
                    f"(collection {collection_index}, dag {d}, config {cfg.to_doc()})"
                )
            dag = _draw_dag(cfg, rng, d)
            if dag.cp_length <= dag.period:
                break
            redraws += 1
        dags.append(dag)
    return TaskSet.build(dags), redraws


@dataclass(frozen=True)
class Row:
    """One (collection, core count, algorithm) outcome."""

    collection: int
    m: int
    algorithm: str
    success: bool
    cores_used: int
    utilization: float | None
    hyperperiod: int
    seed: int


@dataclass(frozen=True)
class MSummary:
    """Aggregated rates for one core count."""

    m: int
    collections: int
    proposed_successes: int
    baseline_successes: int
    proposed_success_rate: float
    baseline_success_rate: float
    proposed_utilization: float | None
    baseline_utilization: float | None


@dataclass(frozen=True)
class ExperimentReport:
    config: GenConfig
    core_counts: tuple[int, ...]
    regenerated: int
    summary: tuple[MSummary, ...]
    rows: tuple[Row, ...]


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def run_experiment(cfg: GenConfig, core_counts: list[int]) -> ExperimentReport:
    """Schedule every collection with both algorithms across the core sweep.

    The proposed scheduler's placement does not depend on the core budget
    (the budget only gates acceptance), so each collection is scheduled once
    and compared against every m; the baseline is simulated per m.  Every
    claimed success is re-checked by the validator, and a validation failure
    aborts the whole experiment naming the collection for replay.
    """
    ms = tuple(int(m) for m in core_counts)
    if not ms or any(m < 1 for m in ms):
        raise ValueError(f"core_counts must list positive core counts, got {core_counts}")
    rows: list[Row] = []
    acc: dict[int, list] = {m: [0, 0, [], []] for m in ms}
    regenerated = 0
    for c in range(cfg.collections):
        ts, redraws = generate_taskset(cfg, c)
        regenerated += redraws

        # One unbounded-cores run stands in for every m in the sweep.
        res = schedule_taskset(ts, max(ms))
        used = res.cores_used
        feasible = res.reason != DAG_INFEASIBLE
        p_util = None
        if feasible and used:
            p_util = sum(res.busy_per_core) / (used * ts.hyperperiod)
        if res.success:
            report = validate_schedule(res.schedule, ts)
            if not report.ok:
                raise ExperimentError(
                    f"collection {c} (seed {cfg.seed}): scheduler output failed validation: "
                    f"{report.violations[0].kind}: {report.violations[0].where}"
                )

        for m in ms:
            p_ok = feasible and used <= m
            rows.append(
                Row(c, m, PROPOSED, p_ok, used, p_util if p_ok else None, ts.hyperperiod, cfg.seed)
            )
            if p_ok:
                acc[m][0] += 1
                acc[m][2].append(p_util)

            sim = gedf_np_simulate(ts, m)
            b_used = sim.trace.used_cores
            b_util = None
            if sim.success:
                report = validate_schedule(sim.trace, ts)
                if not report.ok:
                    raise ExperimentError(
                        f"collection {c} (seed {cfg.seed}): baseline trace failed validation: "
                        f"{report.violations[0].kind}: {report.violations[0].where}"
                    )
                if b_used:
                    b_util = sum(sim.trace.busy_per_core) / (b_used * ts.hyperperiod)
                acc[m][1] += 1
                acc[m][3].append(b_util)
            rows.append(Row(c, m, BASELINE, sim.success, b_used, b_util, ts.hyperperiod, cfg.seed))

    summary = tuple(
        MSummary(
            m=m,
            collections=cfg.collections,
            proposed_successes=acc[m][0],
            baseline_successes=acc[m][1],
            proposed_success_rate=acc[m][0] / cfg.collections if cfg.collections else 0.0,
            baseline_success_rate=acc[m][1] / cfg.collections if cfg.collections else 0.0,
            proposed_utilization=_mean(acc[m][2]),
            baseline_utilization=_mean([u for u in acc[m][3] if u is not None]),
        )
        for m in ms
    )
    return ExperimentReport(
        config=cfg,
        core_counts=ms,
        regenerated=regenerated,
        summary=summary,
        rows=tuple(rows),
    )


# --- report serialization ---------------------------------------------------


def report_doc(report: ExperimentReport) -> dict:
    return {
        "note": UTILIZATION_DEFINITION,
        "config": report.config.to_doc(),
        "core_counts": list(report.core_counts),
        "regenerated": report.regenerated,
        "summary": [
            {
                "m": s.m,
                "collections": s.collections,
                "proposed_successes": s.proposed_successes,
                "baseline_successes": s.baseline_successes,
                "proposed_success_rate": s.proposed_success_rate,
                "baseline_success_rate": s.baseline_success_rate,
                "proposed_utilization": s.proposed_utilization,
                "baseline_utilization": s.baseline_utilization,
            }
            for s in report.summary
        ],
        "rows": [
            {
                "collection": r.collection,
                "m": r.m,
                "algorithm": r.algorithm,
                "success": r.success,
                "cores_used": r.cores_used,
                "utilization": r.utilization,
                "hyperperiod": r.hyperperiod,
                "seed": r.seed,
            }
            for r in report.rows
        ],
    }


def dumps_report(report: ExperimentReport) -> str:
    return json.dumps(report_doc(report), indent=2) + "\n"


def load_report(data: bytes | str) -> ExperimentReport:
    doc = json.loads(data)
    return ExperimentReport(
        config=GenConfig.from_doc(doc["config"]),
        core_counts=tuple(doc["core_counts"]),
        regenerated=doc["regenerated"],
        summary=tuple(MSummary(**s) for s in doc["summary"]),
        rows=tuple(Row(**r) for r in doc["rows"]),
    )


def dumps_report_csv(report: ExperimentReport) -> str:
    lines = [
        "# " + UTILIZATION_DEFINITION,
        "collection,m,algorithm,success,cores_used,utilization,hyperperiod,seed",
    ]
    for r in report.rows:
        util = "" if r.utilization is None else repr(r.utilization)
        lines.append(
            f"{r.collection},{r.m},{r.algorithm},{'true' if r.success else 'false'},"
            f"{r.cores_used},{util},{r.hyperperiod},{r.seed}"
        )
    return "\n".join(lines) + "\n"


def export_report(report: ExperimentReport, prefix: str) -> tuple[str, str]:
    """Write <prefix>.json and <prefix>.csv; returns the two paths."""
    json_path = f"{prefix}.json"
    csv_path = f"{prefix}.csv"
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(report))
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report_csv(report))
    return json_path, csv_path


def spot_check_report(report: ExperimentReport, sample: int = 3) -> None:
    """Re-derive a few collections of a loaded report and re-validate them.

    Reports carry no schedules, but every row is reproducible from the
    config and seed; this regenerates a sample of collections, re-runs both
    algorithms, confirms the recorded outcomes, and re-validates every
    claimed success.  Raises ExperimentError on any mismatch.
    """
    if not report.rows:
        return
    collections = sorted({r.collection for r in report.rows})
    step = max(1, len(collections) // max(1, sample))
    for c in collections[::step][:sample]:
        ts, _ = generate_taskset(report.config, c)
        for m in report.core_counts:
            res = schedule_taskset(ts, m)
            sim = gedf_np_simulate(ts, m)
            for r in report.rows:
                if r.collection != c or r.m != m:
                    continue
                fresh = res.success if r.algorithm == PROPOSED else sim.success
                if r.success != fresh:
                    raise ExperimentError(
                        f"collection {c} m={m} {r.algorithm}: report says "
                        f"success={r.success}, rerun says {fresh}"
                    )
            if res.success and not validate_schedule(res.schedule, ts).ok:
                raise ExperimentError(f"collection {c} m={m}: rerun schedule is invalid")
            if sim.success and not validate_schedule(sim.trace, ts).ok:
                raise ExperimentError(f"collection {c} m={m}: rerun trace is invalid")


# --- Gantt rendering ---------------------------------------------------------

_PALETTE = (
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)

_LANE_HEIGHT = 34
_BAR_HEIGHT = 24
_MARGIN_LEFT = 64
_MARGIN_TOP = 28
_MARGIN_BOTTOM = 30
_MARGIN_RIGHT = 16


def render_gantt(mp: ScheduleMap, ts: TaskSet) -> str:
    """Render a schedule map as an SVG document, one lane per core.

    Boxes are colored by DAG and labelled dag.node; dashed gridlines mark
    every DAG's period multiples.  Output is deterministic for a given map.
    """
    horizon = max(ts.hyperperiod, 1)
    px = max(4, min(48, 960 // horizon))
    width = _MARGIN_LEFT + horizon * px + _MARGIN_RIGHT
    height = _MARGIN_TOP + max(1, mp.num_cores) * _LANE_HEIGHT + _MARGIN_BOTTOM
    x0 = _MARGIN_LEFT
    y0 = _MARGIN_TOP

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    axis_bottom = y0 + mp.num_cores * _LANE_HEIGHT if mp.num_cores else y0 + _LANE_HEIGHT
    # Time axis with a tick every period gridline plus the horizon ends.
    out.append(
        f'<line x1="{x0}" y1="{axis_bottom}" x2="{x0 + horizon * px}" y2="{axis_bottom}" '
        f'stroke="#333" stroke-width="1"/>'
    )
    for label, t in (("0", 0), (str(horizon), horizon)):
        x = x0 + t * px
        out.append(
            f'<text x="{x}" y="{axis_bottom + 16}" text-anchor="middle" fill="#333">{label}</text>'
        )

    for dag in ts.dags:
        color = _PALETTE[(dag.dag_id - 1) % len(_PALETTE)]
        for k in range(1, ts.hyperperiod // dag.period + 1):
            x = x0 + k * dag.period * px
            out.append(
                f'<line x1="{x}" y1="{y0}" x2="{x}" y2="{axis_bottom}" stroke="{color}" '
                f'stroke-width="1" stroke-dasharray="3,3" opacity="0.6"/>'
            )

    for core in range(mp.num_cores):
        y = y0 + core * _LANE_HEIGHT
        out.append(
            f'<text x="{x0 - 8}" y="{y + _LANE_HEIGHT // 2 + 4}" text-anchor="end" '
            f'fill="#333">core {core}</text>'
        )
        out.append(
            f'<line x1="{x0}" y1="{y}" x2="{x0 + horizon * px}" y2="{y}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        for e in mp.cores[core]:
            color = _PALETTE[(e.dag_id - 1) % len(_PALETTE)]
            bx = x0 + e.start * px
            bw = (e.finish - e.start) * px
            by = y + (_LANE_HEIGHT - _BAR_HEIGHT) // 2
            out.append(
                f'<rect x="{bx}" y="{by}" width="{bw}" height="{_BAR_HEIGHT}" '
                f'fill="{color}" stroke="#333" stroke-width="1">'
                f"<title>dag {e.dag_id} node {e.node_id} job {e.job}: "
                f"[{e.start},{e.finish})</title></rect>"
            )
            if bw >= 24:
                out.append(
                    f'<text x="{bx + bw // 2}" y="{by + _BAR_HEIGHT - 8}" text-anchor="middle" '
                    f'fill="white">{e.dag_id}.{e.node_id}</text>'
                )

    out.append("</svg>")
    return "\n".join(out) + "\n"
