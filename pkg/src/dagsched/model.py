"""Domain types for periodic DAG task sets, schedule maps, and validation.

All times are integer ticks and must stay within 64-bit range.  Deadlines are
implicit (equal to the period), all DAGs release their first job at time 0,
and node executions are non-preemptable: a schedule entry occupies one core
for exactly its worst-case execution time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

TICK_MAX = 2**64 - 1

# Violation kinds reported by validate_schedule.
OVERLAP = "overlap"
PRECEDENCE = "precedence"
DEADLINE = "deadline"
RELEASE = "release"
DURATION = "duration"
MISSING_JOB = "missing_job"
UNKNOWN_NODE = "unknown_node"

VIOLATION_KINDS = frozenset(
    {OVERLAP, PRECEDENCE, DEADLINE, RELEASE, DURATION, MISSING_JOB, UNKNOWN_NODE}
)


class TaskSetError(ValueError):
    """Malformed task-set or schedule document."""


class TickOverflowError(OverflowError):
    """A derived tick value exceeded the 64-bit tick range."""


def hyperperiod(periods: Iterable[int]) -> int:
    """Least common multiple of the given periods, in exact integer arithmetic.

    Raises TickOverflowError if the result would not fit in 64 bits; the
    result is never silently wrapped.
    """
    result = 1
    for p in periods:
        if not isinstance(p, int) or isinstance(p, bool) or p < 1:
            raise TaskSetError(f"period must be a positive integer, got {p!r}")
        result = math.lcm(result, p)
        if result > TICK_MAX:
            raise TickOverflowError(f"hyperperiod exceeds {TICK_MAX}")
    return result


@dataclass(frozen=True)
class TaskNode:
    """One non-preemptable vertex of a DAG."""

    dag_id: int
    node_id: int
    wcet: int
    parents: tuple[int, ...]
    children: tuple[int, ...]


@dataclass(frozen=True)
class DagSpec:
    """One periodic DAG with derived totals.

    deadline always equals period; total_work is the sum of node wcets and
    cp_length the weight of the heaviest directed path.
    """

    dag_id: int
    period: int
    deadline: int
    total_work: int
    cp_length: int
    nodes: tuple[TaskNode, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.node_id: n for n in self.nodes})

    def node(self, node_id: int) -> TaskNode:
        return self._by_id[node_id]

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes)

    @property
    def entry_ids(self) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes if not n.parents)

    @property
    def exit_ids(self) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes if not n.children)

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.total_work, self.period)


@dataclass(frozen=True)
class TaskSet:
    """A set of periodic DAGs plus the derived hyperperiod."""

    dags: tuple[DagSpec, ...]
    hyperperiod: int
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {d.dag_id: d for d in self.dags})

    def dag(self, dag_id: int) -> DagSpec:
        return self._by_id[dag_id]

    @classmethod
    def build(cls, dags: Iterable[DagSpec]) -> "TaskSet":
        dags = tuple(sorted(dags, key=lambda d: d.dag_id))
        ids = [d.dag_id for d in dags]
        if ids != list(range(1, len(dags) + 1)):
            raise TaskSetError(f"dag ids must be dense 1..n, got {ids}")
        return cls(dags=dags, hyperperiod=hyperperiod(d.period for d in dags))


def _find_cycle(dag_id: int, remaining: set[int], parents: Mapping[int, set[int]]) -> str:
    # Every node left over by Kahn's algorithm has a parent among the
    # leftovers, so walking parent links must revisit a node.
    start = min(remaining)
    path = [start]
    seen = {start}
    cur = start
    while True:
        cur = min(p for p in parents[cur] if p in remaining)
        if cur in seen:
            cycle = path[path.index(cur):] + [cur]
            arrow = " -> ".join(str(n) for n in reversed(cycle))
            raise TaskSetError(f"dag {dag_id}: cycle detected: {arrow}")
        seen.add(cur)
        path.append(cur)


def build_dag(
    dag_id: int,
    period: int,
    wcets: Mapping[int, int],
    edges: Iterable[tuple[int, int]] = (),
) -> DagSpec:
    """Assemble a DagSpec from raw node weights and precedence edges.

    wcets maps node id to execution time; edges are (parent, child) pairs.
    Derived fields (total work, critical-path length) are computed here.
    Raises TaskSetError for non-positive weights or periods, dangling edge
    endpoints, and cycles (the error names one offending cycle).
    """
    if not isinstance(period, int) or isinstance(period, bool) or period < 1:
        raise TaskSetError(f"dag {dag_id}: period must be a positive integer, got {period!r}")
    for nid, w in wcets.items():
        if not isinstance(w, int) or isinstance(w, bool) or w < 1:
            raise TaskSetError(f"dag {dag_id}: node {nid}: wcet must be >= 1, got {w!r}")
    ids = sorted(wcets)
    parents: dict[int, set[int]] = {nid: set() for nid in ids}
    children: dict[int, set[int]] = {nid: set() for nid in ids}
    for u, v in edges:
        if u not in parents or v not in parents:
            raise TaskSetError(f"dag {dag_id}: edge {u} -> {v} references a missing node")
        if u == v:
            raise TaskSetError(f"dag {dag_id}: cycle detected: {u} -> {u}")
        children[u].add(v)
        parents[v].add(u)

    # Kahn's algorithm: topological order, doubling as the cycle check.
    indeg = {nid: len(parents[nid]) for nid in ids}
    ready = sorted(nid for nid in ids if indeg[nid] == 0)
    order = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        for c in sorted(children[nid]):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) < len(ids):
        _find_cycle(dag_id, set(ids) - set(order), parents)

    # Longest path ending at each node, in topological order.
    head: dict[int, int] = {}
    for nid in order:
        best = max((head[p] for p in parents[nid]), default=0)
        head[nid] = best + wcets[nid]
    cp_length = max(head.values(), default=0)

    nodes = tuple(
        TaskNode(
            dag_id=dag_id,
            node_id=nid,
            wcet=wcets[nid],
            parents=tuple(sorted(parents[nid])),
            children=tuple(sorted(children[nid])),
        )
        for nid in ids
    )
    return DagSpec(
        dag_id=dag_id,
        period=period,
        deadline=period,
        total_work=sum(wcets.values()),
        cp_length=cp_length,
        nodes=nodes,
    )


@dataclass(frozen=True)
class ScheduleEntry:
    """One placed job execution: node instance `job` of a DAG on a core."""

    dag_id: int
    node_id: int
    job: int
    core: int
    start: int
    finish: int


@dataclass(frozen=True)
class ScheduleMap:
    """Per-core, start-ordered lists of schedule entries."""

    num_cores: int
    cores: tuple[tuple[ScheduleEntry, ...], ...]

    @classmethod
    def from_entries(cls, num_cores: int, entries: Iterable[ScheduleEntry]) -> "ScheduleMap":
        lanes: list[list[ScheduleEntry]] = [[] for _ in range(num_cores)]
        for e in entries:
            if not 0 <= e.core < num_cores:
                raise TaskSetError(f"entry core {e.core} out of range 0..{num_cores - 1}")
            lanes[e.core].append(e)
        for lane in lanes:
            lane.sort(key=lambda e: (e.start, e.finish, e.dag_id, e.node_id, e.job))
        return cls(num_cores=num_cores, cores=tuple(tuple(lane) for lane in lanes))

    def entries(self) -> Iterable[ScheduleEntry]:
        for lane in self.cores:
            yield from lane

    @property
    def busy_per_core(self) -> tuple[int, ...]:
        return tuple(sum(e.finish - e.start for e in lane) for lane in self.cores)

    @property
    def used_cores(self) -> int:
        return sum(1 for lane in self.cores if lane)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_schedule; ok iff no violations were found."""

    ok: bool
    violations: tuple[Violation, ...]


def validate_schedule(mp: ScheduleMap, ts: TaskSet) -> ValidationReport:
    """Check a schedule map against every rule of the task model.

    Over one hyperperiod: each job instance of each node appears exactly
    once, runs for exactly its wcet inside its own period window, cores
    never run two entries at once, and a job's parents finish before its
    children start.  Violations are collected exhaustively; entries that
    match no known job instance (or duplicate one) are reported as
    ``unknown_node`` and skipped by the remaining checks.
    """
    violations: list[Violation] = []
    expected: dict[tuple[int, int, int], TaskNode] = {}
    for dag in ts.dags:
        for node in dag.nodes:
            for k in range(ts.hyperperiod // dag.period):
                expected[(dag.dag_id, node.node_id, k)] = node

    seen: dict[tuple[int, int, int], ScheduleEntry] = {}
    for core_idx, lane in enumerate(mp.cores):
        for e in lane:
            key = (e.dag_id, e.node_id, e.job)
            locus = f"dag {e.dag_id} node {e.node_id} job {e.job} on core {core_idx}"
            if key not in expected:
                violations.append(Violation(UNKNOWN_NODE, f"{locus}: no such job instance"))
                continue
            if key in seen:
                violations.append(Violation(UNKNOWN_NODE, f"{locus}: duplicate placement"))
                continue
            seen[key] = e
            node = expected[key]
            period = ts.dag(e.dag_id).period
            release = e.job * period
            deadline = (e.job + 1) * period
            if e.finish - e.start != node.wcet:
                violations.append(
                    Violation(DURATION, f"{locus}: runs {e.finish - e.start} ticks, wcet is {node.wcet}")
                )
            if e.start < release:
                violations.append(
                    Violation(RELEASE, f"{locus}: starts {e.start} before release {release}")
                )
            if e.finish > deadline:
                violations.append(
                    Violation(DEADLINE, f"{locus}: finishes {e.finish} after deadline {deadline}")
                )

    for dag_id, node_id, k in expected:
        if (dag_id, node_id, k) not in seen:
            violations.append(
                Violation(MISSING_JOB, f"dag {dag_id} node {node_id} job {k}: never scheduled")
            )

    # Per-core overlap: compare each entry against the latest finish so far
    # so nested intervals are caught, not just adjacent ones.
    for core_idx, lane in enumerate(mp.cores):
        ordered = sorted(lane, key=lambda e: (e.start, e.finish, e.dag_id, e.node_id, e.job))
        prev = None
        for e in ordered:
            if prev is not None and e.start < prev.finish:
                violations.append(
                    Violation(
                        OVERLAP,
                        f"core {core_idx}: dag {e.dag_id} node {e.node_id} job {e.job} "
                        f"[{e.start},{e.finish}) overlaps dag {prev.dag_id} node "
                        f"{prev.node_id} job {prev.job} [{prev.start},{prev.finish})",
                    )
                )
            if prev is None or e.finish > prev.finish:
                prev = e

    # Same-job precedence, checked only where both endpoints were placed.
    for dag in ts.dags:
        for node in dag.nodes:
            for child in node.children:
                for k in range(ts.hyperperiod // dag.period):
                    pe = seen.get((dag.dag_id, node.node_id, k))
                    ce = seen.get((dag.dag_id, child, k))
                    if pe is not None and ce is not None and pe.finish > ce.start:
                        violations.append(
                            Violation(
                                PRECEDENCE,
                                f"dag {dag.dag_id} job {k}: node {node.node_id} finishes "
                                f"{pe.finish} after child {child} starts {ce.start}",
                            )
                        )

    violations.sort(key=lambda v: (v.kind, v.where))
    return ValidationReport(ok=not violations, violations=tuple(violations))


# --- document formats -------------------------------------------------------
#
# Task-set document:
#   {"dags": [{"id": 1, "period": 10,
#              "nodes": [{"id": 1, "wcet": 2}, ...],
#              "edges": [[1, 2], ...]}, ...]}
# Schedule document:
#   {"num_cores": 2, "entries": [{"dag": 1, "node": 1, "job": 0,
#                                 "core": 0, "start": 0, "finish": 2}, ...]}
# Entries are sorted by (core, start) so serialization is byte-stable.


def _as_int(value, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TaskSetError(f"{what} must be an integer, got {value!r}")
    return value


def load_taskset(data: bytes | str) -> TaskSet:
    """Parse a task-set document and compute all derived fields."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TaskSetError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("dags"), list):
        raise TaskSetError('task-set document must be an object with a "dags" list')
    dags = []
    for i, d in enumerate(doc["dags"]):
        if not isinstance(d, dict):
            raise TaskSetError(f"dag entry {i}: must be an object")
        dag_id = _as_int(d.get("id"), f"dag entry {i}: id")
        period = d.get("period")
        nodes = d.get("nodes")
        if not isinstance(nodes, list):
            raise TaskSetError(f"dag {dag_id}: nodes must be a list")
        wcets: dict[int, int] = {}
        for n in nodes:
            if not isinstance(n, dict):
                raise TaskSetError(f"dag {dag_id}: node entries must be objects")
            nid = _as_int(n.get("id"), f"dag {dag_id}: node id")
            if nid in wcets:
                raise TaskSetError(f"dag {dag_id}: duplicate node id {nid}")
            wcets[nid] = n.get("wcet")
        edges = []
        for e in d.get("edges", []):
            if not (isinstance(e, list) and len(e) == 2):
                raise TaskSetError(f"dag {dag_id}: edges must be [src, dst] pairs")
            edges.append((_as_int(e[0], f"dag {dag_id}: edge src"), _as_int(e[1], f"dag {dag_id}: edge dst")))
        dags.append(build_dag(dag_id, period, wcets, edges))
    return TaskSet.build(dags)


def taskset_doc(ts: TaskSet) -> dict:
    return {
        "dags": [
            {
                "id": dag.dag_id,
                "period": dag.period,
                "nodes": [{"id": n.node_id, "wcet": n.wcet} for n in dag.nodes],
                "edges": [[n.node_id, c] for n in dag.nodes for c in n.children],
            }
            for dag in ts.dags
        ]
    }


def dumps_taskset(ts: TaskSet) -> str:
    return json.dumps(taskset_doc(ts), indent=2) + "\n"


def schedule_doc(mp: ScheduleMap) -> dict:
    ordered = sorted(
        mp.entries(), key=lambda e: (e.core, e.start, e.finish, e.dag_id, e.node_id, e.job)
    )
    return {
        "num_cores": mp.num_cores,
        "entries": [
            {
                "dag": e.dag_id,
                "node": e.node_id,
                "job": e.job,
                "core": e.core,
                "start": e.start,
                "finish": e.finish,
            }
            for e in ordered
        ],
    }


def dumps_schedule(mp: ScheduleMap) -> str:
    return json.dumps(schedule_doc(mp), indent=2) + "\n"


def load_schedule(data: bytes | str) -> ScheduleMap:
    """Parse a schedule document back into a ScheduleMap."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TaskSetError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TaskSetError("schedule document must be an object")
    num_cores = _as_int(doc.get("num_cores"), "num_cores")
    if num_cores < 0:
        raise TaskSetError(f"num_cores must be >= 0, got {num_cores}")
    raw = doc.get("entries")
    if not isinstance(raw, list):
        raise TaskSetError('schedule document must carry an "entries" list')
    entries = []
    for i, e in enumerate(raw):
        if not isinstance(e, dict):
            raise TaskSetError(f"entry {i}: must be an object")
        entries.append(
            ScheduleEntry(
                dag_id=_as_int(e.get("dag"), f"entry {i}: dag"),
                node_id=_as_int(e.get("node"), f"entry {i}: node"),
                job=_as_int(e.get("job"), f"entry {i}: job"),
                core=_as_int(e.get("core"), f"entry {i}: core"),
                start=_as_int(e.get("start"), f"entry {i}: start"),
                finish=_as_int(e.get("finish"), f"entry {i}: finish"),
            )
        )
    return ScheduleMap.from_entries(num_cores, entries)
