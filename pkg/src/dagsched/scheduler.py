"""Offline semi-partitioned scheduling of periodic DAG task sets.

The pipeline works per DAG, heaviest utilization first: place nodes backward
from the deadline (exit nodes first, highest prior-plus load first), pulling
each task as late as its children's placements allow, so the front of every
core stays free for tighter work.  A gap-filling compaction pass then migrates
low-priority tasks into earlier holes and drops emptied cores, the one-period
map is repeated across the hyperperiod, and a final compaction pass over all
DAGs merges their core blocks.  The task set is accepted iff the merged
schedule fits the available core count.
"""

from __future__ import annotations

from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Mapping, Sequence

from .analysis import DagAnalysis, analyze_dag, prior_plus
from .model import DagSpec, ScheduleEntry, ScheduleMap, TaskSet

NOT_ENOUGH_CORES = "not_enough_cores"
DAG_INFEASIBLE = "dag_infeasible"


class DagInfeasibleError(Exception):
    """A DAG has an ancestor chain no core count can fit before the deadline."""

    def __init__(self, dag_id: int, node_id: int):
        super().__init__(f"dag {dag_id}: node {node_id} cannot meet the deadline on any core")
        self.dag_id = dag_id
        self.node_id = node_id


class Placement:
    """One placed job execution; mutable while the schedule is being shaped."""

    __slots__ = ("dag_id", "node_id", "job", "start", "finish")

    def __init__(self, dag_id: int, node_id: int, job: int, start: int, finish: int):
        self.dag_id = dag_id
        self.node_id = node_id
        self.job = job
        self.start = start
        self.finish = finish

    def key(self) -> tuple[int, int, int, int, int]:
        return (self.dag_id, self.node_id, self.job, self.start, self.finish)

    def __repr__(self):
        return (
            f"Placement(dag={self.dag_id}, node={self.node_id}, job={self.job}, "
            f"[{self.start},{self.finish}))"
        )


@dataclass(frozen=True)
class ScheduleResult:
    """Outcome of schedule_taskset.

    On success, schedule carries the full hyperperiod map.  reason is
    NOT_ENOUGH_CORES when the compacted schedule needs more cores than
    available (cores_used still reports how many it needed), or
    DAG_INFEASIBLE with the offending (dag_id, node_id) in infeasible.
    """

    success: bool
    schedule: ScheduleMap | None
    cores_used: int
    busy_per_core: tuple[int, ...]
    reason: str | None = None
    infeasible: tuple[int, int] | None = None


def dynamic_lft(dag: DagSpec, lft: Mapping[int, int], node_id: int,
                finish_of: Mapping[int, int]) -> int:
    """Latest completion for a node given where its children actually sit.

    Exit nodes may run right up to their latest finish; every other node
    must complete before its earliest-starting scheduled child.  finish_of
    maps already-placed node ids to their scheduled finish.
    """
    node = dag.node(node_id)
    if not node.children:
        return lft[node_id]
    return min(finish_of[c] - dag.node(c).wcet for c in node.children)


def dynamic_est(dag: DagSpec, node_id: int,
                placements: Mapping[int, tuple[int, int]]) -> int:
    """Earliest legal start for a node given where its parents actually sit.

    placements maps placed node ids to (start, finish).  A placed parent
    constrains by its real finish; an unplaced one by its own earliest
    possible finish, recursively.  Moving a parent therefore shifts the
    earliest legal start of all its descendants.
    """
    memo: dict[int, int] = {}

    def earliest(nid: int) -> int:
        if nid in memo:
            return memo[nid]
        node = dag.node(nid)
        best = 0
        for p in node.parents:
            if p in placements:
                cand = placements[p][1]
            else:
                cand = earliest(p) + dag.node(p).wcet
            if cand > best:
                best = cand
        memo[nid] = best
        return best

    return earliest(node_id)


def primary_schedule(
    dag: DagSpec,
    start_cores: int | None = None,
    analysis: DagAnalysis | None = None,
    trace: list[str] | None = None,
) -> list[list[Placement]]:
    """Build the one-period schedule of a single DAG, stretching to the deadline.

    Nodes are taken bottom-up: the ready queue starts with the exit nodes and
    a node joins once all its children are placed.  Each node goes to the core
    maximizing alpha = min(latest feasible finish, start of the core's
    earliest entry), finishing exactly at alpha.  A fresh core is opened only
    when no existing core leaves room above the node's earliest start; if even
    a fresh core cannot, the DAG is infeasible outright.

    Returns one list of placements per core used (job index 0).
    """
    if not dag.nodes:
        return []
    if analysis is None:
        analysis = analyze_dag(dag)
    lft = {nid: na.lft for nid, na in analysis.per_node.items()}
    est = {nid: na.est for nid, na in analysis.per_node.items()}
    rank_pos = {nid: na.rank_pos for nid, na in analysis.per_node.items()}

    cores = max(1, start_cores if start_cores is not None else (analysis.min_cores or 1))
    lanes: list[list[Placement]] = [[] for _ in range(cores)]
    free_until = [dag.deadline] * cores  # start of each core's earliest entry

    pinned_finish: dict[int, int] = {}
    waiting = {n.node_id: len(n.children) for n in dag.nodes}
    ready: list[tuple[int, int]] = []
    for nid, count in waiting.items():
        if count == 0:
            heappush(ready, (rank_pos[nid], nid))

    while ready:
        _, nid = heappop(ready)
        node = dag.node(nid)
        latest = dynamic_lft(dag, lft, nid, pinned_finish)

        best_core = 0
        best_alpha = min(latest, free_until[0])
        for i in range(1, len(lanes)):
            alpha = min(latest, free_until[i])
            if alpha > best_alpha:
                best_core, best_alpha = i, alpha
        if best_alpha - node.wcet < est[nid]:
            # No existing core leaves room; a fresh one frees the whole period.
            if latest - node.wcet < est[nid]:
                raise DagInfeasibleError(dag.dag_id, nid)
            lanes.append([])
            free_until.append(dag.deadline)
            best_core, best_alpha = len(lanes) - 1, latest

        start = best_alpha - node.wcet
        lanes[best_core].insert(0, Placement(dag.dag_id, nid, 0, start, best_alpha))
        free_until[best_core] = start
        pinned_finish[nid] = best_alpha
        if trace is not None:
            trace.append(
                f"dag {dag.dag_id} node {nid} -> core {best_core}: "
                f"alpha={best_alpha} start={start} finish={best_alpha}"
            )
        for p in node.parents:
            waiting[p] -= 1
            if waiting[p] == 0:
                heappush(ready, (rank_pos[p], p))

    return lanes


class _CompactContext:
    """Immutable per-task-set lookups used by the compaction sweeps."""

    __slots__ = ("wcet", "parents", "children", "prior", "period", "work", "min_wcet")

    def __init__(self, ts: TaskSet):
        self.wcet: dict[tuple[int, int], int] = {}
        self.parents: dict[tuple[int, int], tuple[int, ...]] = {}
        self.children: dict[tuple[int, int], tuple[int, ...]] = {}
        self.prior: dict[tuple[int, int], int] = {}
        self.period: dict[int, int] = {}
        self.work: dict[int, int] = {}
        for dag in ts.dags:
            self.period[dag.dag_id] = dag.period
            self.work[dag.dag_id] = dag.total_work
            pp = prior_plus(dag)
            for node in dag.nodes:
                key = (dag.dag_id, node.node_id)
                self.wcet[key] = node.wcet
                self.parents[key] = node.parents
                self.children[key] = node.children
                self.prior[key] = pp[node.node_id]
        self.min_wcet = min(self.wcet.values(), default=1)


class _Compactor:
    """Sweep machinery over one working copy of the core lanes."""

    def __init__(
        self, lanes: list[list[Placement]], ctx: _CompactContext, lo: int, hi: int, horizon: int
    ):
        self.lanes = lanes
        self.ctx = ctx
        self.lo = lo
        self.hi = hi
        self.horizon = horizon
        self.pos: dict[tuple[int, int, int], Placement] = {}
        for lane in lanes:
            for p in lane:
                self.pos[(p.dag_id, p.node_id, p.job)] = p
        self.dest_cache: dict[tuple[int, int, int], int] = {}
        self.gate_cache: dict[tuple[int, int, int], int | None] = {}

    def dest_of(self, p: Placement) -> int:
        # Earliest legal start: release time for entry nodes, otherwise the
        # latest finish among the (always placed) parents of the same job.
        key = (p.dag_id, p.node_id, p.job)
        got = self.dest_cache.get(key)
        if got is None:
            parents = self.ctx.parents[(p.dag_id, p.node_id)]
            if not parents:
                got = p.job * self.ctx.period[p.dag_id]
            else:
                got = max(self.pos[(p.dag_id, q, p.job)].finish for q in parents)
            self.dest_cache[key] = got
        return got

    def gate_of(self, p: Placement) -> int | None:
        # Latest allowed finish imposed by the same job's children, if any.
        key = (p.dag_id, p.node_id, p.job)
        if key in self.gate_cache:
            return self.gate_cache[key]
        children = self.ctx.children[(p.dag_id, p.node_id)]
        got = min((self.pos[(p.dag_id, c, p.job)].start for c in children), default=None)
        self.gate_cache[key] = got
        return got

    def _moved(self, p: Placement) -> None:
        for c in self.ctx.children[(p.dag_id, p.node_id)]:
            self.dest_cache.pop((p.dag_id, c, p.job), None)
        for q in self.ctx.parents[(p.dag_id, p.node_id)]:
            self.gate_cache.pop((p.dag_id, q, p.job), None)

    def _shift(self, temp: Placement, gap_start: int) -> bool:
        target = self.dest_of(temp)
        if target < gap_start:
            target = gap_start
        if target >= temp.start:
            return False
        width = temp.finish - temp.start
        temp.start, temp.finish = target, target + width
        self._moved(temp)
        return True

    def _fill(self, ci: int, gap_start: int, gap_end: int) -> bool:
        """Migrate the preferred fitting entry from a higher core into the hole."""
        lanes, ctx = self.lanes, self.ctx
        best: Placement | None = None
        best_core = -1
        best_key: tuple | None = None
        best_start = 0
        for cj in range(ci + 1, self.hi + 1):
            for cand in lanes[cj]:
                w = ctx.wcet[(cand.dag_id, cand.node_id)]
                if gap_end - gap_start < w:
                    continue
                d = self.dest_of(cand)
                chosen = d if d > gap_start else gap_start
                fin = chosen + w
                if fin > gap_end:
                    continue
                gate = self.gate_of(cand)
                if gate is not None and fin > gate:
                    continue
                if fin > (cand.job + 1) * ctx.period[cand.dag_id]:
                    continue
                key = (
                    ctx.prior[(cand.dag_id, cand.node_id)] + cand.job * ctx.work[cand.dag_id],
                    d + w,
                    chosen - gap_start,
                    cand.dag_id,
                    cand.node_id,
                    cand.job,
                )
                if best_key is None or key < best_key:
                    best, best_core, best_key, best_start = cand, cj, key, chosen
        if best is None:
            return False
        lanes[best_core].remove(best)
        width = best.finish - best.start
        best.start, best.finish = best_start, best_start + width
        lane = lanes[ci]
        at = 0
        while at < len(lane) and lane[at].start < best.start:
            at += 1
        lane.insert(at, best)
        self._moved(best)
        return True

    def sweep(self, shift_any: bool) -> bool:
        """One walk over every gap; returns whether anything acted.

        Each entry gets at most one action: the best-fitting mover from a
        higher-indexed core migrates into the hole before it, or, failing
        that, the entry itself slides left to its earliest legal start.
        With shift_any False the slide is allowed only when the hole is the
        core's free prefix (the first entry of the core).  The idle stretch
        after a non-empty core's last entry counts as one more fillable
        hole, bounded by the schedule horizon.
        """
        lanes, ctx = self.lanes, self.ctx
        acted = False
        for ci in range(self.lo, min(self.hi, len(lanes) - 1) + 1):
            for temp in list(lanes[ci]):
                gap_end = temp.start
                gap_start = 0
                for e in lanes[ci]:
                    if e is not temp and e.start < gap_end and e.finish > gap_start:
                        gap_start = e.finish
                if gap_end <= gap_start:
                    continue
                if gap_end - gap_start >= ctx.min_wcet and self._fill(ci, gap_start, gap_end):
                    acted = True
                elif (shift_any or gap_start == 0) and self._shift(temp, gap_start):
                    acted = True
            if lanes[ci]:
                tail = max(e.finish for e in lanes[ci])
                if self.horizon - tail >= ctx.min_wcet and self._fill(ci, tail, self.horizon):
                    acted = True
        return acted

    def run(self, shift_any: bool) -> None:
        # A loosened fixpoint is automatically stable for the restricted
        # sweep as well (its actions are a subset of the loosened ones).
        while self.sweep(shift_any=shift_any):
            pass

    def restretch(self) -> None:
        """Push every in-range entry as late as children, deadline, and core allow.

        The mirror of left-shifting: slack accumulates again at the front
        of each core, where the gap walk can reach it.  Processing in
        descending start order visits children and core successors before
        the entries they constrain, so the result stays valid.
        """
        order = []
        for ci in range(self.lo, min(self.hi, len(self.lanes) - 1) + 1):
            for idx, p in enumerate(self.lanes[ci]):
                order.append((p.start, ci, idx, p))
        order.sort(key=lambda t: (-t[0], -t[1], -t[2]))
        head: list[int | None] = [None] * len(self.lanes)
        for _, ci, _, p in order:
            limit = (p.job + 1) * self.ctx.period[p.dag_id]
            for c in self.ctx.children[(p.dag_id, p.node_id)]:
                limit = min(limit, self.pos[(p.dag_id, c, p.job)].start)
            if head[ci] is not None:
                limit = min(limit, head[ci])
            width = p.finish - p.start
            p.start, p.finish = limit - width, limit
            head[ci] = limit - width
        for lane in self.lanes:
            lane.sort(key=lambda p: p.start)
        self.dest_cache.clear()
        self.gate_cache.clear()


def _copy_lanes(cores: Sequence[Sequence[Placement]]) -> list[list[Placement]]:
    return [
        [Placement(p.dag_id, p.node_id, p.job, p.start, p.finish) for p in lane]
        for lane in cores
    ]


def compact(
    cores: Sequence[Sequence[Placement]],
    ts: TaskSet,
    a_index: int = 0,
    b_index: int | None = None,
) -> list[list[Placement]]:
    """Fill schedule gaps by migrating tasks toward earlier cores and times.

    Walks cores in ascending index over [a_index, b_index].  For each entry,
    the gap is the hole between its predecessor's finish on that core (the
    core's start, for the first entry) and its own start.  One action fills
    it: the best-fitting task from a higher-indexed core moves in — lowest
    effective prior-plus load first, then earliest feasible finish, then
    smallest penalty (chosen start minus gap start) — or, when no mover
    fits, the entry itself shifts left to its earliest legal start.  A move
    must respect the mover's parents' finishes, its children's starts, and
    its own period window.

    Sweeps repeat until none acts.  The baseline rounds restrict the
    self-shift to each core's free prefix; further rounds that also slide
    interior entries left (loosening the holes for more migration) are
    tried afterwards and kept only while they strictly reduce the core
    count, so the result is stable: compacting a compacted schedule is a
    no-op.  Emptied cores are dropped and the rest renumbered.  The input
    is never mutated; busy time and the entry multiset are preserved.
    """
    lanes = _copy_lanes(cores)
    if not lanes:
        return []
    hi = len(lanes) - 1 if b_index is None else b_index
    ctx = _CompactContext(ts)
    horizon = ts.hyperperiod

    def used(ls: list[list[Placement]]) -> int:
        return sum(1 for lane in ls if lane)

    _Compactor(lanes, ctx, a_index, hi, horizon).run(shift_any=False)
    # Keep retrying harder strategies while they strictly reduce the core
    # count: loosened sweeps (interior entries may slide left too), then
    # shake cycles that re-stretch everything late and re-pack, escaping
    # left-welded layouts by rebuilding the walkable holes at the front.
    improved = True
    while improved:
        improved = False
        for restretch_first, cycles in ((False, 1), (True, 1), (True, 2), (True, 3)):
            trial = _copy_lanes(lanes)
            worker = _Compactor(trial, ctx, a_index, hi, horizon)
            for cycle in range(cycles):
                if restretch_first or cycle > 0:
                    worker.restretch()
                worker.run(shift_any=True)
                if used(trial) < used(lanes):
                    break
            if used(trial) < used(lanes):
                lanes = trial
                improved = True
                break

    return [lane for lane in lanes if lane]


def extend(
    cores: Sequence[Sequence[Placement]], dag: DagSpec, horizon: int
) -> list[list[Placement]]:
    """Repeat a one-period schedule across the hyperperiod.

    Copy k carries job index k with all starts and finishes shifted by
    k periods; the core layout is unchanged.
    """
    if horizon % dag.period != 0:
        raise ValueError(
            f"hyperperiod {horizon} is not a multiple of dag {dag.dag_id}'s period {dag.period}"
        )
    copies = horizon // dag.period
    out: list[list[Placement]] = []
    for lane in cores:
        extended = [
            Placement(p.dag_id, p.node_id, k, p.start + k * dag.period, p.finish + k * dag.period)
            for k in range(copies)
            for p in lane
        ]
        extended.sort(key=lambda p: p.start)
        out.append(extended)
    return out


def stack_extended_schedules(
    ts: TaskSet, trace: list[str] | None = None
) -> list[list[Placement]]:
    """Per-DAG pipeline up to (but not including) the final global compaction.

    DAGs are processed in descending utilization so the heaviest ones claim
    the lowest core indices; each is primary-scheduled, compacted within its
    own cores, extended over the hyperperiod, and its core block appended.
    Raises DagInfeasibleError as soon as any DAG cannot fit its deadline.
    """
    order = sorted(ts.dags, key=lambda d: (-d.utilization, d.dag_id))
    stacked: list[list[Placement]] = []
    for dag in order:
        if not dag.nodes:
            continue
        analysis = analyze_dag(dag)
        lanes = primary_schedule(dag, analysis=analysis, trace=trace)
        lanes = compact(lanes, ts)
        lanes = extend(lanes, dag, ts.hyperperiod)
        stacked.extend(lanes)
    return stacked


def _to_schedule_map(lanes: Sequence[Sequence[Placement]]) -> ScheduleMap:
    entries = [
        ScheduleEntry(p.dag_id, p.node_id, p.job, core, p.start, p.finish)
        for core, lane in enumerate(lanes)
        for p in lane
    ]
    return ScheduleMap.from_entries(len(lanes), entries)


def schedule_taskset(ts: TaskSet, m: int, trace: list[str] | None = None) -> ScheduleResult:
    """Schedule a whole task set onto at most m cores.

    Builds every DAG's stretched-and-compacted hyperperiod block, then runs
    one compaction pass across all of them (the semi-partitioned step: most
    cores keep one DAG's tasks, merged cores host several).  Succeeds iff
    the result fits in m cores.
    """
    if m < 1:
        raise ValueError(f"core count must be >= 1, got {m}")
    try:
        lanes = stack_extended_schedules(ts, trace=trace)
        lanes = compact(lanes, ts)
    except DagInfeasibleError as exc:
        return ScheduleResult(
            success=False,
            schedule=None,
            cores_used=0,
            busy_per_core=(),
            reason=DAG_INFEASIBLE,
            infeasible=(exc.dag_id, exc.node_id),
        )
    used = len(lanes)
    busy = tuple(sum(p.finish - p.start for p in lane) for lane in lanes)
    if used > m:
        return ScheduleResult(
            success=False,
            schedule=None,
            cores_used=used,
            busy_per_core=busy,
            reason=NOT_ENOUGH_CORES,
        )
    return ScheduleResult(
        success=True,
        schedule=_to_schedule_map(lanes),
        cores_used=used,
        busy_per_core=busy,
    )
