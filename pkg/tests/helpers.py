"""Shared builders, brute-force oracles, and trace checkers for the tests.

The oracles recompute analysis results by explicit enumeration (reachability
sets, all-paths recursion without memoization) so they stay independent of
the production implementations they check.
"""

from __future__ import annotations

from dagsched.model import DagSpec, ScheduleMap, TaskSet, build_dag


def diamond_dag(dag_id: int = 1, period: int = 8) -> DagSpec:
    # s=1 (w1), a=2 (w3), b=3 (w2), t=4 (w1)
    return build_dag(dag_id, period, {1: 1, 2: 3, 3: 2, 4: 1}, [(1, 2), (1, 3), (2, 4), (3, 4)])


def chain_dag(dag_id: int = 1, period: int = 10) -> DagSpec:
    # A=1 -> B=2, both wcet 2
    return build_dag(dag_id, period, {1: 2, 2: 2}, [(1, 2)])


def single_node_dag(dag_id: int = 1, period: int = 5, wcet: int = 2) -> DagSpec:
    return build_dag(dag_id, period, {1: wcet})


def random_dag(rng, dag_id: int = 1, max_nodes: int = 12, feasible: bool = True) -> DagSpec:
    n = rng.randint(1, max_nodes)
    wcets = {i: rng.randint(1, 9) for i in range(1, n + 1)}
    edges = [
        (i, j)
        for i in range(1, n + 1)
        for j in range(i + 1, n + 1)
        if rng.random() < rng.choice((0.2, 0.5, 0.8))
    ]
    # total work bounds every path weight, so this period is always feasible
    period = sum(wcets.values()) + (rng.randint(0, 10) if feasible else 0)
    return build_dag(dag_id, period, wcets, edges)


# --- brute-force analysis oracles -------------------------------------------


def brute_ancestors(dag: DagSpec, nid: int) -> set[int]:
    seen: set[int] = set()
    frontier = list(dag.node(nid).parents)
    while frontier:
        p = frontier.pop()
        if p not in seen:
            seen.add(p)
            frontier.extend(dag.node(p).parents)
    return seen


def brute_prior_plus(dag: DagSpec, nid: int) -> int:
    return dag.node(nid).wcet + sum(dag.node(a).wcet for a in brute_ancestors(dag, nid))


def heaviest_ending_at(dag: DagSpec, nid: int) -> int:
    """Max weight over all directed paths ending at nid, by plain recursion."""
    node = dag.node(nid)
    if not node.parents:
        return node.wcet
    return node.wcet + max(heaviest_ending_at(dag, p) for p in node.parents)


def heaviest_starting_at(dag: DagSpec, nid: int) -> int:
    node = dag.node(nid)
    if not node.children:
        return node.wcet
    return node.wcet + max(heaviest_starting_at(dag, c) for c in node.children)


def brute_est(dag: DagSpec, nid: int) -> int:
    return heaviest_ending_at(dag, nid) - dag.node(nid).wcet


def brute_lft(dag: DagSpec, nid: int) -> int:
    return dag.deadline - (heaviest_starting_at(dag, nid) - dag.node(nid).wcet)


def all_maximal_paths(dag: DagSpec) -> list[list[int]]:
    paths: list[list[int]] = []

    def walk(path: list[int]) -> None:
        children = dag.node(path[-1]).children
        if not children:
            paths.append(list(path))
            return
        for c in children:
            path.append(c)
            walk(path)
            path.pop()

    for e in dag.entry_ids:
        walk([e])
    return paths


def brute_critical_path(dag: DagSpec) -> tuple[list[int], int]:
    if not dag.nodes:
        return [], 0
    paths = all_maximal_paths(dag)
    best = max(sum(dag.node(n).wcet for n in p) for p in paths)
    winners = [p for p in paths if sum(dag.node(n).wcet for n in p) == best]
    return min(winners), best


# --- schedule/trace checkers --------------------------------------------------


def entry_multiset(lanes) -> list[tuple[int, int, int, int]]:
    """Multiset of (dag, node, job, duration); positions are free to change."""
    return sorted(
        (p.dag_id, p.node_id, p.job, p.finish - p.start) for lane in lanes for p in lane
    )


def lanes_layout(lanes) -> list[list[tuple[int, int, int, int, int]]]:
    return [[(p.dag_id, p.node_id, p.job, p.start, p.finish) for p in lane] for lane in lanes]


def eligibility_times(ts: TaskSet, trace: ScheduleMap) -> dict[tuple[int, int, int], int]:
    """When each instance became ready: release joined with parent finishes."""
    finish = {(e.dag_id, e.node_id, e.job): e.finish for e in trace.entries()}
    out = {}
    for e in trace.entries():
        dag = ts.dag(e.dag_id)
        ready = e.job * dag.period
        for p in dag.node(e.node_id).parents:
            ready = max(ready, finish[(e.dag_id, p, e.job)])
        out[(e.dag_id, e.node_id, e.job)] = ready
    return out


def check_work_conserving(ts: TaskSet, trace: ScheduleMap) -> list[str]:
    """No core may idle while an eligible instance waits; returns violations."""
    ready = eligibility_times(ts, trace)
    busy = [sorted((e.start, e.finish) for e in lane) for lane in trace.cores]

    def covered(lane: list[tuple[int, int]], lo: int, hi: int) -> bool:
        t = lo
        for s, f in lane:
            if s > t:
                break
            if f > t:
                t = f
            if t >= hi:
                return True
        return t >= hi

    problems = []
    for e in trace.entries():
        t0 = ready[(e.dag_id, e.node_id, e.job)]
        if e.start > t0:
            for core, lane in enumerate(busy):
                if not covered(lane, t0, e.start):
                    problems.append(
                        f"dag {e.dag_id} node {e.node_id} job {e.job} waited "
                        f"[{t0},{e.start}) while core {core} was idle"
                    )
    return problems


def check_edf_dispatch(ts: TaskSet, trace: ScheduleMap) -> list[str]:
    """Dispatched instances must carry the earliest deadline among waiters."""
    ready = eligibility_times(ts, trace)
    entries = list(trace.entries())
    problems = []
    for x in entries:
        dx = (x.job + 1) * ts.dag(x.dag_id).period
        for y in entries:
            if y.start > x.start and ready[(y.dag_id, y.node_id, y.job)] <= x.start:
                dy = (y.job + 1) * ts.dag(y.dag_id).period
                if dy < dx:
                    problems.append(
                        f"at t={x.start} dispatched deadline-{dx} instance while "
                        f"deadline-{dy} instance dag {y.dag_id} node {y.node_id} "
                        f"job {y.job} was waiting"
                    )
    return problems
