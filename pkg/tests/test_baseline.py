from __future__ import annotations

import random

import pytest

from dagsched.baseline import gedf_np_simulate
from dagsched.bench import GenConfig, generate_taskset
from dagsched.model import TaskSet, build_dag, dumps_schedule, validate_schedule

from helpers import (
    chain_dag,
    check_edf_dispatch,
    check_work_conserving,
    single_node_dag,
)


def test_single_node_runs_at_release():
    ts = TaskSet.build([single_node_dag(period=5, wcet=2)])
    sim = gedf_np_simulate(ts, 1)
    assert sim.success and sim.first_miss is None
    assert [(e.job, e.start, e.finish) for e in sim.trace.entries()] == [(0, 0, 2)]
    assert validate_schedule(sim.trace, ts).ok


def test_every_period_dispatches():
    two = TaskSet.build([single_node_dag(period=5, wcet=2), single_node_dag(dag_id=2, period=10, wcet=1)])
    sim = gedf_np_simulate(two, 1)
    assert sim.success
    dag1 = [(e.job, e.start, e.finish) for e in sim.trace.entries() if e.dag_id == 1]
    assert sorted(dag1) == [(0, 0, 2), (1, 5, 7)]


def test_overload_misses_then_two_cores_succeed():
    ts = TaskSet.build([build_dag(1, 4, {1: 3}), build_dag(2, 4, {1: 3})])
    one = gedf_np_simulate(ts, 1)
    assert not one.success
    assert one.first_miss is not None
    assert one.first_miss.deadline == 4 and one.first_miss.finish == 6
    two = gedf_np_simulate(ts, 2)
    assert two.success
    assert validate_schedule(two.trace, ts).ok


def test_chain_follows_parent_finish(chain):
    ts = TaskSet.build([chain])
    sim = gedf_np_simulate(ts, 1)
    assert sim.success
    assert [(e.node_id, e.start, e.finish) for e in sim.trace.entries()] == [(1, 0, 2), (2, 2, 4)]


def test_edf_prefers_earlier_deadline():
    # dag 2 has the tighter period, so it goes first on the single core
    ts = TaskSet.build([build_dag(1, 20, {1: 2}), build_dag(2, 10, {1: 2})])
    sim = gedf_np_simulate(ts, 1)
    first = min(sim.trace.entries(), key=lambda e: (e.start, e.core))
    assert (first.dag_id, first.start) == (2, 0)


def test_non_preemptive_runs_to_completion():
    # a long low-urgency node is already running when urgent work arrives
    ts = TaskSet.build([build_dag(1, 20, {1: 9}), build_dag(2, 10, {1: 2})])
    sim = gedf_np_simulate(ts, 1)
    entries = {(e.dag_id, e.job): e for e in sim.trace.entries()}
    long_one = entries[(1, 0)]
    assert long_one.finish - long_one.start == 9  # never split


def test_empty_taskset():
    ts = TaskSet.build([])
    sim = gedf_np_simulate(ts, 2)
    assert sim.success and list(sim.trace.entries()) == []


def test_rejects_bad_core_count():
    ts = TaskSet.build([single_node_dag()])
    with pytest.raises(ValueError):
        gedf_np_simulate(ts, 0)


def test_determinism():
    cfg = GenConfig(collections=1, dags_per_collection=4, nodes_per_dag=(2, 8),
                    wcet_range=(1, 6), period_menu=(8, 16), seed=5)
    ts, _ = generate_taskset(cfg, 0)
    a = gedf_np_simulate(ts, 3)
    b = gedf_np_simulate(ts, 3)
    assert dumps_schedule(a.trace) == dumps_schedule(b.trace)


def test_work_conservation_and_edf_order_on_random_sets():
    rng = random.Random(77)
    for i in range(20):
        cfg = GenConfig(collections=1, dags_per_collection=3, nodes_per_dag=(1, 7),
                        wcet_range=(1, 5), period_menu=(6, 12, 24),
                        edge_prob=rng.choice((0.2, 0.6, 0.9)), seed=100 + i)
        ts, _ = generate_taskset(cfg, 0)
        m = rng.choice((1, 2, 3, 4))
        sim = gedf_np_simulate(ts, m)
        assert check_work_conserving(ts, sim.trace) == []
        assert check_edf_dispatch(ts, sim.trace) == []
        if sim.success:
            assert validate_schedule(sim.trace, ts).ok
