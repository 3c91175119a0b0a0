from __future__ import annotations

from functools import partial
import operator

import numpy as np
import pytest

import trajectory_pool
from errors import ConfigError
from reflected_sde import EXITED, SimConfig
from tube_geometry import SectionFamily
from trajectory_pool import (
    CHUNK_SIZE,
    WORKERS_ENV,
    position_task,
    resolve_workers,
    run_pool,
)


# -- worker count ------------------------------------------------------------

def test_resolve_workers_precedence(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(5, 2) == 5
    assert resolve_workers(None, 2) == 2
    assert resolve_workers(None, None) == 3
    monkeypatch.delenv(WORKERS_ENV)
    assert resolve_workers(None, None) == 1


def test_resolve_workers_rejects_bad_values(monkeypatch):
    with pytest.raises(ConfigError):
        resolve_workers(0, None)
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_workers(None, None)


# -- pool --------------------------------------------------------------------

def test_run_pool_keeps_index_order():
    n = 3 * CHUNK_SIZE + 5
    results = run_pool(partial(operator.mul, 2), n, workers=1)
    assert results == [2 * i for i in range(n)]


def test_run_pool_same_result_for_any_worker_count():
    n = 2 * CHUNK_SIZE + 1
    task = partial(operator.add, 10)
    assert run_pool(task, n, workers=1) == run_pool(task, n, workers=2)


def test_run_pool_empty():
    assert run_pool(partial(operator.mul, 2), 0) == []
    with pytest.raises(ValueError):
        run_pool(partial(operator.mul, 2), -1)


def test_run_pool_callback_sees_every_result_and_errors_are_contained():
    seen = []

    def callback(value):
        seen.append(value)
        if value == 3:
            raise RuntimeError("boom")

    results = run_pool(partial(operator.add, 0), 6, result_callback=callback)
    assert results == list(range(6))
    assert seen == list(range(6))


# -- trajectory tasks --------------------------------------------------------

def test_exits_do_not_depend_on_worker_count(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=400_000, seed=21)
    levels = {1: wide_dumbbell.collar_level(1) + 0.02}
    serial = trajectory_pool.exits(wide_dumbbell, 1, levels, cfg, 6, workers=1)
    parallel = trajectory_pool.exits(wide_dumbbell, 1, levels, cfg, 6, workers=2)
    assert [r.trajectory for r in serial] == list(range(6))
    assert [r.exit_time for r in serial] == [r.exit_time for r in parallel]
    assert all(r.status == EXITED for r in serial)


def test_randomized_exits_start_on_the_collar(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=400_000, seed=22)
    levels = {1: wide_dumbbell.collar_level(1) + 0.02}
    records = trajectory_pool.exits(wide_dumbbell, 1, levels, cfg, 4, randomize=True)
    assert all(r.exited for r in records)


def test_section_hits_with_per_index_start(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=100, seed=1)
    fam = SectionFamily(1, {1: 0.5})
    starts = [np.array([0.6, 0.0]), np.array([0.0, 0.0])]
    records = trajectory_pool.section_hits(
        wide_dumbbell, lambda i: starts[i % 2], [fam], cfg, 4, horizon=None
    )
    assert [r.status for r in records[::2]] == [EXITED, EXITED]
    assert all(r.exit_time == 0.0 for r in records[::2])


def test_position_task_returns_none_when_censored(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=2)
    assert position_task(wide_dumbbell, (0.0, 0.0), 1.0, cfg, 0) is None
    z = position_task(wide_dumbbell, (0.0, 0.0), 0.0, cfg, 0)
    np.testing.assert_array_equal(z, [0.0, 0.0])


def test_cycles_return_logs(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=400_000, seed=23)
    collar = wide_dumbbell.collar_level(1)
    logs = trajectory_pool.cycles(wide_dumbbell, 1, {1: collar + 0.1}, cfg, 3, delta=collar + 0.04)
    assert len(logs) == 3
    for record, events in logs:
        assert record.exited
        assert events[-1].kind == "sigma_exit"
