# -*- coding: utf-8 -*-

# trajectory_pool.py
"""
Fan independent trajectories out over worker processes.

Flow:

    experiment_dispatcher  →  trajectory_pool  →  reflected_sde
        (campaign)             (chunks, merge)      (one trajectory)

Responsibilities:
- Cut trajectory indices 0..N-1 into fixed chunks of CHUNK_SIZE.
- Run each chunk through joblib.Parallel and merge results in chunk order,
  so the output is the same list for any worker count.
- Turn a reflection failure into an "aborted" record instead of killing the
  campaign.
- Hand every finished result to an optional result_callback.

Public API:
    resolve_workers(cli_workers, config_workers) -> int
    run_pool(task, n, workers, result_callback)  -> list
    exit_task(...), cycle_task(...), position_task(...)
"""

from __future__ import annotations

from functools import partial
from typing import Callable, Mapping, Sequence, TypeVar
import logging
import os

import numpy as np
from joblib import Parallel, delayed

from errors import ConfigError, SimulationError, TrajectoryCensored
from reflected_sde import (
    ABORTED,
    ExitRecord,
    SimConfig,
    collar_start,
    run_cycles,
    run_until_sections,
    position_at,
)
from rng_streams import stream
from tube_geometry import SectionFamily, TubeDomain

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.trajectory_pool")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

# Trajectories per joblib task. Fixed so that results never depend on workers.
CHUNK_SIZE: int = 64

# Environment fallback for the worker count.
WORKERS_ENV: str = "TUBESIM_WORKERS"
DEFAULT_WORKERS: int = 1

T = TypeVar("T")


def resolve_workers(cli_workers: int | None = None, config_workers: int | None = None) -> int:
    """--workers beats the config file, which beats $TUBESIM_WORKERS."""
    if cli_workers is not None:
        workers = cli_workers
    elif config_workers is not None:
        workers = config_workers
    else:
        raw = os.environ.get(WORKERS_ENV)
        try:
            workers = int(raw) if raw else DEFAULT_WORKERS
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from exc
    if workers < 1:
        raise ConfigError(f"worker count must be at least 1, got {workers}")
    return workers


# ---------------------------------------------------------------------------
# Pool
# ---------------------------------------------------------------------------

def _run_chunk(task: Callable[[int], T], lo: int, hi: int) -> list[T]:
    return [task(i) for i in range(lo, hi)]


def run_pool(
    task: Callable[[int], T],
    n: int,
    workers: int = 1,
    result_callback: Callable[[T], None] | None = None,
) -> list[T]:
    """
    Evaluate task(0), ..., task(n-1) and return the results in index order.

    `task` must be picklable (a module-level function or a partial of one).
    """
    if n < 0:
        raise ValueError(f"trajectory count must be nonnegative, got {n}")
    chunks = [(lo, min(lo + CHUNK_SIZE, n)) for lo in range(0, n, CHUNK_SIZE)]
    logger.info("Running %d trajectories in %d chunks on %d worker(s).", n, len(chunks), workers)

    parts = Parallel(n_jobs=workers)(delayed(_run_chunk)(task, lo, hi) for lo, hi in chunks)
    results: list[T] = [r for part in parts for r in part]

    if result_callback is not None:
        for r in results:
            try:
                result_callback(r)
            except Exception as exc:
                logger.exception("result_callback raised an exception: %s", exc)
    return results


# ---------------------------------------------------------------------------
# Trajectory tasks
# ---------------------------------------------------------------------------

def _start_point(domain: TubeDomain, vertex: int, seed: int, index: int, randomize: bool) -> np.ndarray:
    rng = stream(seed, index, "start") if randomize else None
    return collar_start(domain, vertex, randomize=randomize, rng=rng)


def _aborted(index: int, exc: SimulationError) -> ExitRecord:
    logger.debug("Trajectory %d aborted: %s", index, exc)
    return ExitRecord(ABORTED, float("nan"), None, None, None, 0, 0, index)


def exit_task(
    domain: TubeDomain,
    vertex: int,
    levels: Mapping[int, float],
    config: SimConfig,
    randomize: bool,
    index: int,
) -> ExitRecord:
    """First exit through C_{eps,vertex}(levels) from the collar."""
    cfg = config.for_trajectory(index)
    start = _start_point(domain, vertex, cfg.seed, index, randomize)
    try:
        return run_until_sections(domain, start, SectionFamily(vertex, dict(levels)), cfg)
    except SimulationError as exc:
        return _aborted(index, exc)


def cycle_task(
    domain: TubeDomain,
    vertex: int,
    levels: Mapping[int, float],
    config: SimConfig,
    randomize: bool,
    delta: float | None,
    index: int,
):
    """Exit with the excursion log; aborted trajectories carry an empty log."""
    cfg = config.for_trajectory(index)
    start = _start_point(domain, vertex, cfg.seed, index, randomize)
    try:
        return run_cycles(domain, start, vertex, levels, cfg, delta=delta)
    except SimulationError as exc:
        return _aborted(index, exc), []


def section_task(
    domain: TubeDomain,
    start: Sequence[float] | Callable[[int], np.ndarray],
    families: Sequence[SectionFamily],
    config: SimConfig,
    horizon: float | None,
    index: int,
) -> ExitRecord:
    """First hit of any of `families` from a fixed start or a per-index start rule."""
    cfg = config.for_trajectory(index)
    z0 = start(index) if callable(start) else start
    try:
        return run_until_sections(domain, z0, families, cfg, horizon=horizon)
    except SimulationError as exc:
        return _aborted(index, exc)


def position_task(
    domain: TubeDomain,
    start: Sequence[float] | Callable[[int], np.ndarray],
    t: float,
    config: SimConfig,
    index: int,
) -> np.ndarray | None:
    """Position at time t; None when the trajectory is censored or aborted."""
    cfg = config.for_trajectory(index)
    z0 = start(index) if callable(start) else start
    try:
        return position_at(domain, z0, t, cfg)
    except TrajectoryCensored as exc:
        logger.debug("Trajectory %d censored after %d steps", index, exc.steps)
        return None
    except SimulationError as exc:
        logger.debug("Trajectory %d aborted: %s", index, exc)
        return None


def exits(
    domain: TubeDomain,
    vertex: int,
    levels: Mapping[int, float],
    config: SimConfig,
    n: int,
    workers: int = 1,
    randomize: bool = False,
) -> list[ExitRecord]:
    return run_pool(partial(exit_task, domain, vertex, dict(levels), config, randomize), n, workers)


def cycles(
    domain: TubeDomain,
    vertex: int,
    levels: Mapping[int, float],
    config: SimConfig,
    n: int,
    workers: int = 1,
    randomize: bool = False,
    delta: float | None = None,
) -> list:
    return run_pool(
        partial(cycle_task, domain, vertex, dict(levels), config, randomize, delta), n, workers
    )


def positions(
    domain: TubeDomain,
    start: Sequence[float] | Callable[[int], np.ndarray],
    t: float,
    config: SimConfig,
    n: int,
    workers: int = 1,
) -> list[np.ndarray | None]:
    return run_pool(partial(position_task, domain, start, t, config), n, workers)


def section_hits(
    domain: TubeDomain,
    start: Sequence[float] | Callable[[int], np.ndarray],
    families: Sequence[SectionFamily],
    config: SimConfig,
    n: int,
    workers: int = 1,
    horizon: float | None = None,
) -> list[ExitRecord]:
    return run_pool(
        partial(section_task, domain, start, list(families), config, horizon), n, workers
    )
