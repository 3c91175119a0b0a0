# -*- coding: utf-8 -*-

# reflected_sde.py

"""
Euler scheme for normally reflected Brownian motion in a tube domain.

    dZ = sqrt(2) dB + nu(Z) dphi

The free proposal z' = z + sqrt(2h) xi is accepted when it lies in the
domain. Otherwise it is mirrored across the tangent plane at the nearest
boundary point, up to MAX_REFLECTIONS times; if it is still outside, the step
is thrown away and redrawn with fresh noise and h/4, at most MAX_RETRIES
times. The boundary local time is not tracked.

Stopping sets are cross-sections of the tube (see tube_geometry). A crossing
is detected on the projected abscissa and its time is interpolated linearly
inside the crossing step.

Public API:
    step(domain, state, xi, h)                       -> WalkerState | None
    walk(domain, start, config)                      -> iterator of WalkerState
    run_until_sections(domain, start, families, config, horizon=None) -> ExitRecord
    run_cycles(domain, start, delta, levels, config) -> (ExitRecord, [CycleEvent])
    position_at(domain, start, t, config)            -> point
    collar_start(domain, j, ...) / fiber_point(domain, x, ...) -> start points
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence
import logging
import math

import numpy as np

from errors import GeometryError, SimulationError, TrajectoryCensored
from graph_core import GraphPoint
from rng_streams import NoiseBlock, stream
from tube_geometry import SectionFamily, TubeDomain

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.reflected_sde")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

DEFAULT_STEP_COEFFICIENT: float = 0.01
MAX_STEP_COEFFICIENT: float = 0.05
DEFAULT_MAX_STEPS: int = 50_000_000

# Mirror images tried before a proposal is rejected.
MAX_REFLECTIONS: int = 8

# Redraws with quartered step after a rejection.
MAX_RETRIES: int = 4

# Advisory bound on the per-component free step relative to the thinnest tube.
RMS_STEP_FRACTION: float = 0.15

# Keep randomized start points strictly inside the tube wall.
_WALL_MARGIN: float = 1.0 - 1e-9

EXITED, HORIZON, CENSORED, ABORTED = "exited", "horizon", "censored", "aborted"


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    step_coefficient: float = DEFAULT_STEP_COEFFICIENT
    max_steps: int = DEFAULT_MAX_STEPS
    seed: int = 0
    trajectory_index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.step_coefficient <= MAX_STEP_COEFFICIENT:
            raise ValueError(
                f"step coefficient must lie in (0, {MAX_STEP_COEFFICIENT}], "
                f"got {self.step_coefficient}"
            )
        if self.max_steps <= 0:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")

    def for_trajectory(self, index: int) -> "SimConfig":
        return replace(self, trajectory_index=int(index))

    def step_size(self, domain: TubeDomain) -> float:
        """h = c_h * (min_k lambda_k eps)^2."""
        width = domain.min_half_width
        h = self.step_coefficient * width * width
        if math.sqrt(2.0 * h) > RMS_STEP_FRACTION * width:
            logger.warning(
                "Free step sqrt(2h)=%.3g exceeds %.2f of the thinnest half-width %.3g "
                "(step_coefficient=%.3g); crossing times will be coarse.",
                math.sqrt(2.0 * h),
                RMS_STEP_FRACTION,
                width,
                self.step_coefficient,
            )
        return h

    def noise(self, domain: TubeDomain) -> NoiseBlock:
        return NoiseBlock(stream(self.seed, self.trajectory_index, "walk"), domain.dimension)


@dataclass(frozen=True)
class WalkerState:
    position: np.ndarray
    time: float


@dataclass(frozen=True)
class CycleEvent:
    kind: str  # "tau" | "sigma_return" | "sigma_exit"
    time: float
    edge: int
    abscissa: float


@dataclass(frozen=True)
class ExitRecord:
    status: str
    exit_time: float
    exit_edge: int | None
    exit_vertex: int | None
    exit_point: np.ndarray | None
    cycles: int  # excursions counted by run_cycles; always 0 from run_until_sections
    steps: int
    trajectory: int = 0

    @property
    def censored(self) -> bool:
        return self.status in (CENSORED, ABORTED)

    @property
    def exited(self) -> bool:
        return self.status == EXITED


# ---------------------------------------------------------------------------
# One Euler step
# ---------------------------------------------------------------------------

def reflect(domain: TubeDomain, z: np.ndarray) -> np.ndarray:
    """Mirror z across the tangent plane at its nearest boundary point."""
    point, normal = domain.boundary_reflect_data(z)
    return z + 2.0 * float((point - z) @ normal) * normal


def step(
    domain: TubeDomain,
    state: WalkerState,
    xi: np.ndarray,
    h: float,
) -> WalkerState | None:
    """Free proposal plus specular reflection; None if still outside after reflecting."""
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    z = state.position + math.sqrt(2.0 * h) * np.asarray(xi, dtype=float)
    for _ in range(MAX_REFLECTIONS):
        if domain.contains(z):
            return WalkerState(z, state.time + h)
        z = reflect(domain, z)
    if domain.contains(z):
        return WalkerState(z, state.time + h)
    return None


def advance(domain: TubeDomain, state: WalkerState, noise: NoiseBlock, h: float) -> WalkerState:
    """One accepted step, retrying with quartered h on reflection failure."""
    trial_h = h
    for attempt in range(MAX_RETRIES + 1):
        new = step(domain, state, noise.next(), trial_h)
        if new is not None:
            if attempt:
                logger.debug("Step accepted after %d retries (h=%.3g)", attempt, trial_h)
            return new
        trial_h /= 4.0
    raise SimulationError(
        f"reflection failed at {np.array2string(state.position, precision=6)} "
        f"(t={state.time:.6g}) after {MAX_RETRIES} retries down to h={trial_h * 4.0:.3g}"
    )


def walk(
    domain: TubeDomain,
    start: Sequence[float],
    config: SimConfig,
) -> Iterator[WalkerState]:
    """Successive states after `start`, at most config.max_steps of them."""
    state = WalkerState(np.asarray(start, dtype=float), 0.0)
    if not domain.contains(state.position):
        raise GeometryError("start point lies outside the domain")
    h = config.step_size(domain)
    noise = config.noise(domain)
    for _ in range(config.max_steps):
        state = advance(domain, state, noise, h)
        yield state


# ---------------------------------------------------------------------------
# Section crossings
# ---------------------------------------------------------------------------

def _coordinates(
    domain: TubeDomain, families: Sequence[SectionFamily], z: np.ndarray
) -> list[tuple[int, float] | None]:
    x = domain.nearest_projection(z)
    return [domain.section_coordinate_of(x, f.vertex) for f in families]


def _interpolate(level: float, before: tuple[int, float] | None, after: tuple[int, float]) -> float:
    """Fraction of the step at which the abscissa reached `level`."""
    if before is None or before[0] != after[0] or before[1] == after[1]:
        return 1.0
    frac = (level - before[1]) / (after[1] - before[1])
    return min(max(frac, 0.0), 1.0)


def _first_hit(
    families: Sequence[SectionFamily],
    before: list[tuple[int, float] | None] | None,
    after: list[tuple[int, float] | None],
) -> tuple[int, int, float] | None:
    """(family index, edge, step fraction) of the earliest crossing, if any."""
    best = None
    for i, (fam, coord) in enumerate(zip(families, after)):
        if coord is None or not fam.crossed(coord[1], coord[0]):
            continue
        prior = before[i] if before is not None else None
        frac = 0.0 if before is None else _interpolate(fam.levels[coord[0]], prior, coord)
        if best is None or frac < best[2]:
            best = (i, coord[0], frac)
    return best


def run_until_sections(
    domain: TubeDomain,
    start: Sequence[float],
    families: SectionFamily | Sequence[SectionFamily],
    config: SimConfig,
    horizon: float | None = None,
) -> ExitRecord:
    """
    First hit of any section in `families`.

    With a `horizon`, the walk also stops at the first step whose time exceeds
    it; that outcome has status "horizon" and carries the final position.
    No cycle bookkeeping happens here, so the record always has cycles == 0.
    """
    if isinstance(families, SectionFamily):
        families = [families]
    families = list(families)
    for fam in families:
        fam.check(domain.graph)

    z0 = np.asarray(start, dtype=float)
    coords = _coordinates(domain, families, z0)
    hit = _first_hit(families, None, coords)
    if hit is not None:
        fam_idx, k, _ = hit
        return ExitRecord(EXITED, 0.0, k, families[fam_idx].vertex, z0, 0, 0, config.trajectory_index)

    prev = WalkerState(z0, 0.0)
    steps = 0
    for state in walk(domain, z0, config):
        steps += 1
        new_coords = _coordinates(domain, families, state.position)
        hit = _first_hit(families, coords, new_coords)
        if hit is not None:
            fam_idx, k, frac = hit
            t_hit = prev.time + frac * (state.time - prev.time)
            if horizon is None or t_hit <= horizon:
                point = prev.position + frac * (state.position - prev.position)
                return ExitRecord(
                    EXITED, t_hit, k, families[fam_idx].vertex, point, 0, steps,
                    config.trajectory_index,
                )
        if horizon is not None and state.time > horizon:
            return ExitRecord(
                HORIZON, state.time, None, None, state.position, 0, steps,
                config.trajectory_index,
            )
        prev, coords = state, new_coords

    logger.debug(
        "Trajectory %d censored after %d steps (t=%.4g)",
        config.trajectory_index, steps, prev.time,
    )
    return ExitRecord(CENSORED, prev.time, None, None, None, 0, steps, config.trajectory_index)


def default_cycle_delta(domain: TubeDomain, j: int, levels: Mapping[int, float]) -> float:
    """max(2 (r_j + 3 eps), 0.1 min_k L_k), pulled to the collar/exit midpoint if that is too far."""
    collar = domain.collar_level(j)
    nearest = min(levels.values())
    delta = max(2.0 * collar, 0.1 * nearest)
    if delta >= nearest:
        delta = 0.5 * (collar + nearest)
    return delta


def run_cycles(
    domain: TubeDomain,
    start: Sequence[float],
    j: int,
    levels: Mapping[int, float],
    config: SimConfig,
    delta: float | None = None,
) -> tuple[ExitRecord, list[CycleEvent]]:
    """
    Exit through C_{eps,j}(L) with the excursion log.

    Each excursion from the collar first reaches the inner section C(delta)
    (a "tau" event) and then either returns to the collar C(r_j + 3 eps)
    ("sigma_return") or hits the target sections ("sigma_exit").
    """
    target = SectionFamily(j, dict(levels))
    target.check(domain.graph)
    if delta is None:
        delta = default_cycle_delta(domain, j, levels)
    collar = domain.collar_level(j)
    if not collar < delta < min(levels.values()):
        raise GeometryError(
            f"inner section level {delta:.6g} must lie strictly between the collar "
            f"{collar:.6g} and the smallest exit level {min(levels.values()):.6g}"
        )

    z0 = np.asarray(start, dtype=float)
    events: list[CycleEvent] = []
    outbound = True
    coord = domain.section_coordinate(z0, j)
    prev = WalkerState(z0, 0.0)
    steps = 0

    def crossing_time(level: float, after: tuple[int, float], state: WalkerState) -> float:
        frac = _interpolate(level, coord, after)
        return prev.time + frac * (state.time - prev.time)

    for state in walk(domain, z0, config):
        steps += 1
        new = domain.section_coordinate(state.position, j)
        if new is not None:
            k, a = new
            if outbound and a >= delta:
                events.append(CycleEvent("tau", crossing_time(delta, new, state), k, delta))
                outbound = False
            if not outbound:
                if a >= levels[k]:
                    frac = _interpolate(levels[k], coord, new)
                    t_exit = prev.time + frac * (state.time - prev.time)
                    events.append(CycleEvent("sigma_exit", t_exit, k, levels[k]))
                    point = prev.position + frac * (state.position - prev.position)
                    n_tau = sum(1 for ev in events if ev.kind == "tau")
                    record = ExitRecord(
                        EXITED, t_exit, k, j, point, n_tau, steps, config.trajectory_index
                    )
                    return record, events
                if a <= collar:
                    events.append(
                        CycleEvent("sigma_return", crossing_time(collar, new, state), k, collar)
                    )
                    outbound = True
        prev, coord = state, new

    n_tau = sum(1 for ev in events if ev.kind == "tau")
    record = ExitRecord(CENSORED, prev.time, None, None, None, n_tau, steps, config.trajectory_index)
    return record, events


def position_at(
    domain: TubeDomain,
    start: Sequence[float],
    t: float,
    config: SimConfig,
) -> np.ndarray:
    """Position at the first step whose time exceeds t (no interpolation)."""
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    z0 = np.asarray(start, dtype=float)
    if t == 0.0:
        return z0
    steps = 0
    for state in walk(domain, z0, config):
        steps += 1
        if state.time > t:
            return state.position
    raise TrajectoryCensored(
        f"trajectory {config.trajectory_index} reached max_steps={config.max_steps} "
        f"before t={t:.6g}",
        steps,
    )


# ---------------------------------------------------------------------------
# Start points
# ---------------------------------------------------------------------------

def _transverse_offset(domain: TubeDomain, j: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point of the (d-1)-disc of radius lambda_k eps in the frame at (j, k)."""
    w = domain.half_width(k) * _WALL_MARGIN
    frame = domain.frame(j, k)
    if domain.dimension == 2:
        return rng.uniform(-w, w) * frame[0]
    radius = w * math.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return radius * (math.cos(angle) * frame[0] + math.sin(angle) * frame[1])


def collar_start(
    domain: TubeDomain,
    j: int,
    edge: int | None = None,
    randomize: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """
    A point of C_{eps,j}(r_j + 3 eps).

    Default: on the axis of `edge` (least incident edge when omitted). With
    `randomize`, uniform over the whole section: the edge is drawn with weight
    lambda_k^(d-1) (the section area) and the transverse offset uniformly.
    """
    graph = domain.graph
    incident = graph.incident(j)
    level = domain.collar_level(j)
    if randomize:
        if rng is None:
            raise ValueError("a generator is required for randomized starts")
        weights = np.array([graph.edge(k).lam ** (domain.dimension - 1) for k in incident])
        k = int(incident[rng.choice(len(incident), p=weights / weights.sum())])
        return graph.point_at(j, k, level) + _transverse_offset(domain, j, k, rng)
    k = incident[0] if edge is None else edge
    return graph.point_at(j, k, level)


def fiber_point(
    domain: TubeDomain,
    x: GraphPoint,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """The on-axis point over x, plus a uniform transverse offset when rng is given."""
    graph = domain.graph
    if x.is_vertex:
        j = x.vertex_id
        k = graph.incident(j)[0]
        base = graph.vertex(j).point
    else:
        e = graph.edge(x.edge_id)
        j, k = e.low, e.id
        base = graph.locate(x)
    if rng is None:
        return base
    return base + _transverse_offset(domain, j, k, rng)
