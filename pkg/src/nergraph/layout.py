"""Progressive force-directed layout with adaptive speed and pinning.

The force model: degree-weighted repulsion k_r*m_u*m_v/d approximated with a
Barnes-Hut quadtree, linear (or log) attraction along edges scaled by
weight^delta, and gravity toward the origin. Per-node displacement adapts to
swinging (oscillation) versus traction (steady progress). All arithmetic is
float64 with a fixed evaluation order, so a run is bit-reproducible for the
same graph, parameters, seed, and step count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from . import _forces
from .model import UnknownKeyError

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Deterministic 64-bit generator used for seeding and jitter."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN_GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_unit(self) -> float:
        """Map to [0, 1) by dividing by 2^64."""
        return self.next_u64() / 2.0**64


@dataclass(frozen=True)
class LayoutParams:
    repulsion_scale: float = 2.0
    gravity: float = 1.0
    bh_theta: float = 0.5
    jitter_tolerance: float = 1.0
    edge_weight_exponent: float = 1.0
    lin_log: bool = False
    strong_gravity: bool = False
    local_speed_factor: float = 0.1
    max_node_displacement: float = 10.0
    seed: int = 42

    def __post_init__(self):
        if self.repulsion_scale <= 0:
            raise ValueError("repulsion_scale must be positive")
        if not 0 < self.bh_theta <= 2:
            raise ValueError("bh_theta must lie in (0, 2]")
        if self.jitter_tolerance <= 0:
            raise ValueError("jitter_tolerance must be positive")
        if self.edge_weight_exponent < 0:
            raise ValueError("edge_weight_exponent must be non-negative")


@dataclass(frozen=True)
class LayoutGraph:
    """The node set being laid out and the edges that attract them."""

    nodes: tuple[Hashable, ...]
    edges: tuple[tuple[Hashable, Hashable, float], ...]

    @classmethod
    def from_filtered(cls, filtered) -> "LayoutGraph":
        nodes = tuple(sorted(filtered.nodes, key=lambda k: k.sort_key()))
        edges = tuple(
            (edge.a, edge.b, float(edge.weight))
            for _, edge in sorted(filtered.edges.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2]))
        )
        return cls(nodes, edges)


@dataclass(frozen=True)
class LayoutMetrics:
    iterations: int
    mean_swinging: float
    mean_traction: float


def init_positions(keys: Sequence[Hashable], seed: int) -> dict[Hashable, tuple[float, float]]:
    """Seeded initial scatter in a square of half-width 10*sqrt(|V|).

    Callers pass keys in canonical (sorted) order; the i-th key consumes the
    (2i)-th and (2i+1)-th values of the splitmix64 stream.
    """
    keys = list(keys)
    stream = SplitMix64(seed)
    radius = 10.0 * math.sqrt(len(keys))
    positions: dict[Hashable, tuple[float, float]] = {}
    for key in keys:
        u = stream.next_unit()
        v = stream.next_unit()
        positions[key] = (radius * (2.0 * u - 1.0), radius * (2.0 * v - 1.0))
    return positions


class LayoutState:
    """Positions plus the bookkeeping the adaptive stepper needs.

    A state is owned by whoever steps it; hand copies elsewhere.
    """

    def __init__(self, positions: Mapping[Hashable, tuple[float, float]]):
        self.keys: list[Hashable] = list(positions)
        self._index = {key: i for i, key in enumerate(self.keys)}
        n = len(self.keys)
        self.x = np.array([positions[k][0] for k in self.keys], dtype=np.float64)
        self.y = np.array([positions[k][1] for k in self.keys], dtype=np.float64)
        self.force_x = np.zeros(n)
        self.force_y = np.zeros(n)
        self.pinned_mask = np.zeros(n, dtype=bool)
        self.global_speed = 1.0
        self.iteration = 0
        self.last_mean_swinging = 0.0
        self.last_mean_traction = 0.0
        self.last_max_displacement = math.inf
        self._bound_graph = None
        self._edge_src = np.zeros(0, dtype=np.int64)
        self._edge_dst = np.zeros(0, dtype=np.int64)
        self._edge_weight = np.zeros(0)
        self._mass = np.ones(n)

    def positions(self) -> dict[Hashable, tuple[float, float]]:
        return {key: (float(self.x[i]), float(self.y[i])) for i, key in enumerate(self.keys)}

    @property
    def pinned(self) -> set[Hashable]:
        return {self.keys[i] for i in np.flatnonzero(self.pinned_mask)}

    def prev_force(self) -> dict[Hashable, tuple[float, float]]:
        return {key: (float(self.force_x[i]), float(self.force_y[i])) for i, key in enumerate(self.keys)}

    def copy(self) -> "LayoutState":
        duplicate = LayoutState.__new__(LayoutState)
        duplicate.keys = list(self.keys)
        duplicate._index = dict(self._index)
        duplicate.x = self.x.copy()
        duplicate.y = self.y.copy()
        duplicate.force_x = self.force_x.copy()
        duplicate.force_y = self.force_y.copy()
        duplicate.pinned_mask = self.pinned_mask.copy()
        duplicate.global_speed = self.global_speed
        duplicate.iteration = self.iteration
        duplicate.last_mean_swinging = self.last_mean_swinging
        duplicate.last_mean_traction = self.last_mean_traction
        duplicate.last_max_displacement = self.last_max_displacement
        duplicate._bound_graph = None
        duplicate._edge_src = self._edge_src
        duplicate._edge_dst = self._edge_dst
        duplicate._edge_weight = self._edge_weight
        duplicate._mass = self._mass.copy()
        return duplicate

    def index_of(self, key: Hashable) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise UnknownKeyError(f"{key} is not laid out") from None

    def _bind(self, graph: LayoutGraph) -> None:
        """Cache integer edge arrays and masses for this graph object."""
        src = np.empty(len(graph.edges), dtype=np.int64)
        dst = np.empty(len(graph.edges), dtype=np.int64)
        weight = np.empty(len(graph.edges))
        for i, (a, b, w) in enumerate(graph.edges):
            src[i] = self.index_of(a)
            dst[i] = self.index_of(b)
            weight[i] = w
        degree = np.zeros(len(self.keys))
        np.add.at(degree, src, 1.0)
        np.add.at(degree, dst, 1.0)
        self._edge_src = src
        self._edge_dst = dst
        self._edge_weight = weight
        self._mass = degree + 1.0
        self._bound_graph = graph


def pin(state: LayoutState, key: Hashable, position: tuple[float, float]) -> None:
    i = state.index_of(key)
    state.x[i], state.y[i] = position
    state.pinned_mask[i] = True


def unpin(state: LayoutState, key: Hashable) -> None:
    i = state.index_of(key)
    state.pinned_mask[i] = False


def _jitter_coincident(state: LayoutState, seed: int) -> None:
    """Separate exactly-coincident nodes before force evaluation.

    All but the first node at a shared position get a displacement of
    magnitude 0.01 whose direction is derived from (seed, iteration, node),
    so degenerate inputs stay deterministic.
    """
    seen: dict[tuple[float, float], int] = {}
    for i in range(len(state.keys)):
        spot = (float(state.x[i]), float(state.y[i]))
        if spot in seen:
            stream = SplitMix64((seed ^ (state.iteration * _GOLDEN_GAMMA) ^ (i * 0xBF58476D1CE4E5B9)) & _MASK64)
            angle = 2.0 * math.pi * stream.next_unit()
            state.x[i] += 0.01 * math.cos(angle)
            state.y[i] += 0.01 * math.sin(angle)
        else:
            seen[spot] = i


def step(state: LayoutState, graph: LayoutGraph, params: LayoutParams) -> LayoutState:
    """Advance one iteration in place and return the same state."""
    n = len(state.keys)
    if n == 0:
        state.iteration += 1
        state.last_max_displacement = 0.0
        return state
    if state._bound_graph is not graph:
        state._bind(graph)

    _jitter_coincident(state, params.seed)

    mass = state._mass
    fx, fy = _forces.repulsion_forces(state.x, state.y, mass, params.bh_theta, params.repulsion_scale)

    if len(state._edge_src):
        src, dst = state._edge_src, state._edge_dst
        delta_x = state.x[dst] - state.x[src]
        delta_y = state.y[dst] - state.y[src]
        scale = np.power(state._edge_weight, params.edge_weight_exponent)
        if params.lin_log:
            dist = np.hypot(delta_x, delta_y)
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(dist > 0.0, scale * np.log1p(dist) / dist, 0.0)
        pull_x = scale * delta_x
        pull_y = scale * delta_y
        np.add.at(fx, src, pull_x)
        np.add.at(fy, src, pull_y)
        np.add.at(fx, dst, -pull_x)
        np.add.at(fy, dst, -pull_y)

    if params.gravity != 0.0:
        if params.strong_gravity:
            fx -= params.gravity * mass * state.x
            fy -= params.gravity * mass * state.y
        else:
            radius = np.hypot(state.x, state.y)
            with np.errstate(divide="ignore", invalid="ignore"):
                unit_x = np.where(radius > 0.0, state.x / radius, 0.0)
                unit_y = np.where(radius > 0.0, state.y / radius, 0.0)
            fx -= params.gravity * mass * unit_x
            fy -= params.gravity * mass * unit_y

    swinging = np.hypot(fx - state.force_x, fy - state.force_y)
    traction = np.hypot(fx + state.force_x, fy + state.force_y) / 2.0

    swing_sum = float(np.sum(mass * swinging))
    traction_sum = float(np.sum(mass * traction))
    if swing_sum > 0.0:
        target_speed = params.jitter_tolerance * traction_sum / swing_sum
    else:
        target_speed = math.inf
    global_speed = min(target_speed, 1.5 * state.global_speed)

    force_mag = np.hypot(fx, fy)
    node_speed = params.local_speed_factor * global_speed / (1.0 + global_speed * np.sqrt(swinging))
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.where(force_mag > 0.0, params.max_node_displacement / force_mag, math.inf)
    node_speed = np.minimum(node_speed, cap)

    movable = ~state.pinned_mask
    shift_x = np.where(movable, fx * node_speed, 0.0)
    shift_y = np.where(movable, fy * node_speed, 0.0)
    state.x += shift_x
    state.y += shift_y

    state.force_x = fx
    state.force_y = fy
    state.global_speed = global_speed
    state.iteration += 1
    state.last_mean_swinging = float(np.mean(swinging))
    state.last_mean_traction = float(np.mean(traction))
    moved = np.hypot(shift_x, shift_y)
    state.last_max_displacement = float(np.max(moved)) if n else 0.0
    return state


def run(
    state: LayoutState,
    graph: LayoutGraph,
    params: LayoutParams,
    max_steps: int,
    budget_ms: float | None = None,
    should_stop=None,
) -> tuple[LayoutState, LayoutMetrics]:
    """Run up to max_steps whole iterations, optionally within a time budget.

    ``should_stop`` is polled between iterations so a controller can cancel a
    long run without tearing partial steps.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    started = time.perf_counter()
    done = 0
    for _ in range(max_steps):
        if budget_ms is not None and (time.perf_counter() - started) * 1000.0 >= budget_ms:
            break
        if should_stop is not None and should_stop():
            break
        step(state, graph, params)
        done += 1
    return state, LayoutMetrics(done, state.last_mean_swinging, state.last_mean_traction)


def barnes_hut_forces(
    positions: Mapping[Hashable, tuple[float, float]],
    masses: Mapping[Hashable, float],
    theta: float,
    repulsion_scale: float,
) -> dict[Hashable, tuple[float, float]]:
    """Approximate repulsion forces for an arbitrary weighted point set.

    With theta near zero the result converges to the exact O(n^2) summation.
    """
    if not 0 < theta <= 2:
        raise ValueError("theta must lie in (0, 2]")
    keys = list(positions)
    px = np.array([positions[k][0] for k in keys], dtype=np.float64)
    py = np.array([positions[k][1] for k in keys], dtype=np.float64)
    mass = np.array([masses[k] for k in keys], dtype=np.float64)
    fx, fy = _forces.repulsion_forces(px, py, mass, theta, repulsion_scale)
    return {key: (float(fx[i]), float(fy[i])) for i, key in enumerate(keys)}
