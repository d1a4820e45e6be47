"""Strength inference: minimize edge costs plus relaxed triangle costs over
``[0, 1]^|E|`` by projected subgradient descent with random restarts, and an
exhaustive grid search used as an oracle on small instances."""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .balance import (CONFIGS, DEFAULT_BALANCED, CostParams, edge_costs, total_objective,
                      triangle_costs_exact, triangle_costs_relaxed)
from .errors import TooLarge, UnsetPrediction

log = logging.getLogger(__name__)

GRID_LIMIT = 10 ** 8


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    eta0: float = 0.1
    tol: float = 1e-6
    patience: int = 50
    restarts: int = 8
    seed: int = 0
    params: CostParams = field(default_factory=CostParams)
    init: str = "corner"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        return d


@dataclass
class RestartLog:
    seed: list[int]
    iters: int
    objective: float
    converged: bool


@dataclass
class StrengthAssignment:
    s: np.ndarray
    objective: float
    restarts_used: int
    converged: bool
    log: list[RestartLog] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)


def _prepare(f, triangles):
    f = np.ascontiguousarray(f, dtype=np.float64)
    nan = np.flatnonzero(np.isnan(f))
    if nan.size:
        raise UnsetPrediction(int(nan[0]))
    tri = np.ascontiguousarray(np.asarray(triangles, dtype=np.int64).reshape(-1, 4))
    return f, tri


def subgradient(s, f, triangles, p: CostParams = CostParams(), table: np.ndarray = DEFAULT_BALANCED) -> np.ndarray:
    """One subgradient of the relaxed objective at ``s``.

    Kinks take the derivative from the positive side; away from every kink
    this is the gradient.
    """
    f, tri = _prepare(f, triangles)
    s = np.ascontiguousarray(s, dtype=np.float64)
    return kernels.subgradient(s, f, tri, CONFIGS, np.ascontiguousarray(table), p.as_array())


def initial_point(f: np.ndarray, tri: np.ndarray, r: int, seed: int,
                  table: np.ndarray = DEFAULT_BALANCED, mode: str = "mixed") -> np.ndarray:
    """Start of restart ``r``: ``f`` itself for r = 0; otherwise a uniform
    draw, or (``corner``) ``f`` with every triangle snapped to a random
    balanced corner in random order. ``mixed`` alternates uniform (odd r)
    and corner (even r)."""
    if r == 0:
        return f.copy()
    rng = np.random.default_rng([seed, r])
    if mode == "uniform" or (mode == "mixed" and r % 2 == 1) or not tri.size:
        return rng.uniform(0.0, 1.0, size=f.shape[0])
    if mode not in ("corner", "mixed"):
        raise ValueError(f"unknown init mode {mode!r}")
    corners = CONFIGS[table]
    s0 = f.copy()
    for t in rng.permutation(tri.shape[0]):
        s0[tri[t]] = corners[rng.integers(corners.shape[0])]
    return s0


def solve_arrays(f, triangles, config: SolverConfig = SolverConfig(),
                 table: np.ndarray = DEFAULT_BALANCED) -> StrengthAssignment:
    """Best of ``config.restarts`` descents. Restart 0 starts at ``s = f``,
    the rest at points from :func:`initial_point` seeded with ``[seed, r]``."""
    f, tri = _prepare(f, triangles)
    table = np.ascontiguousarray(table, dtype=np.bool_)
    params = config.params.as_array()
    best_s, best_obj = None, math.inf
    logs, trace = [], []
    for r in range(config.restarts):
        s0 = initial_point(f, tri, r, config.seed, table, config.init)
        s, _, iters, conv = kernels.descend(s0, f, tri, CONFIGS, table, params,
                                            config.max_iters, config.eta0, config.tol, config.patience)
        obj = total_objective(s, f, tri, config.params, table)
        logs.append(RestartLog([config.seed, r], int(iters), obj, bool(conv)))
        if obj < best_obj:
            best_obj, best_s, best_conv = obj, s, bool(conv)
        trace.append(best_obj)
    if not best_conv:
        log.warning("best restart stopped at max_iters=%d without meeting tol", config.max_iters)
    return StrengthAssignment(best_s, best_obj, config.restarts, best_conv, logs, trace)


def solve(graph, triangles, config: SolverConfig = SolverConfig(), table: np.ndarray = DEFAULT_BALANCED,
          f: np.ndarray | None = None) -> StrengthAssignment:
    """Solve over an :class:`~asymop.relgraph.InteractionGraph`.

    ``f`` overrides the graph's fused predictions (used for weight presets).
    """
    if f is None:
        f = graph.fused()
    nan = np.flatnonzero(np.isnan(f))
    if nan.size:
        raise UnsetPrediction(graph.edges[int(nan[0])])
    return solve_arrays(f, graph.triangle_index(triangles), config, table)


def grid_points(h: float) -> np.ndarray:
    steps = round(1.0 / h)
    if steps < 1 or abs(steps * h - 1.0) > 1e-9:
        raise ValueError(f"grid step {h} must divide 1")
    return np.arange(steps + 1) / steps


@functools.lru_cache(maxsize=8)
def _grid_triangle_table(n: int, p: CostParams, table_bytes: bytes, exact: bool) -> np.ndarray:
    g = np.arange(n) / (n - 1)
    table = np.frombuffer(table_bytes, dtype=np.bool_)
    mesh = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    base = triangle_costs_exact(mesh, table) if exact else triangle_costs_relaxed(mesh, p, table)
    base = base.reshape(n, n, n, n)
    base.flags.writeable = False
    return base


def brute_force_solve(f, triangles, h: float = 0.05, p: CostParams = CostParams(),
                      table: np.ndarray = DEFAULT_BALANCED, exact: bool = False) -> StrengthAssignment:
    """Exhaustive minimum over ``{0, h, ..., 1}^|E|``; ties go to the
    lexicographically smallest grid point."""
    f, tri = _prepare(f, triangles)
    table = np.ascontiguousarray(table, dtype=np.bool_)
    g = grid_points(h)
    n = g.size
    if float(n) ** f.size > GRID_LIMIT:
        raise TooLarge(f"{n}^{f.size} grid points exceed {GRID_LIMIT:.0e}")
    edge_tab = np.stack([edge_costs(g, np.full(n, fe), p, exact) for fe in f]) if f.size else np.zeros((0, n))
    if tri.size:
        base = _grid_triangle_table(n, p, table.tobytes(), exact)
        # one table per triangle with axes in ascending edge order: inner loops read sequentially
        order = np.argsort(tri, axis=1, kind="stable")
        tri_tab = np.stack([np.transpose(base, o).ravel() for o in order])
        tri_sorted = np.take_along_axis(tri, order, axis=1)
    else:
        tri_tab = np.zeros((0, 1))
        tri_sorted = tri
    idx, _ = kernels.grid_search(np.ascontiguousarray(edge_tab), np.ascontiguousarray(tri_tab),
                                 np.ascontiguousarray(tri_sorted))
    s = g[np.asarray(idx)]
    obj = total_objective(s, f, tri, p, table, exact)
    return StrengthAssignment(s, obj, 1, True)


def assignment_table(edges: Sequence[tuple[str, str]], f: np.ndarray, result: StrengthAssignment) -> list[tuple]:
    return [(a, b, float(fe), float(se)) for (a, b), fe, se in zip(edges, f, result.s)]
