"""Directed balance costs.

A directed triangle carries strengths ``(s_AB, s_BA, s_AC, s_BC)``. Its
configurations are the 16 binary corners ``z`` of the unit 4-cube; the
homogeneity reading marks four as balanced: equal opinions of A and B on C go
with a mutually positive A<->B tie, unequal opinions with a mutually
non-positive one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, UnsetPrediction

CONFIGS = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.float64)  # (16, 4)


def homogeneity_rule(z: Sequence[int]) -> bool:
    ab, ba, ac, bc = z
    if ac == bc:
        return ab == 1 and ba == 1
    return ab == 0 and ba == 0


def balanced_table(rule: Callable[[Sequence[int]], bool] = homogeneity_rule) -> np.ndarray:
    """Boolean mask over ``CONFIGS`` rows."""
    return np.array([bool(rule(tuple(int(v) for v in z))) for z in CONFIGS])


DEFAULT_BALANCED = balanced_table()


def is_balanced(z: Sequence[int], table: np.ndarray = DEFAULT_BALANCED) -> bool:
    ab, ba, ac, bc = (int(v) for v in z)
    return bool(table[ab * 8 + ba * 4 + ac * 2 + bc])


def balanced_set(table: np.ndarray = DEFAULT_BALANCED) -> list[tuple[int, ...]]:
    return [tuple(int(v) for v in z) for z in CONFIGS[table]]


@dataclass(frozen=True)
class CostParams:
    lam1: float = 1.0
    lam0: float = 1.0
    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        for name in ("lam1", "lam0", "t1", "t2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.lam1, self.lam0, self.t1, self.t2], dtype=np.float64)


def hinge(y: float) -> float:
    return max(0.0, y)


def _unit(name: str, v: float) -> None:
    if not (0.0 <= v <= 1.0):
        raise DomainError(f"{name}={v!r} outside [0, 1]")


def edge_cost_exact(s: float, f: float, p: CostParams = CostParams()) -> float:
    _unit("s_e", s)
    _unit("f_e", f)
    return p.lam1 * (1.0 - f) * s + p.lam0 * f * (1.0 - s)


def edge_cost_relaxed(s: float, f: float, p: CostParams = CostParams()) -> float:
    _unit("s_e", s)
    _unit("f_e", f)
    return p.lam1 * hinge(s - f) + p.lam0 * hinge(f - s)


def triangle_proximity(st: Sequence[float], z: Sequence[float]) -> float:
    return hinge(1.0 - math.fsum(abs(a - b) for a, b in zip(st, z)))


def config_cost(st: Sequence[float], z: Sequence[int], p: CostParams = CostParams(),
                table: np.ndarray = DEFAULT_BALANCED) -> float:
    prox = triangle_proximity(st, z)
    if is_balanced(z, table):
        return p.t1 * (1.0 - prox)
    return p.t2 * prox


def triangle_cost_relaxed(st: Sequence[float], p: CostParams = CostParams(),
                          table: np.ndarray = DEFAULT_BALANCED) -> float:
    for v in st:
        _unit("s_t", v)
    return math.fsum(config_cost(st, z, p, table) for z in CONFIGS)


def nearest_balanced_distance(st: Sequence[float], table: np.ndarray = DEFAULT_BALANCED) -> float:
    for v in st:
        _unit("s_t", v)
    return min(math.fsum(abs(a - b) for a, b in zip(st, z)) for z in CONFIGS[table])


# -- vectorized forms, used by total_objective and the solver's numpy path ----

def triangle_costs_relaxed(S: np.ndarray, p: CostParams = CostParams(),
                           table: np.ndarray = DEFAULT_BALANCED) -> np.ndarray:
    """Relaxed cost of each row of ``S`` (shape ``(T, 4)``)."""
    S = np.asarray(S, dtype=np.float64).reshape(-1, 4)
    l1 = np.abs(S[:, None, :] - CONFIGS[None, :, :]).sum(axis=2)
    prox = np.maximum(0.0, 1.0 - l1)
    F = np.where(table[None, :], p.t1 * (1.0 - prox), p.t2 * prox)
    return F.sum(axis=1)


def triangle_costs_exact(S: np.ndarray, table: np.ndarray = DEFAULT_BALANCED) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64).reshape(-1, 4)
    l1 = np.abs(S[:, None, :] - CONFIGS[None, table, :]).sum(axis=2)
    return l1.min(axis=1)


def edge_costs(s: np.ndarray, f: np.ndarray, p: CostParams = CostParams(), exact: bool = False) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if exact:
        return p.lam1 * (1.0 - f) * s + p.lam0 * f * (1.0 - s)
    return p.lam1 * np.maximum(0.0, s - f) + p.lam0 * np.maximum(0.0, f - s)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    edge_cost_sum: float
    triangle_cost_sum: float

    @property
    def total(self) -> float:
        return self.edge_cost_sum + self.triangle_cost_sum

    def to_dict(self) -> dict:
        return {"edge_cost_sum": self.edge_cost_sum, "triangle_cost_sum": self.triangle_cost_sum,
                "total": self.total}


def objective_breakdown(s: np.ndarray, f: np.ndarray, triangles: np.ndarray, p: CostParams = CostParams(),
                        table: np.ndarray = DEFAULT_BALANCED, exact: bool = False) -> ObjectiveBreakdown:
    s = np.asarray(s, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if s.shape != f.shape:
        raise ValueError("s and f must have the same shape")
    nan = np.flatnonzero(np.isnan(f))
    if nan.size:
        raise UnsetPrediction(int(nan[0]))
    if np.any((s < 0) | (s > 1)) or np.any((f < 0) | (f > 1)):
        raise DomainError("strengths and predictions must lie in [0, 1]")
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 4)
    edge_sum = math.fsum(edge_costs(s, f, p, exact))
    if tri.size:
        S = s[tri]
        tc = triangle_costs_exact(S, table) if exact else triangle_costs_relaxed(S, p, table)
        tri_sum = math.fsum(tc)
    else:
        tri_sum = 0.0
    return ObjectiveBreakdown(edge_sum, tri_sum)


def total_objective(s: np.ndarray, f: np.ndarray, triangles: np.ndarray, p: CostParams = CostParams(),
                    table: np.ndarray = DEFAULT_BALANCED, exact: bool = False) -> float:
    """Sum of edge costs plus triangle costs over the whole assignment.

    ``triangles`` holds edge indices ``(ab, ba, ac, bc)`` per row. ``exact``
    swaps in the linear edge cost and the nearest-balanced L1 distance.
    """
    return objective_breakdown(s, f, triangles, p, table, exact).total


def balanced_table_rows(table: np.ndarray = DEFAULT_BALANCED) -> list[dict]:
    return [{"z_ab": int(z[0]), "z_ba": int(z[1]), "z_ac": int(z[2]), "z_bc": int(z[3]), "balanced": bool(b)}
            for z, b in zip(CONFIGS, table)]
