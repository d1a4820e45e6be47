"""Directed interaction graph over mutual pairs, directed-triangle listing and
fusion of the normalized features into one per-edge prediction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import DirectedPairStats
from .errors import EmptyGraph, MissingFeature
from .habit import EdgeFeatureVector, HabitProfile, compute_profiles, normalize_edges
from .lang_features import FEATURES, RawFeatures

log = logging.getLogger(__name__)

INVERSE_FEATURES = frozenset({"quality"})  # higher perplexity = weaker signal
EQUAL_WEIGHTS = {f: 0.25 for f in FEATURES}

Edge = tuple[str, str]


@dataclass(frozen=True)
class DirectedTriangle:
    """Mutual pair ``a <-> b`` with shared co-target ``c`` (``a < b``)."""
    a: str
    b: str
    c: str

    @property
    def edges(self) -> tuple[Edge, Edge, Edge, Edge]:
        return ((self.a, self.b), (self.b, self.a), (self.a, self.c), (self.b, self.c))


@dataclass
class InteractionGraph:
    nodes: list[str]
    edges: list[Edge]
    msg_count: dict[Edge, int]
    out_nbrs: dict[str, set[str]] = field(default_factory=dict)
    in_nbrs: dict[str, set[str]] = field(default_factory=dict)
    vectors: dict[Edge, EdgeFeatureVector] = field(default_factory=dict)
    profiles: dict[str, HabitProfile] = field(default_factory=dict)

    def __post_init__(self):
        self.index = {e: i for i, e in enumerate(self.edges)}
        if not self.out_nbrs:
            for a, b in self.edges:
                self.out_nbrs.setdefault(a, set()).add(b)
                self.in_nbrs.setdefault(b, set()).add(a)

    def __contains__(self, edge: Edge) -> bool:
        return edge in self.index

    @property
    def n_interrelationships(self) -> int:
        return len(self.edges) // 2

    def fused(self) -> np.ndarray:
        """Per-edge predictions in edge order (NaN where unset)."""
        return np.array([np.nan if self.vectors.get(e) is None or self.vectors[e].fused is None
                         else self.vectors[e].fused for e in self.edges], dtype=float)

    def triangle_index(self, triangles: Sequence[DirectedTriangle]) -> np.ndarray:
        idx = np.empty((len(triangles), 4), dtype=np.int64)
        for i, t in enumerate(triangles):
            idx[i] = [self.index[e] for e in t.edges]
        return idx


def select_mutual_pairs(pairs: Iterable[DirectedPairStats], min_messages: int = 15) -> list[DirectedPairStats]:
    """Keep a direction only if both it and its reverse carry ``min_messages``."""
    by_key = {(p.sender, p.recipient): p for p in pairs if p.sender != p.recipient}
    kept = [p for k, p in by_key.items()
            if p.count >= min_messages and (k[1], k[0]) in by_key and by_key[(k[1], k[0])].count >= min_messages]
    return sorted(kept, key=lambda p: (p.sender, p.recipient))


def build_graph(pairs: Iterable[DirectedPairStats], min_messages: int = 15) -> InteractionGraph:
    kept = select_mutual_pairs(pairs, min_messages)
    if not kept:
        raise EmptyGraph(f"no interrelationship has >= {min_messages} messages in both directions")
    edges = [(p.sender, p.recipient) for p in kept]
    nodes = sorted({n for e in edges for n in e})
    g = InteractionGraph(nodes, edges, {(p.sender, p.recipient): p.count for p in kept})
    log.info("graph: %d individuals, %d interrelationships", len(nodes), g.n_interrelationships)
    return g


def restrict(g: InteractionGraph, keep: Iterable[Edge]) -> InteractionGraph:
    """Subgraph on ``keep``, dropping any edge whose reverse is not kept."""
    keep = set(keep)
    edges = [e for e in g.edges if e in keep and (e[1], e[0]) in keep]
    if not edges:
        raise EmptyGraph("no mutual edge left")
    nodes = sorted({n for e in edges for n in e})
    return InteractionGraph(nodes, edges, {e: g.msg_count[e] for e in edges})


def attach_features(g: InteractionGraph, rows: Iterable[RawFeatures]) -> InteractionGraph:
    """Attach raw features, compute habits on the graph's own edges and
    normalize. Edges without features are removed together with their reverse."""
    by_key = {(r.sender, r.recipient): r for r in rows}
    if any(e not in by_key for e in g.edges):
        g = restrict(g, by_key)
    chosen = [by_key[e] for e in g.edges]
    g.profiles = compute_profiles(chosen)
    g.vectors = {v.key: v for v in normalize_edges(chosen, g.profiles)}
    return g


def enumerate_directed_triangles(g: InteractionGraph) -> list[DirectedTriangle]:
    """Every (a, b, c) with ``a <-> b``, ``a -> c`` and ``b -> c``; one triangle
    per unordered base pair and co-target, sorted by (a, b, c)."""
    out = []
    for a in sorted(g.out_nbrs):
        succ_a = g.out_nbrs[a]
        for b in sorted(succ_a):
            if b <= a or a not in g.out_nbrs.get(b, ()):
                continue
            for c in sorted(succ_a & g.out_nbrs[b]):
                if c != a and c != b:
                    out.append(DirectedTriangle(a, b, c))
    return out


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties get their mean rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(len(values), dtype=float)
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + 1 + stop)
        start = stop
    return ranks


def _check_weights(weights: Mapping[str, float]) -> dict[str, float]:
    unknown = set(weights) - set(FEATURES)
    if unknown:
        raise ValueError(f"unknown feature weight(s): {sorted(unknown)}")
    w = {f: float(weights.get(f, 0.0)) for f in FEATURES}
    if any(v < 0 or v > 1 for v in w.values()) or abs(sum(w.values()) - 1.0) > 1e-9:
        raise ValueError(f"weights must lie in [0, 1] and sum to 1, got {w}")
    return w


def rank_scores(values: Sequence[float | None], inverse: bool = False) -> np.ndarray:
    """Empirical-CDF rank in (0, 1] among the defined values (NaN elsewhere).
    ``inverse`` ranks in descending order so the largest value gets ``1/N``."""
    arr = np.array([np.nan if v is None else v for v in values], dtype=float)
    out = np.full(len(arr), np.nan)
    ok = ~np.isnan(arr)
    n = int(ok.sum())
    if n:
        out[ok] = average_ranks(-arr[ok] if inverse else arr[ok]) / n
    return out


def fuse_scores(edges: Sequence[Edge], normalized: Mapping[str, Sequence[float | None]],
                weights: Mapping[str, float] = EQUAL_WEIGHTS) -> np.ndarray:
    """Weighted mean of per-feature rank scores. Missing (zero-habit) values
    drop out and the remaining weights are renormalized for that edge."""
    w = _check_weights(weights)
    num = np.zeros(len(edges))
    den = np.zeros(len(edges))
    for f in FEATURES:
        if w[f] == 0.0:
            continue
        r = rank_scores(normalized[f], inverse=f in INVERSE_FEATURES)
        ok = ~np.isnan(r)
        num[ok] += w[f] * r[ok]
        den[ok] += w[f]
    bad = np.flatnonzero(den <= 0)
    if bad.size:
        i = int(bad[0])
        missing = next(f for f in FEATURES if w[f] > 0)
        raise MissingFeature(edges[i], missing)
    return np.clip(num / den, 0.0, 1.0)


def edge_prediction(g: InteractionGraph, weights: Mapping[str, float] = EQUAL_WEIGHTS) -> np.ndarray:
    """Fill ``fused`` on every edge vector and return the predictions."""
    for e in g.edges:
        if e not in g.vectors:
            raise MissingFeature(e, "all")
    normalized = {f: [g.vectors[e].normalized.get(f) for e in g.edges] for f in FEATURES}
    fused = fuse_scores(g.edges, normalized, weights)
    for e, v in zip(g.edges, fused):
        g.vectors[e].fused = float(v)
    return fused
