"""Personal language habit: per-sender mean feature value over communicators,
and feature values expressed relative to it."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyCommunicatorSet, NoQualifyingIndividuals, ZeroHabit
from .lang_features import FEATURES, RawFeatures

ZERO_HABIT_EPS = 1e-12


def habit_value(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise EmptyCommunicatorSet("habit of an individual with no communicators")
    return math.fsum(values) / len(values)


def normalize_feature(f: float, habit: float) -> float:
    """Relative deviation ``(f - habit) / habit``."""
    if abs(habit) < ZERO_HABIT_EPS:
        raise ZeroHabit(f"habit value {habit!r} is zero; normalized value undefined")
    return (f - habit) / habit


@dataclass
class HabitProfile:
    individual: str
    communicators: tuple[str, ...]
    habit: dict[str, float]


@dataclass
class EdgeFeatureVector:
    sender: str
    recipient: str
    raw: dict[str, float]
    normalized: dict[str, float | None]
    fused: float | None = None
    flags: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.sender, self.recipient)


def compute_profiles(rows: Iterable[RawFeatures]) -> dict[str, HabitProfile]:
    """One profile per sender, over the edges present in ``rows``."""
    outgoing: dict[str, list[RawFeatures]] = defaultdict(list)
    for r in rows:
        outgoing[r.sender].append(r)
    profiles = {}
    for person in sorted(outgoing):
        rs = sorted(outgoing[person], key=lambda r: r.recipient)
        profiles[person] = HabitProfile(
            person,
            tuple(r.recipient for r in rs),
            {f: habit_value([getattr(r, f) for r in rs]) for f in FEATURES},
        )
    return profiles


def normalize_edges(rows: Iterable[RawFeatures], profiles: Mapping[str, HabitProfile]) -> list[EdgeFeatureVector]:
    """Habit-normalized vectors; a zero habit leaves ``None`` and a flag."""
    out = []
    for r in rows:
        prof = profiles[r.sender]
        raw = r.as_dict()
        norm: dict[str, float | None] = {}
        flags = {}
        for f in FEATURES:
            try:
                norm[f] = normalize_feature(raw[f], prof.habit[f])
            except ZeroHabit:
                norm[f] = None
                flags[f] = "zero_habit"
        out.append(EdgeFeatureVector(r.sender, r.recipient, raw, norm, flags=flags))
    return out


@dataclass
class DeviationRow:
    feature: str
    global_dev: float
    mean_individual_dev: float
    dev_of_individual_dev: float
    individuals: int
    edges: int


def habit_deviation_stats(rows: Sequence[RawFeatures], min_communicators: int = 5) -> list[DeviationRow]:
    """Global vs personal spread per feature, over senders with at least
    ``min_communicators`` partners. Sample (n-1) deviations throughout."""
    if min_communicators < 2:
        raise ValueError("min_communicators must be >= 2 for a per-individual deviation")
    outgoing: dict[str, list[RawFeatures]] = defaultdict(list)
    for r in rows:
        outgoing[r.sender].append(r)
    chosen = [p for p in sorted(outgoing) if len(outgoing[p]) >= min_communicators]
    if not chosen:
        raise NoQualifyingIndividuals(f"no individual has >= {min_communicators} communicators")
    report = []
    n_edges = sum(len(outgoing[p]) for p in chosen)
    for f in FEATURES:
        pooled = np.array([getattr(r, f) for p in chosen for r in outgoing[p]], dtype=float)
        per = np.array([np.std([getattr(r, f) for r in outgoing[p]], ddof=1) for p in chosen])
        report.append(DeviationRow(
            f,
            float(np.std(pooled, ddof=1)) if pooled.size > 1 else 0.0,
            float(per.mean()),
            float(np.std(per, ddof=1)) if per.size > 1 else 0.0,
            len(chosen),
            n_edges,
        ))
    return report
