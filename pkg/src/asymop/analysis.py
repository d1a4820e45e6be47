"""Statistics over bidirectional values: paired t-tests, Pearson correlation,
the per-feature tables, personality groups and superior/subordinate precision."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateSeries, NoUsablePairs, TooFew, TooFewQualifying
from .lang_features import FEATURES
from .relgraph import INVERSE_FEATURES, InteractionGraph

VALUE_KINDS = ("raw", "habit", "normalized", "strength")
DEFAULT_THRESHOLDS = (0.0, 0.01, 0.05, 0.1)

# two-sided 95% Student-t critical values, df = 1..200
_T975 = (
    12.706204736432095, 4.302652729696142, 3.182446305284263, 2.7764451051977987,
    2.570581835636314, 2.4469118511449692, 2.3646242515927844, 2.306004135204166,
    2.2621571628540993, 2.2281388519649385, 2.200985160082949, 2.1788128296634177,
    2.1603686564610127, 2.1447866879169273, 2.131449545559323, 2.1199052992210112,
    2.1098155778331806, 2.10092204024096, 2.093024054408263, 2.0859634472658364,
    2.079613844727662, 2.0738730679040147, 2.0686576104190406, 2.0638985616280205,
    2.059538552753294, 2.055529438642871, 2.0518305164802833, 2.048407141795244,
    2.045229642132703, 2.0422724563012373, 2.0395134463964077, 2.036933343460101,
    2.0345152974493383, 2.032244509317718, 2.0301079282503425, 2.0280940009804502,
    2.0261924630291093, 2.024394163911969, 2.0226909200367604, 2.0210753903062733,
    2.019540970441376, 2.018081702818444, 2.016692199227824, 2.0153675744437636,
    2.014103388880846, 2.0128955989194286, 2.0117405137297655, 2.010634757624232,
    2.0095752371292397, 2.008559112100761, 2.007583770315836, 2.006646805061688,
    2.0057459953178687, 2.004879288188057, 2.004044783289146, 2.003240718847872,
    2.002465459291007, 2.0017174841452356, 2.0009953780882674, 2.00029782201426,
    1.9996235849949393, 1.9989715170333786, 1.998340542520741, 1.9977296543176926,
    1.9971379083920033, 1.9965644189523113, 1.9960083540252962, 1.9954689314298435,
    1.9949454151072374, 1.994437111771186, 1.993943367845625, 1.9934635666618716,
    1.992997125889855, 1.9925434951809322, 1.9921021540022417, 1.9916726096446642,
    1.9912543953883843, 1.9908470688116904, 1.9904502102301282, 1.9900634212544457,
    1.9896863234569024, 1.9893185571365721, 1.9889597801751624, 1.9886096669757087,
    1.9882679074772216, 1.9879342062390202, 1.9876082815890703, 1.987289864831169,
    1.986978699506281, 1.9866745407037676, 1.9863771544186173, 1.98608631695113,
    1.9858018143458234, 1.985523441866604, 1.9852510035091888, 1.9849843115310182,
    1.9847231860271193, 1.984467454426692, 1.9842169515086827, 1.9839715184496334,
    1.983731002885281, 1.98349525849594, 1.98326414470971, 1.9830375264229898,
    1.9828152737371543, 1.9825972617102907, 1.9823833701230174, 1.9821734832574511,
    1.981967489688474, 1.98176528208651, 1.9815667570310707, 1.9813718148344004,
    1.98118035937458, 1.9809922979375063, 1.9808075410672, 1.9806260024239375,
    1.9804475986497292, 1.9802722492407059, 1.980099876426006, 1.9799304050527766,
    1.9797637624769302, 1.979599878459331, 1.9794386850670895, 1.9792801165796825,
    1.979124109399617, 1.9789706019673934, 1.9788195346805206, 1.978670849816362,
    1.978524491458605, 1.9783804054271528, 1.9782385392112583, 1.9780988419057233,
    1.9779612641500013, 1.9778257580700527, 1.977692277222804, 1.9775607765430832,
    1.9774312122928936, 1.9773035420129161, 1.977177724476122, 1.9770537196433882,
    1.9769314886210219, 1.9768109936200895, 1.976692197917468, 1.9765750658185364,
    1.9764595626214159, 1.9763456545827003, 1.9762333088845878, 1.9761224936033632,
    1.976013177679155, 1.9759053308869137, 1.9757989238085503, 1.9756939278061865,
    1.9755903149964584, 1.9754880582258318, 1.9753871310468782, 1.9752875076954723,
    1.975189163068866, 1.975092072704601, 1.9749962127602252, 1.9749015599937718,
    1.974808091744976, 1.9747157859171878, 1.9746246209599578, 1.9745345758522654,
    1.9744456300863589, 1.9743577636521854, 1.9742709570223844, 1.9741851911378205,
    1.9741004473936334, 1.9740167076257822, 1.9739339540980687, 1.9738521694896134,
    1.973771336882769, 1.9736914397514558, 1.9736124619498971, 1.973534387701743,
    1.9734572015895642, 1.9733808885447028, 1.9733054338374663, 1.9732308230676485,
    1.9731570421553688, 1.9730840773322158, 1.973011915132679, 1.9729405423858688,
    1.9728699462074988, 1.9728001139921347, 1.9727310334056902, 1.9726626923781652,
    1.9725950790966154, 1.9725281819983447, 1.9724619897643145, 1.9723964913127592,
    1.9723316757930007, 1.972267532579456, 1.9722040512658325, 1.9721412216594967,
    1.9720790337760217, 1.9720174778338955, 1.971956544249395, 1.9718962236316089,
)
_Z975 = 1.959963984540054


def t_critical_975(df: int) -> float:
    """``t_{0.975, df}``: table up to 200, Cornish-Fisher expansion beyond."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if df <= len(_T975):
        return _T975[df - 1]
    z = _Z975
    g1 = (z ** 3 + z) / 4
    g2 = (5 * z ** 5 + 16 * z ** 3 + 3 * z) / 96
    g3 = (3 * z ** 7 + 19 * z ** 5 + 17 * z ** 3 - 15 * z) / 384
    g4 = (79 * z ** 9 + 776 * z ** 7 + 1482 * z ** 5 - 1920 * z ** 3 - 945 * z) / 92160
    return z + g1 / df + g2 / df ** 2 + g3 / df ** 3 + g4 / df ** 4


@dataclass
class PairedSeries:
    """One entry per unordered pair; ``x`` is the direction leaving the
    lexicographically smaller id."""
    pairs: list[tuple[str, str]]
    x: np.ndarray
    y: np.ndarray
    feature: str
    kind: str

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class TTestResult:
    mean_diff: float
    t: float
    ci95_lo: float
    ci95_hi: float
    n: int


def paired_t_test(x: Sequence[float], y: Sequence[float], mode: str = "absolute") -> TTestResult:
    """One-sample t on per-pair differences.

    ``mode="absolute"`` tests ``|x - y|`` against zero (the magnitude of the
    asymmetry); ``mode="signed"`` tests ``y - x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("paired series must have equal length")
    n = x.size
    if n < 2:
        raise TooFew(f"paired t-test needs n >= 2, got {n}")
    if mode == "absolute":
        d = np.abs(x - y)
    elif mode == "signed":
        d = y - x
    else:
        raise ValueError(f"unknown mode {mode!r}")
    mean = math.fsum(d) / n
    sd = math.sqrt(math.fsum((d - mean) ** 2) / (n - 1))
    if sd == 0.0:
        raise DegenerateSeries("differences have zero variance")
    se = sd / math.sqrt(n)
    half = t_critical_975(n - 1) * se
    return TTestResult(mean, mean / se, mean - half, mean + half, n)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise TooFew("pearson needs two equal-length series with n >= 2")
    dx = x - math.fsum(x) / x.size
    dy = y - math.fsum(y) / y.size
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeries("a series has zero variance")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _directed_values(g: InteractionGraph, kind: str, feature: str,
                     strengths: Mapping[tuple[str, str], float] | None) -> dict[tuple[str, str], float | None]:
    if kind == "raw":
        return {e: g.vectors[e].raw[feature] for e in g.edges}
    if kind == "habit":
        return {e: g.profiles[e[0]].habit[feature] for e in g.edges}
    if kind == "normalized":
        return {e: g.vectors[e].normalized[feature] for e in g.edges}
    if kind == "strength":
        if strengths is None:
            raise ValueError("strength kind needs an assignment")
        return {e: strengths.get(e) for e in g.edges}
    raise ValueError(f"unknown value kind {kind!r}")


def paired_series(g: InteractionGraph, kind: str, feature: str,
                  strengths: Mapping[tuple[str, str], float] | None = None) -> PairedSeries:
    """Collect (x_AB, x_BA) for every mutual pair; pairs where either
    direction is undefined (zero habit) are left out."""
    vals = _directed_values(g, kind, feature, strengths)
    pairs, xs, ys = [], [], []
    for a, b in g.edges:
        if a >= b or (b, a) not in vals:
            continue
        u, v = vals[(a, b)], vals[(b, a)]
        if u is None or v is None:
            continue
        pairs.append((a, b))
        xs.append(u)
        ys.append(v)
    return PairedSeries(pairs, np.array(xs, dtype=float), np.array(ys, dtype=float), feature, kind)


@dataclass
class StatsRow:
    feature: str
    kind: str
    n: int
    avg_all: float
    avg_diff: float
    t: float
    ci95_lo: float
    ci95_hi: float
    pearson: float
    mean_signed: float
    t_signed: float
    ci95_signed_lo: float
    ci95_signed_hi: float


def series_stats(ps: PairedSeries) -> StatsRow:
    abs_t = paired_t_test(ps.x, ps.y, "absolute")
    signed = paired_t_test(ps.x, ps.y, "signed")
    avg_all = math.fsum(np.concatenate([ps.x, ps.y])) / (2 * len(ps))
    return StatsRow(ps.feature, ps.kind, len(ps), avg_all, abs_t.mean_diff, abs_t.t, abs_t.ci95_lo,
                    abs_t.ci95_hi, pearson(ps.x, ps.y), signed.mean_diff, signed.t, signed.ci95_lo,
                    signed.ci95_hi)


def bidirectional_stats(g: InteractionGraph, kind: str = "raw",
                        strengths: Mapping[tuple[str, str], float] | None = None) -> list[StatsRow]:
    features = ("strength",) if kind == "strength" else FEATURES
    return [series_stats(paired_series(g, kind, f, strengths)) for f in features]


def stats_row_dict(row: StatsRow) -> dict:
    return asdict(row)


# -- personality ----------------------------------------------------------------

@dataclass
class PersonalityResult:
    groups: dict[str, dict[str, float]]       # feature -> group -> mean correlation score
    members: dict[str, dict[str, list[str]]]  # feature -> group -> ids
    excluded: dict[str, int]                  # feature -> individuals without a defined score
    qualifying: int


PERSONALITY_GROUPS = ("top_positive", "last_positive", "top_flexible", "last_flexible")


def correlation_score(g: InteractionGraph, person: str, feature: str) -> float:
    """Pearson, over ``person``'s partners, between what ``person`` sends each
    partner and what that partner sends back."""
    partners = sorted(p for p in g.out_nbrs.get(person, ()) if (p, person) in g.index)
    out = [g.vectors[(person, p)].raw[feature] for p in partners]
    back = [g.vectors[(p, person)].raw[feature] for p in partners]
    return pearson(out, back)


def personality_analysis(g: InteractionGraph, k: int = 10, min_communicators: int = 5) -> PersonalityResult:
    """Mean correlation score of the top/last ``k`` individuals by positive
    degree (mean outgoing value; lower perplexity counts as more positive)
    and by flexible degree (sample deviation of outgoing values).

    Individuals whose score is undefined (a constant series) are excluded
    before ranking and counted in ``excluded``.
    """
    people = [p for p in sorted(g.out_nbrs) if len(g.out_nbrs[p]) >= min_communicators]
    groups, members, excluded = {}, {}, {}
    for f in FEATURES:
        rows = []
        for p in people:
            try:
                score = correlation_score(g, p, f)
            except (DegenerateSeries, TooFew):
                continue
            vals = np.array([g.vectors[(p, q)].raw[f] for q in sorted(g.out_nbrs[p])])
            positive = -vals.mean() if f in INVERSE_FEATURES else vals.mean()
            rows.append((p, score, positive, vals.std(ddof=1)))
        excluded[f] = len(people) - len(rows)
        if k < 1 or len(rows) < k:
            raise TooFewQualifying(f"{f}: {len(rows)} individual(s) with a defined score, need k={k}")
        by_pos = sorted(rows, key=lambda r: (-r[2], r[0]))
        by_flex = sorted(rows, key=lambda r: (-r[3], r[0]))
        sel = {
            "top_positive": by_pos[:k],
            "last_positive": by_pos[-k:],
            "top_flexible": by_flex[:k],
            "last_flexible": by_flex[-k:],
        }
        groups[f] = {name: math.fsum(r[1] for r in rs) / k for name, rs in sel.items()}
        members[f] = {name: [r[0] for r in rs] for name, rs in sel.items()}
    return PersonalityResult(groups, members, excluded, len(people))


# -- superior / subordinate evaluation ------------------------------------------

@dataclass(frozen=True)
class GroundTruthPair:
    lower: str
    higher: str

    def __post_init__(self):
        if self.lower == self.higher:
            raise ValueError(f"ground-truth pair with identical ids: {self.lower}")


def read_ground_truth(path) -> list[GroundTruthPair]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#")) if r]
    if rows and [c.strip() for c in rows[0][:2]] == ["lower_id", "higher_id"]:
        rows = rows[1:]
    return [GroundTruthPair(r[0].strip().lower(), r[1].strip().lower()) for r in rows]


@dataclass
class PrecisionResult:
    precision: dict[float, float]
    used: int
    skipped: list[GroundTruthPair]


def evaluate_precision(strengths: Mapping[tuple[str, str], float], truth: Iterable[GroundTruthPair],
                       thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> PrecisionResult:
    """Share of pairs with ``s(lower->higher) - s(higher->lower) > threshold``.
    Pairs missing either directed edge are skipped and returned."""
    diffs, skipped = [], []
    for gt in truth:
        up = strengths.get((gt.lower, gt.higher))
        down = strengths.get((gt.higher, gt.lower))
        if up is None or down is None:
            skipped.append(gt)
            continue
        diffs.append(up - down)
    if not diffs:
        raise NoUsablePairs("no ground-truth pair has both directed edges")
    d = np.array(diffs)
    return PrecisionResult({float(th): float(np.mean(d > th)) for th in thresholds}, len(diffs), skipped)
