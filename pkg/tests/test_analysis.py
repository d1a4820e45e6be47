import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from asymop.analysis import (GroundTruthPair, bidirectional_stats, correlation_score, evaluate_precision,
                             paired_series, paired_t_test, pearson, personality_analysis, read_ground_truth,
                             series_stats, t_critical_975)
from asymop.errors import DegenerateSeries, NoUsablePairs, TooFew, TooFewQualifying
from asymop.lang_features import FEATURES, RawFeatures
from asymop.relgraph import InteractionGraph, attach_features


def graph_with(values):
    """values: {(a, b): v} applied to every feature."""
    edges = sorted(values)
    g = InteractionGraph(sorted({n for e in edges for n in e}), edges, {e: 15 for e in edges})
    return attach_features(g, [RawFeatures(a, b, *([values[(a, b)]] * 4)) for a, b in edges])


def test_signed_t_fixture():
    r = paired_t_test([1, 2, 3], [2, 4, 5], mode="signed")
    assert r.mean_diff == pytest.approx(5 / 3) and r.t == pytest.approx(5.0, abs=1e-12)
    assert paired_t_test([1, 2, 3], [2, 4, 5]).t == pytest.approx(5.0, abs=1e-12)


def test_t_errors():
    with pytest.raises(DegenerateSeries):
        paired_t_test([1, 2, 3], [1, 2, 3])
    with pytest.raises(TooFew):
        paired_t_test([1], [2])


def test_pearson_examples():
    x = [0.3, 1.2, -4.0, 2.2]
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)
    r = pearson([1, 2, 3, 4], [2, 1, 3, 4])
    assert r == pytest.approx(sps.pearsonr([1, 2, 3, 4], [2, 1, 3, 4])[0], abs=1e-12)
    assert r == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(DegenerateSeries):
        pearson([1, 1, 1], [1, 2, 3])


def test_t_table_against_reference():
    for df in itertools.chain(range(1, 400), (500, 1000, 5000, 10 ** 5)):
        assert t_critical_975(df) == pytest.approx(sps.t.ppf(0.975, df), abs=1e-9)


def test_reference_series():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 300))
        x = rng.normal(size=n)
        y = x * rng.uniform(-1, 1) + rng.normal(size=n)
        for mode, d in (("absolute", np.abs(x - y)), ("signed", y - x)):
            r = paired_t_test(x, y, mode)
            ref = sps.ttest_1samp(d, 0.0)
            lo, hi = sps.t.interval(0.95, n - 1, loc=d.mean(), scale=sps.sem(d))
            assert r.t == pytest.approx(ref.statistic, rel=1e-9, abs=1e-9)
            assert (r.ci95_lo, r.ci95_hi) == (pytest.approx(lo, abs=1e-9), pytest.approx(hi, abs=1e-9))
        assert pearson(x, y) == pytest.approx(sps.pearsonr(x, y)[0], abs=1e-9)


def test_two_pair_table_row():
    # pairs (a,b): 1 vs 3 and (c,d): 2 vs 6
    g = graph_with({("a", "b"): 1.0, ("b", "a"): 3.0, ("c", "d"): 2.0, ("d", "c"): 6.0})
    row = bidirectional_stats(g, "raw")[0]
    t1 = 12.706204736174698  # t_{0.975, 1}
    assert (row.n, row.avg_all, row.avg_diff, row.t) == (2, 3.0, 3.0, pytest.approx(3.0))
    assert (row.ci95_lo, row.ci95_hi) == (pytest.approx(3 - t1), pytest.approx(3 + t1))
    assert row.pearson == pytest.approx(1.0)
    assert (row.mean_signed, row.t_signed) == (3.0, pytest.approx(3.0))
    assert [r.feature for r in bidirectional_stats(g, "raw")] == list(FEATURES)


def test_series_orientation():
    g = graph_with({("b", "a"): 1.0, ("a", "b"): 3.0, ("c", "d"): 2.0, ("d", "c"): 6.0})
    ps = paired_series(g, "raw", "frequency")
    assert ps.pairs == [("a", "b"), ("c", "d")] and ps.x.tolist() == [3.0, 2.0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=30),
       st.lists(st.booleans(), min_size=30, max_size=30))
def test_orientation_invariance(pairs, flips):
    from asymop.analysis import PairedSeries
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    fl = np.array(flips[:len(pairs)])
    x2, y2 = np.where(fl, y, x), np.where(fl, x, y)
    try:
        a = series_stats(PairedSeries([("p", "q")] * len(x), x, y, "f", "raw"))
    except DegenerateSeries:
        return
    try:
        b = series_stats(PairedSeries([("p", "q")] * len(x), x2, y2, "f", "raw"))
    except DegenerateSeries:
        return  # flipping may zero the signed variance only
    for col in ("avg_all", "avg_diff", "t", "ci95_lo", "ci95_hi"):
        assert getattr(b, col) == pytest.approx(getattr(a, col), rel=1e-9, abs=1e-9)
    if not fl.any() or fl.all():
        assert b.pearson == pytest.approx(a.pearson, abs=1e-9)


def complete_graph(n):
    people = [f"p{i:02d}" for i in range(n)]
    return people, list(itertools.permutations(people, 2))


def test_mirror_individual_scores_one():
    people, edges = complete_graph(6)
    rng = np.random.default_rng(0)
    vals = {e: float(rng.uniform(1, 5)) for e in edges}
    for q in people[1:]:
        vals[("p00", q)] = vals[(q, "p00")]
    assert correlation_score(graph_with(vals), "p00", "frequency") == pytest.approx(1.0)


def flexible_population(n=12, mirrors=6, seed=0):
    people, edges = complete_graph(n)
    rng = np.random.default_rng(seed)
    mirror = set(people[:mirrors])
    vals = {}
    for p in people:
        if p not in mirror:
            for q in people:
                if q != p:
                    vals[(p, q)] = 3.0 + 0.01 * float(rng.normal())
    for p, q in edges:
        if p in mirror and q in mirror and p < q:
            vals[(p, q)] = vals[(q, p)] = float(rng.uniform(0, 10))
    for p in mirror:
        for q in people:
            if q not in mirror and q != p:
                vals[(p, q)] = vals[(q, p)]
    return graph_with(vals), mirror


def test_personality_flexible_fixture():
    g, mirror = flexible_population()
    res = personality_analysis(g, k=3, min_communicators=5)
    grp = res.groups["frequency"]
    assert set(res.members["frequency"]["top_flexible"]) <= mirror
    assert grp["top_flexible"] == pytest.approx(1.0)
    assert grp["top_flexible"] > grp["last_flexible"]
    for f in FEATURES:
        assert all(-1 <= v <= 1 for v in res.groups[f].values())
    with pytest.raises(TooFewQualifying):
        personality_analysis(g, k=13, min_communicators=5)


def test_personality_excludes_undefined():
    people, edges = complete_graph(6)
    vals = {e: 1.0 + people.index(e[1]) for e in edges}  # each receiver sends back a per-person constant
    vals.update({("p00", q): 2.0 for q in people[1:]})     # p00 is a constant emitter
    res = personality_analysis(graph_with(vals), k=1, min_communicators=5)
    assert res.excluded["frequency"] >= 1
    assert "p00" not in itertools.chain.from_iterable(res.members["frequency"].values())


def test_precision_examples():
    truth = [GroundTruthPair("a", "b")]
    assert evaluate_precision({("a", "b"): 0.8, ("b", "a"): 0.6}, truth, [0.1]).precision[0.1] == 1.0
    assert evaluate_precision({("a", "b"): 0.6, ("b", "a"): 0.6}, truth, [0.0]).precision[0.0] == 0.0
    s = {("a", "b"): 0.9, ("b", "a"): 0.1, ("c", "d"): 0.2, ("d", "c"): 0.1, ("e", "f"): 0.1, ("f", "e"): 0.5}
    res = evaluate_precision(s, [GroundTruthPair("a", "b"), GroundTruthPair("c", "d"), GroundTruthPair("e", "f"),
                                 GroundTruthPair("x", "y")], [0.0])
    assert res.precision[0.0] == pytest.approx(2 / 3) and res.used == 3
    assert res.skipped == [GroundTruthPair("x", "y")]
    with pytest.raises(NoUsablePairs):
        evaluate_precision(s, [GroundTruthPair("x", "y")])
    with pytest.raises(ValueError):
        GroundTruthPair("a", "a")


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=40),
       st.lists(st.floats(-1, 1), min_size=2, max_size=8))
def test_precision_monotone(scores, thresholds):
    strengths, truth = {}, []
    for i, (up, down) in enumerate(scores):
        strengths[(f"l{i}", f"h{i}")] = up
        strengths[(f"h{i}", f"l{i}")] = down
        truth.append(GroundTruthPair(f"l{i}", f"h{i}"))
    ths = sorted(set(thresholds))
    prec = evaluate_precision(strengths, truth, ths).precision
    vals = [prec[t] for t in ths]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_read_ground_truth(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("# comment\nlower_id,higher_id\nA@x.com,b@x.com\n\n")
    assert read_ground_truth(p) == [GroundTruthPair("a@x.com", "b@x.com")]
