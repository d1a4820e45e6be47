import itertools

import numpy as np
import pytest

from asymop.balance import CONFIGS, DEFAULT_BALANCED, CostParams, total_objective
from asymop.errors import TooLarge, UnsetPrediction
from asymop.relgraph import InteractionGraph, enumerate_directed_triangles
from asymop.solver import (SolverConfig, assignment_table, brute_force_solve, grid_points, initial_point, solve,
                           solve_arrays, subgradient)

ONE_TRI = np.array([[0, 1, 2, 3]])


def kink_distance(s, f, tri):
    """Distance of ``s`` to the nearest non-differentiable set of the objective."""
    d = np.min(np.abs(s - f)) if s.size else 1.0
    d = min(d, np.min(s), np.min(1 - s))
    for t in tri:
        l1 = np.abs(s[t][None, :] - CONFIGS).sum(axis=1)
        d = min(d, np.min(np.abs(l1 - 1.0)) / 4)
    return d


def random_instance(rng, max_edges=12, max_tri=4):
    e = int(rng.integers(4, max_edges + 1))
    t = int(rng.integers(0, max_tri + 1))
    tri = np.array([rng.choice(e, 4, replace=False) for _ in range(t)], dtype=np.int64).reshape(-1, 4)
    return rng.uniform(size=e), tri


def test_triangle_free_returns_f():
    f = np.array([0.1, 0.5, 0.93])
    res = solve_arrays(f, np.zeros((0, 4)))
    assert np.array_equal(res.s, f) and res.objective == 0.0 and res.converged


def test_single_triangle_vs_grid():
    f = np.full(4, 0.9)
    res = solve_arrays(f, ONE_TRI)
    grid = brute_force_solve(f, ONE_TRI, h=0.05)
    assert res.objective <= grid.objective + 0.05


def test_deterministic():
    rng = np.random.default_rng(5)
    f, tri = random_instance(rng)
    a = solve_arrays(f, tri, SolverConfig(seed=11))
    b = solve_arrays(f, tri, SolverConfig(seed=11))
    assert np.array_equal(a.s, b.s) and a.objective == b.objective
    assert [r.iters for r in a.log] == [r.iters for r in b.log]


def test_grid_examples():
    r = brute_force_solve([0.4], np.zeros((0, 4)), h=0.1)
    assert r.s.tolist() == pytest.approx([0.4]) and r.objective == pytest.approx(0.0, abs=1e-15)
    r = brute_force_solve(np.ones(4), ONE_TRI, h=0.25)
    assert r.s.tolist() == [1, 1, 1, 1] and r.objective == pytest.approx(3.0)
    with pytest.raises(TooLarge):
        brute_force_solve(np.full(7, 0.5), np.zeros((0, 4)), h=0.05)
    with pytest.raises(ValueError):
        grid_points(0.3)


def test_grid_matches_naive_enumeration():
    rng = np.random.default_rng(2)
    for exact in (False, True):
        for _ in range(5):
            e = int(rng.integers(4, 6))
            f = rng.uniform(size=e)
            tri = np.array([rng.permutation(e)[:4] for _ in range(int(rng.integers(1, 3)))])
            p = CostParams(*rng.uniform(0.2, 2, size=4))
            g = grid_points(0.25)
            best = min(total_objective(np.array(s), f, tri, p, exact=exact) for s in itertools.product(g, repeat=e))
            assert brute_force_solve(f, tri, 0.25, p, exact=exact).objective == pytest.approx(best, abs=1e-12)


def test_subgradient_contracts():
    f = np.array([0.2, 0.7])
    g = subgradient(np.array([0.5, 0.9]), f, np.zeros((0, 4)), CostParams(lam1=2.0, lam0=0.5))
    assert g.tolist() == [2.0, 2.0]
    g = subgradient(f.copy(), f, np.zeros((0, 4)), CostParams(lam1=2.0, lam0=0.5))
    assert all(-0.5 <= v <= 2.0 for v in g)


def test_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-7
    checked = 0
    while checked < 300:
        f, tri = random_instance(rng)
        s = rng.uniform(size=f.size)
        if kink_distance(s, f, tri) < 1e-4:
            continue
        p = CostParams(*rng.uniform(0, 2, size=4))
        g = subgradient(s, f, tri, p)
        fd = np.array([(total_objective(s + h * np.eye(f.size)[i], f, tri, p)
                        - total_objective(s - h * np.eye(f.size)[i], f, tri, p)) / (2 * h) for i in range(f.size)])
        assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))) < 1e-5
        checked += 1


def test_feasible_and_monotone_best():
    rng = np.random.default_rng(9)
    for _ in range(20):
        f, tri = random_instance(rng)
        res = solve_arrays(f, tri, SolverConfig(restarts=5, max_iters=800))
        assert np.all(res.s >= 0) and np.all(res.s <= 1)
        assert all(b >= a for a, b in zip(res.best_so_far[1:], res.best_so_far))
        assert res.objective == pytest.approx(total_objective(res.s, f, tri))
        assert res.objective == min(r.objective for r in res.log)


@pytest.mark.parametrize("mode", ["uniform", "corner", "mixed"])
def test_initial_points(mode):
    f = np.full(5, 0.5)
    tri = np.array([[0, 1, 2, 3]])
    assert np.array_equal(initial_point(f, tri, 0, 0, mode=mode), f)
    s = initial_point(f, tri, 2, 0, mode=mode)
    assert np.all((s >= 0) & (s <= 1))
    if mode in ("corner", "mixed"):
        assert tuple(s[:4].astype(int)) in {tuple(z) for z in CONFIGS[DEFAULT_BALANCED].astype(int)}
    with pytest.raises(ValueError):
        initial_point(f, tri, 2, 0, mode="bogus")


def test_graph_solve_and_table():
    edges = sorted(itertools.permutations("abc", 2))
    g = InteractionGraph(["a", "b", "c"], edges, {e: 15 for e in edges})
    f = np.linspace(0.1, 0.9, len(edges))
    res = solve(g, enumerate_directed_triangles(g), SolverConfig(restarts=2), f=f)
    rows = assignment_table(g.edges, f, res)
    assert [r[:2] for r in rows] == edges and all(0 <= r[3] <= 1 for r in rows)
    with pytest.raises(UnsetPrediction):
        solve(g, [], f=np.full(len(edges), np.nan))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(restarts=0)
    with pytest.raises(ValueError):
        SolverConfig(eta0=0)
