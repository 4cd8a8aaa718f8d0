"""Tests for instance generators: structure counts and gadget properties."""

import pytest

from baldist.core import ParameterError, is_c_balanced
from baldist.exact import (
    brute_force_districting,
    enumerate_balanced_stars,
)
from baldist.instances import (
    gen_greedy_counterexample,
    gen_grid_bipartite_gap,
    gen_hypergraph_reduction,
    gen_random,
    gen_square_grid,
    gen_triangular_grid,
)


# -- square grid family --------------------------------------------------------


@pytest.mark.parametrize("side", [3, 4, 5])
def test_square_grid_structure(side):
    inst = gen_square_grid(side, 3)
    interior = (side - 2) ** 2
    assert inst.n == side * side + interior
    # pendant anchors have degree 1 and carry the type-2 load
    anchors = [v for v in inst.ids if v >= side * side]
    assert len(anchors) == interior
    for a in anchors:
        assert inst.degree(a) == 1
        assert inst.p1[a] == 0 and inst.p2[a] == 10  # 5 * (c - 1)


@pytest.mark.parametrize("side", [3, 4, 5])
def test_square_grid_only_full_plus_stars_are_balanced(side):
    inst = gen_square_grid(side, 3)
    stars = enumerate_balanced_stars(inst)
    assert len(stars) == (side - 2) ** 2
    for s in stars:
        assert len(s.vertices) == 6  # center + 4 grid neighbours + anchor
        assert s.weight(inst) == 15  # 5 * c


def test_square_grid_rejects_small_side():
    with pytest.raises(ParameterError):
        gen_square_grid(2, 3)


# -- triangular grid family ------------------------------------------------------


@pytest.mark.parametrize("side,interior", [(3, 1), (4, 3), (5, 6), (6, 10)])
def test_triangular_grid_interior_count(side, interior):
    inst = gen_triangular_grid(side, 3)
    grid_n = (side + 1) * (side + 2) // 2
    assert inst.n == grid_n + interior
    anchors = [v for v in inst.ids if v >= grid_n]
    assert len(anchors) == interior
    for a in anchors:
        assert inst.degree(a) == 1
        assert inst.p2[a] == 14  # 7 * (c - 1)
        (center,) = inst.adjacency[a]
        assert inst.degree(center) == 7  # six grid neighbours + anchor


@pytest.mark.parametrize("side", [3, 4, 5])
def test_triangular_grid_only_full_stars_are_balanced(side):
    inst = gen_triangular_grid(side, 3)
    stars = enumerate_balanced_stars(inst)
    assert len(stars) == (side - 1) * (side - 2) // 2
    for s in stars:
        assert len(s.vertices) == 8
        assert s.weight(inst) == 21  # 7 * c


# -- hypergraph reduction ----------------------------------------------------------


def test_hypergraph_reduction_stars_are_full_hyperedges():
    hedges = [[0, 1, 2], [2, 3, 4], [4, 5, 0]]
    inst = gen_hypergraph_reduction(hedges, 3, 3)
    assert inst.n == 6 + 3
    stars = enumerate_balanced_stars(inst)
    got = {s.vertices for s in stars}
    want = {frozenset(h) | {6 + i} for i, h in enumerate(hedges)}
    assert got == want
    # pairwise-intersecting hyperedges: max matching is 1, district weight c*k
    best = brute_force_districting(inst, require_star=True)
    assert best.weight(inst) == 9


def test_hypergraph_reduction_matching_of_two():
    hedges = [[0, 1, 2], [3, 4, 5], [2, 3, 6]]
    inst = gen_hypergraph_reduction(hedges, 3, 4)
    best = brute_force_districting(inst, require_star=True)
    assert best.weight(inst) == 2 * 4 * 3  # two disjoint hyperedges, weight c*k each


def test_hypergraph_reduction_validates():
    with pytest.raises(Exception):
        gen_hypergraph_reduction([[0, 1]], 3, 3)  # not 3-uniform
    with pytest.raises(ParameterError):
        gen_hypergraph_reduction([[0, 1]], 1, 3)  # k too small


# -- bipartite row/column gadget ----------------------------------------------------


@pytest.mark.parametrize("s", [2, 3])
def test_bipartite_gap_structure(s):
    inst = gen_grid_bipartite_gap(s, 3)
    n = s * s
    assert inst.n == 3 * n
    # hubs are NOT wired as a grid: their degree is exactly 2s
    for hub in range(n):
        assert inst.degree(hub) == 2 * s
        assert inst.p2[hub] == 1
    stars = enumerate_balanced_stars(inst)
    assert len(stars) == 2 * n  # one star per row/column member vertex
    for st in stars:
        assert len(st.vertices) == s + 1
        assert st.weight(inst) == 3 * s  # member p1 = s*(c-1) = 2s, plus s unit hubs


def test_bipartite_gap_row_and_column_stars():
    s = 2
    inst = gen_grid_bipartite_gap(s, 3)
    stars = {st.vertices for st in enumerate_balanced_stars(inst)}
    # row star: member of A_0 with hubs {0, 1}; column star: B_0 with {0, 2}
    assert frozenset({4, 0, 1}) in stars
    assert frozenset({8, 0, 2}) in stars


# -- adversarial counterexample -------------------------------------------------------


def test_greedy_counterexample_structure():
    inst = gen_greedy_counterexample(32, 4)
    assert inst.n == 32 + 4 - 1
    x_ids = [1, 2, 3]
    y_ids = list(range(4, 35))
    assert is_c_balanced(inst, [0] + x_ids)
    assert sum(inst.weight(v) for v in [0] + x_ids) == 4
    for u in x_ids:
        assert is_c_balanced(inst, [u] + y_ids)
        assert sum(inst.weight(v) for v in [u] + y_ids) == 32
    # the pivot star and each heavy star pairwise intersect in X
    with pytest.raises(ParameterError):
        gen_greedy_counterexample(32, 3)  # needs c > 3
    with pytest.raises(ParameterError):
        gen_greedy_counterexample(30, 4)  # needs c | n
    with pytest.raises(ParameterError):
        gen_greedy_counterexample(4, 8)  # needs n >= c


# -- random instances ------------------------------------------------------------------


def test_gen_random_deterministic():
    a = gen_random("gnp", 12, 7, seed=5, c=3)
    b = gen_random("gnp", 12, 7, seed=5, c=3)
    assert a.dumps() == b.dumps()
    c = gen_random("gnp", 12, 7, seed=6, c=3)
    assert a.dumps() != c.dumps()


def test_gen_random_tree_is_tree():
    for seed in range(5):
        inst = gen_random("tree", 11, 5, seed=seed, c=3)
        assert len(inst.edges) == 10
        # connected: BFS from 0 reaches everything
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in inst.adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        assert len(seen) == 11


def test_gen_random_complete():
    inst = gen_random("complete", 7, 4, seed=0, c=3)
    assert len(inst.edges) == 21


def test_gen_random_grid_subgraph():
    for seed in range(5):
        inst = gen_random("grid_subgraph", 30, 5, seed=seed, c=3)
        assert inst.n == 30
        assert inst.max_degree() <= 4
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in inst.adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        assert len(seen) == 30


def test_gen_random_rejects_unknown_kind():
    with pytest.raises(ParameterError):
        gen_random("hypercube", 8, 5, seed=0)


def test_weights_within_bounds():
    inst = gen_random("gnp", 40, 9, seed=3, c=3)
    assert all(0 <= inst.p1[v] <= 9 and 0 <= inst.p2[v] <= 9 for v in inst.ids)
