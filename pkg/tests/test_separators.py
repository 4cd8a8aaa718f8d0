"""Covey separator construction, path coloring, and the scattering verifier."""

from fractions import Fraction

import pytest

from baldist.core import Instance, ParameterError
from baldist.instances import gen_random
from baldist.separators import (
    MinorCertificate,
    ScatteringSeparator,
    color_shortest_path,
    covey_separator,
    verify_minor_certificate,
    verify_scattering,
)


def path_graph(k: int) -> Instance:
    return Instance(3, [(i, 1, 1) for i in range(k)],
                    [(i, i + 1) for i in range(k - 1)])


def complete_graph(k: int) -> Instance:
    return Instance(3, [(i, 1, 1) for i in range(k)],
                    [(u, v) for u in range(k) for v in range(u + 1, k)])


def lattice(rows: int, cols: int) -> Instance:
    def vid(r, c):
        return r * cols + c
    vertices = [(vid(r, c), 1, 1) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return Instance(3, vertices, edges)


# -- color_shortest_path -----------------------------------------------------------------


def test_color_path_of_five_vertices_gives_singletons():
    classes = color_shortest_path([10, 11, 12, 13, 14])
    assert classes == [(10,), (11,), (12,), (13,), (14,)]


def test_color_path_round_robin_wraps():
    path = list(range(1, 12))  # eleven vertices
    classes = color_shortest_path(path)
    assert classes[0] == (1, 6, 11)
    assert classes[1] == (2, 7)
    assert classes[4] == (5, 10)


def test_color_path_short_and_empty():
    assert color_shortest_path([]) == [(), (), (), (), ()]
    assert color_shortest_path([3, 1, 2]) == [(3,), (1,), (2,), (), ()]


def test_colored_classes_are_five_hop_independent_on_their_path():
    inst = path_graph(17)
    for cls in color_shortest_path(list(range(17))):
        members = sorted(cls)
        for a, b in zip(members, members[1:]):
            assert b - a >= 5  # hop distance on a path is the id gap


# -- verify_scattering -------------------------------------------------------------------


def test_verify_empty_separator_single_vertex_delta_one():
    inst = Instance(3, [(0, 1, 1)], [])
    sep = ScatteringSeparator(classes=(), t=5, delta=1.0)
    assert verify_scattering(inst, sep).ok


def test_verify_flags_adjacent_vertices_in_one_class():
    inst = path_graph(6)
    sep = ScatteringSeparator(classes=(frozenset({2, 3}),), t=5, delta=1.0)
    report = verify_scattering(inst, sep)
    assert not report.ok
    assert any(issue.kind == "hop-independence" and "not t-hop independent"
               in issue.message for issue in report.issues)


def test_verify_sequential_removal_makes_close_pair_legal():
    # 0 and 4 are four hops apart, too close for one class; removing the
    # middle vertex first cuts the path, so the two-class order is valid.
    inst = path_graph(5)
    bad = ScatteringSeparator(classes=(frozenset({0, 4}),), t=5, delta=1.0)
    assert not verify_scattering(inst, bad).ok
    good = ScatteringSeparator(classes=(frozenset({2}), frozenset({0, 4})),
                               t=5, delta=1.0)
    assert verify_scattering(inst, good).ok


def test_verify_flags_overlap_unknown_vertex_and_imbalance():
    inst = path_graph(10)
    sep = ScatteringSeparator(
        classes=(frozenset({0}), frozenset({0, 99})), t=5, delta=Fraction(1, 2))
    report = verify_scattering(inst, sep)
    kinds = {issue.kind for issue in report.issues}
    assert "class-overlap" in kinds
    assert "unknown-vertex" in kinds
    assert "balance" in kinds  # removing vertex 0 leaves a 9-vertex component


def test_verify_threads_do_not_change_report():
    inst = lattice(5, 5)
    sep = covey_separator(inst, 6)
    assert isinstance(sep, ScatteringSeparator)
    a = verify_scattering(inst, sep, threads=1)
    b = verify_scattering(inst, sep, threads=4)
    assert a == b


# -- verify_minor_certificate --------------------------------------------------------------


def test_minor_certificate_checks():
    inst = complete_graph(4)
    good = MinorCertificate(h=4, branch_sets=tuple(frozenset({v}) for v in range(4)))
    assert verify_minor_certificate(inst, good).ok

    wrong_count = MinorCertificate(h=4, branch_sets=(frozenset({0}),))
    assert any(i.kind == "count" for i in
               verify_minor_certificate(inst, wrong_count).issues)

    overlap = MinorCertificate(h=2, branch_sets=(frozenset({0, 1}), frozenset({1})))
    assert any(i.kind == "overlap" for i in
               verify_minor_certificate(inst, overlap).issues)

    path = path_graph(6)
    disconnected = MinorCertificate(h=2, branch_sets=(frozenset({0, 2}), frozenset({1})))
    assert any(i.kind == "disconnected" for i in
               verify_minor_certificate(path, disconnected).issues)

    far_apart = MinorCertificate(h=2, branch_sets=(frozenset({0}), frozenset({5})))
    assert any(i.kind == "not-neighboring" for i in
               verify_minor_certificate(path, far_apart).issues)


# -- covey_separator -----------------------------------------------------------------------


def test_covey_rejects_small_h():
    with pytest.raises(ParameterError):
        covey_separator(path_graph(4), 1)


def test_covey_on_long_path_returns_valid_separator():
    inst = path_graph(20)
    out = covey_separator(inst, 3)
    # a forest has no K_3 minor, so a certificate is impossible
    assert isinstance(out, ScatteringSeparator)
    assert verify_scattering(inst, out).ok
    assert out.balance(inst) <= 0.5
    assert all(out.classes)


def test_covey_on_complete_graph_emits_certificate():
    inst = complete_graph(6)
    out = covey_separator(inst, 6)
    assert isinstance(out, MinorCertificate)
    assert sorted(map(sorted, out.branch_sets)) == [[0], [1], [2], [3], [4], [5]]
    assert verify_minor_certificate(inst, out).ok


def test_covey_certificate_on_larger_clique_any_h():
    inst = complete_graph(9)
    out = covey_separator(inst, 4)
    assert isinstance(out, MinorCertificate)
    assert len(out.branch_sets) == 4
    assert verify_minor_certificate(inst, out).ok


def test_covey_on_nine_by_nine_grid():
    inst = lattice(9, 9)
    out = covey_separator(inst, 6)
    assert isinstance(out, ScatteringSeparator)
    assert len(out.classes) <= 180
    assert verify_scattering(inst, out).ok
    assert out.balance(inst) <= 0.5


def test_covey_balanced_disconnected_input_is_fine():
    # two triangles: the largest component already meets the balance target,
    # and no certificate can be found, so the probe gives up cleanly
    vertices = [(i, 1, 1) for i in range(6)]
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    inst = Instance(3, vertices, edges)
    out = covey_separator(inst, 6)
    assert isinstance(out, ScatteringSeparator)
    assert out.classes == ()
    assert verify_scattering(inst, out).ok


def test_covey_deterministic():
    inst = gen_random("grid_subgraph", 150, 4, seed=9, c=3)
    a = covey_separator(inst, 6)
    b = covey_separator(inst, 6)
    assert isinstance(a, ScatteringSeparator)
    assert a == b


def test_covey_sweep_on_grid_subgraphs():
    # fifty connected grid subgraphs up to 400 vertices: always a separator,
    # always verifier-clean, never more than 5 * h^2 = 180 classes
    for seed in range(50):
        n = 30 + (seed * 37) % 371  # spread sizes over [30, 400]
        inst = gen_random("grid_subgraph", n, 3, seed=seed, c=3)
        out = covey_separator(inst, 6)
        assert isinstance(out, ScatteringSeparator), f"seed {seed}"
        assert len(out.classes) <= 180, f"seed {seed}"
        report = verify_scattering(inst, out)
        assert report.ok, f"seed {seed}:\n{report.summary()}"
        assert out.balance(inst) <= 0.5 + 1e-9, f"seed {seed}"


def test_separator_serialization_shape():
    inst = lattice(5, 5)
    out = covey_separator(inst, 6)
    assert isinstance(out, ScatteringSeparator)
    blob = out.to_dict(inst)
    assert set(blob) == {"classes", "t", "delta", "balance"}
    assert blob["t"] == 5
    assert blob["delta"] == 0.5
    assert all(isinstance(cls, list) for cls in blob["classes"])
    cert = covey_separator(complete_graph(6), 6)
    assert isinstance(cert, MinorCertificate)
    cblob = cert.to_dict()
    assert cblob["h"] == 6
    assert cblob["branch_sets"] == [[0], [1], [2], [3], [4], [5]]
