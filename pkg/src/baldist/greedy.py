"""Greedy and matching-based districting for restricted settings.

Four entry points, each tuned to a structural restriction:

* ``greedy_rank_k`` — districts of at most k blocks, treated as hyperedges
  of a rank-k hypergraph; taking the heaviest surviving hyperedge until
  none remain is a k-approximation, since each chosen edge can block at
  most k optimal ones and only heavier edges block.
* ``exact_rank_2`` — with at most two blocks per district the hypergraph is
  a plain graph, so one maximum-weight matching call is exact.  Balanced
  singletons ride along as pendant auxiliary nodes whose matching edge
  stands for "take the vertex alone".
* ``greedy_bounded_degree`` — star districts on a graph with maximum degree
  D.  Same greedy order, plus a swap: when the popped star has full rank
  D+1, its center alone is balanced, and the center carries at least a 1/D
  share of the star weight, taking just the center blocks far fewer other
  stars and improves the guarantee from D+1 to D + 1/D.
* ``local_search_binary`` / ``binary_matching_bound`` — every block carries
  a single unit of one population type.  Local search grows districts from
  mixed edges and re-seats members that could anchor a fatter star
  (c-approximate); the matching bound pairs opposite-type neighbors as
  weight-2 districts ((D+1)/2-approximate).
"""

from __future__ import annotations

import networkx as nx

from .core import (
    District,
    Districting,
    Instance,
    ParameterError,
    ValidationError,
    is_c_balanced,
)
from .exact import (
    _resolve_cap,
    enumerate_balanced_connected_districts,
    enumerate_balanced_stars,
)

__all__ = [
    "binary_matching_bound",
    "exact_rank_2",
    "greedy_bounded_degree",
    "greedy_rank_k",
    "local_search_binary",
]

# greedy_bounded_degree enumerates neighborhood subsets; the sum of
# 2**deg(v) over all centers must stay under this (BD_ORACLE_CAP overrides).
_DEFAULT_STAR_ENUM_CAP = 4_000_000


def _greedy_disjoint(instance: Instance, districts: list[District]) -> list[District]:
    """Heaviest-first sweep keeping pairwise disjoint districts.

    Ties break on the sorted vertex tuple, so the outcome is independent of
    input order.
    """
    order = sorted(districts,
                   key=lambda d: (-d.weight(instance), d.sorted_vertices()))
    kept: list[District] = []
    used: set[int] = set()
    for district in order:
        if used.isdisjoint(district.vertices):
            kept.append(district)
            used.update(district.vertices)
    return kept


def greedy_rank_k(instance: Instance, k: int, cap: int | None = None) -> Districting:
    """k-approximate districting over connected districts of at most k blocks.

    Enumerates every balanced connected district of rank <= k and runs the
    heaviest-first disjoint sweep.  Every optimal district overlaps some
    chosen district at least as heavy as itself, and a chosen district of k
    blocks meets at most k optimal ones, hence the factor k.
    """
    if k < 2:
        raise ParameterError(f"rank bound k must be >= 2, got {k}")
    limit = _resolve_cap(cap, 2_000_000)
    districts = enumerate_balanced_connected_districts(
        instance, max_rank=k, limit=limit)
    kept = _greedy_disjoint(instance, districts)
    return Districting(kept, solver="greedy-rank-k", params={"k": k})


def exact_rank_2(instance: Instance) -> Districting:
    """Optimal districting among districts of at most two blocks.

    Builds a matching graph whose real edges are the balanced adjacent
    pairs, weighted by their population sum.  A balanced singleton {v} is
    modeled as an edge from v to a private auxiliary node of weight w(v),
    so a single maximum-weight matching run decides pairs and singletons
    jointly and exactly (integer weights keep the matching solver exact).
    """
    graph = nx.Graph()
    for v in instance.ids:
        if is_c_balanced(instance, [v]):
            graph.add_edge(("v", v), ("aux", v), weight=instance.weight(v))
    for u, v in instance.edges:
        if is_c_balanced(instance, [u, v]):
            graph.add_edge(("v", u), ("v", v),
                           weight=instance.weight(u) + instance.weight(v))
    matching = nx.max_weight_matching(graph)
    chosen: list[District] = []
    for a, b in matching:
        if a[0] == "aux":
            a, b = b, a
        if b[0] == "aux":
            chosen.append(District([a[1]], center=a[1]))
        else:
            pair = sorted((a[1], b[1]))
            chosen.append(District(pair, center=pair[0]))
    return Districting(chosen, solver="exact-rank2", params={})


def greedy_bounded_degree(instance: Instance, cap: int | None = None) -> Districting:
    """Star districting with the bounded-degree swap rule.

    Candidate stars (center plus any neighbor subset) are visited heaviest
    first.  Normally the popped star is taken whole and all stars sharing a
    vertex with it die.  The swap fires when the star has the maximum
    possible rank D+1, its center alone is balanced, and the center holds
    at least w(star)/D; then only the center is taken and only stars
    through the center die.
    """
    limit = _resolve_cap(cap, _DEFAULT_STAR_ENUM_CAP)
    work = sum(2 ** instance.degree(v) for v in instance.ids)
    if work > limit:
        raise ParameterError(
            f"star enumeration needs {work} subset visits, cap is {limit} "
            f"(override with cap= or BD_ORACLE_CAP)")
    max_degree = max((instance.degree(v) for v in instance.ids), default=0)
    order = sorted(enumerate_balanced_stars(instance),
                   key=lambda d: (-d.weight(instance), d.sorted_vertices()))
    kept: list[District] = []
    used: set[int] = set()
    for star in order:
        if not used.isdisjoint(star.vertices):
            continue
        center = star.center
        assert center is not None
        if (max_degree >= 1
                and len(star.vertices) == max_degree + 1
                and is_c_balanced(instance, [center])
                and instance.weight(center) * max_degree >= star.weight(instance)):
            kept.append(District([center], center=center))
            used.add(center)
        else:
            kept.append(star)
            used.update(star.vertices)
    return Districting(kept, solver="greedy-degree",
                       params={"max_degree": max_degree})


def _require_binary(instance: Instance) -> None:
    for v in instance.ids:
        if (instance.p1[v], instance.p2[v]) not in ((1, 0), (0, 1)):
            raise ValidationError(
                f"binary weights required: vertex {v} has "
                f"(p1, p2) = ({instance.p1[v]}, {instance.p2[v]})")


def local_search_binary(instance: Instance) -> Districting:
    """c-approximate star districting when every block is a single unit.

    Seeds a district from the smallest uncovered mixed edge (the unit-2
    endpoint is the center), grows it greedily over the center's uncovered
    neighbors while it stays balanced, then runs the swap pass: a member
    with more than floor(c-1) uncovered neighbors forming a balanced star
    of its own is re-seated as the center of that star.
    """
    _require_binary(instance)
    c = instance.c
    k = (c.numerator - c.denominator) // c.denominator  # largest integer <= c-1

    def balanced(members) -> bool:
        return is_c_balanced(instance, members)

    covered: set[int] = set()
    chosen: list[District] = []
    while True:
        seed = None
        for u, v in instance.edges:
            if u in covered or v in covered:
                continue
            if instance.p1[u] + instance.p1[v] == 1:  # one block of each type
                seed = (u, v) if instance.p2[u] == 0 else (v, u)
                break
        if seed is None:
            break
        one, center = seed  # center is the p2 endpoint
        members = {one, center}

        # growth: alternate types when possible (binary weights make every
        # vertex of a type interchangeable for the balance check)
        while True:
            free = [x for x in sorted(instance.adjacency[center])
                    if x not in covered and x not in members]
            by_type = {1: [x for x in free if instance.p1[x] == 1],
                       2: [x for x in free if instance.p2[x] == 1]}
            n1 = sum(1 for x in members if instance.p1[x] == 1)
            n2 = len(members) - n1
            prefer = [1, 2] if n1 <= n2 else [2, 1]
            added = False
            for t in prefer:
                if by_type[t] and balanced(list(members) + [by_type[t][0]]):
                    members.add(by_type[t][0])
                    added = True
                    break
            if not added:
                break

        # swap pass: re-seat members that anchor a fat balanced star of
        # their own among vertices nobody has claimed
        for v in sorted(members - {center}):
            around = [x for x in sorted(instance.adjacency[v])
                      if x not in covered and x not in members]
            if len(around) > k and balanced([v] + around):
                members.discard(v)
                new = District([v] + around, center=v)
                chosen.append(new)
                covered.update(new.vertices)
        if balanced(sorted(members)):
            district = District(sorted(members), center=center)
            chosen.append(district)
            covered.update(district.vertices)
        # else: swaps broke the remainder's balance; its members stay
        # uncovered and may seed a later district (each swap enlarged the
        # covered set, so the outer loop still terminates)

    return Districting(chosen, solver="local-search-binary", params={"k": k})


def binary_matching_bound(instance: Instance) -> Districting:
    """(D+1)/2-approximate districting from a maximum mixed matching.

    Pairs unit-p1 blocks with adjacent unit-p2 blocks via maximum-cardinality
    bipartite matching; each matched edge is a perfectly balanced district
    of weight 2.
    """
    _require_binary(instance)
    graph = nx.Graph()
    left = [v for v in instance.ids if instance.p1[v] == 1]
    for v in left:
        graph.add_node(("p1", v))
    for u, v in instance.edges:
        if instance.p1[u] + instance.p1[v] == 1:
            a, b = (u, v) if instance.p1[u] == 1 else (v, u)
            graph.add_edge(("p1", a), ("p2", b))
    matching = nx.bipartite.hopcroft_karp_matching(
        graph, top_nodes=[("p1", v) for v in left])
    chosen = []
    for key, val in matching.items():
        if key[0] != "p1":
            continue
        pair = sorted((key[1], val[1]))
        chosen.append(District(pair, center=pair[0]))
    return Districting(chosen, solver="binary-matching", params={})
