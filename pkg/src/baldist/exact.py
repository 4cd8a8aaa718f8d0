"""Exhaustive reference solvers ("oracles") for small instances.

These implementations optimise for obviousness, not speed: every answer is
computed by complete enumeration (plus exact rational simplex for the LP),
so they can anchor tests of the approximation engines.  All arithmetic on
weights is integer and the LP runs over :class:`fractions.Fraction`, so
results are exact.

Size caps keep accidental exponential blow-ups from hanging a session.  Each
cap can be overridden per call or globally through the ``BD_ORACLE_CAP``
environment variable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .core import (
    District,
    Districting,
    Instance,
    ParameterError,
    is_c_balanced,
)

__all__ = [
    "enumerate_balanced_stars",
    "enumerate_balanced_connected_districts",
    "brute_force_single_district_complete",
    "brute_force_districting",
    "brute_force_lp",
    "exhaustive_violating_stars",
    "ExactLPResult",
]

_DEFAULT_DISTRICTING_CAP = 14
_DEFAULT_SINGLE_CAP = 25
_DEFAULT_LP_STAR_CAP = 1024


def _resolve_cap(cap: int | None, default: int) -> int:
    if cap is not None:
        return cap
    env = os.environ.get("BD_ORACLE_CAP")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"BD_ORACLE_CAP must be an integer, got {env!r}")
    return default


def _balanced_sums(instance: Instance, s1: int, s2: int) -> bool:
    total = s1 + s2
    if total <= 0:
        return False
    c = instance.c
    return min(s1, s2) * c.numerator >= total * c.denominator


# -- district enumeration ------------------------------------------------------


def enumerate_balanced_stars(
    instance: Instance, max_rank: int | None = None
) -> list[District]:
    """All c-balanced star districts, deduplicated by vertex set.

    For every vertex v, scans all subsets of v's neighbourhood (cost is the
    sum over v of 2**deg(v)); a vertex set that is a star around several
    centers is reported once, annotated with its smallest valid center.
    Results are sorted by their sorted vertex tuples.
    """
    found: dict[frozenset[int], int] = {}
    p1 = instance.p1
    p2 = instance.p2
    for center in instance.ids:
        nbrs = instance.adjacency[center]
        limit = len(nbrs) if max_rank is None else min(len(nbrs), max_rank - 1)
        stack: list[tuple[int, int, int, tuple[int, ...]]] = [
            (0, p1[center], p2[center], ())
        ]
        while stack:
            idx, s1, s2, members = stack.pop()
            if _balanced_sums(instance, s1, s2):
                key = frozenset(members) | {center}
                prev = found.get(key)
                if prev is None or center < prev:
                    found[key] = center
            if len(members) < limit:
                for j in range(idx, len(nbrs)):
                    u = nbrs[j]
                    stack.append((j + 1, s1 + p1[u], s2 + p2[u], members + (u,)))
    out = [District(key, center=center) for key, center in found.items()]
    out.sort(key=lambda d: d.sorted_vertices())
    return out


def enumerate_balanced_connected_districts(
    instance: Instance, max_rank: int | None = None, limit: int = 2_000_000
) -> list[District]:
    """All c-balanced connected districts with at most ``max_rank`` vertices.

    Uses the standard unique enumeration of connected induced subgraphs: for
    each vertex v, every connected set whose minimum id is v is built exactly
    once by repeatedly picking an extension vertex from the current candidate
    set, where candidates skipped at a branch point stay excluded in that
    whole subtree.  ``limit`` bounds the number of sets explored.
    """
    adj = instance.adjacency
    p1 = instance.p1
    p2 = instance.p2
    out: list[District] = []
    explored = 0
    cap = instance.n if max_rank is None else max_rank
    if cap < 1:
        return []

    def rec(members: tuple[int, ...], s1: int, s2: int,
            cand: frozenset[int], banned: frozenset[int], vmin: int) -> None:
        nonlocal explored
        explored += 1
        if explored > limit:
            raise ParameterError(
                f"connected-district enumeration exceeded {limit} sets; "
                f"tighten max_rank or raise the limit")
        if _balanced_sums(instance, s1, s2):
            out.append(District(members))
        if len(members) >= cap:
            return
        member_set = frozenset(members)
        local_ban: set[int] = set()
        for u in sorted(cand):
            growth = frozenset(
                w for w in adj[u]
                if w > vmin and w not in member_set and w != u
                and w not in banned and w not in local_ban
            )
            new_cand = (cand - {u} - local_ban) | (growth - cand)
            rec(members + (u,), s1 + p1[u], s2 + p2[u],
                new_cand, banned | frozenset(local_ban), vmin)
            local_ban.add(u)

    for v in instance.ids:
        rec((v,), p1[v], p2[v],
            frozenset(u for u in adj[v] if u > v), frozenset(), v)
    out.sort(key=lambda d: d.sorted_vertices())
    return out


# -- single best district on a complete graph ----------------------------------


class _SuffixMax:
    """Point updates, suffix maxima over a fixed sorted key universe."""

    def __init__(self, keys: Sequence[int]) -> None:
        self.keys = list(keys)
        n = len(self.keys)
        self.tree: list[tuple[int, int]] = [(-1, 0)] * (n + 1)

    def insert(self, key: int, value: tuple[int, int]) -> None:
        # store at reversed index so a prefix-max tree answers suffix queries
        i = len(self.keys) - 1 - self._index(key)
        i += 1
        while i < len(self.tree):
            if value > self.tree[i]:
                self.tree[i] = value
            i += i & (-i)

    def suffix_max(self, min_key: int) -> tuple[int, int]:
        lo = self._lower_bound(min_key)
        i = len(self.keys) - lo  # number of reversed slots covering keys >= min_key
        best = (-1, 0)
        while i > 0:
            if self.tree[i] > best:
                best = self.tree[i]
            i -= i & (-i)
        return best

    def _index(self, key: int) -> int:
        lo = self._lower_bound(key)
        assert self.keys[lo] == key
        return lo

    def _lower_bound(self, key: int) -> int:
        lo, hi = 0, len(self.keys)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.keys[mid] >= key:
                hi = mid
            else:
                lo = mid + 1
        return lo


def brute_force_single_district_complete(
    instance: Instance, cap: int | None = None
) -> tuple[int, District | None]:
    """Maximum-weight c-balanced subset of a complete instance.

    On a complete graph every vertex subset is connected, so this is a pure
    subset problem.  Solved meet-in-the-middle: the two balance constraints
    are linear in the subset's population sums, so each half-subset becomes a
    point in (slack1, slack2) space and the best partner is found by a sweep
    over one slack with a suffix-maximum table over the other.  Exact integer
    arithmetic throughout.

    Returns ``(weight, district)``; ``(0, None)`` when no balanced subset
    exists.
    """
    cap_val = _resolve_cap(cap, _DEFAULT_SINGLE_CAP)
    n = instance.n
    if n > cap_val:
        raise ParameterError(
            f"instance has {n} vertices, single-district oracle cap is {cap_val} "
            f"(override with cap= or BD_ORACLE_CAP)")

    ids = instance.ids
    num = instance.c.numerator
    den = instance.c.denominator
    a = num - den  # balance reads: a*s1 - den*s2 >= 0 and a*s2 - den*s1 >= 0

    half = n // 2
    left, right = ids[:half], ids[half:]

    def points(part: Sequence[int]) -> list[tuple[int, int, int, int]]:
        """(slack1, slack2, weight, membership mask) for every subset."""
        out = [(0, 0, 0, 0)]
        for bit, v in enumerate(part):
            l1v = a * instance.p1[v] - den * instance.p2[v]
            l2v = a * instance.p2[v] - den * instance.p1[v]
            wv = instance.weight(v)
            out += [(l1 + l1v, l2 + l2v, w + wv, m | (1 << bit))
                    for (l1, l2, w, m) in out]
        return out

    lefts = points(left)
    rights = points(right)
    rights.sort(key=lambda t: t[0])

    table = _SuffixMax(sorted({t[1] for t in rights}))
    best_weight = -1
    best_masks = (0, 0)
    ri = len(rights) - 1
    # sweep lefts from the strictest partner requirement (-l1 largest) to the
    # loosest, so the set of qualifying rights only ever grows
    for l1, l2, w, m in sorted(lefts, key=lambda t: t[0]):
        while ri >= 0 and rights[ri][0] >= -l1:
            _, rl2, rw, rm = rights[ri]
            table.insert(rl2, (rw, rm))
            ri -= 1
        got_w, got_m = table.suffix_max(-l2)
        if got_w >= 0 and w + got_w > best_weight:
            best_weight = w + got_w
            best_masks = (m, got_m)

    if best_weight <= 0:
        return 0, None
    members = [left[i] for i in range(len(left)) if best_masks[0] >> i & 1]
    members += [right[i] for i in range(len(right)) if best_masks[1] >> i & 1]
    district = District(members)
    assert is_c_balanced(instance, district)
    return best_weight, district


# -- exact districting by set packing over bitmasks -----------------------------


def brute_force_districting(
    instance: Instance,
    require_star: bool = False,
    max_rank: int | None = None,
    cap: int | None = None,
) -> Districting:
    """Optimal districting by exact weighted set packing.

    Enumerates every admissible district (balanced stars when
    ``require_star``, otherwise balanced connected sets up to ``max_rank``)
    and then runs a memoised bitmask dynamic program: the best cover of a
    vertex set either skips its smallest vertex or uses one of the districts
    whose minimum member is that vertex.
    """
    cap_val = _resolve_cap(cap, _DEFAULT_DISTRICTING_CAP)
    n = instance.n
    if n > cap_val:
        raise ParameterError(
            f"instance has {n} vertices, districting oracle cap is {cap_val} "
            f"(override with cap= or BD_ORACLE_CAP)")

    if require_star:
        districts = enumerate_balanced_stars(instance, max_rank=max_rank)
    else:
        districts = enumerate_balanced_connected_districts(instance, max_rank=max_rank)

    ids = instance.ids
    bit = {v: i for i, v in enumerate(ids)}
    by_min: dict[int, list[tuple[int, int, District]]] = {i: [] for i in range(n)}
    for d in districts:
        verts = d.sorted_vertices()
        mask = 0
        for v in verts:
            mask |= 1 << bit[v]
        by_min[bit[verts[0]]].append((mask, d.weight(instance), d))
    for lst in by_min.values():
        lst.sort(key=lambda t: t[0])

    memo: dict[int, int] = {0: 0}

    def best(mask: int) -> int:
        got = memo.get(mask)
        if got is not None:
            return got
        v = (mask & -mask).bit_length() - 1
        acc = best(mask & (mask - 1))
        for dmask, w, _d in by_min[v]:
            if dmask & mask == dmask:
                cand = w + best(mask & ~dmask)
                if cand > acc:
                    acc = cand
        memo[mask] = acc
        return acc

    full = (1 << n) - 1
    total = best(full)

    # deterministic reconstruction: prefer skipping the smallest vertex, then
    # districts in sorted-mask order
    chosen: list[District] = []
    mask = full
    while mask:
        if best(mask & (mask - 1)) == best(mask):
            mask &= mask - 1
            continue
        v = (mask & -mask).bit_length() - 1
        for dmask, w, d in by_min[v]:
            if dmask & mask == dmask and w + best(mask & ~dmask) == best(mask):
                chosen.append(d)
                mask &= ~dmask
                break

    params: dict = {"require_star": require_star}
    if max_rank is not None:
        params["max_rank"] = max_rank
    assert sum(d.weight(instance) for d in chosen) == total
    return Districting(chosen, solver="oracle-districting", params=params)


# -- exact LP over enumerated stars ---------------------------------------------


@dataclass(frozen=True)
class ExactLPResult:
    """Exact optimum of the weighted star packing LP.

    ``value`` is the optimal objective; ``x`` maps district vertex sets to
    primal values; ``y`` is the optimal dual (one value per vertex).  All
    entries are fractions.
    """

    value: Fraction
    x: dict[frozenset[int], Fraction]
    y: dict[int, Fraction]


def brute_force_lp(
    instance: Instance, max_rank: int | None = None, cap: int | None = None
) -> ExactLPResult:
    """Solve max sum w(S) x_S subject to per-vertex loads <= 1, exactly.

    Enumerates all balanced stars and runs rational simplex with Bland's
    anti-cycling rule, so the answer is an exact fraction.  The dual values
    are read off the slack columns of the final tableau.
    """
    cap_val = _resolve_cap(cap, _DEFAULT_LP_STAR_CAP)
    stars = enumerate_balanced_stars(instance, max_rank=max_rank)
    if len(stars) > cap_val:
        raise ParameterError(
            f"instance has {len(stars)} balanced stars, LP oracle cap is {cap_val} "
            f"(override with cap= or BD_ORACLE_CAP)")

    if not stars:
        return ExactLPResult(Fraction(0), {}, {v: Fraction(0) for v in instance.ids})

    ids = instance.ids
    row_of = {v: i for i, v in enumerate(ids)}
    m = len(ids)
    k = len(stars)

    # tableau columns [stars | slacks | rhs], rows [constraints | objective]
    zero = Fraction(0)
    T: list[list[Fraction]] = [[zero] * (k + m + 1) for _ in range(m + 1)]
    for j, star in enumerate(stars):
        for v in star.vertices:
            T[row_of[v]][j] = Fraction(1)
        T[m][j] = Fraction(-star.weight(instance))
    for i in range(m):
        T[i][k + i] = Fraction(1)
        T[i][k + m] = Fraction(1)
    basis = [k + i for i in range(m)]

    while True:
        obj = T[m]
        enter = -1
        for j in range(k + m):
            if obj[j] < 0:  # Bland: first improving column
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best_ratio: Fraction | None = None
        for i in range(m):
            coeff = T[i][enter]
            if coeff > 0:
                ratio = T[i][k + m] / coeff
                if best_ratio is None or ratio < best_ratio or (
                        ratio == best_ratio and basis[i] < basis[leave]):
                    best_ratio = ratio
                    leave = i
        if leave < 0:  # impossible: every star column has a +1 load entry
            raise AssertionError("LP unbounded; packing constraints missing")
        piv = T[leave][enter]
        T[leave] = [x / piv for x in T[leave]]
        lrow = T[leave]
        for i in range(m + 1):
            f = T[i][enter]
            if i != leave and f != 0:
                row = T[i]
                T[i] = [row[j] - f * lrow[j] for j in range(k + m + 1)]
        basis[leave] = enter

    x: dict[frozenset[int], Fraction] = {}
    for i, b in enumerate(basis):
        if b < k and T[i][k + m] != 0:
            x[stars[b].vertices] = T[i][k + m]
    y = {ids[i]: T[m][k + i] for i in range(m)}
    return ExactLPResult(T[m][k + m], x, y)


# -- exhaustive dual-violation scan ----------------------------------------------


def exhaustive_violating_stars(
    instance: Instance,
    y: Mapping[int, float],
    mu: float,
    epsilon: float,
) -> list[District]:
    """All balanced stars whose dual load falls strictly below (1-eps) w(S)/mu.

    The dual side is summed with ``math.fsum`` (correctly rounded, so the
    result is independent of summation order); any other component using
    ``fsum`` over the same values reaches the identical float and the strict
    comparison is reproducible.
    """
    out = []
    for star in enumerate_balanced_stars(instance):
        load = math.fsum(y[v] for v in star.vertices)
        if load < (1.0 - epsilon) * (star.weight(instance) / mu):
            out.append(star)
    return out
