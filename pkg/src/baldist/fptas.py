"""Approximation schemes for balanced districting via trimmed subset-sum lists.

Two solvers live here:

* :func:`solve_complete` — on a complete graph the union of balanced districts
  is itself a balanced district (the min of two sums is superadditive), so the
  problem reduces to finding one maximum-weight balanced vertex subset.  The
  solver sweeps vertices in id order, maintaining two lists of achievable
  population pairs trimmed under the two balance functionals.

* :func:`solve_tree` — bottom-up dynamic program over a rooted tree whose
  states are "stamps" (open-district populations plus completed weight),
  again kept small by prioritized trimming.  Supports unrestricted connected
  districts and a star-only mode.

The trimming rule is the load-bearing part.  Points are merged when every
coordinate ratio lies within ``e**epsilon`` (with 0 matching only 0), and the
survivor of a merge is chosen to maximise the active balance functional.
Surviving points are always exactly realizable — trimming discards
candidates, never perturbs them — so any district the solvers emit is exactly
balanced; only optimality is approximate, by a factor ``e**-epsilon``.  That
guarantee needs the accumulated trimming error to stay below
``ln(c - 1) / 2``; when the requested epsilon leaves no room (in particular
for c = 2), the solvers fall back to exact deduplication, which is
pseudo-polynomial and therefore guarded by a total-weight cap.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Iterable, NamedTuple, Sequence

from .core import District, Districting, Instance, ParameterError

__all__ = [
    "ValuePoint2",
    "Stamp",
    "TrimmedList",
    "balance_functionals",
    "trim",
    "trimmed_size_bound",
    "solve_complete",
    "solve_tree",
]

# Witnesses ride along as immutable cons-lists: (head, rest) pairs ending in
# None, so extending a list is O(1) and lists share structure freely.


def _cons_iter(cell):
    while cell is not None:
        yield cell[0]
        cell = cell[1]


class ValuePoint2(NamedTuple):
    """Achievable population pair of one partial district, plus its members."""

    q1: int
    q2: int
    members: tuple | None  # cons-list of vertex ids


class _TreeState(NamedTuple):
    open: tuple | None  # cons-list of vertex ids in the still-open district
    done: tuple | None  # cons-list of frozensets: completed districts


class Stamp(NamedTuple):
    """Tree-DP state: open-district populations and completed weight."""

    s1: int
    s2: int
    s3: int | float
    state: _TreeState


TrimmedList = list
"""A trimmed list is an ordinary list whose points pairwise fail to
approximate each other; the alias exists for signature readability."""


def balance_functionals(c) -> tuple[Callable, Callable]:
    """The two linear balance forms, scaled to integers.

    With c = num/den, a population pair (q1, q2) is balanced iff both
    ``(num - den) * q1 - den * q2`` and ``(num - den) * q2 - den * q1`` are
    non-negative (and the pair is not all-zero).  The functionals accept any
    point whose first two slots are the populations.
    """
    num = c.numerator
    den = c.denominator
    a = num - den

    def ell1(pt) -> int:
        return a * pt[0] - den * pt[1]

    def ell2(pt) -> int:
        return a * pt[1] - den * pt[0]

    return ell1, ell2


def _bucket(x, epsilon: float):
    if x == 0:
        return -1  # zero only ever matches zero
    if epsilon <= 0.0:
        return x  # exact mode: deduplicate identical coordinates only
    return math.floor(math.log(x) / epsilon)


def trim(points: Sequence, objective: Callable, epsilon: float, dims: int | None = None) -> list:
    """Prioritized trimming: one representative per geometric bucket.

    Coordinates are hashed into buckets of multiplicative width
    ``e**epsilon`` (zero is its own bucket), so any two points sharing a
    bucket approximate each other within ``epsilon`` per coordinate.  Each
    bucket keeps the point maximising ``objective``; ties prefer a larger
    final slot (the completed weight, for 3-slot stamps) and then the
    lexicographically smaller coordinates, and an exact tie keeps the
    earliest point, so output order is a deterministic function of input
    order.  Every dropped point is approximated *and* objective-dominated by
    its bucket's survivor, which is what preserves balancedness downstream.
    """
    if not points:
        return []
    if dims is None:
        dims = 3 if isinstance(points[0], Stamp) else 2
    best: dict[tuple, tuple] = {}
    exact = epsilon <= 0.0
    floor_ = math.floor
    log_ = math.log
    # The loop bodies below inline _bucket per coordinate; this is the hot
    # path of every solver, so the per-point generator is spelled out.
    if dims == 3:
        for pt in points:
            a, b, c3 = pt[0], pt[1], pt[2]
            if exact:
                key = (a, b, c3)
            else:
                key = (-1 if a == 0 else floor_(log_(a) / epsilon),
                       -1 if b == 0 else floor_(log_(b) / epsilon),
                       -1 if c3 == 0 else floor_(log_(c3) / epsilon))
            cur = best.get(key)
            if cur is None:
                best[key] = pt
            elif ((-objective(pt), -c3, a, b)
                    < (-objective(cur), -cur[2], cur[0], cur[1])):
                best[key] = pt
    else:
        for pt in points:
            a, b = pt[0], pt[1]
            if exact:
                key = (a, b)
            else:
                key = (-1 if a == 0 else floor_(log_(a) / epsilon),
                       -1 if b == 0 else floor_(log_(b) / epsilon))
            cur = best.get(key)
            if cur is None:
                best[key] = pt
            elif (-objective(pt), a, b) < (-objective(cur), cur[0], cur[1]):
                best[key] = pt
    return list(best.values())


def trimmed_size_bound(total_weight: int, epsilon: float, dims: int) -> int:
    """Upper bound on a trimmed list's size: the geometric grid cell count."""
    if epsilon <= 0.0:
        per_axis = total_weight + 2
    else:
        per_axis = 2 + math.ceil(math.log(max(total_weight, 1)) / epsilon) + 1
    return per_axis ** dims


# -- complete graphs -------------------------------------------------------------


def _exact_mode(instance: Instance, epsilon: float) -> bool:
    """True when trimming cannot both merge and preserve balance.

    The balance-preservation argument requires the accumulated approximation
    error to stay below ln(c - 1) / 2, which is zero at c = 2.
    """
    c = float(instance.c)
    if c <= 2.0:
        return True
    return epsilon >= 0.5 * math.log(c - 1.0)


_EXACT_MODE_WEIGHT_CAP = 200_000


def _check_epsilon(instance: Instance, epsilon: float) -> bool:
    if not (epsilon > 0.0):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    exact = _exact_mode(instance, epsilon)
    if exact and instance.total_weight() > _EXACT_MODE_WEIGHT_CAP:
        raise ParameterError(
            f"epsilon {epsilon} leaves no trimming room at c={instance.c} and the "
            f"exact fallback is limited to total weight {_EXACT_MODE_WEIGHT_CAP}")
    return exact


def solve_complete(instance: Instance, epsilon: float) -> Districting:
    """Near-optimal balanced districting of a complete instance.

    Returns a districting holding a single district of weight at least
    ``e**-epsilon`` times the optimum (or no district when nothing is
    balanced).  Requires the instance's edge set to be complete.
    """
    n = instance.n
    if len(instance.edges) != n * (n - 1) // 2:
        raise ParameterError("solve_complete requires a complete instance")
    exact = _check_epsilon(instance, epsilon)
    step = 0.0 if exact else epsilon / max(n, 1)

    ell1, ell2 = balance_functionals(instance.c)
    lists = {1: [ValuePoint2(0, 0, None)], 2: [ValuePoint2(0, 0, None)]}
    objectives = {1: ell1, 2: ell2}

    for v in instance.ids:
        w1 = instance.p1[v]
        w2 = instance.p2[v]
        for j in (1, 2):
            cur = lists[j]
            grown = cur + [ValuePoint2(q1 + w1, q2 + w2, (v, members))
                           for (q1, q2, members) in cur]
            lists[j] = trim(grown, objectives[j], step, dims=2)

    best: tuple[int, tuple[int, ...]] | None = None
    for pt in lists[1] + lists[2]:
        if pt.q1 + pt.q2 >= 1 and ell1(pt) >= 0 and ell2(pt) >= 0:
            weight = pt.q1 + pt.q2
            if best is None or weight > best[0]:
                best = (weight, tuple(sorted(_cons_iter(pt.members))))
            elif weight == best[0]:
                cand = tuple(sorted(_cons_iter(pt.members)))
                if cand < best[1]:
                    best = (weight, cand)

    params = {"epsilon": epsilon, "mode": "exact" if exact else "trimmed"}
    districts = [District(best[1])] if best else []
    return Districting(districts, solver="fptas-complete", params=params)


# -- trees -------------------------------------------------------------------------


def _tree_children(instance: Instance) -> tuple[int, dict[int, list[int]], list[int]]:
    n = instance.n
    if len(instance.edges) != n - 1:
        raise ParameterError("solve_tree requires a tree instance")
    root = instance.ids[0]
    children: dict[int, list[int]] = {v: [] for v in instance.ids}
    seen = {root}
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in instance.adjacency[v]:
            if u not in seen:
                seen.add(u)
                children[v].append(u)
                order.append(u)
                queue.append(u)
    if len(seen) != n:
        raise ParameterError("solve_tree requires a connected instance")
    for v in children:
        children[v].sort()
    return root, children, order


def _mink(left: list[Stamp], right: list[Stamp]) -> list[Stamp]:
    """Minkowski sum of stamp lists, concatenating witness structures."""
    out = []
    for a in left:
        for b in right:
            open_ = a.state.open
            for vid in _cons_iter(b.state.open):
                open_ = (vid, open_)
            done = a.state.done
            for d in _cons_iter(b.state.done):
                done = (d, done)
            out.append(Stamp(a.s1 + b.s1, a.s2 + b.s2, a.s3 + b.s3,
                             _TreeState(open_, done)))
    return out


def _close(stamp: Stamp, extra: Iterable[int] = ()) -> Stamp:
    members = frozenset(_cons_iter(stamp.state.open)) | frozenset(extra)
    return Stamp(0, 0, stamp.s3 + stamp.s1 + stamp.s2,
                 _TreeState(None, (members, stamp.state.done)))


def solve_tree(instance: Instance, epsilon: float, require_star: bool = False) -> Districting:
    """Near-optimal balanced districting of a tree instance.

    Processes vertices bottom-up from the smallest-id root, keeping per-vertex
    stamp lists trimmed under both balance functionals.  Each vertex is
    either absent, inside a completed district of its subtree, or part of a
    district still open towards its parent; in star mode open districts are
    restricted to stars centered at the current vertex, plus a
    "available-as-leaf" state for joining the parent's star.  The returned
    districting weighs at least ``e**-epsilon`` times the optimal
    districting of the requested shape.
    """
    exact = _check_epsilon(instance, epsilon)
    root, children, order = _tree_children(instance)
    # two trim layers per tree level, so halve the per-trim budget
    step = 0.0 if exact else epsilon / (2 * max(instance.n, 1))
    ell1, ell2 = balance_functionals(instance.c)

    def balanced(s1: int, s2: int) -> bool:
        return s1 + s2 >= 1 and ell1((s1, s2)) >= 0 and ell2((s1, s2)) >= 0

    grow = _grow_star if require_star else _grow_general
    memo: dict[int, tuple] = {}
    for v in reversed(order):
        memo[v] = grow(instance, v, children[v], memo, step, ell1, ell2,
                       balanced, is_root=(v == root))
        for u in children[v]:
            del memo[u]  # children's lists are folded in; free them

    final = memo[root]
    best: Stamp | None = None
    for s in final:
        if best is None or s.s3 > best.s3:
            best = s

    districts = []
    if best is not None and best.s3 > 0:
        districts = [District(sorted(m)) for m in _cons_iter(best.state.done)]
    params = {"epsilon": epsilon, "require_star": require_star,
              "mode": "exact" if exact else "trimmed"}
    return Districting(districts, solver="fptas-tree", params=params)


def _grow_general(instance, v, kids, memo, step, ell1, ell2, balanced, is_root):
    base = Stamp(instance.p1[v], instance.p2[v], 0, _TreeState((v, None), None))
    i1, i2 = [base], [base]
    for u in kids:
        l1u, l2u = memo[u]
        i1 = trim(_mink(i1, l1u), ell1, step)
        i2 = trim(_mink(i2, l2u), ell2, step)

    closing = []
    absent = []
    for s in i1 + i2:
        if balanced(s.s1, s.s2):
            closing.append(_close(s))
        absent.append(Stamp(0, 0, s.s3, _TreeState(None, s.state.done)))

    if is_root:
        pool = closing + absent
        return trim(pool, ell1, step) + trim(pool, ell2, step)
    l1 = trim(i1 + closing + absent, ell1, step)
    l2 = trim(i2 + closing + absent, ell2, step)
    return l1, l2


def _grow_star(instance, v, kids, memo, step, ell1, ell2, balanced, is_root):
    p1v = instance.p1[v]
    p2v = instance.p2[v]
    # closed: v's subtree fully resolved, v not open in any direction
    # o1/o2: star centered at v, still open for the parent to join
    # committed: v already absorbed into one child's closed star
    # free: all children resolved, v untouched (basis for "absent" and
    #        "available as parent's leaf")
    free = [Stamp(0, 0, 0, _TreeState(None, None))]
    o1 = [Stamp(p1v, p2v, 0, _TreeState((v, None), None))]
    o2 = list(o1)
    committed: list[Stamp] = []

    for u in kids:
        closed_u, o1u, o2u, avail_u = memo[u]
        # v joins u's open star as its final member, closing it
        closes = []
        seen_open: set[tuple] = set()
        for o in o1u + o2u:
            key = (o.s1, o.s2, o.s3, id(o.state))
            if key in seen_open:
                continue
            seen_open.add(key)
            q1, q2 = o.s1 + p1v, o.s2 + p2v
            if balanced(q1, q2):
                closes.append(_close(Stamp(q1, q2, o.s3, o.state), extra=(v,)))
        new_committed = _mink(committed, closed_u)
        if closes:
            new_committed += _mink(closes, free)
        committed = trim(new_committed, ell1, step)
        free = trim(_mink(free, closed_u), ell1, step)
        leafpool = closed_u + avail_u
        o1 = trim(_mink(o1, leafpool), ell1, step)
        o2 = trim(_mink(o2, leafpool), ell2, step)

    closed_cands = [Stamp(0, 0, s.s3, s.state) for s in free] + committed
    for o in o1 + o2:
        if balanced(o.s1, o.s2):
            closed_cands.append(_close(o))
    closed = trim(closed_cands, ell1, step)
    if is_root:
        return closed
    avail = [Stamp(p1v, p2v, s.s3, _TreeState((v, None), s.state.done)) for s in free]
    return closed, o1, o2, avail
