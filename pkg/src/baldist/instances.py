"""Instance generators: structured gap families and random graphs.

The structured families are small gadget constructions whose optimal
fractional star districtings are known in closed form.  Each generator
records its family name and parameters in the instance metadata, and
:func:`canonical_fractional` rebuilds the family's hand-constructed
fractional solution from that metadata so experiments never depend on an LP
solver run.

Conventions shared by the gadget families:

* "city" vertices carry type-1 population only (p1 = 1, p2 = 0);
* "anchor" vertices carry a large type-2 population chosen so that a star
  district is balanced exactly when it contains an anchor together with the
  anchor's full set of required city neighbours;
* every family admits a natural fractional solution that spreads each city
  vertex across all the stars competing for it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .core import District, Instance, ParameterError, ValidationError
from .util import rng_from

__all__ = [
    "gen_square_grid",
    "gen_triangular_grid",
    "gen_hypergraph_reduction",
    "gen_grid_bipartite_gap",
    "gen_greedy_counterexample",
    "gen_random",
    "canonical_fractional",
]


# -- square grid with pendant anchors -----------------------------------------


def gen_square_grid(side: int, c) -> Instance:
    """side x side grid; every interior cell gets a pendant anchor vertex.

    Grid vertices carry p1 = 1.  Each interior vertex (grid degree 4) is
    attached to a fresh pendant vertex with p2 = 5 * (c - 1), sized so that
    the only balanced stars are the full "plus" shapes: an interior center,
    its four grid neighbours, and its pendant.  Overlapping pluses force the
    canonical fractional solution down to x = 1/5 per star.
    """
    inst_c = _check_c(c)
    if side < 3:
        raise ParameterError(f"square grid needs side >= 3, got {side}")
    anchor_p2 = 5 * (inst_c.numerator - inst_c.denominator) // _den_or_raise(inst_c)

    def vid(r: int, col: int) -> int:
        return r * side + col

    vertices = [(vid(r, col), 1, 0) for r in range(side) for col in range(side)]
    edges = []
    for r in range(side):
        for col in range(side):
            if col + 1 < side:
                edges.append((vid(r, col), vid(r, col + 1)))
            if r + 1 < side:
                edges.append((vid(r, col), vid(r + 1, col)))

    next_id = side * side
    for r in range(1, side - 1):
        for col in range(1, side - 1):
            vertices.append((next_id, 0, anchor_p2))
            edges.append((vid(r, col), next_id))
            next_id += 1

    meta = {"family": "square-grid", "side": str(side), "c": _c_str(inst_c)}
    return Instance(inst_c, vertices, edges, meta)


# -- triangular grid with pendant anchors --------------------------------------


def _tri_id(r: int, j: int) -> int:
    return r * (r + 1) // 2 + j


def gen_triangular_grid(side: int, c) -> Instance:
    """Triangular grid with rows 0..side; interior cells get pendant anchors.

    Row r holds r + 1 vertices.  Vertex (r, j) is adjacent to its row
    neighbours and to (r-1, j-1), (r-1, j), (r+1, j), (r+1, j+1) where those
    exist, so interior vertices have degree 6.  Grid vertices carry p1 = 1;
    each interior vertex gets a pendant anchor with p2 = 7 * (c - 1), making
    the full 8-vertex star (center, six neighbours, anchor) the only balanced
    star shape, with canonical fractional value x = 1/7.
    """
    inst_c = _check_c(c)
    if side < 3:
        raise ParameterError(f"triangular grid needs side >= 3, got {side}")
    anchor_p2 = 7 * (inst_c.numerator - inst_c.denominator) // _den_or_raise(inst_c)

    vertices = []
    edges = []
    for r in range(side + 1):
        for j in range(r + 1):
            vertices.append((_tri_id(r, j), 1, 0))
            if j + 1 <= r:
                edges.append((_tri_id(r, j), _tri_id(r, j + 1)))
            if r + 1 <= side:
                edges.append((_tri_id(r, j), _tri_id(r + 1, j)))
                edges.append((_tri_id(r, j), _tri_id(r + 1, j + 1)))

    next_id = (side + 1) * (side + 2) // 2
    for r in range(2, side):
        for j in range(1, r):
            vertices.append((next_id, 0, anchor_p2))
            edges.append((_tri_id(r, j), next_id))
            next_id += 1

    meta = {"family": "triangular-grid", "side": str(side), "c": _c_str(inst_c)}
    return Instance(inst_c, vertices, edges, meta)


# -- hypergraph matching reduction ---------------------------------------------


def gen_hypergraph_reduction(
    hyperedges: Sequence[Sequence[int]], k: int, c, num_elements: int | None = None
) -> Instance:
    """Encode k-uniform hypergraph matching as star districting.

    Elements become vertices with p1 = 1.  Each hyperedge becomes a fresh
    vertex with p2 = k * (c - 1), adjacent to exactly its k elements.  A star
    is balanced iff it consists of a hyperedge vertex together with all k of
    its elements, so a maximum star districting selects a maximum-weight
    hypergraph matching (each selected hyperedge contributes weight c * k).
    """
    inst_c = _check_c(c)
    if k < 2:
        raise ParameterError(f"hyperedge size must be at least 2, got {k}")
    edges_norm: list[tuple[int, ...]] = []
    max_elem = -1
    for he in hyperedges:
        members = tuple(sorted(set(he)))
        if len(members) != k:
            raise ValidationError(f"hyperedge {list(he)!r} is not {k}-uniform")
        if members and members[0] < 0:
            raise ValidationError(f"hyperedge {list(he)!r} has negative element ids")
        max_elem = max(max_elem, members[-1])
        edges_norm.append(members)
    n_elem = (max_elem + 1) if num_elements is None else num_elements
    if max_elem >= n_elem:
        raise ValidationError(f"hyperedge references element {max_elem} >= num_elements {n_elem}")

    anchor_p2 = k * (inst_c.numerator - inst_c.denominator) // _den_or_raise(inst_c)
    vertices = [(i, 1, 0) for i in range(n_elem)]
    graph_edges = []
    for idx, members in enumerate(edges_norm):
        hid = n_elem + idx
        vertices.append((hid, 0, anchor_p2))
        for elem in members:
            graph_edges.append((elem, hid))

    meta = {
        "family": "hypergraph",
        "k": str(k),
        "num_elements": str(n_elem),
        "num_hyperedges": str(len(edges_norm)),
        "c": _c_str(inst_c),
    }
    return Instance(inst_c, vertices, graph_edges, meta)


# -- row/column bipartite gap family -------------------------------------------


def gen_grid_bipartite_gap(sqrt_n: int, c) -> Instance:
    """Row/column interference gadget on 3 * sqrt_n**2 vertices.

    Let s = sqrt_n and n = s*s.  There are n hub vertices r(i, j) with p2 = 1,
    indexed by a (row, column) pair but **not** wired as a grid: hub r(i, j)
    is adjacent to the s "row" vertices of group A_i and the s "column"
    vertices of group B_j, so every hub has degree exactly 2s.  Row and
    column vertices carry p1 = s * (c - 1).

    A star is balanced iff it is a row or column vertex together with its
    full hub row (resp. column), giving 2n balanced stars.  Any integral
    districting must commit to one orientation, while the canonical
    fractional solution plays both: it puts x = 1/2 on one designated star
    per row group and per column group, so every row star in the support
    meets every column star.
    """
    inst_c = _check_c(c)
    s = sqrt_n
    if s < 2:
        raise ParameterError(f"bipartite gap family needs sqrt_n >= 2, got {s}")
    n = s * s
    side_p1 = s * (inst_c.numerator - inst_c.denominator) // _den_or_raise(inst_c)

    # ids: hubs r(i,j) -> i*s + j; A_i members -> n + i*s + t; B_j -> 2n + j*s + t
    vertices = [(i * s + j, 0, 1) for i in range(s) for j in range(s)]
    edges = []
    for i in range(s):
        for t in range(s):
            a = n + i * s + t
            vertices.append((a, side_p1, 0))
            for j in range(s):
                edges.append((a, i * s + j))
    for j in range(s):
        for t in range(s):
            b = 2 * n + j * s + t
            vertices.append((b, side_p1, 0))
            for i in range(s):
                edges.append((b, i * s + j))

    meta = {"family": "bipartite-gap", "sqrt_n": str(s), "c": _c_str(inst_c)}
    return Instance(inst_c, vertices, edges, meta)


# -- adversarial input for value-greedy rounding -------------------------------


def gen_greedy_counterexample(n: int, c: int) -> Instance:
    """Instance where greedy-by-x rounding is stuck at weight c, optimum n.

    Requires integer c > 3 with c dividing n and n >= c.  One pivot vertex v
    (p1 = 1) is adjacent to a clique-free set X of c - 1 vertices (p2 = 1
    each); X is completely joined to a mass Y of n - 1 vertices holding
    (c-1) * n/c type-1 units and n/c - 1 type-2 units.  The star {v} + X is
    balanced with weight c; for each u in X the star {u} + Y is balanced with
    weight n.  The canonical fractional puts x = 1 - 1/(c-1) on {v} + X and
    x = 1/(c-1) on each {u} + Y, so sorting by x value commits to the light
    star first and blocks every heavy one.
    """
    if not isinstance(c, int) or c <= 3:
        raise ParameterError(f"counterexample family needs integer c > 3, got {c!r}")
    if n < c or n % c != 0:
        raise ParameterError(f"counterexample family needs c | n and n >= c, got n={n}, c={c}")

    vertices = [(0, 1, 0)]
    x_ids = list(range(1, c))
    for x in x_ids:
        vertices.append((x, 0, 1))
    y_start = c
    num_y1 = (c - 1) * n // c
    num_y2 = n // c - 1
    y_ids = list(range(y_start, y_start + num_y1 + num_y2))
    for i, y in enumerate(y_ids):
        vertices.append((y, 1, 0) if i < num_y1 else (y, 0, 1))

    edges = [(0, x) for x in x_ids]
    edges += [(x, y) for x in x_ids for y in y_ids]

    meta = {"family": "greedy-counterexample", "n": str(n), "c": _c_str(Fraction(c))}
    return Instance(c, vertices, edges, meta)


# -- random instances -----------------------------------------------------------


def gen_random(kind: str, n: int, max_weight: int, seed: int, c=3, p: float | None = None) -> Instance:
    """Random instance with uniform integer weights in [0, max_weight].

    Kinds:
      * ``tree``: random recursive tree (each vertex picks an earlier parent);
      * ``complete``: clique on n vertices;
      * ``grid_subgraph``: connected induced subgraph of a square grid grown
        by seeded BFS with random frontier order;
      * ``gnp``: Erdos-Renyi with edge probability p (default 0.3).

    All randomness is drawn from a PCG64 stream keyed by the seed, so equal
    arguments always produce byte-identical instances.
    """
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    if max_weight < 0:
        raise ParameterError(f"need max_weight >= 0, got {max_weight}")
    rng = rng_from(0xBA1D, seed, n)
    edges: list[tuple[int, int]] = []

    if kind == "tree":
        for v in range(1, n):
            parent = int(rng.integers(0, v))
            edges.append((parent, v))
    elif kind == "complete":
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif kind == "grid_subgraph":
        side = 1
        while side * side < 2 * n:
            side += 1
        start = (int(rng.integers(0, side)), int(rng.integers(0, side)))
        chosen = {start}
        frontier = [start]
        while len(chosen) < n:
            idx = int(rng.integers(0, len(frontier)))
            r, col = frontier.pop(idx)
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                cell = (r + dr, col + dc)
                if 0 <= cell[0] < side and 0 <= cell[1] < side and cell not in chosen:
                    chosen.add(cell)
                    frontier.append(cell)
                    if len(chosen) == n:
                        break
            if not frontier:  # grid exhausted around the start; enlarge never needed (side*side >= 2n)
                break
        cells = sorted(chosen)
        index = {cell: i for i, cell in enumerate(cells)}
        for (r, col) in cells:
            for dr, dc in ((1, 0), (0, 1)):
                other = (r + dr, col + dc)
                if other in index:
                    edges.append((index[(r, col)], index[other]))
    elif kind == "gnp":
        prob = 0.3 if p is None else p
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < prob:
                    edges.append((u, v))
    else:
        raise ParameterError(f"unknown random kind {kind!r}")

    weights = rng.integers(0, max_weight + 1, size=(n, 2))
    vertices = [(v, int(weights[v][0]), int(weights[v][1])) for v in range(n)]

    meta = {
        "family": f"random-{kind}",
        "n": str(len(vertices)),
        "max_weight": str(max_weight),
        "seed": str(seed),
        "c": _c_str(_check_c(c)),
    }
    return Instance(c, vertices, edges, meta)


# -- canonical fractional solutions ---------------------------------------------


def canonical_fractional(instance: Instance):
    """Rebuild the family's closed-form fractional star solution.

    Returns a :class:`baldist.lp.FractionalStarSolution` whose x values are
    exact fractions.  Raises :class:`ParameterError` for instances that do not
    come from a structured family with a known solution.
    """
    from .lp import FractionalStarSolution  # deferred: avoids import cycle at package load

    family = instance.metadata.get("family", "")
    c = instance.c
    pairs: list[tuple[District, Fraction]]

    if family == "square-grid":
        side = int(instance.metadata["side"])
        anchors = _pendant_anchor_map(instance, side * side)
        pairs = []
        for center, anchor in anchors.items():
            members = [center, anchor] + [u for u in instance.adjacency[center] if u != anchor]
            pairs.append((District(members, center=center), Fraction(1, 5)))
    elif family == "triangular-grid":
        side = int(instance.metadata["side"])
        first_anchor = (side + 1) * (side + 2) // 2
        anchors = _pendant_anchor_map(instance, first_anchor)
        pairs = []
        for center, anchor in anchors.items():
            members = [center, anchor] + [u for u in instance.adjacency[center] if u != anchor]
            pairs.append((District(members, center=center), Fraction(1, 7)))
    elif family == "bipartite-gap":
        # One designated star per row group and per column group at x = 1/2.
        # Spreading x = 1/(2s) over all 2s^2 stars has the same value, but
        # stars sharing an orientation overlap on their full hub line, which
        # inflates the correlation; the sparse optimum leaves exactly the
        # row-meets-column overlaps and hence the family's nominal gap.
        s = int(instance.metadata["sqrt_n"])
        n = s * s
        pairs = []
        for i in range(s):
            hubs = [i * s + j for j in range(s)]
            a = n + i * s
            pairs.append((District([a] + hubs, center=a), Fraction(1, 2)))
        for j in range(s):
            hubs = [i * s + j for i in range(s)]
            b = 2 * n + j * s
            pairs.append((District([b] + hubs, center=b), Fraction(1, 2)))
    elif family == "greedy-counterexample":
        n = int(instance.metadata["n"])
        ci = c.numerator // c.denominator
        x_ids = list(range(1, ci))
        y_ids = list(range(ci, ci + n - 1))
        pairs = [(District([0] + x_ids, center=0), 1 - Fraction(1, ci - 1))]
        for u in x_ids:
            pairs.append((District([u] + y_ids, center=u), Fraction(1, ci - 1)))
    else:
        raise ParameterError(f"no canonical fractional solution for family {family!r}")

    lp_value = sum(x * d.weight(instance) for d, x in pairs)
    return FractionalStarSolution(
        primal=tuple(pairs),
        dual={},
        lp_value=float(lp_value),
        certificate="primal_feasible",
    )


def _pendant_anchor_map(instance: Instance, first_anchor_id: int) -> dict[int, int]:
    """Map interior center -> its pendant anchor (ids >= first_anchor_id)."""
    out: dict[int, int] = {}
    for vid in instance.ids:
        if vid >= first_anchor_id:
            (center,) = instance.adjacency[vid]
            out[center] = vid
    return out


# -- small shared helpers --------------------------------------------------------


def _check_c(c) -> Fraction:
    probe = Instance(c, [(0, 1, 1)])
    return probe.c


def _den_or_raise(c: Fraction) -> int:
    """Gadget populations must stay integral, which pins (c-1) to an integer."""
    if (c.numerator - c.denominator) % c.denominator != 0:
        raise ParameterError(
            f"gadget families need an integer balance factor, got {c}")
    return c.denominator


def _c_str(c: Fraction) -> str:
    return str(int(c)) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
