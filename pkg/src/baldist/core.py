"""Core data model for balanced districting problems.

A problem instance is an undirected graph whose vertices carry two
non-negative integer weights (two "population" counts).  A *district* is a
set of vertices; it is *c-balanced* when the smaller of its two population
totals, scaled by the balance factor ``c``, still covers the district's
total weight:

    min(p1(T), p2(T)) * c >= p1(T) + p2(T)

with the convention that a district of total weight zero is never balanced.
A *districting* is a collection of pairwise-disjoint districts; its value is
the total weight of the vertices it covers.

Everything in this module is exact: weights are Python integers, the balance
factor is a :class:`fractions.Fraction`, and the balance test cross-multiplies
so no floating point is involved.  All containers are immutable after
construction, so instances can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "ValidationError",
    "ParameterError",
    "Instance",
    "District",
    "Districting",
    "ValidationIssue",
    "ValidationReport",
    "is_c_balanced",
    "validate_districting",
    "districting_weight",
    "find_star_center",
    "canonical_json",
]


class ValidationError(ValueError):
    """Raised when input data (files, instances, districtings) is malformed."""


class ParameterError(ValueError):
    """Raised when parameters are structurally valid but infeasible."""


def _as_fraction(c) -> Fraction:
    """Normalise a balance factor given as int, Fraction, or (num, den) pair."""
    if isinstance(c, Fraction):
        frac = c
    elif isinstance(c, int):
        frac = Fraction(c)
    elif isinstance(c, (tuple, list)) and len(c) == 2:
        num, den = c
        if not (isinstance(num, int) and isinstance(den, int)):
            raise ValidationError(f"balance factor pair must be integers, got {c!r}")
        if den <= 0:
            raise ValidationError(f"balance factor denominator must be positive, got {c!r}")
        frac = Fraction(num, den)
    else:
        raise ValidationError(f"balance factor must be an int, Fraction, or [num, den] pair, got {c!r}")
    if frac < 2:
        raise ParameterError(f"balance factor must be at least 2, got {frac}")
    return frac


class Instance:
    """An immutable vertex-weighted graph with a rational balance factor.

    Parameters
    ----------
    c:
        Balance factor; an ``int``, :class:`Fraction`, or ``(num, den)`` pair.
        Must be at least 2.
    vertices:
        Iterable of ``(id, p1, p2)`` triples.  Ids are non-negative integers,
        weights are non-negative integers.
    edges:
        Iterable of ``(u, v)`` pairs over known vertex ids.  Self-loops and
        duplicate edges are rejected.
    metadata:
        Optional string-to-string mapping recording provenance (generator
        name, seed, family parameters).
    """

    __slots__ = ("c", "p1", "p2", "ids", "edges", "adjacency", "metadata", "_w")

    def __init__(
        self,
        c,
        vertices: Iterable[tuple[int, int, int]],
        edges: Iterable[tuple[int, int]] = (),
        metadata: Mapping[str, str] | None = None,
    ) -> None:
        self.c: Fraction = _as_fraction(c)

        p1: dict[int, int] = {}
        p2: dict[int, int] = {}
        for entry in vertices:
            try:
                vid, w1, w2 = entry
            except (TypeError, ValueError):
                raise ValidationError(f"vertex entry must be an (id, p1, p2) triple, got {entry!r}")
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in (vid, w1, w2)):
                raise ValidationError(f"vertex fields must be integers, got {entry!r}")
            if vid < 0:
                raise ValidationError(f"vertex id must be non-negative, got {vid}")
            if w1 < 0 or w2 < 0:
                raise ValidationError(f"vertex weights must be non-negative, got {entry!r}")
            if vid in p1:
                raise ValidationError(f"duplicate vertex id {vid}")
            p1[vid] = w1
            p2[vid] = w2

        ids = tuple(sorted(p1))
        adjacency: dict[int, set[int]] = {vid: set() for vid in ids}
        canon: set[tuple[int, int]] = set()
        for entry in edges:
            try:
                u, v = entry
            except (TypeError, ValueError):
                raise ValidationError(f"edge entry must be a (u, v) pair, got {entry!r}")
            if u not in adjacency or v not in adjacency:
                raise ValidationError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise ValidationError(f"self-loop on vertex {u}")
            key = (u, v) if u < v else (v, u)
            if key in canon:
                raise ValidationError(f"duplicate edge ({key[0]}, {key[1]})")
            canon.add(key)
            adjacency[u].add(v)
            adjacency[v].add(u)

        self.p1: dict[int, int] = p1
        self.p2: dict[int, int] = p2
        self.ids: tuple[int, ...] = ids
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(canon))
        self.adjacency: dict[int, tuple[int, ...]] = {
            vid: tuple(sorted(nbrs)) for vid, nbrs in adjacency.items()
        }
        meta = dict(metadata or {})
        for k, v in meta.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise ValidationError(f"metadata must map strings to strings, got {k!r}: {v!r}")
        self.metadata: dict[str, str] = meta
        self._w: dict[int, int] = {vid: p1[vid] + p2[vid] for vid in ids}

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    def weight(self, vid: int) -> int:
        """Total weight p1 + p2 of a single vertex."""
        return self._w[vid]

    def total_weight(self) -> int:
        """Total weight of the whole graph."""
        return sum(self._w.values())

    def neighbors(self, vid: int) -> tuple[int, ...]:
        return self.adjacency[vid]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.p1 and u in self.p1 and v in set(self.adjacency[u])

    def degree(self, vid: int) -> int:
        return len(self.adjacency[vid])

    def max_degree(self) -> int:
        return max((len(nbrs) for nbrs in self.adjacency.values()), default=0)

    def subgraph(self, keep: Iterable[int]) -> "Instance":
        """Induced subgraph on ``keep``, preserving c and metadata."""
        keep_set = set(keep)
        unknown = keep_set - set(self.ids)
        if unknown:
            raise ValidationError(f"subgraph references unknown vertices {sorted(unknown)}")
        verts = [(v, self.p1[v], self.p2[v]) for v in sorted(keep_set)]
        edges = [(u, v) for (u, v) in self.edges if u in keep_set and v in keep_set]
        return Instance(self.c, verts, edges, self.metadata)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        c = self.c
        c_json = int(c) if c.denominator == 1 else [c.numerator, c.denominator]
        return {
            "c": c_json,
            "vertices": [
                {"id": vid, "p1": self.p1[vid], "p2": self.p2[vid]} for vid in self.ids
            ],
            "edges": [[u, v] for (u, v) in self.edges],
            "metadata": dict(sorted(self.metadata.items())),
        }

    def dumps(self) -> str:
        return canonical_json(self.to_dict())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        if not isinstance(data, dict):
            raise ValidationError(f"instance document must be an object, got {type(data).__name__}")
        missing = {"c", "vertices", "edges"} - set(data)
        if missing:
            raise ValidationError(f"instance document is missing keys {sorted(missing)}")
        raw_vertices = data["vertices"]
        if not isinstance(raw_vertices, list):
            raise ValidationError("'vertices' must be a list")
        vertices = []
        for item in raw_vertices:
            if not isinstance(item, dict) or {"id", "p1", "p2"} - set(item):
                raise ValidationError(f"vertex entry must have id/p1/p2 fields, got {item!r}")
            vertices.append((item["id"], item["p1"], item["p2"]))
        raw_edges = data["edges"]
        if not isinstance(raw_edges, list):
            raise ValidationError("'edges' must be a list")
        edges = []
        for item in raw_edges:
            if not isinstance(item, list) or len(item) != 2:
                raise ValidationError(f"edge entry must be a [u, v] pair, got {item!r}")
            edges.append((item[0], item[1]))
        c = data["c"]
        if isinstance(c, list):
            c = tuple(c)
        return cls(c, vertices, edges, data.get("metadata") or {})

    @classmethod
    def loads(cls, text: str) -> "Instance":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Instance(c={self.c}, n={self.n}, m={len(self.edges)})"


@dataclass(frozen=True)
class District:
    """A set of vertices, optionally annotated with a hub ("center") vertex.

    When ``center`` is set, the district claims star shape: every other
    member is adjacent to the center.  The claim is checked by
    :func:`validate_districting`, not by the constructor.
    """

    vertices: frozenset[int]
    center: int | None = None

    def __init__(self, vertices: Iterable[int], center: int | None = None) -> None:
        object.__setattr__(self, "vertices", frozenset(vertices))
        object.__setattr__(self, "center", center)

    def sorted_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.vertices))

    def rank(self) -> int:
        """Number of member vertices."""
        return len(self.vertices)

    def weight(self, instance: Instance) -> int:
        return sum(instance.weight(v) for v in self.vertices)

    def population(self, instance: Instance) -> tuple[int, int]:
        p1 = sum(instance.p1[v] for v in self.vertices)
        p2 = sum(instance.p2[v] for v in self.vertices)
        return p1, p2

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.vertices))

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, vid: int) -> bool:
        return vid in self.vertices


@dataclass(frozen=True)
class Districting:
    """An ordered collection of districts plus provenance fields.

    ``solver`` names the algorithm that produced it and ``params`` records the
    deterministic knobs (seed, epsilon, ...) needed to reproduce it.  The
    on-disk form keeps only sorted vertex lists, so two districtings that
    cover the same sets serialize identically regardless of construction
    order.
    """

    districts: tuple[District, ...]
    solver: str = "unknown"
    params: dict = field(default_factory=dict)

    def __init__(self, districts: Iterable[District | Iterable[int]],
                 solver: str = "unknown", params: dict | None = None) -> None:
        norm: list[District] = []
        for d in districts:
            norm.append(d if isinstance(d, District) else District(d))
        norm.sort(key=lambda d: d.sorted_vertices())
        object.__setattr__(self, "districts", tuple(norm))
        object.__setattr__(self, "solver", solver)
        object.__setattr__(self, "params", dict(params or {}))

    def weight(self, instance: Instance) -> int:
        return districting_weight(instance, self)

    def covered(self) -> frozenset[int]:
        out: set[int] = set()
        for d in self.districts:
            out |= d.vertices
        return frozenset(out)

    def to_dict(self, instance: Instance) -> dict:
        return {
            "districts": [list(d.sorted_vertices()) for d in self.districts],
            "weight": districting_weight(instance, self),
            "solver": self.solver,
            "params": self.params,
        }

    def dumps(self, instance: Instance) -> str:
        return canonical_json(self.to_dict(instance))

    def save(self, path, instance: Instance) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps(instance))

    @classmethod
    def from_dict(cls, data: dict) -> "Districting":
        if not isinstance(data, dict) or "districts" not in data:
            raise ValidationError("districting document must be an object with a 'districts' key")
        raw = data["districts"]
        if not isinstance(raw, list) or any(not isinstance(d, list) for d in raw):
            raise ValidationError("'districts' must be a list of vertex-id lists")
        return cls(
            [District(d) for d in raw],
            solver=data.get("solver", "unknown"),
            params=data.get("params") or {},
        )

    @classmethod
    def loads(cls, text: str) -> "Districting":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Districting":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def __iter__(self) -> Iterator[District]:
        return iter(self.districts)

    def __len__(self) -> int:
        return len(self.districts)


# -- predicates and validation ----------------------------------------------


def is_c_balanced(instance: Instance, district: District | Iterable[int]) -> bool:
    """Exact balance test: min(p1, p2) * c >= p1 + p2, and weight >= 1.

    Cross-multiplies against c = num/den so only integer arithmetic is used.
    An empty or zero-weight district is never balanced.
    """
    ids = district.vertices if isinstance(district, District) else district
    s1 = 0
    s2 = 0
    p1 = instance.p1
    p2 = instance.p2
    for v in ids:
        s1 += p1[v]
        s2 += p2[v]
    total = s1 + s2
    if total <= 0:
        return False
    c = instance.c
    return min(s1, s2) * c.numerator >= total * c.denominator


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    district_index: int | None
    message: str

    def __str__(self) -> str:
        where = "" if self.district_index is None else f"district {self.district_index}: "
        return f"[{self.kind}] {where}{self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(str(issue) for issue in self.issues)


def _connected(instance: Instance, ids: frozenset[int]) -> bool:
    if not ids:
        return True
    start = next(iter(ids))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in instance.adjacency[v]:
            if u in ids and u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(ids)


def find_star_center(instance: Instance, ids: Iterable[int]) -> int | None:
    """Smallest member adjacent to every other member, or None.

    A singleton district is a star centered at its only member.
    """
    members = sorted(set(ids))
    if not members:
        return None
    if len(members) == 1:
        return members[0]
    member_set = set(members)
    for v in members:
        if member_set - {v} <= set(instance.adjacency[v]):
            return v
    return None


def validate_districting(
    instance: Instance,
    districting: Districting,
    require_star: bool = False,
    max_rank: int | None = None,
) -> ValidationReport:
    """Check a districting against an instance.

    Verifies, in order: every vertex id is known; districts are non-empty and
    pairwise disjoint; each district is connected; each district is
    c-balanced; optionally each district is a star (its ``center`` claim, if
    present, is honoured) and has rank at most ``max_rank``.  Returns a report
    listing every violation found rather than stopping at the first.
    """
    issues: list[ValidationIssue] = []
    known = set(instance.ids)
    seen: dict[int, int] = {}

    for idx, district in enumerate(districting.districts):
        ids = district.vertices
        unknown = ids - known
        if unknown:
            issues.append(ValidationIssue(
                "unknown-vertex", idx,
                f"unknown vertex ids {sorted(unknown)}"))
            continue
        if not ids:
            issues.append(ValidationIssue("empty", idx, "district has no vertices"))
            continue
        for v in sorted(ids):
            if v in seen:
                issues.append(ValidationIssue(
                    "overlap", idx,
                    f"vertex {v} already used by district {seen[v]}"))
            else:
                seen[v] = idx
        if not _connected(instance, ids):
            issues.append(ValidationIssue(
                "disconnected", idx,
                f"vertices {sorted(ids)} do not induce a connected subgraph"))
        if not is_c_balanced(instance, district):
            s1 = sum(instance.p1[v] for v in ids)
            s2 = sum(instance.p2[v] for v in ids)
            issues.append(ValidationIssue(
                "imbalance", idx,
                f"population split ({s1}, {s2}) fails min*c >= total with c={instance.c}"))
        if require_star:
            if district.center is not None:
                others = ids - {district.center}
                if district.center not in ids:
                    issues.append(ValidationIssue(
                        "non-star", idx,
                        f"claimed center {district.center} is not a member"))
                elif not others <= set(instance.adjacency.get(district.center, ())):
                    issues.append(ValidationIssue(
                        "non-star", idx,
                        f"claimed center {district.center} is not adjacent to all members"))
            elif find_star_center(instance, ids) is None:
                issues.append(ValidationIssue(
                    "non-star", idx,
                    f"no member of {sorted(ids)} is adjacent to all others"))
        if max_rank is not None and len(ids) > max_rank:
            issues.append(ValidationIssue(
                "rank", idx,
                f"district has {len(ids)} vertices, cap is {max_rank}"))

    return ValidationReport(tuple(issues))


def districting_weight(instance: Instance, districting: Districting) -> int:
    """Total weight covered by a districting (assumed valid, so no overlaps)."""
    return sum(d.weight(instance) for d in districting.districts)


# -- canonical serialization -------------------------------------------------


def canonical_json(data) -> str:
    """Serialize to the canonical on-disk form: sorted keys, two-space
    indent, trailing newline.  Byte-identical output for equal inputs."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
