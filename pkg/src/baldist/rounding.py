"""Randomized rounding of fractional star packings, with diagnostics.

A fractional solution assigns each supported district a value x in [0, 1]
with per-vertex loads at most 1.  Rounding scales acceptance down by a
factor tau and keeps a district with probability x/tau unless it collides
with one already kept; scanning tau over a geometric grid and taking the
best draw recovers a constant fraction of the fractional value whenever the
overlap correlation is small relative to the total mass.

The diagnostics quantify that overlap: ``correlation`` is the sum of
x_A * x_B over unordered pairs of overlapping supported districts, and the
ratio correlation / sum_x is the quantity whose growth forces tau (and hence
the rounding loss) up.  Exact fractions are preserved end to end when the
input x values are fractions, so structured families with closed-form
solutions can be checked for exact equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import District, Districting, Instance, ParameterError, validate_districting
from .lp import FractionalStarSolution
from .util import parallel_map, rng_from

__all__ = [
    "RoundingDiagnostics",
    "round_once",
    "round_with_tau_scan",
    "greedy_round_by_x",
    "correlation_report",
    "gap_experiment",
]

# correlation_report refuses supports that would generate more overlapping
# pairs than this; the computation is quadratic in the worst case.
_PAIR_CAP = 5_000_000


@dataclass(frozen=True)
class RoundingDiagnostics:
    """Overlap diagnostics of a fractional solution.

    ``thresholded_ratios`` lists, for each distinct support value delta, the
    correlation-to-mass ratio restricted to districts with x >= delta;
    ``tau_used`` is the scale factor of the rounding run that produced the
    accompanying districting (1.0 for a bare report).
    """

    sum_x: object
    correlation: object
    thresholded_ratios: tuple
    tau_used: float = 1.0

    @property
    def ratio(self):
        if not self.sum_x:
            return 0 * self.sum_x if isinstance(self.sum_x, Fraction) else 0.0
        return self.correlation / self.sum_x


def _support_order(instance: Instance, fractional: FractionalStarSolution
                   ) -> list[tuple[District, object]]:
    """Supported districts heaviest first, ties by vertex set."""
    entries = [(d, x) for d, x in fractional.primal if x > 0]
    entries.sort(key=lambda pair: (-pair[0].weight(instance),
                                   pair[0].sorted_vertices()))
    return entries


def round_once(instance: Instance, fractional: FractionalStarSolution,
               tau: float, seed) -> Districting:
    """One rounding draw: keep each district w.p. x/tau unless it collides.

    Districts are visited heaviest first (ties by vertex set); each draws an
    acceptance coin regardless of collisions, so the acceptance events stay
    independent across districts.  ``seed`` may be an int or a tuple of ints
    and fully determines the draw.
    """
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    rng = rng_from(*seed) if isinstance(seed, tuple) else rng_from(seed)
    kept: list[District] = []
    used: set[int] = set()
    for district, x in _support_order(instance, fractional):
        accept = rng.random() < float(x) / tau
        if accept and used.isdisjoint(district.vertices):
            kept.append(district)
            used.update(district.vertices)
    return Districting(kept, solver="round-once",
                       params={"tau": tau, "seed": list(seed) if isinstance(seed, tuple) else seed})


def greedy_round_by_x(instance: Instance, fractional: FractionalStarSolution) -> Districting:
    """Deterministic rounding: largest x first, keep when disjoint.

    Ties break by weight (heavier first) and then vertex set.  This is the
    natural derandomization—and it can be arbitrarily bad: an instance
    family in the generators pins its failure as a regression test.
    """
    entries = [(d, x) for d, x in fractional.primal if x > 0]
    entries.sort(key=lambda pair: (-float(pair[1]),
                                   -pair[0].weight(instance),
                                   pair[0].sorted_vertices()))
    kept: list[District] = []
    used: set[int] = set()
    for district, _ in entries:
        if used.isdisjoint(district.vertices):
            kept.append(district)
            used.update(district.vertices)
    return Districting(kept, solver="greedy-round-by-x", params={})


def round_with_tau_scan(instance: Instance, fractional: FractionalStarSolution,
                        epsilon: float, trials: int, seed: int,
                        threads: int = 1) -> tuple[Districting, RoundingDiagnostics]:
    """Best districting over a geometric tau grid with `trials` draws each.

    tau = (1+epsilon)^k for k = 0..ceil(log_{1+epsilon} n), n the instance
    size (a scale factor above sqrt(n) never helps, so scanning to n is cheap
    insurance); every (k, trial) pair derives an independent seed, so draws
    can run in parallel while the argmax reduction stays deterministic
    (first (k, trial) in scan order wins ties).  The winner is re-validated
    as a disjoint star districting before being returned.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    k_max = math.ceil(math.log(max(instance.n, 2)) / math.log(1.0 + epsilon))
    tasks = [(k, trial) for k in range(k_max + 1) for trial in range(trials)]

    def one(task: tuple[int, int]) -> Districting:
        k, trial = task
        return round_once(instance, fractional, (1.0 + epsilon) ** k,
                          (seed, k, trial))

    draws = parallel_map(one, tasks, threads=threads)
    best: Districting | None = None
    best_weight = -1
    best_tau = 1.0
    for task, districting in zip(tasks, draws):
        w = districting.weight(instance)
        if w > best_weight:
            best, best_weight = districting, w
            best_tau = (1.0 + epsilon) ** task[0]
    report = validate_districting(instance, best, require_star=True)
    if not report.ok:
        raise AssertionError(f"rounded districting failed validation:\n{report.summary()}")
    base = correlation_report(fractional)
    diagnostics = RoundingDiagnostics(
        sum_x=base.sum_x, correlation=base.correlation,
        thresholded_ratios=base.thresholded_ratios, tau_used=best_tau)
    best = Districting(best.districts, solver="lp-star-round",
                       params={"epsilon": epsilon, "trials": trials, "seed": seed,
                               "tau": best_tau})
    return best, diagnostics


def correlation_report(fractional: FractionalStarSolution) -> RoundingDiagnostics:
    """Total mass, overlapping-pair correlation, and thresholded ratios.

    Overlapping pairs are found through an inverted vertex-to-district index
    and counted once per unordered pair regardless of how many vertices they
    share.  Arithmetic stays exact when every x is a Fraction.  Refuses
    supports whose candidate pair count exceeds the configured cap, and
    asserts the universal bound correlation <= sqrt(n) * sum_x (n = number of
    supported vertices) on every run.
    """
    entries = [(d, x) for d, x in fractional.primal if x > 0]
    exact = all(isinstance(x, (Fraction, int)) for _, x in entries)

    index: dict[int, list[int]] = {}
    for i, (d, _) in enumerate(entries):
        for v in sorted(d.vertices):
            index.setdefault(v, []).append(i)
    candidate_pairs = sum(len(ids) * (len(ids) - 1) // 2 for ids in index.values())
    if candidate_pairs > _PAIR_CAP:
        raise ParameterError(
            f"support generates up to {candidate_pairs} overlapping pairs, "
            f"cap is {_PAIR_CAP}")
    pairs: set[tuple[int, int]] = set()
    for v in sorted(index):
        ids = index[v]
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                pairs.add((ids[a], ids[b]))

    def total(values):
        return sum(values) if exact else math.fsum(values)

    sum_x = total(x for _, x in entries)
    correlation = total(entries[a][1] * entries[b][1] for a, b in sorted(pairs))

    thresholds = sorted({x for _, x in entries}, reverse=True)
    ratios = []
    for delta in thresholds:
        live = {i for i, (_, x) in enumerate(entries) if x >= delta}
        mass = total(entries[i][1] for i in sorted(live))
        corr = total(entries[a][1] * entries[b][1]
                     for a, b in sorted(pairs) if a in live and b in live)
        ratios.append((delta, corr / mass if mass else 0))

    support_n = len(index)
    cap = math.sqrt(max(support_n, 1)) * float(sum_x)
    assert float(correlation) <= cap * (1 + 1e-12) + 1e-12, (
        f"correlation {correlation} exceeds sqrt(n)*sum_x = {cap}")
    return RoundingDiagnostics(sum_x=sum_x, correlation=correlation,
                               thresholded_ratios=tuple(ratios), tau_used=1.0)


def gap_experiment(family: str, sides: Sequence[int], c=3) -> list[dict]:
    """Rounding-gap table rows for one structured instance family.

    Each row reports the instance size, the canonical fractional mass, the
    overlapping-pair correlation, and their ratio, which is the empirical
    lower bound on the scale factor tau that rounding must pay.
    """
    from .instances import (
        canonical_fractional,
        gen_grid_bipartite_gap,
        gen_square_grid,
        gen_triangular_grid,
    )

    builders = {
        "square": gen_square_grid,
        "triangular": gen_triangular_grid,
        "bipartite": gen_grid_bipartite_gap,
    }
    if family not in builders:
        raise ParameterError(
            f"unknown family {family!r}; expected one of {sorted(builders)}")
    rows = []
    for side in sides:
        instance = builders[family](side, c)
        report = correlation_report(canonical_fractional(instance))
        rows.append({
            "side": side,
            "n": instance.n,
            "sum_x": float(report.sum_x),
            "correlation": float(report.correlation),
            "ratio": float(report.ratio),
        })
    return rows
