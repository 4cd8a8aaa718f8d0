"""Fractional star-districting LP solver via lazy multiplicative weights.

The packing LP places a variable per balanced star (load at most 1 per
vertex, maximize covered weight) and has exponentially many variables, so we
solve the dual with a multiplicative-weights scheme driven by a separation
oracle:

* :func:`separation_oracle` — for each candidate center, a trimmed
  subset-sum sweep over its neighborhood tracks (p1, p2, dual-load) triples;
  a kept triple whose exact recomputed load falls below the weak-violation
  threshold yields a violating star.  The trimming keeps the oracle
  polynomial while guaranteeing that a strongly violating star always leaves
  a weakly violating representative in the lists.

* :func:`whack_phase_step` — one batched dual update: the multiplier for a
  violating star is applied a closed-form number of times at once (until the
  constraint is met, the round budget runs out, or the dual sum overflows the
  phase cap), which is what keeps the round count polynomial even though the
  nominal round budget scales with the guessed objective value.

* :func:`solve_star_lp` — guesses the objective value on a geometric grid,
  runs the scheme per guess to either a feasible primal (round budget
  exhausted) or a feasible dual (no violation found), and bisects to an
  adjacent guess pair.  The returned primal and dual are both feasible for
  the true LP, so their values sandwich the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from .core import (
    District,
    Instance,
    ParameterError,
    ValidationError,
    canonical_json,
    find_star_center,
)
from .exact import enumerate_balanced_stars
from .fptas import Stamp, balance_functionals, trim
from .util import parallel_map

__all__ = [
    "DualState",
    "FractionalStarSolution",
    "separation_oracle",
    "whack_phase_step",
    "solve_star_lp",
]

# Exhaustive fallback for ambiguous oracle outcomes is allowed up to this many
# enumerated candidate star subsets (sum over vertices of 2**degree).
_EXACT_FALLBACK_BUDGET = 2_000_000


@dataclass
class DualState:
    """Mutable state of one multiplicative-weights run at a fixed guess mu."""

    y: dict[int, float]
    mu: float
    epsilon: float
    T: int
    weights: dict[int, int]
    rounds_used: int = 0
    phase_count: int = 0
    whack_count: int = 0
    oracle_calls: int = 0
    clamp_count: int = 0
    max_whacks_in_phase: int = 0
    x_counts: dict[frozenset, int] = field(default_factory=dict)
    chosen: dict[frozenset, District] = field(default_factory=dict)
    _phase_whacks: int = 0

    @classmethod
    def fresh(cls, instance: Instance, mu: float, epsilon: float) -> "DualState":
        n = max(instance.n, 2)
        T = math.ceil(mu * math.log(n) / (epsilon * epsilon))
        y = {v: 1.0 / instance.n for v in instance.ids}
        weights = {v: instance.weight(v) for v in instance.ids}
        return cls(y=y, mu=mu, epsilon=epsilon, T=T, weights=weights)

    def dual_floor(self) -> float:
        n = max(len(self.y), 2)
        return n ** -(1.0 + 1.0 / self.epsilon)

    def normalized(self) -> dict[int, float]:
        total = math.fsum(self.y.values())
        return {v: yv / total for v, yv in self.y.items()}


@dataclass
class FractionalStarSolution:
    """A fractional star packing plus its dual certificate.

    ``primal`` pairs each supported district with its (unweighted) selection
    value x in [0, 1]; exact fractions are preserved when the producer used
    them.  Per-vertex load may not exceed 1 beyond float dust.
    """

    primal: tuple
    dual: dict[int, float]
    lp_value: float
    certificate: str
    stats: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.primal = tuple((d, x) for d, x in self.primal)
        loads: dict[int, object] = {}
        for district, x in self.primal:
            if x < 0:
                raise ValidationError("negative primal value")
            for v in district.vertices:
                loads[v] = loads.get(v, 0) + x
        for v, load in loads.items():
            if load > 1 + 1e-9:
                raise ValidationError(f"vertex {v} has fractional load {load} > 1")

    def support_weight(self, instance: Instance) -> float:
        return math.fsum(float(x) * d.weight(instance) for d, x in self.primal)

    def to_dict(self) -> dict:
        return {
            "lp_value": self.lp_value,
            "primal": [{"district": list(d.sorted_vertices()), "x": float(x)}
                       for d, x in self.primal],
            "dual": {str(v): yv for v, yv in sorted(self.dual.items())},
        }

    def dumps(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "FractionalStarSolution":
        if not isinstance(data, dict) or "primal" not in data:
            raise ValidationError("fractional document must be an object with a 'primal' key")
        primal = tuple((District(entry["district"]), float(entry["x"]))
                       for entry in data["primal"])
        dual = {int(v): float(yv) for v, yv in (data.get("dual") or {}).items()}
        return cls(primal=primal, dual=dual,
                   lp_value=float(data.get("lp_value", 0.0)),
                   certificate="unverified")


def _check_lp_epsilon(instance: Instance, epsilon: float) -> None:
    c = float(instance.c)
    bound = (c - 2.0) / c
    if not (0.0 < epsilon and epsilon < bound):
        raise ParameterError(
            f"epsilon must lie in (0, (c-2)/c) = (0, {bound:.4g}) at c={instance.c}, "
            f"got {epsilon}")


# -- separation oracle -------------------------------------------------------------


def _cons_members(cell) -> tuple[int, ...]:
    out = []
    while cell is not None:
        out.append(cell[0])
        cell = cell[1]
    return tuple(sorted(out))


def _center_sweep(instance: Instance, y: Mapping[int, float], center: int,
                  mu: float, epsilon: float, ell1, ell2
                  ) -> list[tuple[int, tuple[int, ...], int]]:
    """Candidate (weight, members, center) triples from one center's DP.

    Runs the trimmed subset-sum sweep over the center's neighborhood with the
    center forced in, tracking the running dual load as a third coordinate so
    that entries with far-apart loads are never merged.  Returned candidates
    are exactly balanced and pass the weak-violation test up to accumulation
    dust; the caller re-checks violation with exact sums.
    """
    neighbors = sorted(instance.adjacency[center])
    step = epsilon / (10.0 * max(len(neighbors), 1))
    p1, p2 = instance.p1, instance.p2
    base = Stamp(p1[center], p2[center], y[center], (center, None))
    l1, l2 = [base], [base]
    for u in neighbors:
        p1u, p2u, yu = p1[u], p2[u], y[u]
        l1 = trim(l1 + [Stamp(s[0] + p1u, s[1] + p2u, s[2] + yu, (u, s[3]))
                        for s in l1], ell1, step)
        l2 = trim(l2 + [Stamp(s[0] + p1u, s[1] + p2u, s[2] + yu, (u, s[3]))
                        for s in l2], ell2, step)
    weak_coef = (1.0 - epsilon / 2) / mu * (1.0 + 1e-9)
    out = []
    for s in l1 + l2:
        w = s[0] + s[1]
        if w >= 1 and s[2] < weak_coef * w and ell1(s) >= 0 and ell2(s) >= 0:
            out.append((w, _cons_members(s[3]), center))
    return out


def _exact_fallback_affordable(instance: Instance) -> bool:
    total = 0
    for v in instance.ids:
        total += 1 << min(len(instance.adjacency[v]), 40)
        if total > _EXACT_FALLBACK_BUDGET:
            return False
    return True


@lru_cache(maxsize=64)
def _star_catalog(instance: Instance) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """All balanced stars as (weight, sorted members), enumerated once."""
    return tuple((d.weight(instance), d.sorted_vertices())
                 for d in enumerate_balanced_stars(instance))


def _strong_violators(instance: Instance, y: Mapping[int, float], mu: float,
                      epsilon: float) -> list[tuple[int, tuple[int, ...]]]:
    """Exact strong-violation scan over the cached star catalog."""
    out = []
    for w, members in _star_catalog(instance):
        if math.fsum(y[u] for u in members) < (1.0 - epsilon) * (w / mu):
            out.append((w, members))
    return out


def _greedy_packing_weight(instance: Instance) -> int:
    """Weight of a greedy disjoint star packing: a certified LP lower bound."""
    taken: set[int] = set()
    total = 0
    for w, members in sorted(_star_catalog(instance), key=lambda t: (-t[0], t[1])):
        if taken.isdisjoint(members):
            taken.update(members)
            total += w
    return total


def separation_oracle(instance: Instance, y: Mapping[int, float], mu: float,
                      epsilon: float, threads: int = 1) -> District | None:
    """Find a weakly violating balanced star, or certify none is strong.

    Returns a district S with fsum(y over S) < (1 - eps/2) * w(S)/mu and
    weight at least half the heaviest strongly violating star, or ``None``
    when no star violates strongly.  Candidates come from per-center trimmed
    sweeps; the winner is re-verified with exact sums.  When the sweeps
    surface only weak (not strong) violations, the answer is ambiguous at
    trimming precision, so small instances fall back to exhaustive
    enumeration — this makes ``None`` exactly equivalent to "no strong
    violator" at test scale.
    """
    _check_lp_epsilon(instance, epsilon)
    if set(y) != set(instance.ids):
        raise ParameterError("dual map must cover exactly the instance's vertex ids")
    ell1, ell2 = balance_functionals(instance.c)

    chunks = parallel_map(
        lambda center: _center_sweep(instance, y, center, mu, epsilon, ell1, ell2),
        list(instance.ids), threads=threads)

    best: tuple[int, tuple[int, ...], int] | None = None
    for chunk in chunks:
        for w, members, center in chunk:
            load = math.fsum(y[u] for u in members)
            if load < (1.0 - epsilon / 2) * (w / mu):
                if best is None or w > best[0] or (w == best[0] and members < best[1]):
                    best = (w, members, center)

    if best is None:
        return None
    load = math.fsum(y[u] for u in best[1])
    if load < (1.0 - epsilon) * (best[0] / mu):
        return District(best[1], center=best[2])
    # Weak-only violation: trimming cannot tell whether a strong violator
    # exists, so settle it exactly when affordable.
    if _exact_fallback_affordable(instance):
        strong = _strong_violators(instance, y, mu, epsilon)
        if not strong:
            return None
        w, members = min(strong, key=lambda t: (-t[0], t[1]))
        return District(members, center=find_star_center(instance, members))
    return District(best[1], center=best[2])


# -- batched dual updates ------------------------------------------------------------


def whack_phase_step(state: DualState, violating: District,
                     debug_instance: Instance | None = None) -> DualState:
    """Apply the multiplicative update for one violating star, batched.

    Each elementary round multiplies the duals of the star's members by
    (1 + eps/w(S)).  The batch size is the smallest round count that meets
    the constraint (member duals summing to w(S)/mu), capped by the remaining
    round budget and by the phase cap (dual sum exceeding 1+eps triggers
    renormalization and a new phase).  The round counter advances by the
    batch size and the star's primal accumulator records every round.

    With ``debug_instance`` set (small instances only), a batch that runs to
    constraint satisfaction additionally asserts the per-whack potential
    drop of at least eps/(4n) at some member vertex.
    """
    eps = state.epsilon
    members = violating.sorted_vertices()
    w = sum(state.weights[v] for v in members)
    if w <= 0:
        raise ParameterError("violating district must have positive weight")
    m = 1.0 + eps / w
    log_m = math.log(m)

    a = math.fsum(state.y[v] for v in members)
    total = math.fsum(state.y.values())
    rest = total - a
    target = w / state.mu

    if a >= target:
        k_satisfy = 1
    else:
        k_satisfy = max(1, math.ceil(math.log(target / a) / log_m))
    headroom = (1.0 + eps) - rest  # >= a while the phase cap holds
    k_phase = max(1, math.floor(math.log(max(headroom / a, 1.0)) / log_m) + 1)
    k_budget = state.T - state.rounds_used
    k = max(1, min(k_satisfy, k_phase, k_budget))

    y_before = dict(state.y) if debug_instance is not None else None

    factor = m ** k
    for v in members:
        state.y[v] *= factor

    # The drop guarantee applies to batches that run to satisfaction on a
    # star that is strongly violating against the raw duals (the sum of raw
    # duals is always >= 1, so raw-strong implies normalized-strong).
    if (debug_instance is not None and __debug__
            and k == k_satisfy and k_satisfy <= min(k_phase, k_budget)
            and a < (1.0 - eps) * target):
        _assert_potential_drop(debug_instance, y_before, state.y, members,
                               state.mu, eps)

    state.rounds_used += k
    state.whack_count += 1
    state._phase_whacks += 1
    state.max_whacks_in_phase = max(state.max_whacks_in_phase, state._phase_whacks)
    key = frozenset(members)
    state.x_counts[key] = state.x_counts.get(key, 0) + k
    state.chosen.setdefault(key, violating)

    new_total = math.fsum(state.y.values())
    if new_total > 1.0 + eps:
        floor = state.dual_floor()
        for v in state.y:
            scaled = state.y[v] / new_total
            if scaled < floor:
                scaled = floor
                state.clamp_count += 1
            state.y[v] = scaled
        state.phase_count += 1
        state._phase_whacks = 0
    return state


def _assert_potential_drop(instance: Instance, y_before: Mapping[int, float],
                           y_after: Mapping[int, float],
                           members: tuple[int, ...], mu: float, eps: float) -> None:
    """Check the amortized progress measure behind the phase bound.

    The potential of a vertex is 1 - y_v / M_v, with M_v the heaviest
    (mu-rescaled) strongly violating star containing v at the pre-step duals.
    A whack that runs to constraint satisfaction must sink some member's
    potential by at least eps/(4n).
    """
    strong = _strong_violators(instance, y_before, mu, eps)
    m_v: dict[int, float] = {}
    for w, star_members in strong:
        w_scaled = w / mu
        for v in star_members:
            m_v[v] = max(m_v.get(v, 0.0), w_scaled)
    best_drop = 0.0
    for v in members:
        cap = m_v.get(v)
        if not cap:
            continue
        phi_before = max(0.0, 1.0 - y_before[v] / cap)
        phi_after = max(0.0, 1.0 - y_after[v] / cap)
        best_drop = max(best_drop, phi_before - phi_after)
    n = max(instance.n, 1)
    assert best_drop >= eps / (4.0 * n) - 1e-12, (
        f"potential drop {best_drop} below eps/(4n) = {eps / (4 * n)}")


# -- full solver --------------------------------------------------------------------


def _run_guess(instance: Instance, mu: float, epsilon: float, threads: int):
    """One full multiplicative-weights run at guess mu.

    Returns ("primal", state) when the round budget is exhausted (a feasible
    primal of value (1-2eps)*mu exists) or ("dual", y_scaled, state) when the
    oracle certifies no strong violation (a feasible dual of value
    mu/(1-eps)).
    """
    state = DualState.fresh(instance, mu, epsilon)
    debug = instance if (__debug__ and instance.n <= 10) else None
    while state.rounds_used < state.T:
        y_norm = state.normalized()
        state.oracle_calls += 1
        violating = separation_oracle(instance, y_norm, mu, epsilon, threads=threads)
        if violating is None:
            scale = mu / (1.0 - epsilon)
            dual = {v: yv * scale for v, yv in y_norm.items()}
            return "dual", dual, state
        whack_phase_step(state, violating, debug_instance=debug)
    return "primal", None, state


def _primal_from_state(instance: Instance, state: DualState) -> list[tuple[District, float]]:
    entries = []
    coef = (1.0 - 2.0 * state.epsilon) * state.mu / state.T
    for key in sorted(state.x_counts, key=lambda k: tuple(sorted(k))):
        district = state.chosen[key]
        w = district.weight(instance)
        entries.append((district, coef * state.x_counts[key] / w))
    return entries


def solve_star_lp(instance: Instance, epsilon: float, threads: int = 1) -> FractionalStarSolution:
    """Near-optimal fractional balanced-star packing with a dual certificate.

    Runs the multiplicative-weights scheme over a geometric grid of objective
    guesses mu = (1+e)^j, bisecting to an adjacent pair where the lower guess
    yields a feasible primal and the upper a feasible dual.  Both artifacts
    are returned; their values sandwich the true LP optimum by weak duality.

    Internal precision is e = epsilon/4: the primal from the lower guess is
    worth (1-2e)*mu_lo with mu_lo >= (1-e)/(1+e) * optimum, and
    (1-2e)(1-e)/(1+e) >= 1-4e identically, so the returned value is within
    (1-epsilon) of the LP optimum.
    """
    if not (0.0 < epsilon < 0.5):
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    _check_lp_epsilon(instance, epsilon)
    eps = epsilon / 4.0
    grid = 1.0 + eps

    runs: dict[int, tuple] = {}

    def run(j: int):
        if j not in runs:
            runs[j] = _run_guess(instance, grid ** j, eps, threads)
        return runs[j]

    log_grid = math.log(grid)
    if _exact_fallback_affordable(instance):
        lower_bound = _greedy_packing_weight(instance)
        if lower_bound == 0:
            # No balanced star exists at all, so the zero solution is optimal
            # and every dual constraint is vacuous.
            return FractionalStarSolution(
                primal=(), dual={v: 0.0 for v in instance.ids}, lp_value=0.0,
                certificate="dual_feasible", stats={"guesses_run": 0})
    else:
        lower_bound = 0

    if lower_bound > 0:
        # Guesses below lower_bound*(1-eps) provably end with a feasible
        # primal (a dual outcome would certify optimum < lower_bound), so
        # bisection may start there without running them.
        cutoff = lower_bound * (1.0 - eps) * (1.0 - 1e-9)
        lo = max(0, math.floor(math.log(cutoff) / log_grid))
        while lo > 0 and grid ** lo >= cutoff:
            lo -= 1
    else:
        kind0, dual0, _ = run(0)
        if kind0 == "dual":
            # A single balanced star would already give LP value >= 2 > the
            # dual bound certified here, so none exists.
            return FractionalStarSolution(
                primal=(), dual=dual0, lp_value=0.0, certificate="dual_feasible",
                stats=_stats_block(runs, 0, 0))
        lo = 0

    total_w = instance.total_weight()
    j_top = max(lo + 1, math.ceil(math.log(max(total_w, 2)) / log_grid))
    j_hard = j_top + math.ceil(math.log(1.0 / (1.0 - 2.0 * eps)) / log_grid) + 2

    hi = None
    probe = j_top
    while hi is None:
        if probe <= lo:
            probe = lo + 1
        kind, _, _ = run(probe)
        if kind == "dual":
            hi = probe
        else:
            lo = probe
            probe += 1
            if probe > j_hard:
                raise AssertionError("objective-guess grid exhausted without a dual run")

    while hi - lo > 1:
        mid = (lo + hi) // 2
        kind, _, _ = run(mid)
        if kind == "primal":
            lo = mid
        else:
            hi = mid

    kind_lo, _, state_lo = run(lo)
    assert kind_lo == "primal", "guess below the certified lower bound ended in a dual"
    _, dual_hi, _ = run(hi)
    primal = _primal_from_state(instance, state_lo)
    lp_value = math.fsum(x * d.weight(instance) for d, x in primal)
    dual_value = math.fsum(dual_hi.values())
    assert lp_value <= dual_value * (1.0 + 1e-9) + 1e-12, \
        "weak duality violated between returned primal and dual"
    return FractionalStarSolution(
        primal=tuple(primal), dual=dual_hi, lp_value=lp_value,
        certificate="primal_feasible", stats=_stats_block(runs, lo, hi))


def _stats_block(runs: dict[int, tuple], lo: int, hi: int) -> dict:
    total_oracle = sum(state.oracle_calls for _, _, state in runs.values())
    total_whacks = sum(state.whack_count for _, _, state in runs.values())
    total_phases = sum(state.phase_count for _, _, state in runs.values())
    clamps = sum(state.clamp_count for _, _, state in runs.values())
    worst_phase = max((state.max_whacks_in_phase for _, _, state in runs.values()),
                      default=0)
    return {
        "guesses_run": len(runs),
        "mu_lo": runs[lo][2].mu if lo in runs else None,
        "mu_hi": runs[hi][2].mu if hi in runs else None,
        "oracle_calls": total_oracle,
        "whacks": total_whacks,
        "phases": total_phases,
        "dual_clamps": clamps,
        "max_whacks_in_phase": worst_phase,
    }
