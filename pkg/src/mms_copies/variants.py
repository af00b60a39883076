"""Chores with a few discarded items, and k-demand goods with copies."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    CopyAllocation,
    Instance,
    InternalInvariantError,
    KDemand,
    PreconditionError,
    parse_rational,
)
from .matching import max_matching, minimal_hall_violator
from .mms import MmsResult, SizeCap, SizeCapExceeded, _cap, _integer_scale, exact_mms


@dataclass(frozen=True)
class ChoreInstance:
    """``costs[i][j]`` is what performing chore j costs agent i (additive, non-negative)."""

    costs: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(parse_rational(c) for c in row) for row in self.costs)
        if not rows or not rows[0]:
            raise ValueError("need at least one agent and one chore")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("all cost rows must have the same length")
        if any(c < 0 for r in rows for c in r):
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "costs", rows)

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return len(self.costs[0])

    def value(self, agent: int, bundle: Iterable[int]) -> Fraction:
        row = self.costs[agent]
        return sum((row[j] for j in bundle), Fraction(0))


# ---------------------------------------------------------------------------
# Min-max share


def _minmax_search(values: list[int], d: int) -> tuple[int, list[int]]:
    """Smallest possible largest bundle when ``values`` (descending) go into ``d`` bundles."""
    m = len(values)
    total = sum(values)
    lower = max(-(-total // d), values[0] if values else 0)
    sums = [0] * d
    assign = [0] * m
    for idx, v in enumerate(values):
        b = min(range(d), key=lambda bb: (sums[bb], bb))
        sums[b] += v
        assign[idx] = b
    best = max(sums)
    best_assign = assign[:]
    if best <= lower:
        return best, best_assign
    sums = [0] * d
    cur = [0] * m

    def dfs(idx: int) -> bool:
        nonlocal best, best_assign
        if idx == m:
            val = max(sums)
            if val < best:
                best, best_assign = val, cur[:]
                return best <= lower
            return False
        v = values[idx]
        seen = set()
        for b in range(d):
            if sums[b] in seen or sums[b] + v >= best:
                continue
            seen.add(sums[b])
            sums[b] += v
            cur[idx] = b
            stop = dfs(idx + 1)
            sums[b] -= v
            if stop:
                return True
        return False

    dfs(0)
    return best, best_assign


def chores_exact_mms(
    costs: Sequence[Fraction],
    d: int,
    chores: Iterable[int] | None = None,
    cap: SizeCap | None = None,
) -> MmsResult:
    """Min-max share of one agent: split ``chores`` into ``d`` bundles minimising the costliest.

    >>> chores_exact_mms([1, 1, 1], 3).value
    Fraction(1, 1)
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    costs = [parse_rational(c) for c in costs]
    chores = sorted(range(len(costs)) if chores is None else set(chores))
    _cap(cap).check(len(chores), d)
    if not chores:
        return MmsResult(Fraction(0), tuple(frozenset() for _ in range(d)), d)
    order = sorted(chores, key=lambda j: (-costs[j], j))
    ints, den = _integer_scale([costs[j] for j in order])
    best, assign = _minmax_search(ints, d)
    bundles = [set() for _ in range(d)]
    for j, b in zip(order, assign):
        bundles[b].add(j)
    partition = tuple(frozenset(b) for b in bundles)
    value = max(sum((costs[j] for j in b), Fraction(0)) for b in partition)
    if value != Fraction(best, den):
        raise AssertionError("partition cost disagrees with search optimum")
    return MmsResult(value, partition, d)


def brute_force_chores_mms(costs: Sequence[Fraction], d: int) -> Fraction:
    """Unpruned enumeration; independent check for :func:`chores_exact_mms`."""
    costs = [parse_rational(c) for c in costs]
    if len(costs) > 10:
        raise SizeCapExceeded("brute_force_chores_mms is limited to 10 chores")
    best = None
    for labels in itertools.product(range(d), repeat=len(costs)):
        loads = [Fraction(0)] * d
        for c, b in zip(costs, labels):
            loads[b] += c
        worst = max(loads)
        if best is None or worst < best:
            best = worst
    return best


def chores_mms_values(instance: ChoreInstance, cap: SizeCap | None = None) -> list[Fraction]:
    return [chores_exact_mms(row, instance.n, cap=cap).value for row in instance.costs]


# ---------------------------------------------------------------------------
# Match-n-Fill for chores


def _relative_cost(instance: ChoreInstance, agent: int, bundle, mus) -> Fraction:
    cost = instance.value(agent, bundle)
    return cost / mus[agent] if mus[agent] > 0 else cost


@dataclass(frozen=True)
class ChoresResult:
    allocation: CopyAllocation
    discarded: frozenset
    mus: tuple[Fraction, ...]

    @property
    def allocated(self) -> int:
        return self.allocation.m - len(self.discarded)


def bagfill_and_remove(
    instance: ChoreInstance,
    mus: Sequence[Fraction],
    agents: Sequence[int],
    chores: Sequence[int],
) -> tuple[dict[int, frozenset], frozenset]:
    """Grow a bag while some agent would stay strictly below its share.

    When no agent can take the next chore, the bag goes to the agent with the
    smallest cost relative to its share and that chore is discarded.  The last
    agent standing keeps accumulating every remaining chore.
    """
    remaining = sorted(agents)
    bag: set = set()
    out: dict[int, frozenset] = {}
    discarded = set()
    for j in sorted(chores):
        if not remaining:
            discarded.add(j)
            continue
        grown = bag | {j}
        if len(remaining) == 1 or any(instance.value(i, grown) < mus[i] for i in remaining):
            bag = grown
            continue
        winner = min(remaining, key=lambda i: (_relative_cost(instance, i, bag, mus), i))
        out[winner] = frozenset(bag)
        remaining.remove(winner)
        discarded.add(j)
        bag = set()
    if remaining:
        winner = min(remaining, key=lambda i: (_relative_cost(instance, i, bag, mus), i))
        out[winner] = frozenset(bag)
        for i in remaining:
            out.setdefault(i, frozenset())
    return out, frozenset(discarded)


def match_n_fill_chores(
    instance: ChoreInstance,
    mus: Sequence[Fraction] | None = None,
    cap: SizeCap | None = None,
) -> ChoresResult:
    """Every agent pays at most its min-max share; at most n-2 chores are discarded."""
    mus = tuple(chores_mms_values(instance, cap) if mus is None else (parse_rational(x) for x in mus))
    n = instance.n
    if any(sum(instance.costs[i]) > n * mus[i] for i in range(n)):
        raise PreconditionError("some agent's total cost exceeds n times its share")
    part = chores_exact_mms(instance.costs[0], n, cap=cap).partition
    part = sorted(part, key=lambda b: (sorted(b), len(b)))
    adj = {j: [i for i in range(n) if instance.value(i, part[j]) <= mus[i]] for j in range(n)}
    violator = minimal_hall_violator(list(range(n)), adj)
    chosen = list(range(n)) if violator is None else violator[1:]
    matching = max_matching(chosen, adj)
    if len(matching) != len(chosen):
        raise InternalInvariantError("bundles left after dropping one violator member are unmatchable")
    bundles: list[frozenset] = [frozenset()] * n
    for j in chosen:
        bundles[matching[j]] = part[j]
    discarded = frozenset()
    rest = [i for i in range(n) if i not in set(matching.values())]
    if rest:
        used = set().union(*(part[j] for j in chosen))
        rest_chores = [j for j in range(instance.m) if j not in used]
        out, discarded = bagfill_and_remove(instance, mus, rest, rest_chores)
        for i, b in out.items():
            bundles[i] = b
    return ChoresResult(CopyAllocation(tuple(bundles), instance.m), discarded, mus)


# ---------------------------------------------------------------------------
# k-demand bag filling


@dataclass(frozen=True)
class KDemandAward:
    agent: int
    bundle: frozenset
    trigger: int
    returned: tuple[int, ...]


@dataclass(frozen=True)
class KDemandRun:
    allocation: CopyAllocation
    awards: tuple[KDemandAward, ...]
    unsatisfied: tuple[int, ...]


def _top_k(valuation: KDemand, bag: set, trigger: int) -> frozenset:
    ranked = sorted(bag, key=lambda g: (-valuation.values[g], g != trigger, g))
    return frozenset(ranked[: valuation.k])


def run_kdemand_bagfill(
    instance: Instance,
    mus: Sequence[Fraction] | None = None,
    order: Sequence[int] | None = None,
    cap: SizeCap | None = None,
) -> KDemandRun:
    """Bag filling that hands out only a best k-subset and recycles the rest of the bag.

    The good that triggered an award seeds the next bag; it becomes a copy
    only if it ends up inside a later award.  Agents may have different k.
    """
    if any(not isinstance(v, KDemand) for v in instance.valuations):
        raise PreconditionError("k-demand bag filling needs k-demand valuations")
    mus = [exact_mms(v, instance.n, cap=cap).value for v in instance.valuations] if mus is None \
        else [parse_rational(x) for x in mus]
    position = {g: idx for idx, g in enumerate(range(instance.m) if order is None else order)}
    pool = deque(sorted(position, key=position.__getitem__))
    remaining = [i for i in range(instance.n) if mus[i] > 0]
    bundles: list[frozenset] = [frozenset()] * instance.n
    awards = []
    # a fresh bag holding only the seed is never tested, so first hand out
    # every good that alone covers some agent's share
    while True:
        pair = next(((i, g) for i in remaining for g in pool
                     if instance.value(i, {g}) >= mus[i]), None)
        if pair is None:
            break
        i, g = pair
        pool.remove(g)
        bundles[i] = frozenset({g})
        remaining.remove(i)
        awards.append(KDemandAward(i, bundles[i], g, ()))
    bag: set = set()
    seed = None
    while pool and remaining:
        g = pool.popleft()
        bag.add(g)
        winner = next((i for i in remaining if instance.value(i, bag) >= mus[i]), None)
        if winner is None:
            continue
        chosen = _top_k(instance.valuations[winner], bag, g)
        if g not in chosen:
            raise InternalInvariantError("the triggering good is missing from the awarded subset")
        back = sorted(bag - chosen - ({seed} if seed is not None else set()), key=position.__getitem__)
        pool.extendleft(reversed(back))
        bundles[winner] = chosen
        remaining.remove(winner)
        awards.append(KDemandAward(winner, chosen, g, tuple(back)))
        bag = {g}
        seed = g
    unsatisfied = tuple(remaining)
    allocated = set().union(*bundles)
    last = awards[-1].agent if awards else instance.n - 1
    leftovers = set(range(instance.m)) - allocated
    bundles[last] = bundles[last] | leftovers
    return KDemandRun(CopyAllocation(tuple(bundles), instance.m), tuple(awards), unsatisfied)


def kdemand_bagfill(
    instance: Instance,
    mus: Sequence[Fraction] | None = None,
    order: Sequence[int] | None = None,
    cap: SizeCap | None = None,
) -> CopyAllocation:
    """MMS allocation for k-demand agents with at most n-1 distinct copies."""
    run = run_kdemand_bagfill(instance, mus, order, cap)
    if run.unsatisfied:
        raise InternalInvariantError(f"agents {run.unsatisfied} left unsatisfied")
    return run.allocation
