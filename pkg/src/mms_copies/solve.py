"""Allocation algorithms that duplicate a bounded number of goods."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import (
    Additive,
    CopyAllocation,
    Instance,
    InternalInvariantError,
    MonotoneOracle,
    PreconditionError,
    complete_allocation,
    verify_guarantee,
)
from .matching import max_matching, minimal_hall_violator
from .mms import SizeCap, exact_mms, mms_values, one_out_of_d_alloc
from .ordered import SimpleAllocationWitness, from_ordered_simple, is_simple, to_ordered
from .reduce import ReductionTrace, irreducibility_bound_holds, s_reduce, start_trace, t_reduce

SIX_SEVENTHS = Fraction(6, 7)
FOUR_FIFTHS = Fraction(4, 5)


# ---------------------------------------------------------------------------
# BagFill-with-Copies


@dataclass(frozen=True)
class BagClosure:
    """One awarded bag.  ``remaining_*`` describe the state right after the award."""

    agent: int
    bag: frozenset
    seed: int | None  # copied good that opened this bag, if any
    remaining_agents: tuple[int, ...]
    remaining_goods: frozenset


@dataclass(frozen=True)
class BagFillRun:
    allocation: CopyAllocation
    closures: tuple[BagClosure, ...]
    unsatisfied: tuple[int, ...]

    @property
    def duplicated(self) -> tuple[int, ...]:
        return tuple(c.seed for c in self.closures if c.seed is not None)


def _check_bagfill_preconditions(instance, targets, agents, goods) -> None:
    for i in agents:
        v = instance.valuations[i]
        if not isinstance(v, Additive):
            raise PreconditionError("bag filling with copies is proven for additive valuations")
        if v.value(goods) < len(agents) * targets[i]:
            raise PreconditionError(f"agent {i} values the goods below |N| times its target")
        if any(v.values[g] >= targets[i] for g in goods) and targets[i] > 0:
            raise PreconditionError(f"agent {i} has a single good worth its whole target")


def run_bagfill_with_copies(
    instance: Instance,
    targets: Sequence[Fraction],
    order: Sequence[int] | None = None,
    agents: Sequence[int] | None = None,
    goods: Sequence[int] | None = None,
    check: bool = True,
) -> BagFillRun:
    """Bag filling where the good that closes a bag also seeds the next one.

    ``order`` is the insertion order (default: ``goods`` ascending) and may
    repeat a good.  Agents outside ``agents`` get empty bundles.  With
    ``check`` the hypotheses are verified up front and an unsatisfied agent at
    the end raises; without it the run is reported as is.
    """
    agents = list(range(instance.n)) if agents is None else sorted(agents)
    goods = sorted(range(instance.m) if goods is None else set(goods))
    order = list(goods) if order is None else list(order)
    if check:
        _check_bagfill_preconditions(instance, targets, agents, set(goods))
    bundles: list[set] = [set() for _ in range(instance.n)]
    remaining = list(agents)
    bag: set = set()
    seed = None
    closures = []
    last = None
    for pos, g in enumerate(order):
        if not remaining:
            break
        bag.add(g)
        winner = next((i for i in remaining if instance.value(i, bag) >= targets[i]), None)
        if winner is None:
            continue
        bundles[winner] = set(bag)
        remaining.remove(winner)
        last = winner
        closures.append(
            BagClosure(winner, frozenset(bag), seed, tuple(remaining), frozenset(order[pos:]))
        )
        bag = {g}
        seed = g
    unsatisfied = tuple(remaining)
    if remaining:
        if check:
            raise InternalInvariantError(f"agents {unsatisfied} left unsatisfied by bag filling")
        # hand the open bag (minus an unused seed) to the first unsatisfied agent
        leftover_bag = bag - ({seed} if seed is not None else set())
        bundles[remaining[0]] = leftover_bag
        last = remaining[0]
    complete = [bundles[i] for i in range(instance.n)]
    used = set().union(*complete)
    if last is not None:
        complete[last] |= set(goods) - used
    return BagFillRun(CopyAllocation(tuple(frozenset(b) for b in complete), instance.m),
                      tuple(closures), unsatisfied)


def bagfill_with_copies(
    instance: Instance,
    targets: Sequence[Fraction],
    order: Sequence[int] | None = None,
    agents: Sequence[int] | None = None,
    goods: Sequence[int] | None = None,
    check: bool = True,
) -> CopyAllocation:
    """Allocation where every listed agent reaches its target with at most n-1 copies.

    >>> inst = Instance.additive([[1, 1, 1, 1]] * 2)
    >>> bagfill_with_copies(inst, [2, 2]).bundles
    (frozenset({0, 1}), frozenset({2, 3}))
    """
    return run_bagfill_with_copies(instance, targets, order, agents, goods, check).allocation


# ---------------------------------------------------------------------------
# Match-n-Fill


@dataclass(frozen=True)
class MatchNFillRun:
    allocation: CopyAllocation
    singletons: dict
    matched: dict  # agent -> bundle from the partition
    bagfill: BagFillRun | None
    violator_size: int | None


def run_match_n_fill(
    instance: Instance,
    mus: Sequence[Fraction] | None = None,
    cap: SizeCap | None = None,
) -> MatchNFillRun:
    """Match-n-Fill with full bookkeeping; see :func:`match_n_fill`."""
    if instance.kind != "additive":
        raise PreconditionError("Match-n-Fill needs additive valuations")
    mus = list(mms_values(instance, cap=cap) if mus is None else (Fraction(x) for x in mus))
    bundles: list[set] = [set() for _ in range(instance.n)]
    agents = [i for i in range(instance.n) if mus[i] > 0]
    goods = set(range(instance.m))
    last = None
    singletons = {}

    # stage 1: any single good worth a full share is handed out on its own
    while True:
        pair = next(
            ((i, g) for i in agents for g in sorted(goods)
             if instance.valuations[i].values[g] >= mus[i]),
            None,
        )
        if pair is None:
            break
        i, g = pair
        bundles[i] = {g}
        singletons[i] = g
        agents.remove(i)
        goods.discard(g)
        last = i

    matched = {}
    run = None
    violator_size = None
    if agents:
        lead = agents[0]
        part = exact_mms(instance.valuations[lead], len(agents), goods, cap=cap).partition
        part = sorted(part, key=lambda b: (sorted(b), len(b)))
        adj = {
            j: [i for i in agents if instance.value(i, part[j]) >= mus[i]]
            for j in range(len(part))
        }
        violator = minimal_hall_violator(list(range(len(part))), adj)
        if violator is None:
            chosen = list(range(len(part)))
        else:
            violator_size = len(violator)
            chosen = violator[1:]
        matching = max_matching(chosen, adj)
        if len(matching) != len(chosen):
            raise InternalInvariantError("bundles left after dropping one violator member are unmatchable")
        for j in chosen:
            i = matching[j]
            bundles[i] = set(part[j])
            matched[i] = part[j]
            last = i
        rest_agents = [i for i in agents if i not in matched]
        if rest_agents:
            rest_goods = goods - set().union(*(part[j] for j in chosen))
            run = run_bagfill_with_copies(
                instance, mus, agents=rest_agents, goods=sorted(rest_goods)
            )
            for i in rest_agents:
                bundles[i] = set(run.allocation.bundles[i])
            if run.closures:
                last = run.closures[-1].agent
    if last is None:
        last = instance.n - 1
    complete_allocation(bundles, instance.m, last)
    alloc = CopyAllocation(tuple(frozenset(b) for b in bundles), instance.m)
    return MatchNFillRun(alloc, singletons, matched, run, violator_size)


def match_n_fill(
    instance: Instance,
    mus: Sequence[Fraction] | None = None,
    cap: SizeCap | None = None,
) -> CopyAllocation:
    """Full MMS allocation with at most n-2 distinct copies (additive valuations).

    ``mus`` defaults to the exact MMS values.  Agents with a zero share get an
    empty bundle unless the completion pass hands them leftovers.
    """
    return run_match_n_fill(instance, mus, cap).allocation


# ---------------------------------------------------------------------------
# BagFill-RoundRobin


@dataclass(frozen=True)
class RoundRobinRun:
    awards: dict  # agent -> frozenset of ranks of the full ordered instance
    closed_bags: tuple[int, ...]  # bag indices in closing order
    bags: tuple[frozenset, ...]  # final bag contents before duplication (ranks)
    duplicated: tuple[int, ...]  # ranks copied in the duplication phase
    survivors: tuple[int, ...]
    unprocessed: frozenset  # ranks never dealt because every agent was served
    last_agent: int | None


def bagfill_round_robin(trace: ReductionTrace, check: bool = True) -> RoundRobinRun:
    """Deal the remaining goods cyclically into one bag per remaining agent.

    A bag is awarded as soon as some remaining agent values it at its
    threshold (lowest index wins) and leaves the cycle.  Each bag still open
    at the end receives a copy of one of the top goods and goes to a
    remaining agent in index order.
    """
    if check and not irreducibility_bound_holds(trace):
        raise PreconditionError("round-robin bag filling needs an R-irreducible instance")
    n, m = trace.n, trace.m
    rank = trace.goods
    bags: list[list[int]] = [[] for _ in range(n)]
    remaining = list(trace.agents)
    awards: dict[int, frozenset] = {}
    closed: list[int] = []
    j = a = 0
    last = None
    dealt = 0
    for p in range(m):
        if not remaining:
            break
        bags[j].append(p)
        dealt = p + 1
        winner = next((i for i in remaining if trace.qualifies(i, bags[j])), None)
        if winner is not None:
            if j != a:
                raise InternalInvariantError(f"bag {j} closed before bag {a}")
            awards[winner] = frozenset(rank[q] for q in bags[j])
            closed.append(j)
            remaining.remove(winner)
            last = winner
            a += 1
        j += 1
        if j >= n:
            j = a
    duplicated = []
    survivors = tuple(remaining)
    for j, i in zip(range(a, n), survivors):
        q = j - a
        if q in bags[j]:
            raise InternalInvariantError(f"bag {j} already holds position {q}")
        awards[i] = frozenset(rank[x] for x in bags[j]) | {rank[q]}
        duplicated.append(rank[q])
        last = i
    return RoundRobinRun(
        awards=awards,
        closed_bags=tuple(closed),
        bags=tuple(frozenset(rank[q] for q in b) for b in bags),
        duplicated=tuple(duplicated),
        survivors=survivors,
        unprocessed=frozenset(rank[q] for q in range(dealt, m)),
        last_agent=last,
    )


# ---------------------------------------------------------------------------
# Reduce-then-round-robin pipelines


@dataclass(frozen=True)
class PipelineResult:
    allocation: CopyAllocation
    ordered_allocation: CopyAllocation
    witness: SimpleAllocationWitness | None
    trace: ReductionTrace
    round_robin: RoundRobinRun
    mus: tuple[Fraction, ...]
    alpha: Fraction

    def targets(self) -> list[Fraction]:
        return [self.alpha * mu for mu in self.mus]


def _run_pipeline(instance, alpha, reducer, mus, cap, check, copy_divisor) -> PipelineResult:
    if instance.kind != "additive":
        raise PreconditionError("the reduction pipelines need additive valuations")
    mus = tuple(mms_values(instance, cap=cap) if mus is None else (Fraction(x) for x in mus))
    ordered = to_ordered(instance)
    kept = [i for i in range(instance.n) if mus[i] > 0]
    trace = reducer(start_trace(ordered, alpha, mus, agents=kept))
    rr = bagfill_round_robin(trace, check=check)
    ranks: list[set] = [set() for _ in range(instance.n)]
    for agent, bundle in trace.awards().items():
        ranks[agent] = set(bundle)
    for agent, bundle in rr.awards.items():
        ranks[agent] = set(bundle)
    last = rr.last_agent
    if last is None and trace.steps:
        last = trace.steps[-1].removed_agents[-1]
    if last is None:
        last = instance.n - 1
    complete_allocation(ranks, instance.m, last)
    ordered_alloc = CopyAllocation(tuple(frozenset(b) for b in ranks), instance.m)
    witness = is_simple(ordered_alloc, instance.n)
    if witness is None:
        raise InternalInvariantError("pipeline produced a non-simple ordered allocation")
    alloc = from_ordered_simple(ordered, ordered_alloc)
    result = PipelineResult(alloc, ordered_alloc, witness, trace, rr, mus, Fraction(alpha))
    if check:
        report = verify_guarantee(instance, alloc, result.targets())
        if not report.all_pass:
            bad = [c.agent for c in report.agents if not c.ok]
            raise InternalInvariantError(f"agents {bad} fall below alpha times their share")
        if report.stats.total_extra > instance.n // copy_divisor or report.stats.max_per_good > 1:
            raise InternalInvariantError("pipeline used more copies than the bound allows")
    return result


def pipeline_six_sevenths(
    instance: Instance,
    alpha: Fraction = SIX_SEVENTHS,
    mus: Sequence[Fraction] | None = None,
    cap: SizeCap | None = None,
    check: bool = True,
) -> PipelineResult:
    """Simple alpha-MMS allocation with at most floor(n/2) distinct copies, alpha <= 6/7."""
    alpha = Fraction(alpha)
    if not 0 < alpha <= SIX_SEVENTHS:
        raise PreconditionError(f"alpha={alpha} is outside (0, 6/7], where this pipeline is proven")
    return _run_pipeline(instance, alpha, s_reduce, mus, cap, check, 2)


def pipeline_four_fifths(
    instance: Instance,
    alpha: Fraction = FOUR_FIFTHS,
    mus: Sequence[Fraction] | None = None,
    cap: SizeCap | None = None,
    check: bool = True,
) -> PipelineResult:
    """Simple alpha-MMS allocation with at most floor(n/3) distinct copies, alpha <= 4/5, n > 5."""
    alpha = Fraction(alpha)
    if not 0 < alpha <= FOUR_FIFTHS:
        raise PreconditionError(f"alpha={alpha} is outside (0, 4/5], where this pipeline is proven")
    if instance.n <= 5:
        raise PreconditionError(f"unsupported size: the 4/5 pipeline needs more than 5 agents, got {instance.n}")
    return _run_pipeline(instance, alpha, t_reduce, mus, cap, check, 3)


# ---------------------------------------------------------------------------
# Reduction from 1-out-of-d allocations


Allocator = Callable[[Instance, int, Sequence[int]], "CopyAllocation | None"]


def one_out_of_d_copy_bound(n: int, m: int, alpha: Fraction) -> int:
    """floor(alpha*m) + ceil((1+alpha)^2 * m / (n-1-alpha)), exactly."""
    alpha = Fraction(alpha)
    extra = (1 + alpha) ** 2 * m / (n - 1 - alpha)
    return math.floor(alpha * m) + math.ceil(extra)


@dataclass(frozen=True)
class OneOutOfDRun:
    allocation: CopyAllocation
    kept: tuple[int, ...]  # agents keeping their bundle from the first allocation
    d: int
    bound: int


def _default_allocator(cap: SizeCap | None) -> Allocator:
    def allocate(instance: Instance, d: int, agents: Sequence[int]):
        return one_out_of_d_alloc(instance, d, agents=agents, cap=cap)

    return allocate


def mms_via_one_out_of_d(
    instance: Instance,
    alpha: Fraction,
    allocator: Allocator | None = None,
    cap: SizeCap | None = None,
) -> OneOutOfDRun:
    """Full MMS from two 1-out-of-d allocations, copying only the goods of a few bundles.

    The first floor(n/(1+alpha)) agents are served once; the ones holding the
    fewest goods keep those bundles and every other agent is served again from
    scratch, so only the kept bundles' goods are duplicated.
    """
    alpha = Fraction(alpha)
    if alpha < 0:
        raise PreconditionError("alpha must be non-negative")
    n, m = instance.n, instance.m
    n_first = math.floor(n / (1 + alpha))
    n_rest = n - n_first
    if n_first == 0 or n_rest > n_first:
        raise PreconditionError(f"alpha={alpha} leaves {n_first} agents to cover {n_rest} others")
    d = math.ceil((1 + alpha) * n_first)
    allocator = allocator or _default_allocator(cap)
    first_agents = list(range(n_first))
    first = allocator(instance, d, first_agents)
    if first is None:
        raise RuntimeError(f"allocator found no 1-out-of-{d} allocation for agents {first_agents}")
    kept = sorted(first_agents, key=lambda i: (len(first.bundles[i]), i))[:n_rest]
    others = [i for i in range(n) if i not in kept]
    second = allocator(instance, d, others)
    if second is None:
        raise RuntimeError(f"allocator found no 1-out-of-{d} allocation for agents {others}")
    bundles = [first.bundles[i] if i in kept else second.bundles[i] for i in range(n)]
    alloc = CopyAllocation(tuple(bundles), m)
    bound = one_out_of_d_copy_bound(n, m, alpha) if n - 1 - alpha > 0 else m
    copies = alloc.stats().total_extra
    if copies > (n_rest * m) // n_first or copies > bound or alloc.stats().max_per_good > 1:
        raise InternalInvariantError(f"{copies} copies exceed the averaging bound")
    return OneOutOfDRun(alloc, tuple(sorted(kept)), d, bound)


# ---------------------------------------------------------------------------
# Randomized allocator for monotone valuations with given MMS partitions

# 1/e lies in [0.3678794, 0.3678795]; using the lower end never loosens the test
INV_E_LOW = Fraction(3678794, 10_000_000)


def total_copy_threshold(m: int) -> int:
    """Largest t accepted as 't <= m/e'."""
    return math.floor(m * INV_E_LOW)


def per_good_threshold(m: int, n: int) -> int:
    """floor(3 ln m / ln ln m), or n-1 (no restriction) when ln ln m <= 0."""
    if m <= 2:
        return max(n - 1, 0)
    return math.floor(3 * math.log(m) / math.log(math.log(m)))


@dataclass(frozen=True)
class RandomizedResult:
    allocation: CopyAllocation | None
    choices: tuple[int, ...] | None  # partition index drawn for each agent
    iterations: int
    max_iterations: int

    @property
    def success(self) -> bool:
        return self.allocation is not None


def randomized_monotone(instance: Instance, beta: int, seed: int | None = None) -> RandomizedResult:
    """Give each agent a uniformly random bundle of its own MMS partition, with rejection.

    A draw is accepted when its total copies and worst per-good copies are
    within the thresholds above.  After 3*m*beta rejected draws the result
    reports failure instead of an allocation.
    """
    if beta < 1:
        raise PreconditionError("beta must be a positive integer")
    parts = []
    for i, v in enumerate(instance.valuations):
        if not isinstance(v, MonotoneOracle) or v.mms_partition is None:
            raise PreconditionError(f"agent {i} has no declared MMS partition")
        parts.append(v.mms_partition)
    n, m = instance.n, instance.m
    rng = random.Random(seed)
    t_max = total_copy_threshold(m)
    k_max = per_good_threshold(m, n)
    limit = 3 * m * beta
    for it in range(1, limit + 1):
        choice = tuple(rng.randrange(len(p)) for p in parts)
        alloc = CopyAllocation(tuple(parts[i][c] for i, c in enumerate(choice)), m)
        stats = alloc.stats()
        if stats.total_extra <= t_max and stats.max_per_good <= k_max:
            return RandomizedResult(alloc, choice, it, limit)
    return RandomizedResult(None, None, limit, limit)
