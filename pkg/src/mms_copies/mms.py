"""Exact maximin-share oracles.

Everything here is exponential and guarded by a size cap. The solvers are
tested against these functions; they are the ground truth of the package.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    Additive,
    CopyAllocation,
    Instance,
    KDemand,
    MonotoneOracle,
    Valuation,
)

CAP_ENV = "MMS_COPIES_SIZE_CAP"


class SizeCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SizeCap:
    goods: int = 16
    bundles: int = 5

    @classmethod
    def from_env(cls) -> "SizeCap":
        """Read ``MMS_COPIES_SIZE_CAP`` as ``goods`` or ``goods,bundles``."""
        raw = os.environ.get(CAP_ENV)
        if not raw:
            return cls()
        parts = [int(p) for p in raw.split(",")]
        return cls(parts[0], parts[1]) if len(parts) > 1 else cls(parts[0])

    def check(self, m: int, d: int) -> None:
        if m > self.goods or d > self.bundles:
            raise SizeCapExceeded(
                f"{m} goods / {d} bundles exceeds the oracle cap "
                f"({self.goods} goods / {self.bundles} bundles); set {CAP_ENV} to raise it"
            )


def _cap(cap: SizeCap | None) -> SizeCap:
    return cap if cap is not None else SizeCap.from_env()


@dataclass(frozen=True)
class MmsResult:
    value: Fraction
    partition: tuple[frozenset, ...]
    d: int


def _integer_scale(values: Sequence[Fraction]) -> tuple[list[int], int]:
    den = math.lcm(*(Fraction(v).denominator for v in values)) if values else 1
    return [int(Fraction(v) * den) for v in values], den


def _water_level(sums: list[int], budget: int) -> int:
    """Largest level L with sum(max(0, L - s)) <= budget; an upper bound on the final minimum."""
    level = None
    acc = 0
    srt = sorted(sums)
    for idx, s in enumerate(srt):
        if idx + 1 < len(srt):
            nxt = srt[idx + 1]
            need = (nxt - s) * (idx + 1)
            if acc + need <= budget:
                acc += need
                continue
        # levels between s and the next sum: raise the idx+1 lowest bundles evenly
        level = s + (budget - acc) // (idx + 1)
        if idx + 1 < len(srt):
            level = min(level, srt[idx + 1])
        return level
    return level if level is not None else 0


def _maxmin_search(values: list[int], d: int, k: int | None) -> tuple[int, list[int]]:
    """Best min-bundle value over partitions of ``values`` (descending) into ``d`` bundles.

    ``k`` caps how many goods count toward a bundle (k-demand); because goods are
    processed in non-increasing order, a bundle's value is the sum of its first
    ``k`` goods.  Returns the optimum and one assignment good -> bundle.
    """
    m = len(values)
    if d == 1:
        top = values if k is None else values[:k]
        return sum(top), [0] * m
    suffix = [0] * (m + 1)
    for idx in range(m - 1, -1, -1):
        suffix[idx] = suffix[idx + 1] + values[idx]

    # greedy incumbent: each good to the currently poorest open bundle
    sums = [0] * d
    counts = [0] * d
    assign = [0] * m
    for idx, v in enumerate(values):
        open_bundles = [b for b in range(d) if k is None or counts[b] < k] or list(range(d))
        b = min(open_bundles, key=lambda bb: (sums[bb], bb))
        if k is None or counts[b] < k:
            sums[b] += v
        counts[b] += 1
        assign[idx] = b
    best = min(sums)
    best_assign = assign[:]
    upper = suffix[0] // d if k is None else None
    if upper is not None and best >= upper:
        return best, best_assign

    sums = [0] * d
    counts = [0] * d
    cur = [0] * m

    def bound(idx: int) -> int:
        if k is None:
            return _water_level(sums, suffix[idx])
        growable = [sums[b] for b in range(d) if counts[b] < k]
        frozen = [sums[b] for b in range(d) if counts[b] >= k]
        cap = min(frozen) if frozen else None
        if not growable:
            return cap
        lvl = _water_level(growable, suffix[idx])
        return lvl if cap is None else min(lvl, cap)

    def dfs(idx: int) -> bool:
        nonlocal best, best_assign
        if idx == m:
            val = min(sums)
            if val > best:
                best = val
                best_assign = cur[:]
                if upper is not None and best >= upper:
                    return True
            return False
        if bound(idx) <= best:
            return False
        v = values[idx]
        seen = set()
        for b in sorted(range(d), key=lambda bb: (sums[bb], bb)):
            state = (sums[b], min(counts[b], k) if k is not None else 0)
            if state in seen:
                continue
            seen.add(state)
            grows = k is None or counts[b] < k
            if grows:
                sums[b] += v
            counts[b] += 1
            cur[idx] = b
            stop = dfs(idx + 1)
            counts[b] -= 1
            if grows:
                sums[b] -= v
            if stop:
                return True
        return False

    dfs(0)
    return best, best_assign


def _sorted_goods(valuation, goods: Iterable[int]) -> list[int]:
    return sorted(goods, key=lambda g: (-valuation.values[g], g))


def exact_mms(
    valuation: Valuation,
    d: int,
    goods: Iterable[int] | None = None,
    cap: SizeCap | None = None,
) -> MmsResult:
    """Maximin share of one agent when ``goods`` are split into ``d`` bundles.

    Branch and bound over assignments of goods (in non-increasing value order) to
    bundles; bundles in identical states are interchangeable and a water-filling
    bound prunes subtrees that cannot beat the incumbent.

    >>> exact_mms(Additive((1,) * 12), 4).value
    Fraction(3, 1)
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    goods = sorted(range(valuation.m) if goods is None else set(goods))
    if isinstance(valuation, MonotoneOracle):
        part = valuation.mms_partition
        if part is None or len(part) != d or set().union(*part) != set(goods):
            raise NotImplementedError(
                "MMS of a general monotone valuation is not computed; "
                "supply mms_partition for the full good set with d = n"
            )
        return MmsResult(min(valuation.value(p) for p in part), part, d)
    _cap(cap).check(len(goods), d)
    order = _sorted_goods(valuation, goods)
    ints, den = _integer_scale([valuation.values[g] for g in order])
    k = valuation.k if isinstance(valuation, KDemand) else None
    best, assign = _maxmin_search(ints, d, k)
    bundles = [set() for _ in range(d)]
    for g, b in zip(order, assign):
        bundles[b].add(g)
    partition = tuple(frozenset(b) for b in bundles)
    value = min(valuation.value(b) for b in partition)
    if value != Fraction(best, den):
        raise AssertionError("partition value disagrees with search optimum")
    return MmsResult(value, partition, d)


def brute_force_mms(valuation: Valuation, d: int, goods: Iterable[int] | None = None) -> Fraction:
    """Unpruned enumeration of every assignment of goods to ``d`` bundles.

    Independent of :func:`exact_mms`; only usable for a handful of goods.
    """
    goods = sorted(range(valuation.m) if goods is None else set(goods))
    if len(goods) > 10:
        raise SizeCapExceeded("brute_force_mms is limited to 10 goods")
    best = None
    for labels in itertools.product(range(d), repeat=len(goods)):
        bundles = [[] for _ in range(d)]
        for g, b in zip(goods, labels):
            bundles[b].append(g)
        worst = min(valuation.value(b) for b in bundles)
        if best is None or worst > best:
            best = worst
    return best


def mms_values(instance: Instance, d: int | None = None, cap: SizeCap | None = None) -> list[Fraction]:
    d = instance.n if d is None else d
    return [exact_mms(v, d, cap=cap).value for v in instance.valuations]


@dataclass(frozen=True)
class Normalized:
    instance: Instance | None
    mus: tuple[Fraction, ...]
    kept: tuple[int, ...]


def normalize(instance: Instance, cap: SizeCap | None = None) -> Normalized:
    """Scale each agent so that its MMS is one; agents with zero MMS are dropped.

    ``kept`` maps agents of the returned instance to original agent indices and
    ``mus`` holds the original MMS of every agent of the input.
    """
    mus = tuple(mms_values(instance, cap=cap))
    kept = tuple(i for i, mu in enumerate(mus) if mu > 0)
    if not kept:
        return Normalized(None, mus, kept)
    vals = tuple(instance.valuations[i].scaled(1 / mus[i]) for i in kept)
    return Normalized(Instance(vals), mus, kept)


def one_out_of_d_alloc(
    instance: Instance,
    d: int,
    targets: Sequence[Fraction] | None = None,
    agents: Sequence[int] | None = None,
    cap: SizeCap | None = None,
) -> CopyAllocation | None:
    """Exhaustive search for an allocation without copies meeting ``targets``.

    ``agents`` restricts the search to a subset of agents; the others get empty
    bundles.  Targets default to each agent's 1-out-of-``d`` MMS.  Every good is
    allocated; returns ``None`` when no allocation meets the targets.
    """
    agents = list(range(instance.n)) if agents is None else list(agents)
    if d < len(agents):
        raise ValueError("d must be at least the number of agents")
    _cap(cap).check(instance.m, max(d, len(agents)))
    if targets is None:
        targets = [exact_mms(instance.valuations[i], d, cap=cap).value for i in agents]
    else:
        targets = [Fraction(targets[i]) for i in agents]
    if not agents:
        return None
    vals = [instance.valuations[i] for i in agents]
    additive = all(isinstance(v, Additive) for v in vals)
    goods = sorted(range(instance.m), key=lambda g: -max(v.values[g] for v in vals) if additive else g)
    # suffix[i][idx]: value agent i could still add from goods[idx:] (an upper bound for k-demand)
    suffix = [[Fraction(0)] * (len(goods) + 1) for _ in vals]
    if additive or all(hasattr(v, "values") for v in vals):
        for a, v in enumerate(vals):
            for idx in range(len(goods) - 1, -1, -1):
                suffix[a][idx] = suffix[a][idx + 1] + v.values[goods[idx]]
    bundles = [set() for _ in agents]
    current = [Fraction(0)] * len(agents)

    def satisfied(a: int) -> bool:
        return current[a] >= targets[a]

    def dfs(idx: int) -> bool:
        if all(satisfied(a) for a in range(len(agents))):
            return True
        if idx == len(goods):
            return False
        if additive:
            for a in range(len(agents)):
                if current[a] + suffix[a][idx] < targets[a]:
                    return False
        g = goods[idx]
        for a in range(len(agents)):
            if satisfied(a):
                continue
            bundles[a].add(g)
            old = current[a]
            current[a] = vals[a].value(bundles[a])
            if dfs(idx + 1):
                return True
            current[a] = old
            bundles[a].discard(g)
        # leave the good for the completion pass
        return dfs(idx + 1)

    if not dfs(0):
        return None
    out = [set() for _ in range(instance.n)]
    for a, i in enumerate(agents):
        out[i] = bundles[a]
    leftover = set(range(instance.m)) - set().union(*out)
    out[agents[-1]] |= leftover
    return CopyAllocation(tuple(frozenset(b) for b in out), instance.m)


def check_valid_reduction(
    valuation: Valuation,
    n_before: int,
    goods_before: Iterable[int],
    n_after: int,
    goods_after: Iterable[int],
    cap: SizeCap | None = None,
) -> bool:
    """True iff removing agents/goods did not lower this agent's MMS."""
    if n_after <= 0:
        return True
    before = exact_mms(valuation, n_before, goods_before, cap=cap).value
    after = exact_mms(valuation, n_after, goods_after, cap=cap).value
    return after >= before
