"""Ordered counterparts and the conversions back to the original goods."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import Additive, CopyAllocation, Instance, InternalInvariantError


@dataclass(frozen=True)
class OrderedInstance:
    """``base`` holds the ordered values; ``sigmas[i][r]`` is agent i's r-th best good."""

    base: Instance
    sigmas: tuple[tuple[int, ...], ...]
    original: Instance

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self.base.m

    def ordered_value(self, agent: int, ranks) -> Fraction:
        return self.base.value(agent, ranks)


def to_ordered(instance: Instance) -> OrderedInstance:
    """Sort every agent's values in non-increasing order, ties by good index.

    >>> to_ordered(Instance.additive([[1, 3, 2]])).sigmas
    ((1, 2, 0),)
    """
    if instance.kind != "additive":
        raise ValueError("ordered counterparts are defined for additive instances")
    sigmas = []
    vals = []
    for v in instance.valuations:
        sigma = tuple(sorted(range(instance.m), key=lambda g: (-v.values[g], g)))
        sigmas.append(sigma)
        vals.append(Additive(tuple(v.values[g] for g in sigma)))
    return OrderedInstance(Instance(tuple(vals)), tuple(sigmas), instance)


def _pick_best(instance: Instance, agent: int, taken: set[int], exclude=frozenset()) -> int:
    vals = instance.valuations[agent].values
    best = None
    for g in range(instance.m):
        if g in taken or g in exclude:
            continue
        if best is None or vals[g] > vals[best]:
            best = g
    if best is None:
        raise InternalInvariantError(f"agent {agent} has no good left to pick")
    return best


def _check_domination(ordered: OrderedInstance, ordered_alloc: CopyAllocation, bundles) -> None:
    for i in range(ordered.n):
        got = ordered.original.value(i, bundles[i])
        need = ordered.ordered_value(i, ordered_alloc.bundles[i])
        if got < need:
            raise InternalInvariantError(
                f"agent {i}: converted bundle worth {got} < ordered bundle worth {need}"
            )


def from_ordered_no_copies(ordered: OrderedInstance, ordered_alloc: CopyAllocation) -> CopyAllocation:
    """Picking sequence: for rank r = 1..m, the holder of r takes its best unpicked good."""
    holder = {}
    for i, b in enumerate(ordered_alloc.bundles):
        for r in b:
            if r in holder:
                raise ValueError(f"rank {r} is allocated twice; use from_ordered_simple")
            holder[r] = i
    taken: set[int] = set()
    bundles = [set() for _ in range(ordered.n)]
    for r in range(ordered.m):
        if r not in holder:
            continue
        i = holder[r]
        g = _pick_best(ordered.original, i, taken)
        taken.add(g)
        bundles[i].add(g)
    _check_domination(ordered, ordered_alloc, bundles)
    return CopyAllocation(tuple(frozenset(b) for b in bundles), ordered.m)


@dataclass(frozen=True)
class SimpleAllocationWitness:
    duplicated: tuple[int, ...]  # sorted ranks
    pairs: tuple[tuple[int, int], ...]  # (lower agent index, higher agent index) per duplicated rank

    @property
    def t(self) -> int:
        return len(self.duplicated)


def is_simple(ordered_alloc: CopyAllocation, n: int | None = None) -> SimpleAllocationWitness | None:
    """Witness that an ordered allocation with copies is simple, or ``None``.

    Simple means: every rank has at most one extra copy, at most n/2 ranks are
    duplicated, and the 2t holders of the duplicated ranks are pairwise distinct
    agents whose paired bundles share exactly that rank.
    """
    n = ordered_alloc.n if n is None else n
    mult = ordered_alloc.multiplicity()
    if any(c > 2 for c in mult.values()):
        return None
    duplicated = tuple(sorted(r for r, c in mult.items() if c == 2))
    if 2 * len(duplicated) > n:
        return None
    pairs = []
    holders_used: set[int] = set()
    for r in duplicated:
        holders = [i for i, b in enumerate(ordered_alloc.bundles) if r in b]
        i, j = holders
        if i in holders_used or j in holders_used:
            return None
        if ordered_alloc.bundles[i] & ordered_alloc.bundles[j] != {r}:
            return None
        holders_used.update(holders)
        pairs.append((i, j))
    return SimpleAllocationWitness(duplicated, tuple(pairs))


def from_ordered_simple(ordered: OrderedInstance, ordered_alloc: CopyAllocation) -> CopyAllocation:
    """Two-round picking sequence for a simple allocation with copies.

    In each duplicated pair the higher-indexed agent holds the 'copy'.  Round one
    runs the ordinary picking sequence over the original instances of all ranks;
    in round two the copy holders, in increasing order of their duplicated rank,
    each take their most valuable good not picked in round two and not already
    in their own bundle.
    """
    witness = is_simple(ordered_alloc, ordered.n)
    if witness is None:
        raise ValueError("allocation is not simple; no value-preserving conversion is known")
    copy_holder = {r: pair[1] for r, pair in zip(witness.duplicated, witness.pairs)}
    holder = {}
    for i, b in enumerate(ordered_alloc.bundles):
        for r in b:
            if copy_holder.get(r) == i:
                continue
            holder[r] = i
    taken: set[int] = set()
    bundles = [set() for _ in range(ordered.n)]
    for r in range(ordered.m):
        if r in holder:
            i = holder[r]
            g = _pick_best(ordered.original, i, taken)
            taken.add(g)
            bundles[i].add(g)
    taken_second: set[int] = set()
    for r in witness.duplicated:
        i = copy_holder[r]
        g = _pick_best(ordered.original, i, taken_second, exclude=bundles[i])
        taken_second.add(g)
        bundles[i].add(g)
    _check_domination(ordered, ordered_alloc, bundles)
    result = CopyAllocation(tuple(frozenset(b) for b in bundles), ordered.m)
    stats = result.stats()
    expected = witness.t if ordered_alloc.covers() else stats.total_extra
    if stats.total_extra != expected or stats.total_extra > witness.t or stats.max_per_good > 1:
        raise InternalInvariantError("conversion changed the number of copies")
    return result
