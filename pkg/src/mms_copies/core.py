"""Domain types shared by every solver: valuations, instances, allocations with copies.

All quantities are exact :class:`fractions.Fraction` values; no comparison in the
library ever goes through floating point.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

Rational = Fraction
Bundle = frozenset


class PreconditionError(ValueError):
    """An algorithm was called on an input outside the hypotheses it is proven for."""


class InternalInvariantError(AssertionError):
    """A post-condition that a theorem guarantees did not hold; indicates a bug."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a decimal string such as ``"0.3"``.

    >>> parse_rational("3/6")
    Fraction(1, 2)
    >>> parse_rational("0.7")
    Fraction(7, 10)
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError("floats are not accepted; pass a string such as '0.3'")
    return Fraction(str(text).strip())


def format_rational(value: Fraction) -> str:
    """Inverse of :func:`parse_rational` (canonical ``p/q`` or integer form)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _as_bundle(goods: Iterable[int]) -> frozenset:
    return goods if isinstance(goods, frozenset) else frozenset(goods)


def _check_range(bundle: Iterable[int], m: int) -> None:
    for g in bundle:
        if not (isinstance(g, int) and 0 <= g < m):
            raise IndexError(f"good index {g!r} out of range for m={m}")


# ---------------------------------------------------------------------------
# Valuations


@dataclass(frozen=True)
class Additive:
    """v(S) is the sum of the singleton values of S."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(parse_rational(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("additive values must be non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def value(self, bundle: Iterable[int]) -> Fraction:
        vals = self.values
        return sum((vals[g] for g in bundle), Fraction(0))

    def scaled(self, factor: Fraction) -> "Additive":
        return Additive(tuple(v * factor for v in self.values))


@dataclass(frozen=True)
class KDemand:
    """v(S) is the sum of the ``k`` largest singleton values in S."""

    k: int
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        vals = tuple(parse_rational(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("k-demand values must be non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def value(self, bundle: Iterable[int]) -> Fraction:
        top = sorted((self.values[g] for g in bundle), reverse=True)[: self.k]
        return sum(top, Fraction(0))

    def scaled(self, factor: Fraction) -> "KDemand":
        return KDemand(self.k, tuple(v * factor for v in self.values))


@dataclass(frozen=True)
class MonotoneOracle:
    """Arbitrary monotone valuation given as a set function.

    ``mms_partition``, when supplied, is the agent's declared MMS partition; the
    library never tries to compute MMS for general monotone valuations.
    """

    m: int
    evaluate: Callable[[frozenset], Fraction] = field(compare=False)
    mms_partition: tuple[frozenset, ...] | None = None

    def __post_init__(self):
        if self.mms_partition is not None:
            parts = tuple(frozenset(p) for p in self.mms_partition)
            seen: set[int] = set()
            for p in parts:
                if seen & p:
                    raise ValueError("mms_partition bundles overlap")
                seen |= p
            if seen != set(range(self.m)):
                raise ValueError("mms_partition must cover every good")
            object.__setattr__(self, "mms_partition", parts)

    def value(self, bundle: Iterable[int]) -> Fraction:
        return Fraction(self.evaluate(_as_bundle(bundle)))


Valuation = Additive | KDemand | MonotoneOracle


def evaluate(valuation: Valuation, bundle: Iterable[int]) -> Fraction:
    """Value of ``bundle`` under ``valuation``; raises IndexError for unknown goods.

    >>> evaluate(Additive((2, 3, 5)), {0, 2})
    Fraction(7, 1)
    >>> evaluate(KDemand(2, (5, 4, 1)), {0, 1, 2})
    Fraction(9, 1)
    """
    bundle = _as_bundle(bundle)
    _check_range(bundle, valuation.m)
    return valuation.value(bundle)


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class Instance:
    valuations: tuple[Valuation, ...]
    agent_labels: tuple[str, ...] | None = None
    good_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = tuple(self.valuations)
        if not vals:
            raise ValueError("an instance needs at least one agent")
        m = vals[0].m
        if m < 1:
            raise ValueError("an instance needs at least one good")
        if any(v.m != m for v in vals):
            raise ValueError("all valuations must be defined over the same goods")
        object.__setattr__(self, "valuations", vals)
        if self.agent_labels is not None and len(self.agent_labels) != len(vals):
            raise ValueError("agent_labels length mismatch")
        if self.good_labels is not None and len(self.good_labels) != m:
            raise ValueError("good_labels length mismatch")

    @classmethod
    def additive(cls, values: Sequence[Sequence], **labels) -> "Instance":
        """Build an additive instance from an n-by-m table of values."""
        return cls(tuple(Additive(tuple(row)) for row in values), **labels)

    @classmethod
    def kdemand(cls, k: int | Sequence[int], values: Sequence[Sequence], **labels) -> "Instance":
        ks = [k] * len(values) if isinstance(k, int) else list(k)
        return cls(tuple(KDemand(kk, tuple(row)) for kk, row in zip(ks, values)), **labels)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return self.valuations[0].m

    @property
    def goods(self) -> frozenset:
        return frozenset(range(self.m))

    @property
    def kind(self) -> str:
        kinds = {type(v) for v in self.valuations}
        if kinds == {Additive}:
            return "additive"
        if kinds == {KDemand}:
            return "kdemand"
        if kinds == {MonotoneOracle}:
            return "monotone"
        return "mixed"

    def value(self, agent: int, bundle: Iterable[int]) -> Fraction:
        return evaluate(self.valuations[agent], bundle)

    def table(self) -> list[list[Fraction]]:
        """Singleton values as an n-by-m table (additive and k-demand only)."""
        return [list(v.values) for v in self.valuations]


# ---------------------------------------------------------------------------
# Allocations with copies


@dataclass(frozen=True)
class CopyStats:
    total_extra: int
    max_per_good: int
    duplicated: frozenset

    @property
    def distinct_copies(self) -> int:
        return len(self.duplicated)


@dataclass(frozen=True)
class CopyAllocation:
    """One bundle per agent; a good may sit in several bundles but at most once in each."""

    bundles: tuple[frozenset, ...]
    m: int

    def __post_init__(self):
        bundles = tuple(frozenset(b) for b in self.bundles)
        for b in bundles:
            _check_range(b, self.m)
        object.__setattr__(self, "bundles", bundles)

    @property
    def n(self) -> int:
        return len(self.bundles)

    def multiplicity(self) -> Counter:
        return Counter(g for b in self.bundles for g in b)

    def covers(self) -> bool:
        return set().union(*self.bundles) == set(range(self.m))

    def stats(self) -> CopyStats:
        return copy_stats(self)

    def to_json(self) -> dict:
        return {"bundles": [sorted(b) for b in self.bundles]}

    @classmethod
    def from_json(cls, data: dict, m: int) -> "CopyAllocation":
        return cls(tuple(frozenset(b) for b in data["bundles"]), m)


def copy_stats(alloc: CopyAllocation) -> CopyStats:
    """Total extra copies ``t``, worst per-good extra copies ``k`` and the duplicated goods.

    >>> copy_stats(CopyAllocation(({0, 1}, {1, 2}, {1}), m=3))
    CopyStats(total_extra=2, max_per_good=2, duplicated=frozenset({1}))
    """
    mult = alloc.multiplicity()
    extra = {g: c - 1 for g, c in mult.items() if c > 1}
    return CopyStats(
        total_extra=sum(extra.values()),
        max_per_good=max(extra.values(), default=0),
        duplicated=frozenset(extra),
    )


@dataclass(frozen=True)
class AgentCheck:
    agent: int
    value: Fraction
    target: Fraction

    @property
    def ok(self) -> bool:
        return self.value >= self.target


@dataclass(frozen=True)
class GuaranteeReport:
    agents: tuple[AgentCheck, ...]
    stats: CopyStats
    covered: bool

    @property
    def all_pass(self) -> bool:
        return all(a.ok for a in self.agents)

    @property
    def min_ratio(self) -> Fraction | None:
        """Smallest value/target over agents with a positive target."""
        ratios = [a.value / a.target for a in self.agents if a.target > 0]
        return min(ratios) if ratios else None


def verify_guarantee(
    instance: Instance, alloc: CopyAllocation, targets: Sequence[Fraction]
) -> GuaranteeReport:
    """Recompute every agent's value from scratch and compare it to ``targets``."""
    if alloc.n != instance.n or len(targets) != instance.n or alloc.m != instance.m:
        raise ValueError(
            f"dimension mismatch: instance {instance.n}x{instance.m}, "
            f"allocation {alloc.n}x{alloc.m}, {len(targets)} targets"
        )
    checks = tuple(
        AgentCheck(i, instance.value(i, alloc.bundles[i]), Fraction(targets[i]))
        for i in range(instance.n)
    )
    return GuaranteeReport(checks, copy_stats(alloc), alloc.covers())


def complete_allocation(bundles: list[set], m: int, last_agent: int | None) -> None:
    """Give every unallocated good to ``last_agent`` (in place)."""
    if last_agent is None:
        return
    allocated = set().union(*bundles) if bundles else set()
    bundles[last_agent] |= set(range(m)) - allocated


# ---------------------------------------------------------------------------
# JSON


def instance_to_json(instance) -> dict:
    from .variants import ChoreInstance

    if isinstance(instance, ChoreInstance):
        return {
            "kind": "chores",
            "n": instance.n,
            "m": instance.m,
            "values": [[format_rational(c) for c in row] for row in instance.costs],
        }
    kind = instance.kind
    if kind == "additive":
        data = {"kind": "additive", "n": instance.n, "m": instance.m}
    elif kind == "kdemand":
        ks = {v.k for v in instance.valuations}
        data = {"kind": "kdemand", "n": instance.n, "m": instance.m}
        data["k"] = ks.pop() if len(ks) == 1 else [v.k for v in instance.valuations]
    else:
        cube_n = getattr(instance, "cube_n", None)
        if cube_n is None:
            raise ValueError("only additive, k-demand, chores and cube instances serialize")
        return {"kind": "monotone-cube", "n": cube_n, "m": instance.m}
    data["values"] = [[format_rational(x) for x in v.values] for v in instance.valuations]
    return data


def instance_from_json(data: dict):
    kind = data.get("kind")
    if kind == "monotone-cube":
        from .instances import gen_cube

        inst = gen_cube(int(data["n"]))
        if "m" in data and int(data["m"]) != inst.m:
            raise ValueError("cube m must equal n**n")
        return inst
    values = [[parse_rational(x) for x in row] for row in data["values"]]
    if len(values) != int(data["n"]) or any(len(r) != int(data["m"]) for r in values):
        raise ValueError("values table does not match n and m")
    if kind == "additive":
        return Instance.additive(values)
    if kind == "kdemand":
        return Instance.kdemand(data["k"], values)
    if kind == "chores":
        from .variants import ChoreInstance

        return ChoreInstance(values)
    raise ValueError(f"unknown instance kind {kind!r}")


def load_instance(path):
    with open(path) as fh:
        return instance_from_json(json.load(fh))


def save_instance(instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_json(instance), fh, indent=1)
        fh.write("\n")
