"""Alpha-valid reduction rules on ordered instances, with an audit trace.

Positions are 0-based: position ``p`` of the current instance is its (p+1)-th
most valuable good.  Rule thresholds always use the agents' original MMS.

Rules (n agents and m goods currently remain):

* ``R_k``: the k+1 goods at positions k(n-1) .. kn go to one agent.
* ``S``: positions {0, n} go to one agent; if a second agent also values
  {0, n} enough, position 0 is duplicated and {0, n-1} goes to it.
* ``T``: {0, n} and {1, n+1} and {0, n+2} to three distinct agents, position 0
  duplicated.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from .core import PreconditionError
from .ordered import OrderedInstance


@dataclass(frozen=True)
class ReductionStep:
    rule: str
    k: int | None
    removed_agents: tuple[int, ...]
    bundles: tuple[frozenset, ...]  # ranks of the full ordered instance, aligned with removed_agents
    copies: frozenset
    agents_before: tuple[int, ...]
    goods_before: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "k": self.k,
            "removed_agents": list(self.removed_agents),
            "bundles": [sorted(b) for b in self.bundles],
            "copies": sorted(self.copies),
        }


@dataclass(frozen=True)
class ReductionTrace:
    ordered: OrderedInstance
    alpha: Fraction
    mus: tuple[Fraction, ...]
    agents: tuple[int, ...]
    goods: tuple[int, ...]  # position -> rank in the full ordered instance
    steps: tuple[ReductionStep, ...] = ()

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.goods)

    def threshold(self, agent: int) -> Fraction:
        return self.alpha * self.mus[agent]

    def value(self, agent: int, positions: Sequence[int]) -> Fraction:
        vals = self.ordered.base.valuations[agent].values
        return sum((vals[self.goods[p]] for p in positions), Fraction(0))

    def qualifies(self, agent: int, positions: Sequence[int]) -> bool:
        return self.value(agent, positions) >= self.threshold(agent)

    def awards(self) -> dict[int, frozenset]:
        return {a: b for s in self.steps for a, b in zip(s.removed_agents, s.bundles)}

    def copies(self) -> frozenset:
        return frozenset().union(*(s.copies for s in self.steps))

    def removed_count(self) -> int:
        return sum(len(s.removed_agents) for s in self.steps)

    def to_json(self) -> dict:
        return {
            "alpha": str(self.alpha),
            "steps": [s.to_json() for s in self.steps],
            "remaining_agents": list(self.agents),
            "remaining_ranks": list(self.goods),
        }


def start_trace(ordered: OrderedInstance, alpha: Fraction, mus: Sequence[Fraction],
                agents: Sequence[int] | None = None) -> ReductionTrace:
    agents = tuple(range(ordered.n)) if agents is None else tuple(agents)
    return ReductionTrace(ordered, Fraction(alpha), tuple(Fraction(x) for x in mus), agents,
                          tuple(range(ordered.m)))


def _apply(trace: ReductionTrace, rule: str, k, awards: list[tuple[int, tuple[int, ...]]],
           copied_positions: set[int]) -> ReductionTrace:
    removed_positions = set().union(*(set(p) for _, p in awards))
    step = ReductionStep(
        rule=rule,
        k=k,
        removed_agents=tuple(a for a, _ in awards),
        bundles=tuple(frozenset(trace.goods[p] for p in pos) for _, pos in awards),
        copies=frozenset(trace.goods[p] for p in copied_positions),
        agents_before=trace.agents,
        goods_before=trace.goods,
    )
    gone = set(step.removed_agents)
    return replace(
        trace,
        agents=tuple(a for a in trace.agents if a not in gone),
        goods=tuple(g for p, g in enumerate(trace.goods) if p not in removed_positions),
        steps=trace.steps + (step,),
    )


def r_positions(n: int, k: int) -> tuple[int, ...]:
    return tuple(range(k * (n - 1), n * k + 1))


def r_applicable(trace: ReductionTrace, k: int) -> int | None:
    """Lowest-index agent that R_k could serve, or None."""
    n, m = trace.n, trace.m
    if n == 0 or k * n >= m:
        return None
    pos = r_positions(n, k)
    for a in trace.agents:
        if trace.qualifies(a, pos):
            return a
    return None


def is_r_irreducible(trace: ReductionTrace, ks: Sequence[int] | None = None) -> bool:
    if trace.n == 0:
        return True
    ks = range(-(-trace.m // trace.n)) if ks is None else ks
    return all(r_applicable(trace, k) is None for k in ks)


def try_R(trace: ReductionTrace, k: int) -> ReductionTrace | None:
    """Apply R_k if some agent values its block enough; ``None`` if not applicable."""
    if trace.n and k * trace.n >= trace.m:
        raise PreconditionError(f"R_{k} needs k < m/n (m={trace.m}, n={trace.n})")
    agent = r_applicable(trace, k)
    if agent is None:
        return None
    return _apply(trace, "R", k, [(agent, r_positions(trace.n, k))], set())


def try_S(trace: ReductionTrace) -> ReductionTrace | None:
    """Apply S if applicable; requires an R_1-irreducible instance."""
    if trace.alpha > 1:
        raise PreconditionError("S is only valid for alpha <= 1")
    if not is_r_irreducible(trace, [1]):
        raise PreconditionError("S needs an R_1-irreducible instance")
    n, m = trace.n, trace.m
    if n == 0 or m < n + 1:
        return None
    first = (0, n)
    i = next((a for a in trace.agents if trace.qualifies(a, first)), None)
    if i is None:
        return None
    j = next((a for a in trace.agents if a != i and trace.qualifies(a, first)), None)
    if j is None:
        return _apply(trace, "S", None, [(i, first)], set())
    return _apply(trace, "S", None, [(i, first), (j, (0, n - 1))], {0})


def try_T(trace: ReductionTrace) -> ReductionTrace | None:
    """Apply T if three distinct agents qualify; requires alpha <= 4/5."""
    if trace.alpha > Fraction(4, 5):
        raise PreconditionError("T is only valid for alpha <= 4/5")
    if not is_r_irreducible(trace, [0, 1]):
        raise PreconditionError("T needs an instance irreducible for R_0 and R_1")
    n, m = trace.n, trace.m
    if n < 3 or m < n + 3:
        return None
    b1, b2, b3 = (0, n), (1, n + 1), (0, n + 2)
    for i, j, l in itertools.permutations(trace.agents, 3):
        if trace.qualifies(i, b1) and trace.qualifies(j, b2) and trace.qualifies(l, b3):
            return _apply(trace, "T", None, [(i, b1), (j, b2), (l, b3)], {0})
    return None


def r_reduce(trace: ReductionTrace) -> ReductionTrace:
    """Apply R_k, lowest applicable k first, until none applies."""
    while True:
        for k in itertools.count():
            if trace.n == 0 or k * trace.n >= trace.m:
                return trace
            nxt = try_R(trace, k)
            if nxt is not None:
                trace = nxt
                break


def s_reduce(trace: ReductionTrace) -> ReductionTrace:
    trace = r_reduce(trace)
    while (nxt := try_S(trace)) is not None:
        trace = r_reduce(nxt)
    return trace


def t_reduce(trace: ReductionTrace) -> ReductionTrace:
    trace = r_reduce(trace)
    while (nxt := try_T(trace)) is not None:
        trace = r_reduce(nxt)
    return trace


def irreducibility_bound_holds(trace: ReductionTrace) -> bool:
    """On an R-irreducible instance, position nk is worth < alpha*mu/(k+1) to everyone."""
    n, m = trace.n, trace.m
    for k in range(-(-m // n) if n else 0):
        if k * n >= m:
            break
        for a in trace.agents:
            if trace.value(a, [n * k]) * (k + 1) >= trace.threshold(a):
                return False
    return True
