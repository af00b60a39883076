"""Bipartite matching helpers for the Match-n-Fill family."""
from __future__ import annotations

from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx
from networkx.algorithms import bipartite


def max_matching(left: Sequence[Hashable], adj: Mapping[Hashable, Iterable[Hashable]]) -> dict:
    """Maximum bipartite matching (Hopcroft-Karp); returns ``{left: right}``.

    >>> max_matching(["a", "b"], {"a": [1, 2], "b": [1]})
    {'a': 2, 'b': 1}
    """
    graph = nx.Graph()
    tops = [("L", u) for u in left]
    graph.add_nodes_from(tops)
    for u in left:
        graph.add_edges_from((("L", u), ("R", w)) for w in adj.get(u, ()))
    matched = bipartite.hopcroft_karp_matching(graph, top_nodes=tops)
    return {u: matched[("L", u)][1] for u in left if ("L", u) in matched}


def is_matchable(left: Sequence[Hashable], adj: Mapping) -> bool:
    """Whether every vertex of ``left`` can be matched simultaneously."""
    return len(max_matching(left, adj)) == len(left)


def minimal_hall_violator(left: Sequence[Hashable], adj: Mapping) -> list | None:
    """An inclusion-minimal subset of ``left`` with fewer neighbours than members.

    Returns ``None`` when ``left`` is fully matchable.  A deficient set is first
    read off the alternating tree of an unmatched vertex, then shrunk one
    element at a time while it stays unmatchable, so every proper subset of the
    result is matchable.
    """
    matching = max_matching(left, adj)
    free = [u for u in left if u not in matching]
    if not free:
        return None
    match_right = {w: u for u, w in matching.items()}
    reached = [free[0]]
    seen_left = {free[0]}
    frontier = [free[0]]
    while frontier:
        u = frontier.pop()
        for w in adj.get(u, ()):
            nxt = match_right.get(w)
            if nxt is not None and nxt not in seen_left:
                seen_left.add(nxt)
                reached.append(nxt)
                frontier.append(nxt)
    order = {u: idx for idx, u in enumerate(left)}
    violator = sorted(reached, key=order.__getitem__)
    shrunk = True
    while shrunk:
        shrunk = False
        for u in list(violator):
            rest = [x for x in violator if x != u]
            if rest and not is_matchable(rest, adj):
                violator = rest
                shrunk = True
                break
    return violator
