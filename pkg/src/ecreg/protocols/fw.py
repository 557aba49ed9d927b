"""Response-selection search for reads that retry until they can return.

The reader accumulates a pool ``L`` of responses over iterations (several
per server are possible). It may return tag ``t`` if some selection of at
least ``N - f`` responses, at most one per server, has ``t`` decodable and
satisfies one of:

  (i)   ``t`` appears in at least ``f + 1`` selected responses,
  (ii)  at most ``nu`` distinct selected tags are strictly above ``t``,
  (iii) ``t >= gamma`` (the largest tag seen in the first iteration).

Rather than enumerating selections, each candidate is decided exactly:
every server that ever answered with ``t`` is selected with that answer
(this only helps decodability and (i), and never adds a tag above ``t``),
servers with some answer below ``t`` are free, and the remaining slots are
filled from servers whose answers are all above ``t`` by picking the
smallest set of higher tags that covers enough of them.
"""

from __future__ import annotations

from itertools import combinations
from typing import Mapping

from ..core import CodedSymbol, Replica, SystemParams, Tag
from .base import Entry

Pool = Mapping[int, list[Entry]]


def min_higher_tags(forced: list[set[Tag]], need: int, limit: int) -> int | None:
    """Fewest distinct tags ``H`` with at least ``need`` sets meeting ``H``; None if > limit."""
    if need <= 0:
        return 0
    if need > len(forced):
        return None
    universe = sorted(set().union(*forced))
    for size in range(1, min(limit, len(universe)) + 1):
        for h in combinations(universe, size):
            hs = set(h)
            if sum(1 for opts in forced if opts & hs) >= need:
                return size
    return None


def tag_admissible(pool: Pool, t: Tag, params: SystemParams, gamma: Tag | None) -> bool:
    holders = {s for s, entries in pool.items() if any(e[0] == t for e in entries)}
    replica = any(isinstance(p, Replica) for s in holders for (u, p) in pool[s] if u == t)
    coded_idx = {p.index for s in holders for (u, p) in pool[s] if u == t and isinstance(p, CodedSymbol)}
    if not (replica or len(coded_idx) >= params.k):
        return False
    if len(pool) < params.quorum:
        return False
    if gamma is not None and t >= gamma:
        return True
    if len(holders) >= params.f + 1:
        return True
    others = [s for s in pool if s not in holders]
    low = {s for s in others if any(u < t for u, _ in pool[s])}
    forced = [{u for u, _ in pool[s]} for s in others if s not in low]
    need = params.quorum - len(holders) - len(low)
    return min_higher_tags(forced, need, params.nu) is not None


def select_tag(pool: Pool, params: SystemParams, gamma: Tag | None) -> Tag | None:
    """Largest admissible tag over all selections from ``pool``, or None."""
    tags = sorted({u for entries in pool.values() for u, _ in entries}, reverse=True)
    for t in tags:
        if tag_admissible(pool, t, params, gamma):
            return t
    return None


def pool_entries(pool: Pool, tag: Tag) -> list[Entry]:
    """One entry per server for ``tag``, preferring replicas."""
    out = []
    for entries in pool.values():
        mine = [e for e in entries if e[0] == tag]
        if mine:
            mine.sort(key=lambda e: not isinstance(e[1], Replica))
            out.append(mine[0])
    return out
