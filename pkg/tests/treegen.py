"""Seeded random finite interaction trees for law testing.

Kept outside the package: the law harness in csptree.laws has its own
generator; this one stays independent so the two can cross-check."""

import random

from csptree.finmap import FinMap
from csptree.itree import ITree, Silent, Visible, now, ret
from csptree.values import Event, IntV

EVENTS = [Event(c) for c in ("a", "b", "c", "d")]


def random_tree(rng: random.Random, depth: int = 5) -> ITree:
    if depth == 0:
        return ret(IntV(rng.randrange(3)))
    kind = rng.random()
    if kind < 0.3:
        return ret(IntV(rng.randrange(3)))
    if kind < 0.55:
        child = random_tree(rng, depth - 1)
        return Silent(lambda: child)
    events = rng.sample(EVENTS, rng.randrange(0, len(EVENTS)) + 0)
    entries = []
    for e in events:
        child = random_tree(rng, depth - 1)
        entries.append((e, now(child)))
    return Visible(FinMap(entries))
