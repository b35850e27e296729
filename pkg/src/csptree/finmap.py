"""Finite maps, finite relations and indexed renaming sequences.

Finite maps back the visible-choice nodes of interaction trees, so their
iteration order is load-bearing: it is the order the animator presents
events in.  They are ordered association lists with unique keys; lookup is
linear, which is fine at animator scale.

``RenSeq`` is the priority structure for renaming: a finite sequence of
(source, target) pairs where a lower position means a higher priority.
``dresl`` restricts it to a source set and squashes the indices back to a
compact sequence, and ``drop_dup`` keeps, for every target, only the
highest-priority pair mapping onto it.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, List, Sequence, Set, Tuple, TypeVar

K = TypeVar("K")
V = TypeVar("V")


class DuplicateKeyError(ValueError):
    pass


class FinMap:
    """Ordered association list with pairwise-distinct keys."""

    __slots__ = ("entries", "_index")

    def __init__(self, entries: Iterable[Tuple[K, V]] = ()):
        self.entries: List[Tuple[K, V]] = list(entries)
        index = {}
        for k, _ in self.entries:
            if k in index:
                raise DuplicateKeyError(f"duplicate key {k!r}")
            index[k] = True
        self._index = index

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Tuple[K, V]]:
        return iter(self.entries)

    def __contains__(self, key) -> bool:
        return key in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinMap):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self) -> str:
        return f"FinMap({self.entries!r})"

    def is_empty(self) -> bool:
        return not self.entries

    def domain(self) -> List[K]:
        return [k for k, _ in self.entries]

    def get(self, key, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def lookup(self, key):
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)

    def map_values(self, fn: Callable[[K, V], V]) -> "FinMap":
        return FinMap((k, fn(k, v)) for k, v in self.entries)

    def override(self, other: "FinMap") -> "FinMap":
        """Relational overriding: agrees with ``other`` on its domain and
        with self elsewhere.  Keeps self's order for surviving keys, then
        appends the other map's entries in its own order."""
        out = [(k, other.lookup(k) if k in other else v) for k, v in self.entries]
        out.extend((k, v) for k, v in other.entries if k not in self)
        return FinMap(out)

    def merge_excl(self, other: "FinMap") -> "FinMap":
        """Deterministic choice merge: union of both maps with any key
        offered by both sides dropped entirely."""
        out = [(k, v) for k, v in self.entries if k not in other]
        out.extend((k, v) for k, v in other.entries if k not in self)
        return FinMap(out)

    def dom_restrict(self, keys: Set[K]) -> "FinMap":
        return FinMap((k, v) for k, v in self.entries if k in keys)

    def dom_anti_restrict(self, keys: Set[K]) -> "FinMap":
        return FinMap((k, v) for k, v in self.entries if k not in keys)


class FinRel:
    """Finite relation as an ordered list of unique (source, target) pairs."""

    __slots__ = ("pairs",)

    def __init__(self, pairs: Iterable[Tuple[K, V]] = ()):
        out = []
        seen = set()
        for p in pairs:
            pt = (p[0], p[1])
            if pt in seen:
                raise DuplicateKeyError(f"duplicate pair {pt!r}")
            seen.add(pt)
            out.append(pt)
        self.pairs: List[Tuple[K, V]] = out

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, FinRel):
            return NotImplemented
        return self.pairs == other.pairs

    def __repr__(self):
        return f"FinRel({self.pairs!r})"

    def dom(self) -> List[K]:
        return [a for a, _ in self.pairs]

    def ran(self) -> List[V]:
        return [b for _, b in self.pairs]

    def dom_restrict(self, keys: Set[K]) -> "FinRel":
        return FinRel((a, b) for a, b in self.pairs if a in keys)

    def dom_anti_restrict(self, keys: Set[K]) -> "FinRel":
        return FinRel((a, b) for a, b in self.pairs if a not in keys)

    def inverse(self) -> "FinRel":
        return FinRel((b, a) for a, b in self.pairs)

    def mk_functional(self) -> "FinRel":
        return FinRel(mk_functional_pairs(self.pairs))


def mk_functional_pairs(pairs: Sequence[Tuple[K, V]]) -> List[Tuple[K, V]]:
    """Maximal functional subrelation: keep (x, y) iff x maps to no other
    target anywhere in the relation."""
    out = []
    for x, y in pairs:
        if all(y2 == y for x2, y2 in pairs if x2 == x):
            out.append((x, y))
    return out


class RenSeq:
    """Indexed sequence of renaming pairs; position is priority."""

    __slots__ = ("items",)

    def __init__(self, items: Iterable[Tuple[K, V]] = ()):
        out = []
        seen = set()
        for p in items:
            pt = (p[0], p[1])
            if pt in seen:
                raise DuplicateKeyError(f"duplicate renaming pair {pt!r}")
            seen.add(pt)
            out.append(pt)
        self.items: List[Tuple[K, V]] = out

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __eq__(self, other):
        if not isinstance(other, RenSeq):
            return NotImplemented
        return self.items == other.items

    def __repr__(self):
        return f"RenSeq({self.items!r})"

    def dresl(self, sources: Set[K]) -> "RenSeq":
        return RenSeq(dresl_pairs(self.items, sources))

    def drop_dup(self) -> "RenSeq":
        return RenSeq(drop_dup_pairs(self.items))

    def ran_rel(self) -> FinRel:
        return FinRel(self.items)


def dresl_pairs(items: Sequence[Tuple[K, V]], sources: Set[K]) -> List[Tuple[K, V]]:
    """Domain restriction followed by a squash: retained pairs keep their
    relative order and are re-indexed compactly."""
    return [p for p in items if p[0] in sources]


def drop_dup_pairs(items: Sequence[Tuple[K, V]]) -> List[Tuple[K, V]]:
    """Keep an item iff no earlier item shares its target."""
    out = []
    seen = set()
    for p in items:
        b = p[1]
        if b not in seen:
            seen.add(b)
            out.append(p)
    return out
