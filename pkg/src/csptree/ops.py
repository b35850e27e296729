"""Deterministic CSP operators over interaction trees.

Every operator here is corecursive: it inspects only the head constructors
of its operands and defers the rest, so all of them work on infinite
trees.  Pattern order encodes priority; in particular internal steps are
always consumed before visible activity (maximal progress), with the left
operand's step taken first when both are silent.

Determinism is preserved by construction: the choice merge drops events
offered by both sides, renaming blocks many-to-one conflicts (or resolves
them by sequence priority in the prioritised variant), hiding silences at
most one event per step, and the parallel merge drops an off-synchronised
event that both sides offer.
"""

from __future__ import annotations

from typing import Callable, FrozenSet, Iterable, Sequence

from .finmap import FinMap, RenSeq, mk_functional_pairs
from .itree import ITree, Return, Silent, Visible, defer, ret, stop
from .values import Event, TupleV, UNIT, Value

MergeFn = Callable[[FinMap, FinMap], FinMap]


def merge_excl(f: FinMap, g: FinMap) -> FinMap:
    return f.merge_excl(g)


def merge_override(f: FinMap, g: FinMap) -> FinMap:
    return f.override(g)


def converse(m: MergeFn) -> MergeFn:
    return lambda f, g: m(g, f)


def is_well_formed_merge(m: MergeFn, samples: Iterable[FinMap]) -> bool:
    """Spot-check that the empty map is a two-sided identity of m."""
    empty = FinMap()
    for f in samples:
        if m(empty, f) != f or m(f, empty) != f:
            return False
    return True


def genchoice(p: ITree, merge: MergeFn, q: ITree) -> ITree:
    if isinstance(p, Silent):
        return Silent(lambda: genchoice(p.next, merge, q))
    if isinstance(q, Silent):
        return Silent(lambda: genchoice(p, merge, q.next))
    if isinstance(p, Visible) and isinstance(q, Visible):
        return Visible(merge(p.choices, q.choices))
    if isinstance(p, Return) and isinstance(q, Return):
        return p if p.value == q.value else stop()
    if isinstance(p, Return):
        return p
    return q


def extchoice(p: ITree, q: ITree) -> ITree:
    return genchoice(p, merge_excl, q)


def extchoice_biased(p: ITree, q: ITree) -> ITree:
    """Overlapping initial events resolve to p's continuation."""
    return genchoice(q, merge_override, p)


def extchoice_all(ps: Sequence[ITree]) -> ITree:
    out = stop()
    for p in ps:
        out = extchoice(out, p)
    return out


def inp(channel: str, values: Iterable[Value]) -> ITree:
    return Visible(
        FinMap(
            (Event(channel, v), defer(lambda v=v: ret(v))) for v in values
        )
    )


def outp(channel: str, v: Value) -> ITree:
    return Visible(FinMap([(Event(channel, v), defer(lambda: ret(UNIT)))]))


def guard(b: bool) -> ITree:
    return ret(UNIT) if b else stop()


def parallel(p: ITree, sync: FrozenSet[Event], q: ITree) -> ITree:
    if isinstance(p, Silent):
        return Silent(lambda: parallel(p.next, sync, q))
    if isinstance(q, Silent):
        return Silent(lambda: parallel(p, sync, q.next))
    if isinstance(p, Visible) and isinstance(q, Visible):
        f, g = p.choices, q.choices
        entries = []
        for e, pt in f:
            if e in sync:
                gt = g.get(e)
                if gt is not None:
                    entries.append(
                        (e, defer(lambda pt=pt, gt=gt: parallel(pt.force(), sync, gt.force())))
                    )
                # a sync event one side refuses is blocked
            else:
                if e in g:
                    continue  # both offer it outside the sync set: dropped
                entries.append((e, defer(lambda pt=pt: parallel(pt.force(), sync, q))))
        for e, gt in g:
            if e in sync or e in f:
                continue
            entries.append((e, defer(lambda gt=gt: parallel(p, sync, gt.force()))))
        return Visible(FinMap(entries))
    if isinstance(p, Return) and isinstance(q, Return):
        return ret(TupleV((p.value, q.value)))
    if isinstance(p, Return):
        g = q.choices.dom_anti_restrict(sync)
        return Visible(g.map_values(lambda e, t: defer(lambda t=t: parallel(p, sync, t.force()))))
    f = p.choices.dom_anti_restrict(sync)
    return Visible(f.map_values(lambda e, t: defer(lambda t=t: parallel(t.force(), sync, q))))


def interleave(p: ITree, q: ITree) -> ITree:
    return parallel(p, frozenset(), q)


def hide(p: ITree, hidden: FrozenSet[Event]) -> ITree:
    if isinstance(p, Return):
        return p
    if isinstance(p, Silent):
        return Silent(lambda: hide(p.next, hidden))
    enabled = [e for e in p.choices.domain() if e in hidden]
    if len(enabled) == 1:
        t = p.choices.lookup(enabled[0])
        return Silent(lambda: hide(t.force(), hidden))
    if not enabled:
        return Visible(
            p.choices.map_values(lambda e, t: defer(lambda t=t: hide(t.force(), hidden)))
        )
    return stop()


def hidep(p: ITree, order: Sequence[Event]) -> ITree:
    """Hide events one at a time in list order: the left fold of
    single-event hiding, fused into one pass.  Earlier events in the list
    are made urgent first, so the order resolves choices deterministically."""
    order = list(order)
    if not order:
        return p
    if len(set(order)) != len(order):
        raise ValueError("hide list must not repeat events")

    def go(node: ITree) -> ITree:
        if isinstance(node, Return):
            return node
        if isinstance(node, Silent):
            return Silent(lambda: go(node.next))
        menu = node.choices
        for e in order:
            if e in menu:
                t = menu.lookup(e)
                return Silent(lambda: go(t.force()))
        return Visible(menu.map_values(lambda e, t: defer(lambda t=t: go(t.force()))))

    return go(p)


def rename(p: ITree, rho) -> ITree:
    """Relational renaming; events outside the relation are blocked and
    many-to-one conflicts on enabled events are dropped."""
    pairs = list(rho)

    def go(node: ITree) -> ITree:
        if isinstance(node, Return):
            return node
        if isinstance(node, Silent):
            return Silent(lambda: go(node.next))
        menu = node.choices
        dom = set(menu.domain())
        restricted = [(a, b) for a, b in pairs if a in dom]
        inv = [(b, a) for a, b in restricted]
        functional = mk_functional_pairs(inv)
        entries = []
        for b, a in functional:
            t = menu.lookup(a)
            entries.append((b, defer(lambda t=t: go(t.force()))))
        return Visible(FinMap(entries))

    return go(p)


def renamep(p: ITree, seq: RenSeq) -> ITree:
    """Renaming with priority: many-to-one conflicts resolve in favour of
    the lowest-index pair of the sequence; unlisted events are blocked."""

    def go(node: ITree) -> ITree:
        if isinstance(node, Return):
            return node
        if isinstance(node, Silent):
            return Silent(lambda: go(node.next))
        menu = node.choices
        dom = set(menu.domain())
        kept = seq.dresl(dom).drop_dup()
        inv = [(b, a) for a, b in kept]
        functional = mk_functional_pairs(inv)
        entries = []
        for b, a in functional:
            t = menu.lookup(a)
            entries.append((b, defer(lambda t=t: go(t.force()))))
        return Visible(FinMap(entries))

    return go(p)


def interrupt(p: ITree, q: ITree) -> ITree:
    if isinstance(p, Silent):
        return Silent(lambda: interrupt(p.next, q))
    if isinstance(q, Silent):
        return Silent(lambda: interrupt(p, q.next))
    if isinstance(p, Return):
        return p
    if isinstance(q, Return):
        return q
    f, g = p.choices, q.choices
    keep = f.dom_anti_restrict(set(g.domain()))
    entries = [
        (e, defer(lambda t=t: interrupt(t.force(), q))) for e, t in keep
    ]
    entries.extend(g.entries)
    return Visible(FinMap(entries))


def exception(p: ITree, switch: FrozenSet[Event], handler: Callable[[], ITree]) -> ITree:
    if isinstance(p, Return):
        return p
    if isinstance(p, Silent):
        return Silent(lambda: exception(p.next, switch, handler))
    entries = []
    for e, t in p.choices:
        if e in switch:
            entries.append((e, defer(handler)))
        else:
            entries.append((e, defer(lambda t=t: exception(t.force(), switch, handler))))
    return Visible(FinMap(entries))
