"""Lazy interaction trees.

An interaction tree is a potentially infinite tree with three node kinds:
``Return`` terminates with a value, ``Silent`` takes one internal step and
continues, and ``Visible`` offers a finite, ordered menu of events each
leading to a deferred child.  Children are zero-argument suspensions so
infinite trees (loops, divergence) cost nothing until observed; a forced
suspension is memoised, which is an optimisation only -- no behaviour may
depend on it.

``observe`` strips internal steps up to a budget and reports what the
environment can see next.  ``approx_eq`` is the bounded structural
equality used as the law-testing oracle: it compares unfoldings down to a
constructor depth, treating menu order as a presentation detail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from .finmap import FinMap
from .values import Event, Value


class Thunk:
    """Memoising zero-argument suspension of an ITree."""

    __slots__ = ("fn", "value")

    def __init__(self, fn):
        self.fn = fn
        self.value = None

    def force(self) -> "ITree":
        if self.fn is not None:
            self.value = self.fn()
            self.fn = None
        return self.value


def defer(fn: Callable[[], "ITree"]) -> Thunk:
    return Thunk(fn)


def now(tree: "ITree") -> Thunk:
    t = Thunk(None)
    t.value = tree
    return t


class ITree:
    __slots__ = ()


class Return(ITree):
    __slots__ = ("value",)

    def __init__(self, value: Value):
        self.value = value

    def __repr__(self):
        return f"Return({self.value!r})"


class Silent(ITree):
    __slots__ = ("_next",)

    def __init__(self, nxt):
        self._next = nxt if isinstance(nxt, Thunk) else defer(nxt)

    @property
    def next(self) -> ITree:
        return self._next.force()

    def __repr__(self):
        return "Silent(...)"


class Visible(ITree):
    """A menu: FinMap from Event to Thunk[ITree], in presentation order."""

    __slots__ = ("choices",)

    def __init__(self, choices: FinMap):
        self.choices = choices

    def events(self) -> List[Event]:
        return self.choices.domain()

    def child(self, e: Event) -> ITree:
        return self.choices.lookup(e).force()

    def __repr__(self):
        return f"Visible({[e.channel for e in self.events()]})"


def ret(v: Value) -> ITree:
    return Return(v)


def stop() -> ITree:
    return Visible(FinMap())


def div() -> ITree:
    return Silent(lambda: div())


def run(events) -> ITree:
    evs = list(events)
    return Visible(FinMap((e, defer(lambda: run(evs))) for e in evs))


def bind(p: ITree, k: Callable[[Value], ITree]) -> ITree:
    if isinstance(p, Return):
        return k(p.value)
    if isinstance(p, Silent):
        return Silent(lambda: bind(p.next, k))
    if isinstance(p, Visible):
        return Visible(
            p.choices.map_values(
                lambda e, t: defer(lambda t=t: bind(t.force(), k))
            )
        )
    raise TypeError(f"not an ITree: {p!r}")


def then(p: ITree, q: Callable[[], ITree]) -> ITree:
    """Sequential composition discarding p's return value."""
    return bind(p, lambda _v: q())


def iterate(cond: Callable[[Value], bool], body: Callable[[Value], ITree], s: Value) -> ITree:
    if cond(s):
        return Silent(lambda: bind(body(s), lambda s2: iterate(cond, body, s2)))
    return Return(s)


def loop(body: Callable[[Value], ITree], s: Value) -> ITree:
    return iterate(lambda _s: True, body, s)


@dataclass(frozen=True)
class Observation:
    """What the environment sees after internal steps are compressed."""

    kind: str  # "terminated" | "choices" | "stuck" | "tau_budget"
    value: Optional[Value] = None
    events: Tuple[Event, ...] = ()
    taus: int = 0


DEFAULT_TAU_BUDGET = 10_000


def tau_closure(p: ITree, tau_budget: int = DEFAULT_TAU_BUDGET) -> Tuple[ITree, int]:
    """Strip up to tau_budget Silent layers; returns the resting node and
    the number of steps taken.  Forces at most tau_budget+1 nodes."""
    taus = 0
    while isinstance(p, Silent):
        if taus >= tau_budget:
            return p, taus
        p = p.next
        taus += 1
    return p, taus


def observe(p: ITree, tau_budget: int = DEFAULT_TAU_BUDGET) -> Observation:
    if tau_budget <= 0:
        raise ValueError("tau_budget must be positive")
    node, taus = tau_closure(p, tau_budget)
    if isinstance(node, Silent):
        return Observation("tau_budget", taus=taus)
    if isinstance(node, Return):
        return Observation("terminated", value=node.value, taus=taus)
    events = node.events()
    if not events:
        return Observation("stuck", taus=taus)
    return Observation("choices", events=tuple(events), taus=taus)


def approx_eq(p: ITree, q: ITree, depth: int) -> bool:
    """Structural equality of unfoldings truncated at ``depth`` constructor
    layers.  Visible domains compare as sets (order is presentation), but
    each event's continuation must match."""
    if depth <= 0:
        return True
    if isinstance(p, Return) and isinstance(q, Return):
        return p.value == q.value
    if isinstance(p, Silent) and isinstance(q, Silent):
        return approx_eq(p.next, q.next, depth - 1)
    if isinstance(p, Visible) and isinstance(q, Visible):
        pd, qd = p.events(), q.events()
        if set(pd) != set(qd) or len(pd) != len(qd):
            return False
        return all(approx_eq(p.child(e), q.child(e), depth - 1) for e in pd)
    return False
