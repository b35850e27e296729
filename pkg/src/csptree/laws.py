"""Randomised checking of the operator algebra.

Generates finite trees over a tiny event universe and checks the unit,
zero, commutativity, converse and monad laws through bounded structural
equality.  This is the engine behind the ``laws`` CLI command; the pytest
suite runs the same checks plus the worked micro-examples.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import List, Optional

from .finmap import FinMap
from .itree import ITree, Return, Silent, Visible, approx_eq, bind, div, now, ret, stop
from .ops import (
    MergeFn,
    converse,
    extchoice,
    genchoice,
    merge_excl,
    merge_override,
)
from .values import Event, IntV

EVENTS = [Event(c) for c in ("a", "b", "c", "d")]


def random_tree(rng: random.Random, depth: int = 5) -> ITree:
    if depth == 0:
        return ret(IntV(rng.randrange(3)))
    k = rng.random()
    if k < 0.3:
        return ret(IntV(rng.randrange(3)))
    if k < 0.55:
        child = random_tree(rng, depth - 1)
        return Silent(lambda: child)
    events = rng.sample(EVENTS, rng.randrange(len(EVENTS) + 1))
    return Visible(FinMap((e, now(random_tree(rng, depth - 1))) for e in events))


def broken_merge(f: FinMap, g: FinMap) -> FinMap:
    """Deliberately ill-formed merge (drops the left map); for exercising
    the failure path of the law runner."""
    return g


def render(tree: ITree, depth: int = 4) -> str:
    """Small bounded printer for counterexample trees."""
    if depth == 0:
        return "..."
    if isinstance(tree, Return):
        from .values import text

        return f"Ret({text(tree.value)})"
    if isinstance(tree, Silent):
        return f"tau {render(tree.next, depth - 1)}"
    inner = ", ".join(
        f"{e.channel}->{render(tree.child(e), depth - 1)}" for e in tree.events()
    )
    return "Vis{" + inner + "}"


@dataclass
class LawFailure:
    law: str
    case: int
    detail: str = ""


@dataclass
class LawRunResult:
    cases: int
    checked: int = 0
    failures: List[LawFailure] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.failures


def run_laws(
    seed: int,
    cases: int,
    depth: int = 5,
    eq_depth: int = 10,
    merge: Optional[MergeFn] = None,
) -> LawRunResult:
    if cases <= 0:
        raise ValueError("cases must be positive")
    merge = merge if merge is not None else merge_excl
    rng = random.Random(seed)
    result = LawRunResult(cases)

    operands: List[ITree] = []

    def check(law: str, i: int, cond: bool, detail: str = ""):
        result.checked += 1
        if not cond:
            if not detail:
                detail = " vs ".join(render(t) for t in operands)
            result.failures.append(LawFailure(law, i, detail))

    ks = [
        lambda v: ret(v),
        lambda v: Silent(lambda: ret(v)),
        lambda v: Visible(FinMap([(EVENTS[0], now(ret(v)))])),
    ]
    for i in range(cases):
        p = random_tree(rng, depth)
        q = random_tree(rng, depth)
        operands[:] = [p, q]
        check("stop-unit-right", i, approx_eq(genchoice(p, merge, stop()), p, eq_depth))
        check("stop-unit-left", i, approx_eq(genchoice(stop(), merge, p), p, eq_depth))
        check("div-zero-right", i, approx_eq(genchoice(p, merge, div()), div(), eq_depth))
        check("div-zero-left", i, approx_eq(genchoice(div(), merge, p), div(), eq_depth))
        check(
            "extchoice-commutative", i, approx_eq(extchoice(p, q), extchoice(q, p), eq_depth)
        )
        check(
            "converse-merge",
            i,
            approx_eq(
                genchoice(p, merge_override, q),
                genchoice(q, converse(merge_override), p),
                eq_depth,
            ),
        )
        k1, k2 = ks[i % 3], ks[(i + 1) % 3]
        v = IntV(i % 3)
        check("bind-left-unit", i, approx_eq(bind(ret(v), k1), k1(v), eq_depth))
        check("bind-right-unit", i, approx_eq(bind(p, ret), p, eq_depth))
        check(
            "bind-assoc",
            i,
            approx_eq(
                bind(bind(p, k1), k2), bind(p, lambda x: bind(k1(x), k2)), eq_depth
            ),
        )
        if isinstance(p, Silent):
            check(
                "tau-priority",
                i,
                isinstance(extchoice(p, q), Silent),
                "choice exposed a visible node before consuming the tau",
            )
    return result
