"""Closed value universe carried on events.

Every value a process can communicate lives in this tagged union: unit,
booleans, bounded numbers, enumeration literals, opaque primitive-type
elements, records, bounded lists, tuples, a direction tag for connection
ends, and state/transition identifiers used on internal flow channels.
All variants are immutable and hashable so they can key finite maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple


class Value:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class UnitV(Value):
    def __repr__(self):
        return "UnitV()"


@dataclass(frozen=True, slots=True)
class BoolV(Value):
    flag: bool


@dataclass(frozen=True, slots=True)
class IntV(Value):
    n: int


@dataclass(frozen=True, slots=True)
class EnumV(Value):
    type_id: str
    literal: str


@dataclass(frozen=True, slots=True)
class PrimV(Value):
    """Element of an opaque primitive type with a finite cardinality."""

    type_id: str
    index: int


@dataclass(frozen=True, slots=True)
class RecV(Value):
    type_id: str
    fields: Tuple[Value, ...]


@dataclass(frozen=True, slots=True)
class ListV(Value):
    bound: int
    items: Tuple[Value, ...]


@dataclass(frozen=True, slots=True)
class TupleV(Value):
    items: Tuple[Value, ...]


@dataclass(frozen=True, slots=True)
class DirV(Value):
    """Connection direction tag; d is "din" or "dout"."""

    d: str


@dataclass(frozen=True, slots=True)
class SidV(Value):
    name: str


@dataclass(frozen=True, slots=True)
class TidV(Value):
    name: str


UNIT = UnitV()
TRUE = BoolV(True)
FALSE = BoolV(False)
DIN = DirV("din")
DOUT = DirV("dout")


def text(v: Value) -> str:
    """Canonical printable form: tuples parenthesised, lists bracketed,
    directions capitalised, enum literals qualified by their type id."""
    if isinstance(v, UnitV):
        return "()"
    if isinstance(v, BoolV):
        return "true" if v.flag else "false"
    if isinstance(v, IntV):
        return str(v.n)
    if isinstance(v, EnumV):
        return f"{v.type_id}_{v.literal}"
    if isinstance(v, PrimV):
        return str(v.index)
    if isinstance(v, RecV):
        return "(" + ",".join(text(f) for f in v.fields) + ")"
    if isinstance(v, ListV):
        return "[" + ",".join(text(x) for x in v.items) + "]"
    if isinstance(v, TupleV):
        return "(" + ",".join(text(x) for x in v.items) + ")"
    if isinstance(v, DirV):
        return "Din" if v.d == "din" else "Dout"
    if isinstance(v, (SidV, TidV)):
        return v.name
    raise TypeError(f"not a Value: {v!r}")


def to_json(v: Value):
    """JSON-friendly encoding used by the session protocol."""
    if isinstance(v, UnitV):
        return {"unit": True}
    if isinstance(v, BoolV):
        return {"bool": v.flag}
    if isinstance(v, IntV):
        return {"int": v.n}
    if isinstance(v, EnumV):
        return {"enum": [v.type_id, v.literal]}
    if isinstance(v, PrimV):
        return {"prim": [v.type_id, v.index]}
    if isinstance(v, RecV):
        return {"record": [v.type_id, [to_json(f) for f in v.fields]]}
    if isinstance(v, ListV):
        return {"list": [to_json(x) for x in v.items], "bound": v.bound}
    if isinstance(v, TupleV):
        return {"tuple": [to_json(x) for x in v.items]}
    if isinstance(v, DirV):
        return {"dir": v.d}
    if isinstance(v, SidV):
        return {"sid": v.name}
    if isinstance(v, TidV):
        return {"tid": v.name}
    raise TypeError(f"not a Value: {v!r}")


@dataclass(frozen=True)
class Event:
    """A channel name paired with a payload value.

    Channel names containing "@" are scope-internal and never shown to a
    user; display channels are plain identifiers like ``Cal_PatrolMod``.
    """

    channel: str
    value: Value = UNIT
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((self.channel, self.value)))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Event):
            return NotImplemented
        return (
            self._h == other._h
            and self.channel == other.channel
            and self.value == other.value
        )

    def __repr__(self):
        return f"Event({self.channel!r}, {self.value!r})"


def event_text(e: Event) -> str:
    return f"{e.channel} {text(e.value)}"
