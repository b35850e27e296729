"""Bounded core types and their deterministic enumerations.

Numbers are bounded by a CoreConfig (reals are modelled as bounded
integers, matching how the models are instantiated for analysis), and
every type in the universe enumerates to a finite, duplicate-free,
stably-ordered list of values.  Arithmetic is closed: a result outside
the configured range blocks whatever guard or communication needed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .values import (
    BoolV,
    EnumV,
    FALSE,
    IntV,
    ListV,
    PrimV,
    RecV,
    TupleV,
    UNIT,
    Value,
)


class ModelError(Exception):
    """Malformed model file or configuration."""


class UnboundedTypeError(ModelError):
    pass


@dataclass(frozen=True)
class CoreConfig:
    min_int: int = -2
    max_int: int = 2
    max_nat: int = 2
    min_real: int = 0
    max_real: int = 1

    def __post_init__(self):
        if not (self.min_int <= 0 <= self.max_int):
            raise ModelError("min_int <= 0 <= max_int required")
        if self.max_nat < 0:
            raise ModelError("max_nat must be non-negative")
        if self.min_real > self.max_real:
            raise ModelError("min_real <= max_real required")

    def with_overrides(self, overrides: Dict[str, int]) -> "CoreConfig":
        known = {"min_int", "max_int", "max_nat", "min_real", "max_real"}
        bad = set(overrides) - known
        if bad:
            raise ModelError(f"unknown config keys: {sorted(bad)}")
        vals = {k: getattr(self, k) for k in known}
        vals.update(overrides)
        return CoreConfig(**vals)

    def range_of(self, kind: str) -> Tuple[int, int]:
        if kind == "int":
            return self.min_int, self.max_int
        if kind == "nat":
            return 0, self.max_nat
        if kind == "real":
            return self.min_real, self.max_real
        raise ModelError(f"not a numeric core type: {kind}")


# Type references:  "int" | "nat" | "real" | "bool" | "unit" | a declared
# type name | {"seq": name-or-ref, "bound": n} | {"tuple": [refs]}
TypeRef = object


@dataclass
class TypeDecl:
    kind: str  # "prim" | "enum" | "record"
    name: str
    card: int = 0
    literals: List[str] = field(default_factory=list)
    fields: List[Tuple[str, TypeRef]] = field(default_factory=list)


class TypeTable:
    def __init__(self, decls: List[TypeDecl]):
        self.decls: Dict[str, TypeDecl] = {}
        for d in decls:
            if d.name in self.decls:
                raise ModelError(f"duplicate type {d.name}")
            self.decls[d.name] = d

    def decl(self, name: str) -> TypeDecl:
        if name not in self.decls:
            raise ModelError(f"unknown type {name!r}")
        return self.decls[name]


def enumerate_type(tref: TypeRef, types: TypeTable, cfg: CoreConfig) -> List[Value]:
    """Deterministic, duplicate-free enumeration of a type's values."""
    if isinstance(tref, str):
        if tref == "unit":
            return [UNIT]
        if tref == "bool":
            return [FALSE, BoolV(True)]
        if tref in ("int", "nat", "real"):
            lo, hi = cfg.range_of(tref)
            return [IntV(n) for n in range(lo, hi + 1)]
        decl = types.decl(tref)
        if decl.kind == "prim":
            return [PrimV(decl.name, i) for i in range(decl.card)]
        if decl.kind == "enum":
            return [EnumV(decl.name, lit) for lit in decl.literals]
        if decl.kind == "record":
            out = [()]
            for _fname, ftype in decl.fields:
                vals = enumerate_type(ftype, types, cfg)
                out = [prev + (v,) for prev in out for v in vals]
            return [RecV(decl.name, fields) for fields in out]
        raise ModelError(f"unknown type kind {decl.kind}")
    if isinstance(tref, dict) and "seq" in tref:
        bound = tref.get("bound")
        if not isinstance(bound, int) or bound < 0:
            raise UnboundedTypeError(f"sequence type needs a bound: {tref!r}")
        elems = enumerate_type(tref["seq"], types, cfg)
        out: List[Value] = []
        layer: List[Tuple[Value, ...]] = [()]
        out.append(ListV(bound, ()))
        for _ in range(bound):
            layer = [prev + (v,) for prev in layer for v in elems]
            out.extend(ListV(bound, items) for items in layer)
        return out
    if isinstance(tref, dict) and "tuple" in tref:
        out = [()]
        for part in tref["tuple"]:
            vals = enumerate_type(part, types, cfg)
            out = [prev + (v,) for prev in out for v in vals]
        return [TupleV(items) for items in out]
    raise ModelError(f"bad type reference {tref!r}")


def default_value(tref: TypeRef, types: TypeTable, cfg: CoreConfig) -> Value:
    """Initial value of a variable: 0 for numbers, the first literal for
    enumerations and primitives, empty for sequences, defaults fieldwise
    for records."""
    if isinstance(tref, str):
        if tref == "unit":
            return UNIT
        if tref == "bool":
            return FALSE
        if tref in ("int", "nat", "real"):
            lo, hi = cfg.range_of(tref)
            return IntV(min(max(0, lo), hi))
        decl = types.decl(tref)
        if decl.kind == "prim":
            return PrimV(decl.name, 0)
        if decl.kind == "enum":
            return EnumV(decl.name, decl.literals[0])
        if decl.kind == "record":
            return RecV(
                decl.name,
                tuple(default_value(ft, types, cfg) for _f, ft in decl.fields),
            )
    if isinstance(tref, dict) and "seq" in tref:
        return ListV(tref["bound"], ())
    if isinstance(tref, dict) and "tuple" in tref:
        return TupleV(tuple(default_value(p, types, cfg) for p in tref["tuple"]))
    raise ModelError(f"bad type reference {tref!r}")
