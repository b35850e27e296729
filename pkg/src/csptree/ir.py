"""Model intermediate representation and file ingestion.

A model file is a UTF-8 JSON document with top-level keys ``config``,
``types``, ``functions`` and ``module``, mirroring this IR one to one.
Loading validates structure and cross-references and reports problems
with a JSON-pointer-ish location.  Listing order in the file is
semantically meaningful: transition order is the nondeterminism-resolution
priority, and machine/controller order fixes menu presentation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .coretypes import CoreConfig, ModelError, TypeDecl, TypeRef, TypeTable
from .exprs import SpecFunction


class ParseError(ModelError):
    def __init__(self, msg: str, where: str = ""):
        super().__init__(f"{where}: {msg}" if where else msg)
        self.where = where


@dataclass
class EventDecl:
    name: str
    type: Optional[TypeRef]  # None for unit-typed signal events


@dataclass
class VarDecl:
    name: str
    type: TypeRef


@dataclass
class ConstDecl:
    name: str
    type: TypeRef
    value: dict  # literal expression


@dataclass
class Trigger:
    kind: str  # "simple" | "input" | "output" | "sync"
    event: str
    binder: Optional[str] = None  # input
    expr: Optional[dict] = None  # output / sync


@dataclass
class Transition:
    name: str
    source: str
    target: str
    trigger: Optional[Trigger] = None
    guard: Optional[dict] = None
    action: List[dict] = field(default_factory=list)


@dataclass
class Node:
    kind: str  # "initial" | "state" | "final"
    name: str
    entry: List[dict] = field(default_factory=list)
    during: List[dict] = field(default_factory=list)
    exit: List[dict] = field(default_factory=list)


@dataclass
class StateMachineDef:
    name: str
    variables: List[VarDecl] = field(default_factory=list)
    required: List[str] = field(default_factory=list)  # shared variable names
    constants: List[ConstDecl] = field(default_factory=list)
    events: List[EventDecl] = field(default_factory=list)
    nodes: List[Node] = field(default_factory=list)
    transitions: List[Transition] = field(default_factory=list)

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ModelError(f"{self.name}: unknown node {name!r}")

    def states(self) -> List[Node]:
        return [n for n in self.nodes if n.kind in ("state", "final")]

    def initial(self) -> Node:
        return next(n for n in self.nodes if n.kind == "initial")


@dataclass
class OperationDef:
    name: str
    params: List[VarDecl]
    constants: List[ConstDecl] = field(default_factory=list)
    machine: Optional[StateMachineDef] = None


@dataclass
class Connection:
    src: Tuple[str, str]  # (component, event)
    dst: Tuple[str, str]
    async_: bool = False


@dataclass
class ControllerDef:
    name: str
    events: List[EventDecl] = field(default_factory=list)
    machines: List[StateMachineDef] = field(default_factory=list)
    operations: List[OperationDef] = field(default_factory=list)
    connections: List[Connection] = field(default_factory=list)

    def machine(self, name: str) -> StateMachineDef:
        for m in self.machines:
            if m.name == name:
                return m
        raise ModelError(f"{self.name}: unknown machine {name!r}")


@dataclass
class PlatformDef:
    events: List[EventDecl] = field(default_factory=list)
    variables: List[VarDecl] = field(default_factory=list)
    operations: List[OperationDef] = field(default_factory=list)


@dataclass
class ModuleDef:
    name: str
    display_suffix: bool
    platform: PlatformDef
    controllers: List[ControllerDef]
    connections: List[Connection]

    def controller(self, name: str) -> ControllerDef:
        for c in self.controllers:
            if c.name == name:
                return c
        raise ModelError(f"unknown controller {name!r}")


@dataclass
class ModelIR:
    config: CoreConfig
    types: TypeTable
    functions: Dict[str, SpecFunction]
    module: ModuleDef


# -- parsing ----------------------------------------------------------------


def _typeref(raw, where: str) -> TypeRef:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, dict) and ("seq" in raw or "tuple" in raw):
        return raw
    raise ParseError(f"bad type reference {raw!r}", where)


def _event_decl(raw, where) -> EventDecl:
    t = raw.get("type")
    return EventDecl(raw["name"], _typeref(t, where) if t is not None else None)


def _var_decl(raw, where) -> VarDecl:
    return VarDecl(raw["name"], _typeref(raw["type"], where))


def _const_decl(raw, where) -> ConstDecl:
    return ConstDecl(raw["name"], _typeref(raw["type"], where), raw["value"])


def _trigger(raw, where) -> Trigger:
    kind = raw["kind"]
    if kind not in ("simple", "input", "output", "sync"):
        raise ParseError(f"bad trigger kind {kind!r}", where)
    return Trigger(kind, raw["event"], raw.get("binder"), raw.get("expr"))


def _machine(raw, where) -> StateMachineDef:
    nodes = [
        Node(
            n["kind"],
            n["name"],
            list(n.get("entry", [])),
            list(n.get("during", [])),
            list(n.get("exit", [])),
        )
        for n in raw.get("nodes", [])
    ]
    transitions = [
        Transition(
            t["name"],
            t["source"],
            t["target"],
            _trigger(t["trigger"], f"{where}.{t['name']}") if t.get("trigger") else None,
            t.get("guard"),
            list(t.get("action", [])),
        )
        for t in raw.get("transitions", [])
    ]
    return StateMachineDef(
        raw["name"],
        [_var_decl(v, where) for v in raw.get("variables", [])],
        list(raw.get("required", [])),
        [_const_decl(c, where) for c in raw.get("constants", [])],
        [_event_decl(e, where) for e in raw.get("events", [])],
        nodes,
        transitions,
    )


def _operation(raw, where) -> OperationDef:
    return OperationDef(
        raw["name"],
        [_var_decl(p, f"{where}.params") for p in raw.get("params", [])],
        [_const_decl(c, where) for c in raw.get("constants", [])],
        _machine(raw["machine"], f"{where}.machine") if raw.get("machine") else None,
    )


def _connection(raw, where) -> Connection:
    return Connection(tuple(raw["from"]), tuple(raw["to"]), bool(raw.get("async", False)))


def parse_model(data: bytes | str, config_overrides: Optional[Dict[str, int]] = None) -> ModelIR:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}", "document")
    for key in ("config", "types", "module"):
        if key not in doc:
            raise ParseError(f"missing top-level key {key!r}", "document")

    cfg = CoreConfig(**doc["config"])
    if config_overrides:
        cfg = cfg.with_overrides(config_overrides)

    types = TypeTable(
        [
            TypeDecl(
                t["kind"],
                t["name"],
                card=t.get("card", 0),
                literals=list(t.get("literals", [])),
                fields=[(f["name"], _typeref(f["type"], t["name"])) for f in t.get("fields", [])],
            )
            for t in doc["types"]
        ]
    )

    functions = {}
    for f in doc.get("functions", []):
        fn = SpecFunction(
            f["name"],
            [(p["name"], _typeref(p["type"], f["name"])) for p in f.get("params", [])],
            _typeref(f["result"], f["name"]),
            list(f.get("pre", [])),
            list(f.get("post", [])),
        )
        if fn.name in functions:
            raise ParseError(f"duplicate function {fn.name}", "functions")
        functions[fn.name] = fn

    m = doc["module"]
    platform_raw = m.get("platform", {})
    platform = PlatformDef(
        [_event_decl(e, "platform") for e in platform_raw.get("events", [])],
        [_var_decl(v, "platform") for v in platform_raw.get("variables", [])],
        [_operation(o, "platform") for o in platform_raw.get("operations", [])],
    )
    controllers = [
        ControllerDef(
            c["name"],
            [_event_decl(e, c["name"]) for e in c.get("events", [])],
            [_machine(mm, f"{c['name']}.{mm['name']}") for mm in c.get("machines", [])],
            [_operation(o, f"{c['name']}.ops") for o in c.get("operations", [])],
            [_connection(x, c["name"]) for x in c.get("connections", [])],
        )
        for c in m.get("controllers", [])
    ]
    module = ModuleDef(
        m["name"],
        bool(m.get("display_suffix", False)),
        platform,
        controllers,
        [_connection(x, "module") for x in m.get("connections", [])],
    )
    ir = ModelIR(cfg, types, functions, module)
    validate(ir)
    return ir


def load_model(path, config_overrides=None) -> ModelIR:
    with open(path, "rb") as fh:
        return parse_model(fh.read(), config_overrides)


# -- validation ---------------------------------------------------------------


def _validate_machine(ir: ModelIR, stm: StateMachineDef, shared: Dict[str, VarDecl], where: str):
    initials = [n for n in stm.nodes if n.kind == "initial"]
    if len(initials) != 1:
        raise ParseError(f"need exactly one initial junction, found {len(initials)}", where)
    init_out = [t for t in stm.transitions if t.source == initials[0].name]
    if len(init_out) != 1:
        raise ParseError(
            f"initial junction needs exactly one outgoing transition, found {len(init_out)}",
            where,
        )
    if init_out[0].trigger is not None:
        raise ParseError("initial transition cannot have a trigger", where)
    node_names = {n.name for n in stm.nodes}
    event_names = {e.name for e in stm.events}
    var_names = {v.name for v in stm.variables} | set(stm.required) | {
        c.name for c in stm.constants
    }
    for v in stm.required:
        if v not in shared:
            raise ParseError(f"required variable {v!r} is not provided anywhere", where)
    for t in stm.transitions:
        if t.source not in node_names or t.target not in node_names:
            raise ParseError(f"transition {t.name} references unknown node", where)
        if stm.node(t.target).kind == "initial":
            raise ParseError(f"transition {t.name} targets the initial junction", where)
        if t.trigger:
            if t.trigger.event not in event_names:
                raise ParseError(
                    f"transition {t.name} trigger uses undeclared event {t.trigger.event!r}",
                    where,
                )
            if t.trigger.kind == "input":
                if not t.trigger.binder or t.trigger.binder not in var_names:
                    raise ParseError(
                        f"transition {t.name} input trigger binder undeclared", where
                    )


def _check_typeref(ir: ModelIR, tref: TypeRef, where: str):
    if isinstance(tref, str):
        if tref in ("int", "nat", "real", "bool", "unit"):
            return
        try:
            ir.types.decl(tref)
        except ModelError as exc:
            raise ParseError(str(exc), where)
        return
    if isinstance(tref, dict) and "seq" in tref:
        _check_typeref(ir, tref["seq"], where)
        return
    if isinstance(tref, dict) and "tuple" in tref:
        for part in tref["tuple"]:
            _check_typeref(ir, part, where)
        return
    raise ParseError(f"bad type reference {tref!r}", where)


def _check_machine_types(ir: ModelIR, stm: StateMachineDef, where: str):
    for v in stm.variables:
        _check_typeref(ir, v.type, where)
    for c in stm.constants:
        _check_typeref(ir, c.type, where)
    for e in stm.events:
        if e.type is not None:
            _check_typeref(ir, e.type, where)


def validate(ir: ModelIR):
    mod = ir.module
    shared = {v.name: v for v in mod.platform.variables}
    comp_names = {"RP"} | {c.name for c in mod.controllers}
    for f in ir.functions.values():
        for _p, t in f.params:
            _check_typeref(ir, t, f.name)
        _check_typeref(ir, f.result, f.name)
    for v in mod.platform.variables:
        _check_typeref(ir, v.type, "platform")
    for e in mod.platform.events:
        if e.type is not None:
            _check_typeref(ir, e.type, "platform")
    for op in mod.platform.operations:
        for p in op.params:
            _check_typeref(ir, p.type, f"platform.{op.name}")
    for conn in mod.connections:
        for end in (conn.src, conn.dst):
            if end[0] not in comp_names:
                raise ParseError(f"connection references unknown component {end[0]!r}", "module")
    for c in mod.controllers:
        machine_names = {m.name for m in c.machines}
        for conn in c.connections:
            for end in (conn.src, conn.dst):
                if end[0] not in machine_names and end[0] != "this":
                    raise ParseError(
                        f"connection references unknown machine {end[0]!r}", c.name
                    )
        for stm in c.machines:
            _check_machine_types(ir, stm, f"{c.name}.{stm.name}")
            _validate_machine(ir, stm, shared, f"{c.name}.{stm.name}")
        for op in c.operations:
            if op.machine is not None:
                for p in op.params:
                    _check_typeref(ir, p.type, f"{c.name}.{op.name}")
                _check_machine_types(ir, op.machine, f"{c.name}.{op.name}")
                _validate_machine(ir, op.machine, shared, f"{c.name}.{op.name}")
