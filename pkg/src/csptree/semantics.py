"""Compositional compiler from a model IR to an interaction tree.

The compilation follows a strict scope discipline: every machine,
controller and the module own a distinct channel namespace, and crossing
a scope boundary is always an explicit prioritised renaming.  Each scope
composes its children in parallel with a memory process and hides what
the enclosing scope must not see.

Determinism policy, in one place:
  * transition priority is the order transitions appear in the model
    file (the trigger renaming sequence is built in that order, so a
    many-to-one rename conflict resolves to the earliest transition);
  * hidden events are listed per scope in declaration order, with reads
    (get) listed before writes (set), which fixes how internal races
    between a stale read and a pending write resolve;
  * parallel composition drops an off-synchronised event offered by both
    sides rather than choosing one.

Shared variables are plain copies: each machine memory caches the
variables it requires, a write travels up to the owning scope's memory in
the same synchronisation, and the new value is propagated back down one
scope at a time.  The propagation is deliberately not atomic; menus can
be computed from a stale copy, which is observable behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .coretypes import CoreConfig, ModelError, TypeRef, TypeTable, default_value, enumerate_type
from .exprs import EvalBlocked, Evaluator, free_vars
from .finmap import FinMap, RenSeq
from .ir import (
    Connection,
    ControllerDef,
    ModelIR,
    ModuleDef,
    Node,
    OperationDef,
    StateMachineDef,
    Transition,
)
from .itree import ITree, Thunk, Visible, defer, ret, stop, then
from .ops import exception, extchoice_all, hidep, interrupt, parallel, renamep
from .values import (
    DIN,
    DOUT,
    DirV,
    Event,
    SidV,
    TidV,
    TupleV,
    UNIT,
    Value,
)

SKIP = ret(UNIT)


def _cap(name: str) -> str:
    return name[0].upper() + name[1:] if name else name


def _payload(direction: DirV, val: Optional[Value]) -> Value:
    return direction if val is None else TupleV((direction, val))


@dataclass
class MachineCtx:
    """Everything needed to compile one machine (plus its defined-operation
    bodies, which share the machine's channel scope and memory)."""

    stm: StateMachineDef
    scope: str
    types: TypeTable
    cfg: CoreConfig
    ev: Evaluator
    consts: Dict[str, Value]
    var_types: Dict[str, TypeRef]  # locals, required and mangled op params
    local_vars: List[str]  # hidden at machine level (incl. op params)
    shared_vars: List[str]
    event_types: Dict[str, Optional[TypeRef]]
    transitions: List[Transition]  # machine + mangled op transitions
    op_defs: Dict[str, OperationDef] = field(default_factory=dict)
    platform_ops: List[OperationDef] = field(default_factory=list)

    # -- channels -------------------------------------------------------

    def ch(self, base: str) -> str:
        return f"{base}@{self.scope}"

    def e_internal(self, tid: str) -> Event:
        return Event(self.ch("internal"), TidV(tid))

    def e_terminate(self, sub: str = "") -> Event:
        return Event(self.ch(f"terminate{sub}"), UNIT)

    def e_flow(self, kind: str, a: str, b: str) -> Event:
        return Event(self.ch(kind), TupleV((SidV(a), SidV(b))))

    def e_get(self, var: str, val: Value) -> Event:
        return Event(self.ch(f"get_{var}"), val)

    def e_set(self, var: str, val: Value) -> Event:
        return Event(self.ch(f"set_{var}"), val)

    def e_setext(self, var: str, val: Value) -> Event:
        return Event(self.ch(f"setext_{var}"), val)

    def e_trig(self, event: str, tid: str, d: DirV, val: Optional[Value]) -> Event:
        items: Tuple[Value, ...] = (TidV(tid), d)
        if val is not None:
            items += (val,)
        return Event(self.ch(f"{event}_"), TupleV(items))

    def e_act(self, event: str, d: DirV, val: Optional[Value]) -> Event:
        return Event(self.ch(event), _payload(d, val))

    def e_opcall(self, op: str, args: Value) -> Event:
        return Event(self.ch(f"call_{op}"), args)

    # -- values -----------------------------------------------------------

    def enum(self, tref: TypeRef) -> List[Value]:
        return enumerate_type(tref, self.types, self.cfg)

    def event_values(self, event: str) -> List[Optional[Value]]:
        t = self.event_types[event]
        return [None] if t is None else list(self.enum(t))

    def initial_store(self) -> Dict[str, Value]:
        return {
            v: default_value(t, self.types, self.cfg) for v, t in self.var_types.items()
        }

    def env(self, store: Dict[str, Value]) -> Dict[str, Value]:
        return {**self.consts, **store}


def build_machine_ctx(
    ir: ModelIR,
    ctrl: ControllerDef,
    stm: StateMachineDef,
    evaluator: Evaluator,
) -> MachineCtx:
    scope = f"{ctrl.name}.{stm.name}"
    consts: Dict[str, Value] = {}

    def add_consts(decls, prefix=""):
        for c in decls:
            consts[prefix + c.name] = evaluator.eval(c.value, consts)

    add_consts(stm.constants)

    var_types: Dict[str, TypeRef] = {v.name: v.type for v in stm.variables}
    local_vars = [v.name for v in stm.variables]
    shared_vars = list(stm.required)
    platform_vars = {v.name: v.type for v in ir.module.platform.variables}
    for v in stm.required:
        var_types[v] = platform_vars[v]
    event_types: Dict[str, Optional[TypeRef]] = {e.name: e.type for e in stm.events}
    transitions = list(stm.transitions)

    op_defs: Dict[str, OperationDef] = {}
    for op in ctrl.operations:
        if op.machine is None:
            continue
        op_defs[op.name] = op
        add_consts(op.constants, prefix=f"{op.name}.")
        for p in op.params:
            var_types[f"{op.name}.{p.name}"] = p.type
            local_vars.append(f"{op.name}.{p.name}")
        for v in op.machine.variables:
            var_types[f"{op.name}.{v.name}"] = v.type
            local_vars.append(f"{op.name}.{v.name}")

    return MachineCtx(
        stm=stm,
        scope=scope,
        types=ir.types,
        cfg=ir.config,
        ev=evaluator,
        consts=consts,
        var_types=var_types,
        local_vars=local_vars,
        shared_vars=shared_vars,
        event_types=event_types,
        transitions=transitions,
        op_defs=op_defs,
        platform_ops=list(ir.module.platform.operations),
    )


# -- memory -------------------------------------------------------------------


def machine_memory(ctx: MachineCtx, store: Dict[str, Value]) -> ITree:
    """One looping process per machine serving reads, writes, external
    updates and per-transition trigger availability, all recomputed from
    the current store on every round."""

    def cont(new_store: Dict[str, Value]) -> Thunk:
        return defer(lambda: machine_memory(ctx, new_store))

    stay = cont(store)
    entries: List[Tuple[Event, Thunk]] = []
    for var, tref in ctx.var_types.items():
        entries.append((ctx.e_get(var, store[var]), stay))
        for val in ctx.enum(tref):
            entries.append((ctx.e_set(var, val), cont({**store, var: val})))
        if var in ctx.shared_vars:
            for val in ctx.enum(tref):
                entries.append((ctx.e_setext(var, val), cont({**store, var: val})))
    env = ctx.env(store)
    for t in ctx.transitions:
        entries.extend(
            (e, stay) for e in _memory_trigger_events(ctx, t, env)
        )
    return Visible(FinMap(entries))


def _memory_trigger_events(ctx: MachineCtx, t: Transition, env) -> List[Event]:
    tr = t.trigger
    if tr is None:
        if ctx.ev.guard_holds(t.guard, env):
            return [ctx.e_internal(t.name)]
        return []
    if tr.kind == "simple":
        if ctx.ev.guard_holds(t.guard, env):
            return [ctx.e_trig(tr.event, t.name, DIN, None)]
        return []
    if tr.kind == "input":
        out = []
        for val in ctx.event_values(tr.event):
            bound = {**env, tr.binder: val}
            if ctx.ev.guard_holds(t.guard, bound):
                out.append(ctx.e_trig(tr.event, t.name, DIN, val))
        return out
    # output/sync: guard first, then the computed value
    if not ctx.ev.guard_holds(t.guard, env):
        return []
    try:
        val = ctx.ev.eval(tr.expr, env) if tr.expr is not None else None
    except EvalBlocked:
        return []
    d = DOUT if tr.kind == "output" else DIN
    return [ctx.e_trig(tr.event, t.name, d, val)]


# -- actions -------------------------------------------------------------


def _read_chain(ctx: MachineCtx, names: List[str], env: Dict[str, Value], k) -> ITree:
    if not names:
        return k(env)
    var, rest = names[0], names[1:]
    entries = [
        (
            ctx.e_get(var, val),
            defer(lambda val=val: _read_chain(ctx, rest, {**env, var: val}, k)),
        )
        for val in ctx.enum(ctx.var_types[var])
    ]
    return Visible(FinMap(entries))


def _with_reads(ctx: MachineCtx, exprs: List[dict], k) -> ITree:
    names = set()
    for e in exprs:
        if e is not None:
            names |= free_vars(e)
    reads = [v for v in ctx.var_types if v in names]
    return _read_chain(ctx, reads, dict(ctx.consts), k)


def compile_actions(ctx: MachineCtx, actions: Sequence[dict], k: Callable[[], ITree]) -> ITree:
    if not actions:
        return k()
    head, rest = actions[0], actions[1:]
    tail = lambda: compile_actions(ctx, rest, k)
    if "assign" in head:
        var, expr = head["assign"]
        if var not in ctx.var_types:
            raise ModelError(f"{ctx.scope}: assignment to undeclared variable {var!r}")

        def do_assign(env):
            try:
                val = ctx.ev.eval(expr, env)
            except EvalBlocked:
                return stop()
            return then(outp_event(ctx.e_set(var, val)), tail)

        return _with_reads(ctx, [expr], do_assign)
    if "output" in head:
        parts = head["output"]
        event = parts[0]
        expr = parts[1] if len(parts) > 1 else None

        def do_output(env):
            if expr is None:
                val = None
            else:
                try:
                    val = ctx.ev.eval(expr, env)
                except EvalBlocked:
                    return stop()
            return then(outp_event(ctx.e_act(event, DOUT, val)), tail)

        return _with_reads(ctx, [expr] if expr else [], do_output)
    if "input" in head:
        event, binder = head["input"]
        entries = [
            (
                ctx.e_act(event, DIN, val),
                defer(
                    lambda val=val: then(outp_event(ctx.e_set(binder, val)), tail)
                    if val is not None
                    else tail()
                ),
            )
            for val in ctx.event_values(event)
        ]
        return Visible(FinMap(entries))
    if "call" in head:
        op_name, args = head["call"]
        if op_name in ctx.op_defs:
            return _compile_defined_call(ctx, ctx.op_defs[op_name], args, tail)

        def do_call(env):
            vals = []
            for a in args:
                try:
                    vals.append(ctx.ev.eval(a, env))
                except EvalBlocked:
                    return stop()
            payload = _args_value(tuple(vals))
            return then(outp_event(ctx.e_opcall(op_name, payload)), tail)

        return _with_reads(ctx, list(args), do_call)
    raise ModelError(f"{ctx.scope}: bad action {head!r}")


def outp_event(e: Event) -> ITree:
    return Visible(FinMap([(e, defer(lambda: SKIP))]))


def _compile_defined_call(ctx: MachineCtx, op: OperationDef, args: Sequence[dict], k) -> ITree:
    def with_args(env):
        vals = []
        for a in args:
            try:
                vals.append(ctx.ev.eval(a, env))
            except EvalBlocked:
                return stop()

        def set_params(i: int) -> ITree:
            if i == len(vals):
                return then(_operation_body(ctx, op), k)
            pname = f"{op.name}.{op.params[i].name}"
            return then(outp_event(ctx.e_set(pname, vals[i])), lambda: set_params(i + 1))

        return set_params(0)

    return _with_reads(ctx, list(args), with_args)


# -- transitions and states ---------------------------------------------------


def compile_trigger(ctx: MachineCtx, t: Transition, prefix: str) -> ITree:
    tr = t.trigger
    tid = prefix + t.name
    if tr is None:
        return outp_event(ctx.e_internal(tid))
    if tr.kind == "simple":
        return outp_event(ctx.e_trig(tr.event, tid, DIN, None))
    if tr.kind == "input":
        entries = [
            (
                ctx.e_trig(tr.event, tid, DIN, val),
                defer(lambda val=val: outp_event(ctx.e_set(_mangle(prefix, tr.binder), val))),
            )
            for val in ctx.event_values(tr.event)
        ]
        return Visible(FinMap(entries))
    # output/sync triggers: offer every value, the memory pins the real one
    d = DOUT if tr.kind == "output" else DIN
    entries = [
        (ctx.e_trig(tr.event, tid, d, val), defer(lambda: SKIP))
        for val in ctx.event_values(tr.event)
    ]
    return Visible(FinMap(entries))


def _mangle(prefix: str, var: str) -> str:
    return f"{prefix}{var}" if prefix else var


def _mangled_actions(prefix: str, actions: Sequence[dict]) -> Sequence[dict]:
    """Operation bodies refer to params/locals by bare name; rewrite the
    variable references into the caller's name-mangled namespace."""
    if not prefix:
        return actions
    rw = lambda e: _mangle_expr_vars(prefix, e)
    out = []
    for a in actions:
        if "assign" in a:
            var, expr = a["assign"]
            out.append({"assign": [f"{prefix}{var}", rw(expr)]})
        elif "output" in a:
            parts = a["output"]
            out.append({"output": [parts[0]] + [rw(x) for x in parts[1:]]})
        elif "input" in a:
            event, binder = a["input"]
            out.append({"input": [event, f"{prefix}{binder}"]})
        elif "call" in a:
            op, args = a["call"]
            out.append({"call": [op, [rw(x) for x in args]]})
        else:
            out.append(a)
    return out


def _args_value(vals: Tuple[Value, ...]) -> Value:
    if not vals:
        return UNIT
    if len(vals) == 1:
        return vals[0]
    return TupleV(vals)


@dataclass
class _MachinePieces:
    """Node-level building blocks for one machine (or operation body)."""

    ctx: MachineCtx
    stm: StateMachineDef
    prefix: str  # "" for the machine itself, "op." for operation bodies
    terminate_evt: Optional[Event] = None

    def terminate_event(self) -> Event:
        return self.terminate_evt if self.terminate_evt is not None else self.ctx.e_terminate()

    def sid(self, node_name: str) -> str:
        return f"{self.prefix}{node_name}"

    def sid_stm(self) -> str:
        return f"{self.prefix}{self.stm.name}"

    def all_sids(self) -> List[str]:
        return [self.sid_stm()] + [self.sid(s.name) for s in self.stm.states()]

    def flow(self, kind: str, a: str, b: str) -> Event:
        return self.ctx.e_flow(kind, a, b)

    def transitions_from(self, state: str) -> List[Transition]:
        return [t for t in self.stm.transitions if t.source == state]

    def trigger_transitions(self) -> List[Transition]:
        return [t for t in self.stm.transitions if t.trigger is not None]

    # -- transition bodies ------------------------------------------------

    def transition_tail(self, t: Transition, src_state: Node) -> ITree:
        """Everything after the trigger: exit, exit action, exited, the
        transition action, then entering the target."""
        ctx, pre = self.ctx, self.prefix
        src, tgt = self.sid(t.source), self.sid(t.target)
        self_loop = t.source == t.target

        def after_action() -> ITree:
            if self_loop:
                return outp_event(self.flow("enter", src, tgt))
            return then(
                outp_event(self.flow("enter", src, tgt)),
                lambda: outp_event(self.flow("entered", src, tgt)),
            )

        def action() -> ITree:
            return compile_actions(
                ctx, _mangled_actions(pre, t.action), after_action
            )

        def exited() -> ITree:
            return then(outp_event(self.flow("exited", src, src)), action)

        def exit_action() -> ITree:
            return compile_actions(
                ctx, _mangled_actions(pre, src_state.exit), exited
            )

        return then(outp_event(self.flow("exit", src, src)), exit_action)

    def junction_process(self) -> ITree:
        init = self.stm.initial()
        t = next(tr for tr in self.stm.transitions if tr.source == init.name)
        tid = self.prefix + t.name
        tgt = self.sid(t.target)
        src = self.sid_stm()

        def enter() -> ITree:
            return then(
                outp_event(self.flow("enter", src, tgt)),
                lambda: outp_event(self.flow("entered", src, tgt)),
            )

        return then(
            outp_event(self.ctx.e_internal(tid)),
            lambda: compile_actions(self.ctx, _mangled_actions(self.prefix, t.action), enter),
        )

    # -- states ----------------------------------------------------------

    def state_process(self, s: Node) -> ITree:
        ctx = self.ctx
        me = self.sid(s.name)
        others = [x for x in self.all_sids() if x != me]

        if s.kind == "final":
            term = self.terminate_event()

            def final_round() -> ITree:
                entries = [
                    (
                        self.flow("enter", x, me),
                        defer(
                            lambda x=x: then(
                                outp_event(self.flow("entered", x, me)),
                                lambda: then(outp_event(term), final_round),
                            )
                        ),
                    )
                    for x in others
                ]
                return Visible(FinMap(entries))

            return final_round()

        self_ts = [t for t in self.transitions_from(s.name) if t.target == s.name]
        other_ts = [t for t in self.transitions_from(s.name) if t.target != s.name]
        own_tids = {self.prefix + t.name for t in self.transitions_from(s.name)}

        def round_of(enterer: str) -> ITree:
            """One iteration: entry action, entered, then the during action
            interruptible by this state's transitions.  A self-transition
            re-enters the iteration without a fresh enter handshake."""

            def body() -> ITree:
                during = compile_actions(
                    ctx,
                    _mangled_actions(self.prefix, s.during),
                    lambda: stop(),
                )
                branches: List[ITree] = []
                for t in self_ts:
                    branches.append(
                        then(
                            then(
                                compile_trigger(ctx, t, self.prefix),
                                lambda t=t: self.transition_tail(t, s),
                            ),
                            lambda: round_of(me),
                        )
                    )
                for t in other_ts:
                    branches.append(
                        then(
                            then(
                                compile_trigger(ctx, t, self.prefix),
                                lambda t=t: self.transition_tail(t, s),
                            ),
                            lambda: outer(),
                        )
                    )
                branches.extend(self._interrupting_branches(s, own_tids, outer))
                return interrupt(during, extchoice_all(branches))

            entered_evt = self.flow("entered", enterer, me)
            return compile_actions(
                ctx,
                _mangled_actions(self.prefix, s.entry),
                lambda: then(outp_event(entered_evt), body),
            )

        def outer() -> ITree:
            entries = [
                (
                    self.flow("enter", x, me),
                    defer(lambda x=x: round_of(x)),
                )
                for x in others
            ]
            return Visible(FinMap(entries))

        return outer()

    def _interrupting_branches(self, s: Node, own_tids, outer) -> List[ITree]:
        """Third trigger group: transitions able to interrupt this state
        from an enclosing scope.  Vacuous for flat machines, where every
        foreign transition belongs to a sibling and is blocked by the
        restricted composition."""
        ctx = self.ctx
        me = self.sid(s.name)
        others = [x for x in self.all_sids() if x != me]
        by_event: Dict[str, List[Tuple[str, Optional[Value], DirV]]] = {}
        for t in self.trigger_transitions():
            tid = self.prefix + t.name
            if tid in own_tids:
                continue
            d = DOUT if t.trigger.kind == "output" else DIN
            for val in ctx.event_values(t.trigger.event):
                by_event.setdefault(t.trigger.event, []).append((tid, val, d))
        out = []
        for event, combos in by_event.items():
            entries = []
            for tid, val, d in combos:
                def after(_=None, event=event):
                    exits = [
                        (
                            self.flow("exit", x, me),
                            defer(
                                lambda x=x: compile_actions(
                                    ctx,
                                    _mangled_actions(self.prefix, s.exit),
                                    lambda x=x: then(
                                        outp_event(self.flow("exited", x, me)),
                                        outer,
                                    ),
                                )
                            ),
                        )
                        for x in others
                    ]
                    return Visible(FinMap(exits))

                entries.append((ctx.e_trig(event, tid, d, val), defer(after)))
            out.append(Visible(FinMap(entries)))
        return out

    def sibling_trigger_events(self, s: Node) -> FrozenSet[Event]:
        ctx = self.ctx
        out = set()
        for t in self.trigger_transitions():
            if t.source == s.name:
                continue
            src = self.stm.node(t.source)
            if src.kind == "initial":
                continue
            tid = self.prefix + t.name
            d = DOUT if t.trigger.kind == "output" else DIN
            for val in ctx.event_values(t.trigger.event):
                out.add(ctx.e_trig(t.trigger.event, tid, d, val))
        return frozenset(out)

    def restricted_state(self, s: Node) -> ITree:
        return parallel(self.state_process(s), self.sibling_trigger_events(s), SKIP)

    def compose_states(self, states: List[Node]) -> ITree:
        if len(states) == 1:
            return self.restricted_state(states[0])
        head, tail = states[0], states[1:]
        head_sid = self.sid(head.name)
        tail_sids = [self.sid(s.name) for s in tail]
        sync = set()
        for kind in ("enter", "entered", "exit", "exited"):
            for x in tail_sids:
                sync.add(self.flow(kind, x, head_sid))
                sync.add(self.flow(kind, head_sid, x))
        return parallel(
            self.restricted_state(head), frozenset(sync), self.compose_states(tail)
        )

    def nodes_process(self) -> ITree:
        states = self.stm.states()
        init_sync = {
            self.flow(kind, self.sid_stm(), self.sid(s.name))
            for kind in ("enter", "entered")
            for s in states
        }
        comp = self.compose_states(states)
        return parallel(self.junction_process(), frozenset(init_sync), comp)

    def flow_hide_list(self) -> List[Event]:
        """All flow events this machine can emit, in creation order."""
        out: List[Event] = []
        seen = set()

        def add(e: Event):
            if e not in seen:
                seen.add(e)
                out.append(e)

        init = self.stm.initial()
        for t in self.stm.transitions:
            if t.source == init.name:
                add(self.flow("enter", self.sid_stm(), self.sid(t.target)))
                add(self.flow("entered", self.sid_stm(), self.sid(t.target)))
                continue
            src, tgt = self.sid(t.source), self.sid(t.target)
            add(self.flow("exit", src, src))
            add(self.flow("exited", src, src))
            add(self.flow("enter", src, tgt))
            add(self.flow("entered", src, tgt))
        # self re-entries emit entered!(s, s); group-3 interrupts may exit
        # across states
        for s in self.stm.states():
            me = self.sid(s.name)
            add(self.flow("entered", me, me))
            for x in self.all_sids():
                if x != me:
                    add(self.flow("exit", x, me))
                    add(self.flow("exited", x, me))
        return out


def _operation_body(ctx: MachineCtx, op: OperationDef) -> ITree:
    """A defined operation's nodes run inline in the caller's scope: own
    flow/internal events (name-mangled) hidden here, parameters served by
    the caller's memory, termination caught locally."""
    term = Event(ctx.ch(f"terminate.{op.name}"), UNIT)
    pieces = _MachinePieces(ctx, op.machine, prefix=f"{op.name}.", terminate_evt=term)
    nodes = pieces.nodes_process()
    # flow handshakes are node-internal, but the internal.tid events must
    # stay visible here: the machine memory gates them with the guards
    body = hidep(nodes, pieces.flow_hide_list())
    return hidep(exception(body, frozenset({term}), lambda: SKIP), [term])


def compile_machine(ir: ModelIR, ctrl: ControllerDef, stm: StateMachineDef) -> Tuple[ITree, MachineCtx]:
    ev = Evaluator(ir.types, ir.config, ir.functions)
    ctx = build_machine_ctx(ir, ctrl, stm, ev)

    # mangle operation transitions into the shared transition list so the
    # memory offers their availability
    for op in ctx.op_defs.values():
        if op.machine.events:
            raise ModelError(
                f"{ctx.scope}: operation {op.name} declares events; "
                "operation bodies may only use guarded internal transitions"
            )
        for t in op.machine.transitions:
            ctx.transitions.append(
                Transition(
                    f"{op.name}.{t.name}",
                    t.source,
                    t.target,
                    t.trigger,
                    _mangle_expr_vars(f"{op.name}.", t.guard),
                    t.action,
                )
            )

    pieces = _MachinePieces(ctx, stm, prefix="")
    nodes = pieces.nodes_process()
    nodes_hidden = hidep(nodes, pieces.flow_hide_list())

    sync = set()
    for var, tref in ctx.var_types.items():
        for val in ctx.enum(tref):
            sync.add(ctx.e_get(var, val))
            sync.add(ctx.e_set(var, val))
    for t in ctx.transitions:
        if t.trigger is None:
            sync.add(ctx.e_internal(t.name))
        else:
            d = DOUT if t.trigger.kind == "output" else DIN
            for val in ctx.event_values(t.trigger.event):
                sync.add(ctx.e_trig(t.trigger.event, t.name, d, val))

    core = parallel(nodes_hidden, frozenset(sync), machine_memory(ctx, ctx.initial_store()))

    local_hide: List[Event] = []
    for var in ctx.local_vars:
        tref = ctx.var_types[var]
        for val in ctx.enum(tref):
            local_hide.append(ctx.e_get(var, val))
        for val in ctx.enum(tref):
            local_hide.append(ctx.e_set(var, val))
    core = hidep(core, local_hide)

    renamed = renamep(core, trigger_map(ctx))
    excepted = exception(renamed, frozenset({ctx.e_terminate()}), lambda: SKIP)
    internals = [ctx.e_internal(t.name) for t in ctx.transitions]
    return hidep(excepted, internals), ctx


def _mangle_expr_vars(prefix: str, e, bound: frozenset = frozenset()):
    if e is None:
        return None
    if isinstance(e, list):
        return [_mangle_expr_vars(prefix, x, bound) for x in e]
    if not isinstance(e, dict):
        return e
    if "var" in e:
        name = e["var"]
        return e if name in bound else {"var": f"{prefix}{name}"}
    for q in ("forall", "exists"):
        if q in e:
            var, domain, body = e[q]
            return {
                q: [
                    var,
                    _mangle_expr_vars(prefix, domain, bound),
                    _mangle_expr_vars(prefix, body, bound | {var}),
                ]
            }
    return {
        k: (v if k in ("lit", "prim", "range") else _mangle_expr_vars(prefix, v, bound))
        for k, v in e.items()
    }


def trigger_map(ctx: MachineCtx) -> RenSeq:
    """Trigger channels re-keyed onto action channels by forgetting the
    transition id; everything else that must survive the renaming is
    identity-mapped.  Pair order (transition creation order first) is the
    whole nondeterminism-resolution policy."""
    pairs: List[Tuple[Event, Event]] = []
    for t in ctx.transitions:
        tr = t.trigger
        if tr is None:
            continue
        d = DOUT if tr.kind == "output" else DIN
        for val in ctx.event_values(tr.event):
            pairs.append(
                (ctx.e_trig(tr.event, t.name, d, val), ctx.e_act(tr.event, d, val))
            )
    keep: List[Event] = [ctx.e_terminate()]
    for t in ctx.transitions:
        if t.trigger is None:
            keep.append(ctx.e_internal(t.name))
    for var in ctx.shared_vars:
        tref = ctx.var_types[var]
        for val in ctx.enum(tref):
            keep.append(ctx.e_get(var, val))
        for val in ctx.enum(tref):
            keep.append(ctx.e_set(var, val))
        for val in ctx.enum(tref):
            keep.append(ctx.e_setext(var, val))
    for event, tref in ctx.event_types.items():
        for d in (DIN, DOUT):
            for val in ctx.event_values(event):
                keep.append(ctx.e_act(event, d, val))
    for op in ctx.platform_ops:
        for args in op_arg_values(op, ctx.types, ctx.cfg):
            keep.append(ctx.e_opcall(op.name, args))
    seen = set()
    for e in keep:
        if e not in seen:
            seen.add(e)
            pairs.append((e, e))
    return RenSeq(pairs)


def op_arg_values(op: OperationDef, types: TypeTable, cfg: CoreConfig) -> List[Value]:
    out: List[Tuple[Value, ...]] = [()]
    for p in op.params:
        vals = enumerate_type(p.type, types, cfg)
        out = [prev + (v,) for prev in out for v in vals]
    return [_args_value(items) for items in out]


# -- controllers ----------------------------------------------------------


def _conn_channel(scope: str, conn: Connection) -> str:
    (sa, se), (da, de) = conn.src, conn.dst
    return f"conn_{sa}.{se}__{da}.{de}@{scope}"


def _conn_values(ir: ModelIR, tref: Optional[TypeRef]) -> List[Optional[Value]]:
    if tref is None:
        return [None]
    return list(enumerate_type(tref, ir.types, ir.config))


def stm_to_ctrl_map(ir: ModelIR, ctrl: ControllerDef, ctx: MachineCtx) -> RenSeq:
    """Alphabet transformation of one machine into its controller's scope."""
    m = ctx.stm.name
    C = ctrl.name
    pairs: List[Tuple[Event, Event]] = []
    pairs.append((ctx.e_terminate(), Event(f"terminate@{C}", UNIT)))
    for var in ctx.shared_vars:
        tref = ctx.var_types[var]
        for val in enumerate_type(tref, ir.types, ir.config):
            pairs.append((ctx.e_get(var, val), Event(f"get_{var}@{C}", val)))
        for val in enumerate_type(tref, ir.types, ir.config):
            pairs.append((ctx.e_set(var, val), Event(f"set_{var}@{C}", val)))
        for val in enumerate_type(tref, ir.types, ir.config):
            pairs.append((ctx.e_setext(var, val), Event(f"setext_{var}_{m}@{C}", val)))
    for ev_decl in ctx.stm.events:
        e = ev_decl.name
        for conn in ctrl.connections:
            boundary = conn.src[0] == "this" or conn.dst[0] == "this"
            if not boundary and conn.src == (m, e):
                tgt_ch = _conn_channel(C, conn)
                for val in _conn_values(ir, ev_decl.type):
                    pairs.append(
                        (ctx.e_act(e, DOUT, val), Event(tgt_ch, val if val is not None else UNIT))
                    )
            if not boundary and conn.dst == (m, e):
                tgt_ch = _conn_channel(C, conn)
                for val in _conn_values(ir, ev_decl.type):
                    pairs.append(
                        (ctx.e_act(e, DIN, val), Event(tgt_ch, val if val is not None else UNIT))
                    )
            if conn.src[0] == "this" and conn.dst == (m, e):
                ce = conn.src[1]
                for val in _conn_values(ir, ev_decl.type):
                    pairs.append(
                        (ctx.e_act(e, DIN, val), Event(f"{ce}@{C}", _payload(DIN, val)))
                    )
            if conn.dst[0] == "this" and conn.src == (m, e):
                ce = conn.dst[1]
                for val in _conn_values(ir, ev_decl.type):
                    pairs.append(
                        (ctx.e_act(e, DOUT, val), Event(f"{ce}@{C}", _payload(DOUT, val)))
                    )
    for op in ctx.platform_ops:
        for args in op_arg_values(op, ir.types, ir.config):
            pairs.append((ctx.e_opcall(op.name, args), Event(f"call_{op.name}@{C}", args)))
    return RenSeq(pairs)


def controller_memory(ir: ModelIR, ctrl: ControllerDef, shared_map: Dict[str, List[str]]) -> ITree:
    """Accepts an external update per shared variable and forwards it to
    every requiring machine in sequence."""
    C = ctrl.name
    platform_types = {v.name: v.type for v in ir.module.platform.variables}

    def forward(var: str, val: Value, targets: List[str]) -> ITree:
        def push(i: int) -> ITree:
            if i == len(targets):
                return round_()
            return then(
                outp_event(Event(f"setext_{var}_{targets[i]}@{C}", val)),
                lambda: push(i + 1),
            )

        return push(0)

    def round_() -> ITree:
        entries = []
        for var, machines in shared_map.items():
            for val in enumerate_type(platform_types[var], ir.types, ir.config):
                entries.append(
                    (
                        Event(f"setext_{var}@{C}", val),
                        defer(lambda var=var, val=val, ms=machines: forward(var, val, ms)),
                    )
                )
        return Visible(FinMap(entries))

    return round_()


def compile_controller(ir: ModelIR, ctrl: ControllerDef) -> ITree:
    C = ctrl.name
    renamed: List[ITree] = []
    for stm in ctrl.machines:
        tree, ctx = compile_machine(ir, ctrl, stm)
        renamed.append(renamep(tree, stm_to_ctrl_map(ir, ctrl, ctx)))

    term = Event(f"terminate@{C}", UNIT)

    def conn_events(conn: Connection) -> List[Event]:
        src_m, src_e = conn.src
        decl = next(e for e in ctrl.machine(src_m).events if e.name == src_e)
        ch = _conn_channel(C, conn)
        return [
            Event(ch, val if val is not None else UNIT)
            for val in _conn_values(ir, decl.type)
        ]

    mm_conns = [c for c in ctrl.connections if c.src[0] != "this" and c.dst[0] != "this"]

    def compose(i: int) -> ITree:
        if i == len(ctrl.machines) - 1:
            return renamed[i]
        head = ctrl.machines[i].name
        tail = {m.name for m in ctrl.machines[i + 1 :]}
        sync = {term}
        for conn in mm_conns:
            if (conn.src[0] == head and conn.dst[0] in tail) or (
                conn.dst[0] == head and conn.src[0] in tail
            ):
                sync.update(conn_events(conn))
        return parallel(renamed[i], frozenset(sync), compose(i + 1))

    comp = compose(0)
    hide_conns: List[Event] = []
    for conn in mm_conns:
        hide_conns.extend(conn_events(conn))
    comp = hidep(comp, hide_conns)

    shared_map: Dict[str, List[str]] = {}
    for stm in ctrl.machines:
        for var in stm.required:
            shared_map.setdefault(var, []).append(stm.name)
    if shared_map:
        platform_types = {v.name: v.type for v in ir.module.platform.variables}
        down: List[Event] = []
        down_sync = set()
        for var, machines in shared_map.items():
            for mname in machines:
                for val in enumerate_type(platform_types[var], ir.types, ir.config):
                    e = Event(f"setext_{var}_{mname}@{C}", val)
                    down.append(e)
                    down_sync.add(e)
        comp = parallel(comp, frozenset(down_sync), controller_memory(ir, ctrl, shared_map))
        comp = hidep(comp, down)

    return exception(comp, frozenset({term}), lambda: SKIP)


# -- module -----------------------------------------------------------------


def display_channel(module: ModuleDef, name: str, op: bool = False) -> str:
    base = _cap(name) + ("Call" if op else "")
    return f"{base}_{module.name}" if module.display_suffix else base


def ctrl_to_module_map(ir: ModelIR, ctrl: ControllerDef) -> RenSeq:
    mod = ir.module
    C, MOD = ctrl.name, mod.name
    pairs: List[Tuple[Event, Event]] = []
    pairs.append((Event(f"terminate@{C}", UNIT), Event(f"terminate@{MOD}", UNIT)))

    required = set()
    for stm in ctrl.machines:
        required.update(stm.required)
    platform_types = {v.name: v.type for v in mod.platform.variables}
    for var in [v.name for v in mod.platform.variables if v.name in required]:
        for val in enumerate_type(platform_types[var], ir.types, ir.config):
            pairs.append((Event(f"get_{var}@{C}", val), Event(f"get_{var}@{MOD}", val)))
        for val in enumerate_type(platform_types[var], ir.types, ir.config):
            pairs.append((Event(f"set_{var}@{C}", val), Event(f"set_{var}@{MOD}", val)))
        for val in enumerate_type(platform_types[var], ir.types, ir.config):
            pairs.append(
                (Event(f"setext_{var}@{C}", val), Event(f"setext_{var}_{C}@{MOD}", val))
            )

    ctrl_event_types = {e.name: e.type for e in ctrl.events}
    for conn in mod.connections:
        if conn.src[0] == "RP" and conn.dst[0] == C:
            pe, ce = conn.src[1], conn.dst[1]
            disp = display_channel(mod, pe)
            for val in _conn_values(ir, ctrl_event_types[ce]):
                pairs.append(
                    (Event(f"{ce}@{C}", _payload(DIN, val)), Event(disp, _payload(DIN, val)))
                )
        elif conn.dst[0] == "RP" and conn.src[0] == C:
            ce, pe = conn.src[1], conn.dst[1]
            disp = display_channel(mod, pe)
            for val in _conn_values(ir, ctrl_event_types[ce]):
                pairs.append(
                    (Event(f"{ce}@{C}", _payload(DOUT, val)), Event(disp, _payload(DOUT, val)))
                )
        elif conn.src[0] == C or conn.dst[0] == C:
            # controller-to-controller connection
            ch = _conn_channel(MOD, conn)
            src_is_me = conn.src[0] == C
            ce = conn.src[1] if src_is_me else conn.dst[1]
            d = DOUT if src_is_me else DIN
            for val in _conn_values(ir, ctrl_event_types[ce]):
                if conn.async_:
                    pairs.append(
                        (Event(f"{ce}@{C}", _payload(d, val)), Event(ch, _payload(d, val)))
                    )
                else:
                    pairs.append(
                        (
                            Event(f"{ce}@{C}", _payload(d, val)),
                            Event(ch, val if val is not None else UNIT),
                        )
                    )

    for op in mod.platform.operations:
        disp = display_channel(mod, op.name, op=True)
        for args in op_arg_values(op, ir.types, ir.config):
            pairs.append((Event(f"call_{op.name}@{C}", args), Event(disp, args)))
    return RenSeq(pairs)


def platform_memory(ir: ModelIR) -> Optional[ITree]:
    mod = ir.module
    MOD = mod.name
    requiring: Dict[str, List[str]] = {}
    for v in mod.platform.variables:
        ctrls = [
            c.name
            for c in mod.controllers
            if any(v.name in stm.required for stm in c.machines)
        ]
        if ctrls:
            requiring[v.name] = ctrls
    if not requiring:
        return None
    platform_types = {v.name: v.type for v in mod.platform.variables}

    def forward(var: str, val: Value, targets: List[str]) -> ITree:
        def push(i: int) -> ITree:
            if i == len(targets):
                return round_()
            return then(
                outp_event(Event(f"setext_{var}_{targets[i]}@{MOD}", val)),
                lambda: push(i + 1),
            )

        return push(0)

    def round_() -> ITree:
        entries = []
        for var, ctrls in requiring.items():
            for val in enumerate_type(platform_types[var], ir.types, ir.config):
                entries.append(
                    (
                        Event(f"set_{var}@{MOD}", val),
                        defer(lambda var=var, val=val, cs=ctrls: forward(var, val, cs)),
                    )
                )
        return Visible(FinMap(entries))

    return round_()


_EMPTY = object()


def single_buffer(ir: ModelIR, conn: Connection, ch: str, tref: Optional[TypeRef]) -> ITree:
    """One-place buffer for an asynchronous connection: overwriting is
    always allowed, reading only when full."""
    values = _conn_values(ir, tref)

    def round_(content) -> ITree:
        entries = []
        for val in values:
            entries.append(
                (Event(ch, _payload(DOUT, val)), defer(lambda val=val: round_(val)))
            )
        if content is not _EMPTY:
            entries.append(
                (Event(ch, _payload(DIN, content)), defer(lambda: round_(_EMPTY)))
            )
        return Visible(FinMap(entries))

    return round_(_EMPTY)


@dataclass
class CompiledModule:
    name: str
    tree: ITree
    display_events: Dict[str, Event]  # "Chan payload-text" -> Event
    config: CoreConfig


def compile_module(ir: ModelIR) -> CompiledModule:
    mod = ir.module
    MOD = mod.name
    term = Event(f"terminate@{MOD}", UNIT)

    renamed = [
        renamep(compile_controller(ir, c), ctrl_to_module_map(ir, c))
        for c in mod.controllers
    ]

    ctrl_event_types = {
        c.name: {e.name: e.type for e in c.events} for c in mod.controllers
    }

    def cc_conn_events(conn: Connection) -> List[Event]:
        ch = _conn_channel(MOD, conn)
        tref = ctrl_event_types[conn.src[0]][conn.src[1]]
        if conn.async_:
            out = []
            for val in _conn_values(ir, tref):
                out.append(Event(ch, _payload(DOUT, val)))
            for val in _conn_values(ir, tref):
                out.append(Event(ch, _payload(DIN, val)))
            return out
        return [Event(ch, val if val is not None else UNIT) for val in _conn_values(ir, tref)]

    cc_conns = [c for c in mod.connections if c.src[0] != "RP" and c.dst[0] != "RP"]
    sync_conns = [c for c in cc_conns if not c.async_]
    async_conns = [c for c in cc_conns if c.async_]

    def compose(i: int) -> ITree:
        if i == len(mod.controllers) - 1:
            return renamed[i]
        head = mod.controllers[i].name
        tail = {c.name for c in mod.controllers[i + 1 :]}
        sync = {term}
        for conn in sync_conns:
            if (conn.src[0] == head and conn.dst[0] in tail) or (
                conn.dst[0] == head and conn.src[0] in tail
            ):
                sync.update(cc_conn_events(conn))
        return parallel(renamed[i], frozenset(sync), compose(i + 1))

    comp = compose(0)

    for conn in async_conns:
        tref = ctrl_event_types[conn.src[0]][conn.src[1]]
        ch = _conn_channel(MOD, conn)
        buf = single_buffer(ir, conn, ch, tref)
        comp = parallel(comp, frozenset(cc_conn_events(conn)), buf)

    platform_types = {v.name: v.type for v in mod.platform.variables}
    mem = platform_memory(ir)
    hide_list: List[Event] = []
    if mem is not None:
        mem_sync = set()
        for v in mod.platform.variables:
            requiring = [
                c.name
                for c in mod.controllers
                if any(v.name in stm.required for stm in c.machines)
            ]
            if not requiring:
                continue
            vals = enumerate_type(platform_types[v.name], ir.types, ir.config)
            for val in vals:
                hide_list.append(Event(f"get_{v.name}@{MOD}", val))
            for val in vals:
                e = Event(f"set_{v.name}@{MOD}", val)
                mem_sync.add(e)
                hide_list.append(e)
            for cname in requiring:
                for val in vals:
                    e = Event(f"setext_{v.name}_{cname}@{MOD}", val)
                    mem_sync.add(e)
                    hide_list.append(e)
        comp = parallel(comp, frozenset(mem_sync), mem)

    for conn in sync_conns:
        hide_list.extend(cc_conn_events(conn))
    for conn in async_conns:
        hide_list.extend(cc_conn_events(conn))

    comp = exception(comp, frozenset({term}), lambda: SKIP)
    hide_list.append(term)
    tree = hidep(comp, hide_list)

    return CompiledModule(MOD, tree, display_event_index(ir), ir.config)


def display_event_index(ir: ModelIR) -> Dict[str, Event]:
    """Every possible user-facing event keyed by its printed text."""
    from .values import event_text

    mod = ir.module
    out: Dict[str, Event] = {}
    for pe in mod.platform.events:
        disp = display_channel(mod, pe.name)
        for d in (DIN, DOUT):
            for val in _conn_values(ir, pe.type):
                e = Event(disp, _payload(d, val))
                out[event_text(e)] = e
    for op in mod.platform.operations:
        disp = display_channel(mod, op.name, op=True)
        for args in op_arg_values(op, ir.types, ir.config):
            e = Event(disp, args)
            out[event_text(e)] = e
    return out
