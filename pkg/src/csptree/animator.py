"""Interactive stepping, scenario replay and bounded trace membership.

A session owns a compiled module tree and walks it one visible event at a
time; internal steps are compressed away before each menu.  Scenarios are
recorded traces (optionally cyclic) replayed against a fresh tree; the
report distinguishes a refusal (event not offered) from possible
divergence (internal-step budget exhausted).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .itree import DEFAULT_TAU_BUDGET, ITree, observe, tau_closure
from .semantics import CompiledModule
from .values import Event, event_text


@dataclass
class Menu:
    kind: str  # "choices" | "terminated" | "stuck" | "tau_budget"
    events: List[Event] = field(default_factory=list)

    def lines(self) -> List[str]:
        return [f"({i}) {event_text(e)}" for i, e in enumerate(self.events, 1)]


class ChoiceError(ValueError):
    pass


class Session:
    """One interactive animation; stepped by exactly one caller at a time."""

    def __init__(self, module: CompiledModule, tau_budget: int = DEFAULT_TAU_BUDGET):
        self.module = module
        self.tau_budget = tau_budget
        self.history: List[Event] = []
        self._node: ITree = None
        self._menu: Menu = None
        self.reset()

    def reset(self) -> Menu:
        self.history = []
        self._settle(self.module.tree)
        return self._menu

    def _settle(self, tree: ITree):
        node, _taus = tau_closure(tree, self.tau_budget)
        self._node = node
        obs = observe(node, self.tau_budget)
        if obs.kind == "choices":
            self._menu = Menu("choices", list(obs.events))
        else:
            self._menu = Menu(obs.kind)

    @property
    def menu(self) -> Menu:
        return self._menu

    def choose_index(self, index: int) -> Menu:
        if self._menu.kind != "choices":
            raise ChoiceError(f"session is {self._menu.kind}")
        if not (1 <= index <= len(self._menu.events)):
            raise ChoiceError(
                f"choice {index} out of range 1-{len(self._menu.events)}"
            )
        return self.choose_event(self._menu.events[index - 1])

    def choose_event(self, event: Event) -> Menu:
        if self._menu.kind != "choices":
            raise ChoiceError(f"session is {self._menu.kind}")
        if event not in set(self._menu.events):
            raise ChoiceError(f"event not enabled: {event_text(event)}")
        child = self._node.child(event)
        self.history.append(event)
        self._settle(child)
        return self._menu

    def replay_consistent(self) -> bool:
        """History replayed from the initial tree reproduces the current
        menu (bounded determinism check)."""
        node, _ = tau_closure(self.module.tree, self.tau_budget)
        for e in self.history:
            node, _ = tau_closure(node.child(e), self.tau_budget)
        obs = observe(node, self.tau_budget)
        if self._menu.kind != obs.kind:
            return False
        if obs.kind == "choices":
            return list(obs.events) == self._menu.events
        return True


@dataclass
class Scenario:
    name: str
    events: List[Event]
    repeat_from: Optional[int] = None  # index into events where the cycle restarts

    def event_at(self, step: int) -> Optional[Event]:
        if step < len(self.events):
            return self.events[step]
        if self.repeat_from is None:
            return None
        cycle = self.events[self.repeat_from :]
        if not cycle:
            return None
        return cycle[(step - len(self.events)) % len(cycle)]


@dataclass
class StepRecord:
    index: int
    event: Event
    accepted: bool
    menu_size: int


@dataclass
class Report:
    scenario: str
    accepted_steps: int
    outcome: str  # "accepted" | "refused" | "terminated" | "divergence"
    refused_event: Optional[Event] = None
    menu_at_refusal: Optional[Menu] = None
    steps: List[StepRecord] = field(default_factory=list)

    def ok(self) -> bool:
        return self.outcome == "accepted"


def replay(
    module: CompiledModule,
    scenario: Scenario,
    max_steps: int,
    tau_budget: int = DEFAULT_TAU_BUDGET,
) -> Report:
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    session = Session(module, tau_budget)
    steps: List[StepRecord] = []
    for i in range(max_steps):
        wanted = scenario.event_at(i)
        if wanted is None:
            break
        menu = session.menu
        if menu.kind == "tau_budget":
            return Report(scenario.name, i, "divergence", steps=steps)
        if menu.kind != "choices" or wanted not in set(menu.events):
            outcome = "terminated" if menu.kind == "terminated" else "refused"
            return Report(
                scenario.name,
                i,
                outcome,
                refused_event=wanted,
                menu_at_refusal=menu,
                steps=steps,
            )
        session.choose_event(wanted)
        steps.append(StepRecord(i, wanted, True, len(menu.events)))
    return Report(scenario.name, len(steps), "accepted", steps=steps)


def trace_member(
    module: CompiledModule,
    trace: Sequence[Event],
    tau_budget: int = DEFAULT_TAU_BUDGET,
) -> bool:
    sc = Scenario("trace", list(trace))
    return replay(module, sc, len(trace), tau_budget).ok()


# -- scenario files -----------------------------------------------------------
#
# line-oriented: "name:", optional "repeat-from:" (0-based step index),
# then one event per line in menu text form ("Cal_PatrolMod (Din,-3)")


class ScenarioError(ValueError):
    pass


def parse_scenario(text: str, module: CompiledModule) -> Scenario:
    name = "scenario"
    repeat_from = None
    events: List[Event] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("name:"):
            name = line.split(":", 1)[1].strip()
            continue
        if line.startswith("repeat-from:"):
            repeat_from = int(line.split(":", 1)[1].strip())
            continue
        ev = module.display_events.get(line)
        if ev is None:
            raise ScenarioError(f"line {lineno}: unknown event {line!r}")
        events.append(ev)
    if repeat_from is not None and not (0 <= repeat_from < len(events)):
        raise ScenarioError(f"repeat-from {repeat_from} outside the trace")
    return Scenario(name, events, repeat_from)


def load_scenario(path, module: CompiledModule) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), module)
