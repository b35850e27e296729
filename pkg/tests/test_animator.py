"""Sessions, scenario replay, and bounded trace membership."""

import pytest

from csptree.animator import (
    ChoiceError,
    Scenario,
    ScenarioError,
    Session,
    load_scenario,
    parse_scenario,
    replay,
    trace_member,
)
from csptree.itree import div
from csptree.registry import resolve_scenario_path
from csptree.semantics import CompiledModule
from csptree.values import Event, event_text


def scenario(name, module):
    return load_scenario(resolve_scenario_path(name), module)


class TestSession:
    def test_start_menus(self, patrol_mod, chemical_mod):
        assert len(Session(patrol_mod).menu.events) == 8
        assert len(Session(chemical_mod).menu.events) == 22

    def test_choose_descends_and_records(self, patrol_mod):
        s = Session(patrol_mod)
        menu = s.choose_index(2)
        assert [event_text(e) for e in menu.events] == ["Right_PatrolMod (Dout,-2)"]
        assert len(s.history) == 1
        assert event_text(s.history[0]) == "Cal_PatrolMod (Din,-3)"

    def test_zero_index_rejected(self, patrol_mod):
        s = Session(patrol_mod)
        with pytest.raises(ChoiceError):
            s.choose_index(0)

    def test_out_of_range_rejected_and_state_unchanged(self, patrol_mod):
        s = Session(patrol_mod)
        before = list(s.menu.events)
        with pytest.raises(ChoiceError):
            s.choose_index(99)
        assert s.menu.events == before and s.history == []

    def test_disabled_event_rejected(self, patrol_mod):
        s = Session(patrol_mod)
        s.choose_index(2)
        with pytest.raises(ChoiceError):
            s.choose_event(Event("Reset_PatrolMod"))

    def test_history_replay_invariant_after_every_choose(self, patrol_mod):
        s = Session(patrol_mod)
        for idx in (2, 1, 1, 1, 1, 1, 1):
            s.choose_index(idx)
            assert s.replay_consistent()

    def test_reset_clears_history(self, patrol_mod):
        s = Session(patrol_mod)
        s.choose_index(2)
        s.reset()
        assert s.history == [] and len(s.menu.events) == 8

    def test_terminated_session_refuses_choices(self, chemical_mod):
        s = Session(chemical_mod)
        for idx in (1, 9, 1, 1):
            s.choose_index(idx)
        assert s.menu.kind == "terminated"
        with pytest.raises(ChoiceError, match="terminated"):
            s.choose_index(1)
        assert len(s.history) == 4  # history stays readable


class TestReplay:
    def test_scenario1_three_full_cycles(self, patrol_mod):
        sc = scenario("Scenario1", patrol_mod)
        report = replay(patrol_mod, sc, 21)
        assert report.ok() and report.accepted_steps == 21

    def test_reset_scenario_refused_at_reset(self, patrol_mod):
        sc = scenario("reset-refusal", patrol_mod)
        report = replay(patrol_mod, sc, 6)
        assert not report.ok()
        assert report.accepted_steps == 2
        assert event_text(report.refused_event) == "Reset_PatrolMod Din"
        assert report.menu_at_refusal.events  # the menu at the refusal point

    def test_empty_trace_accepted(self, patrol_mod):
        report = replay(patrol_mod, Scenario("empty", []), 0)
        assert report.ok() and report.accepted_steps == 0

    def test_replay_deterministic(self, patrol_mod):
        sc = scenario("Scenario2", patrol_mod)
        r1 = replay(patrol_mod, sc, 13)
        r2 = replay(patrol_mod, sc, 13)
        assert r1.ok() and r2.ok()
        assert [s.event for s in r1.steps] == [s.event for s in r2.steps]
        assert [s.menu_size for s in r1.steps] == [s.menu_size for s in r2.steps]

    def test_divergence_reported_not_refused(self):
        fake = CompiledModule("div", div(), {}, None)
        report = replay(fake, Scenario("spin", [Event("x")]), 5, tau_budget=50)
        assert report.outcome == "divergence"

    def test_acd_termination_outcome(self, chemical_mod):
        sc = scenario("SCE-ACD-1", chemical_mod)
        extended = Scenario(sc.name, sc.events + [sc.events[0]])
        report = replay(chemical_mod, extended, 5)
        assert report.outcome == "terminated"
        assert report.accepted_steps == 4


class TestTraceMember:
    def test_pr2_and_pr3_members(self, patrol_mod):
        for name, steps in (("Scenario2", 13), ("Scenario3", 17)):
            sc = scenario(name, patrol_mod)
            assert replay(patrol_mod, sc, steps).ok()

    def test_acd2_prefix_member(self, chemical_mod):
        sc = scenario("SCE-ACD-2", chemical_mod)
        assert trace_member(chemical_mod, sc.events)

    def test_flag_first_not_a_trace(self, chemical_mod):
        flag = chemical_mod.display_events["Flag Dout"]
        assert not trace_member(chemical_mod, [flag])


class TestScenarioFiles:
    def test_unknown_event_diagnostic(self, patrol_mod):
        with pytest.raises(ScenarioError, match="unknown event"):
            parse_scenario("name: x\nNope (Din,0)\n", patrol_mod)

    def test_repeat_from_bounds_checked(self, patrol_mod):
        with pytest.raises(ScenarioError):
            parse_scenario("repeat-from: 3\nReset_PatrolMod Din\n", patrol_mod)

    def test_cyclic_event_lookup(self, patrol_mod):
        sc = scenario("Scenario2", patrol_mod)
        assert sc.repeat_from == 1
        assert event_text(sc.event_at(0)) == "Cal_PatrolMod (Din,1)"
        # steps 1-4 cycle forever
        assert event_text(sc.event_at(5)) == event_text(sc.event_at(1))
        assert event_text(sc.event_at(8)) == event_text(sc.event_at(4))
