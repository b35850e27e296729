"""Compiled-module behaviour for both bundled models.

The patrol walk pins the shared-variable propagation phenomenon: every
position change surfaces the movement event twice because the writer
machine re-reads a stale copy before the update reaches it.
"""

from csptree.itree import Return, tau_closure
from csptree.semantics import single_buffer
from csptree.values import DIN, DOUT, event_text

from conftest import settle, step


def texts(node):
    return [event_text(e) for e in node.events()]


PATROL_INITIAL = [
    "Reset_PatrolMod Din",
    "Cal_PatrolMod (Din,-3)",
    "Cal_PatrolMod (Din,-2)",
    "Cal_PatrolMod (Din,-1)",
    "Cal_PatrolMod (Din,0)",
    "Cal_PatrolMod (Din,1)",
    "Cal_PatrolMod (Din,2)",
    "Cal_PatrolMod (Din,3)",
]


class TestPatrol:
    def test_initial_menu_exact(self, patrol_mod):
        assert texts(settle(patrol_mod.tree)) == PATROL_INITIAL

    def test_forced_segment_after_cal_minus3(self, patrol_mod):
        node = step(settle(patrol_mod.tree), 2)  # Cal (Din,-3)
        forced = []
        for _ in range(5):
            menu = texts(node)
            forced.append(menu)
            node = step(node, 1)
        assert forced == [
            ["Right_PatrolMod (Dout,-2)"],
            ["Right_PatrolMod (Dout,-2)"],
            ["Right_PatrolMod (Dout,-1)"],
            ["Right_PatrolMod (Dout,-1)"],
            ["Right_PatrolMod (Dout,0)"],
        ]
        # the pending sixth movement event shares a menu with the cal events
        menu = texts(node)
        assert menu == ["Right_PatrolMod (Dout,0)"] + PATROL_INITIAL[1:]
        node = step(node, 1)
        assert texts(node) == PATROL_INITIAL

    def test_reset_enabled_only_when_position_zero(self, patrol_mod):
        node = settle(patrol_mod.tree)
        assert "Reset_PatrolMod Din" in texts(node)
        node = step(node, 2)
        for _ in range(6):
            assert "Reset_PatrolMod Din" not in texts(node)
            node = step(node, 1)
        assert "Reset_PatrolMod Din" in texts(node)

    def test_reset_roundtrip(self, patrol_mod):
        node = settle(patrol_mod.tree)
        node = step(node, 1)  # Reset
        assert texts(node) == PATROL_INITIAL

    def test_propagation_reaches_both_machine_copies(self, patrol_mod):
        # after the forced segment both copies read 0 again: the cal
        # guard (x == 0) is enabled and no further update fires
        node = settle(patrol_mod.tree)
        node = step(node, 2)
        for _ in range(6):
            node = step(node, 1)
        assert texts(node) == PATROL_INITIAL


class TestChemical:
    def test_initial_menu_size_and_head(self, chemical_mod):
        menu = texts(settle(chemical_mod.tree))
        assert len(menu) == 22
        assert menu[0] == "RandomWalkCall ()"
        assert menu[1] == "Gas (Din,[])"
        assert menu[9] == "Gas (Din,[(0,0),(1,1)])"

    def test_gas_menu_after_random_walk(self, chemical_mod):
        node = step(settle(chemical_mod.tree), 1)
        menu = texts(node)
        assert len(menu) == 21
        assert all(t.startswith("Gas ") for t in menu)

    def test_dangerous_gas_forces_stop_flag_terminate(self, chemical_mod):
        node = step(settle(chemical_mod.tree), 1)
        node = step(node, 9)  # Gas (Din,[(0,0),(1,1)])
        assert texts(node) == ["MoveCall (0,Chemical_Angle_Front)"]
        node = step(node, 1)
        assert texts(node) == ["Flag Dout"]
        final, _ = tau_closure(node.child(node.events()[0]), 10_000)
        assert isinstance(final, Return)

    def test_no_gas_returns_to_initial(self, chemical_mod):
        node = step(settle(chemical_mod.tree), 1)
        node = step(node, 1)  # Gas (Din,[]) -> analysis noGas -> resume
        menu = texts(node)
        assert len(menu) == 22 and menu[0] == "RandomWalkCall ()"

    def test_low_intensity_walk_menu_sizes(self, chemical_mod):
        node = settle(chemical_mod.tree)
        expected = [
            (22, 1, "RandomWalkCall ()"),
            (21, 4, "Gas (Din,[(1,0)])"),
            (22, 1, "MoveCall (1,Chemical_Angle_Front)"),
            (24, 2, "Obstacle (Din,Location_Loc_right)"),
            (23, 1, "Odometer (Din,0)"),
            (22, 1, "MoveCall (1,Chemical_Angle_Left)"),
        ]
        for size, idx, text in expected:
            menu = texts(node)
            assert len(menu) == size
            assert menu[idx - 1] == text
            node = step(node, idx)

    def test_async_turn_lets_gas_flow_while_movement_busy(self, chemical_mod):
        # reading a low-intensity gas again right after the avoidance path
        # must stay possible: the turn connection is buffered
        node = settle(chemical_mod.tree)
        for idx in (1, 4, 1, 2, 1, 1):
            node = step(node, idx)
        menu = texts(node)
        assert len(menu) == 21 and all(t.startswith("Gas ") for t in menu)

    def test_stuck_detection_and_getting_out(self, chemical_mod):
        # a second obstacle with no distance gained disables the internal
        # return to avoidance, so the timeout event surfaces; the getaway
        # walk then drops the machine back into its movement loop, whose
        # entry re-reads the LAST received turn direction (Front here)
        node = settle(chemical_mod.tree)

        def pick(n, text):
            menu = texts(n)
            return step(n, menu.index(text) + 1)

        for text in [
            "RandomWalkCall ()",
            "Gas (Din,[(1,0)])",
            "MoveCall (1,Chemical_Angle_Front)",
            "Obstacle (Din,Location_Loc_right)",
            "Odometer (Din,0)",                    # d0 = 0
            "MoveCall (1,Chemical_Angle_Left)",    # changeDirection(right)
            "Gas (Din,[(1,0)])",
            "MoveCall (1,Chemical_Angle_Front)",   # TryingAgain entry
            "Obstacle (Din,Location_Loc_right)",
            "Odometer (Din,0)",                    # d1 = 0: no distance gained
        ]:
            node = pick(node, text)
        menu = texts(node)
        assert len(menu) == 22 and "Stuck_timeout Din" in menu
        node = pick(node, "Stuck_timeout Din")
        menu = texts(node)
        assert menu[0] == "ShortRandomWalkCall ()" and len(menu) == 22
        node = pick(node, "ShortRandomWalkCall ()")
        assert texts(node)[0] == "MoveCall (1,Chemical_Angle_Front)"

    def test_resume_loop_is_stable_over_many_rounds(self, chemical_mod):
        from csptree.animator import Session

        s = Session(chemical_mod)
        s.choose_index(1)
        for _ in range(10):
            menu = [e.channel for e in s.menu.events]
            assert len(menu) == 21 and menu[0] == "Gas"
            s.choose_index(1)  # empty gas reading -> noGas -> resume
            menu = [e.channel for e in s.menu.events]
            assert len(menu) == 22 and menu[0] == "RandomWalkCall"
            s.choose_index(1)
        assert s.replay_consistent()


class TestMachineMemory:
    """The per-machine memory loop: variable service and trigger gating."""

    def ctx(self, machine="MoveSTM"):
        from csptree.exprs import Evaluator
        from csptree.ir import load_model
        from csptree.registry import resolve_model_path
        from csptree.semantics import build_machine_ctx

        ir = load_model(resolve_model_path("patrol"))
        ctrl = ir.module.controllers[0]
        ev = Evaluator(ir.types, ir.config, ir.functions)
        return build_machine_ctx(ir, ctrl, ctrl.machine(machine), ev)

    def menu(self, ctx, store=None):
        from csptree.semantics import machine_memory

        node = machine_memory(ctx, store or ctx.initial_store())
        return node, [event_text(e) for e in node.events()]

    def test_shared_variable_offers_get_set_and_external_set(self):
        ctx = self.ctx()
        _node, menu = self.menu(ctx)
        assert "get_x@Ctrl.MoveSTM 0" in menu
        for w in range(-3, 4):
            assert f"set_x@Ctrl.MoveSTM {w}" in menu
            assert f"setext_x@Ctrl.MoveSTM {w}" in menu

    def test_local_variable_has_no_external_set(self):
        ctx = self.ctx()
        _node, menu = self.menu(ctx)
        assert "get_l@Ctrl.MoveSTM 0" in menu
        assert "set_l@Ctrl.MoveSTM 2" in menu
        assert not any(t.startswith("setext_l@") for t in menu)

    def test_get_reflects_the_latest_write(self):
        from csptree.values import Event, IntV

        ctx = self.ctx()
        node, _menu = self.menu(ctx)
        node2 = settle(node.child(Event("set_x@Ctrl.MoveSTM", IntV(3))))
        menu2 = [event_text(e) for e in node2.events()]
        assert "get_x@Ctrl.MoveSTM 3" in menu2
        assert "get_x@Ctrl.MoveSTM 0" not in menu2

    def test_input_trigger_values_restricted_by_guard(self):
        ctx = self.ctx()
        _node, menu = self.menu(ctx)
        # t1 rides update values below MAX, t3 those above -MAX
        t1_vals = sorted(
            int(t.split(",")[-1][:-1])
            for t in menu
            if t.startswith("update_@") and "(t1," in t
        )
        t3_vals = sorted(
            int(t.split(",")[-1][:-1])
            for t in menu
            if t.startswith("update_@") and "(t3," in t
        )
        assert t1_vals == [-3, -2, -1, 0, 1]
        assert t3_vals == [-1, 0, 1, 2, 3]

    def test_triggerless_transition_offered_unconditionally(self):
        ctx = self.ctx()
        _node, menu = self.menu(ctx)
        assert "internal@Ctrl.MoveSTM t0" in menu

    def test_guarded_internal_transition_gated_by_store(self):
        from csptree.values import IntV

        ctx = self.ctx("CalSTM")
        _node, menu = self.menu(ctx)
        assert "internal@Ctrl.CalSTM t2" not in menu  # x == 0 initially
        store = ctx.initial_store()
        store["x"] = IntV(2)
        _node, menu = self.menu(ctx, store)
        assert "internal@Ctrl.CalSTM t2" in menu
        assert not any(t.startswith("cal_@") for t in menu)  # t1 needs x == 0


class TestBuffer:
    def test_overwrite_always_allowed_read_only_when_full(self):
        from csptree.ir import load_model
        from csptree.registry import resolve_model_path

        ir = load_model(resolve_model_path("chemical"))
        conn = next(c for c in ir.module.connections if c.async_)
        buf = single_buffer(ir, conn, "B", "Chemical_Angle")
        node = settle(buf)
        writes = [e for e in node.events() if e.value.items[0] == DOUT]
        reads = [e for e in node.events() if e.value.items[0] == DIN]
        assert len(writes) == 4 and len(reads) == 0
        node = settle(node.child(writes[0]))
        reads = [e for e in node.events() if e.value.items[0] == DIN]
        writes2 = [e for e in node.events() if e.value.items[0] == DOUT]
        assert len(reads) == 1 and len(writes2) == 4
        # overwrite with a different value, then read returns the new one
        node = settle(node.child(writes2[1]))
        read = next(e for e in node.events() if e.value.items[0] == DIN)
        assert read.value.items[1] == writes2[1].value.items[1]


def test_config_override_shrinks_the_universe():
    from csptree.ir import load_model
    from csptree.registry import resolve_model_path
    from csptree.semantics import compile_module

    ir = load_model(resolve_model_path("patrol"), {"min_int": -2, "max_int": 2})
    cm = compile_module(ir)
    menu = texts(settle(cm.tree))
    assert menu == [
        "Reset_PatrolMod Din",
        "Cal_PatrolMod (Din,-2)",
        "Cal_PatrolMod (Din,-1)",
        "Cal_PatrolMod (Din,0)",
        "Cal_PatrolMod (Din,1)",
        "Cal_PatrolMod (Din,2)",
    ]
    # the forced segment from the left wall still drains to the centre
    node = step(settle(cm.tree), 2)  # cal -2
    seen = []
    for _ in range(3):
        menu = texts(node)
        seen.append(menu[0])
        node = step(node, 1)
    assert seen == [
        "Right_PatrolMod (Dout,-1)",
        "Right_PatrolMod (Dout,-1)",
        "Right_PatrolMod (Dout,0)",
    ]


def test_menu_events_are_display_events(patrol_mod, chemical_mod):
    for cm in (patrol_mod, chemical_mod):
        node = settle(cm.tree)
        universe = set(cm.display_events.values())
        for e in node.events():
            assert "@" not in e.channel
            assert e in universe
