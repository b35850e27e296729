"""Command-line entry points.

``animate`` runs the interactive textual loop, ``replay`` walks a recorded
scenario (optionally rendering a CSV + figure report), ``check`` is the
exit-code-only bounded trace-membership test, ``laws`` runs the operator
law suite on random trees, and ``serve`` starts the HTTP session service.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .animator import ChoiceError, Session, load_scenario, replay
from .itree import DEFAULT_TAU_BUDGET
from .laws import broken_merge, run_laws
from .registry import load_compiled, resolve_scenario_path
from .values import event_text


def _parse_config(pairs):
    out = {}
    for pair in pairs or []:
        for item in pair.split(","):
            if not item:
                continue
            k, _, v = item.partition("=")
            out[k.strip()] = int(v)
    return out or None


def cmd_animate(args) -> int:
    compiled = load_compiled(args.model, _parse_config(args.config), args.models_dir)
    session = Session(compiled, args.tau_budget)
    print("Starting ITree animation...")
    while True:
        menu = session.menu
        if menu.kind == "terminated":
            print("Terminated: ()")
            return 0
        if menu.kind == "stuck":
            print("Deadlocked.")
            return 0
        if menu.kind == "tau_budget":
            print(f"Internal-step budget exceeded ({args.tau_budget}); possible livelock.")
            return 1
        print("Events: " + "; ".join(menu.lines()) + ";")
        prompt = f"[Choose: 1-{len(menu.events)}]: "
        sys.stdout.write(prompt)
        sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            print()
            return 0
        line = line.strip()
        if line in ("q", "quit", "exit"):
            return 0
        try:
            idx = int(line)
            event = menu.events[idx - 1] if 1 <= idx <= len(menu.events) else None
            if event is None:
                raise ChoiceError(f"choice {idx} out of range")
            session.choose_index(idx)
            print(event_text(event))
        except (ValueError, ChoiceError) as exc:
            print(f"invalid choice: {exc}")
    return 0


def _run_scenario(args):
    compiled = load_compiled(args.model, _parse_config(args.config), args.models_dir)
    scenario = load_scenario(resolve_scenario_path(args.scenario), compiled)
    return compiled, scenario, replay(compiled, scenario, args.max_steps, args.tau_budget)


def cmd_replay(args) -> int:
    _compiled, _scenario, report = _run_scenario(args)
    print(f"scenario : {report.scenario}")
    print(f"outcome  : {report.outcome}")
    print(f"accepted : {report.accepted_steps} steps")
    if report.refused_event is not None:
        print(f"refused  : {event_text(report.refused_event)} at step {report.accepted_steps + 1}")
        if report.menu_at_refusal and report.menu_at_refusal.events:
            print("menu     : " + "; ".join(event_text(e) for e in report.menu_at_refusal.events))
    if args.out_dir:
        from .report import write_report

        csv_path, png_path = write_report(report, Path(args.out_dir))
        print(f"wrote    : {csv_path}")
        print(f"wrote    : {png_path}")
    return 0 if report.ok() else 1


def cmd_check(args) -> int:
    _compiled, _scenario, report = _run_scenario(args)
    if report.ok():
        print(f"accepted: {report.accepted_steps} steps")
        return 0
    if report.refused_event is not None:
        print(
            f"refused at step {report.accepted_steps + 1}: {event_text(report.refused_event)}"
        )
    else:
        print(f"{report.outcome} after {report.accepted_steps} steps")
    return 1


def cmd_laws(args) -> int:
    if args.cases <= 0:
        print("cases must be positive", file=sys.stderr)
        return 2
    merge = broken_merge if args.merge == "broken" else None
    result = run_laws(args.seed, args.cases, depth=args.depth, merge=merge)
    if result.ok():
        print(f"all laws hold: {result.checked} checks over {result.cases} cases")
        return 0
    first = result.failures[0]
    print(f"{len(result.failures)} failures; first: {first.law} (case {first.case}) {first.detail}")
    return 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static = Path(args.static_dir) if args.static_dir else None
    app = create_app(models_dir=args.models_dir, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csptree")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=False):
        sp.add_argument("--model", required=True, help="model name or path to a model file")
        sp.add_argument("--config", action="append", metavar="k=v[,k=v]", help="core bound overrides")
        sp.add_argument("--tau-budget", type=int, default=DEFAULT_TAU_BUDGET)
        sp.add_argument("--models-dir", type=Path, default=None)
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario name or path")
            sp.add_argument("--max-steps", type=int, default=100)

    sp = sub.add_parser("animate", help="interactive textual animation")
    common(sp)
    sp.set_defaults(fn=cmd_animate)

    sp = sub.add_parser("replay", help="replay a scenario and report")
    common(sp, scenario=True)
    sp.add_argument("--out-dir", default=None, help="write step CSV and figure here")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("check", help="bounded trace-membership check")
    common(sp, scenario=True)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("laws", help="operator law suite on random trees")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cases", type=int, default=200)
    sp.add_argument("--depth", type=int, default=5)
    sp.add_argument("--merge", choices=["excl", "broken"], default="excl")
    sp.set_defaults(fn=cmd_laws)

    sp = sub.add_parser("serve", help="start the HTTP session service")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--models-dir", type=Path, default=None)
    sp.add_argument("--static-dir", default=None, help="built web UI assets")
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except Exception as exc:  # diagnostics, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
