"""Replay report rendering: delimited step log plus a figure.

The CSV holds one row per scenario step with the menu width seen at that
step; the figure plots menu width over the walk and marks the refusal
point, which makes livelocks and refusals easy to eyeball across runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .animator import Report
from .values import event_text


def write_csv(report: Report, path: Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "channel", "payload", "accepted", "menu_size"])
        for s in report.steps:
            w.writerow(
                [s.index, s.event.channel, event_text(s.event).split(" ", 1)[1], int(s.accepted), s.menu_size]
            )
        if report.refused_event is not None:
            menu_size = (
                len(report.menu_at_refusal.events) if report.menu_at_refusal else 0
            )
            w.writerow(
                [
                    report.accepted_steps,
                    report.refused_event.channel,
                    event_text(report.refused_event).split(" ", 1)[1],
                    0,
                    menu_size,
                ]
            )


def write_figure(report: Report, path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [s.index + 1 for s in report.steps]
    ys = [s.menu_size for s in report.steps]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    if xs:
        ax.step(xs, ys, where="mid", lw=1.5, label="menu width")
        ax.plot(xs, ys, "o", ms=3, color="C0")
    if report.refused_event is not None:
        x = report.accepted_steps + 1
        ax.axvline(x, color="C3", ls="--", lw=1)
        ax.annotate(
            f"refused: {event_text(report.refused_event)}",
            (x, max(ys) if ys else 1),
            fontsize=8,
            color="C3",
            rotation=90,
            va="top",
            ha="right",
        )
    ax.set_xlabel("step")
    ax.set_ylabel("enabled events")
    ax.set_title(f"{report.scenario}: {report.outcome} after {report.accepted_steps} steps")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(report: Report, out_dir: Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = report.scenario.replace("/", "_") or "replay"
    csv_path = out_dir / f"{stem}.csv"
    png_path = out_dir / f"{stem}.png"
    write_csv(report, csv_path)
    write_figure(report, png_path)
    return csv_path, png_path
