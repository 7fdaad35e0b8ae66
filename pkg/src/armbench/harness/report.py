"""
The comparison table of a finished run directory.

Rows are (strategy, budget granularity); columns mirror the usual strategy
comparison: steps, arm distance, simulated time, screens and widgets reached,
crashes and compatibility bugs. Before anything is written, every summary
distance is re-derived from its trace file.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import NamedTuple

from markdown_it import MarkdownIt

from armbench.errors import MissingRunsError
from armbench.explorer.runner import ExplorationTrace
from armbench.harness.store import ResultsStore, RunSummary, StrategyAggregate
from common.utils import atomic_write_text

log = logging.getLogger("armbench.harness")

EXPLORE_SUMMARY = "summary.json"
COMPARE_SUMMARY = "compare-summary.json"
DISTANCE_TOLERANCE = 1e-6


class Report(NamedTuple):
    markdown: str
    warnings: list[str]
    mismatches: list[str]


def read_summary(path: Path) -> tuple[dict, list[RunSummary]]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    return doc.get("grid", {}), [RunSummary(**row) for row in doc.get("runs", [])]


def verify_traces(run_dir: Path, rows: list[RunSummary]) -> list[str]:
    """Summary rows whose distance or step count does not match their trace."""
    mismatches = []
    for row in rows:
        path = run_dir / row.trace
        if not path.is_file():
            mismatches.append(f"{row.trace}: trace file is missing")
            continue
        trace = ExplorationTrace.from_jsonl(path.read_text(encoding="utf-8"))
        recomputed = trace.recomputed_distance()
        if abs(recomputed - row.distance) > DISTANCE_TOLERANCE * max(1.0, row.distance):
            mismatches.append(f"{row.trace}: summary distance {row.distance} but the trace gives {recomputed}")
        if len(trace.records) != row.steps:
            mismatches.append(f"{row.trace}: summary has {row.steps} steps but the trace {len(trace.records)}")
    return mismatches


def _grid_gaps(grid: dict, store: ResultsStore, label: str) -> list[str]:
    if not grid:
        return []
    present = store.cells()
    warnings = []
    for strategy in grid.get("strategies", []):
        for granularity in grid.get("granularities", []):
            expected = len(grid.get("apps", [])) * len(grid.get("seeds", []))
            got = sum(1 for c in present if c[1] == strategy and c[3] == granularity)
            if got < expected:
                warnings.append(f"{label}: {strategy} at {granularity} has {got} of {expected} runs")
    return warnings


def _fmt(value: float | None, digits: int = 2) -> str:
    return "—" if value is None else f"{value:.{digits}f}"


def render_table(explore: list[StrategyAggregate], compare: list[StrategyAggregate], grid: dict) -> str:
    order = {name: i for i, name in enumerate(grid.get("strategies", []))}
    keys = {(a.strategy, a.granularity) for a in explore} | {(a.strategy, a.granularity) for a in compare}
    by_key = {(a.strategy, a.granularity): a for a in explore}
    bugs = {(a.strategy, a.granularity): a.compat_bugs for a in compare}
    for strategy in grid.get("strategies", []):
        for granularity in grid.get("granularities", []):
            keys.add((strategy, granularity))

    lines = [
        "| Strategy | Budget | Runs | Steps | Distance (mm) | SD (mm) | Seconds | Screens | Widgets | Crashes | Compat bugs |",
        "| --- | --- | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: |",
    ]
    for key in sorted(keys, key=lambda k: (order.get(k[0], len(order)), k[0], k[1])):
        a = by_key.get(key)
        bug_count = str(bugs[key]) if key in bugs else "—"
        if a is None:
            lines.append(f"| {key[0]} | {key[1]} | 0 | — | — | — | — | — | — | — | {bug_count} |")
            continue
        lines.append(
            f"| {a.strategy} | {a.granularity} | {a.runs} | {_fmt(a.steps, 1)} | {_fmt(a.distance)} | "
            f"{_fmt(a.distance_sd)} | {_fmt(a.seconds, 1)} | {_fmt(a.screens_visited, 2)} | "
            f"{_fmt(a.widgets_exercised, 2)} | {a.crashes} | {bug_count} |"
        )
    return "\n".join(lines) + "\n"


def series_csv(run_dir: Path, rows: list[RunSummary]) -> str:
    """Per-step cumulative distance and screens reached, one line per step of every run."""
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["strategy", "granularity", "app", "seed", "step", "cumulative_distance", "screens_visited"])
    for row in sorted(rows, key=RunSummary.sort_key):
        trace = ExplorationTrace.from_jsonl((run_dir / row.trace).read_text(encoding="utf-8"))
        seen: set[str] = set()
        for r in trace.records:
            seen.update((r.screen, r.next_screen))
            writer.writerow([row.strategy, row.granularity, row.app, row.seed, r.step, r.cumulative_distance, len(seen)])
    return stream.getvalue()


def build_report(run_dir: str | Path) -> Report:
    """
    Raises:
        MissingRunsError: `run_dir` holds no summaries, or only empty ones.
    """
    run_dir = Path(run_dir)
    explore_path, compare_path = run_dir / EXPLORE_SUMMARY, run_dir / COMPARE_SUMMARY
    if not explore_path.is_file() and not compare_path.is_file():
        raise MissingRunsError(f"No {EXPLORE_SUMMARY} or {COMPARE_SUMMARY} in '{run_dir}'")

    grid, explore_rows = read_summary(explore_path) if explore_path.is_file() else ({}, [])
    compare_grid, compare_rows = read_summary(compare_path) if compare_path.is_file() else ({}, [])
    if not explore_rows and not compare_rows:
        raise MissingRunsError(f"The summaries in '{run_dir}' hold no runs")

    mismatches = verify_traces(run_dir, explore_rows + compare_rows)
    explore_store, compare_store = ResultsStore(), ResultsStore()
    explore_store.add(explore_rows)
    compare_store.add(compare_rows)
    warnings = _grid_gaps(grid, explore_store, "explore") + _grid_gaps(compare_grid, compare_store, "compare")

    table = render_table(explore_store.aggregate(), compare_store.aggregate(), grid or compare_grid)
    parts = ["# armbench report", "", table]
    if warnings:
        parts += ["## Warnings", "", *[f"- {w}" for w in warnings], ""]
    return Report("\n".join(parts), warnings, mismatches)


def write_report(run_dir: str | Path, report: Report) -> list[Path]:
    run_dir = Path(run_dir)
    html_body = MarkdownIt("commonmark").enable("table").render(report.markdown)
    html = f'<!DOCTYPE html>\n<html>\n<head><meta charset="utf-8"><title>armbench report</title></head>\n<body>\n{html_body}</body>\n</html>\n'
    rows = []
    for name in (EXPLORE_SUMMARY, COMPARE_SUMMARY):
        if (run_dir / name).is_file():
            rows += read_summary(run_dir / name)[1]
    return [
        atomic_write_text(run_dir / "report.md", report.markdown),
        atomic_write_text(run_dir / "report.html", html),
        atomic_write_text(run_dir / "series.csv", series_csv(run_dir, rows)),
    ]
