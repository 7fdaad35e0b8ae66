import csv
import json
import logging
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
from io import StringIO
from pathlib import Path
from typing import NamedTuple, TextIO

import numpy as np
from pydantic import ValidationError
from ruamel.yaml import YAML

from armbench.camera import CalibrationResult, CameraIntrinsics, calibrate
from armbench.compat.oracle import BugKind, BugReport, Evidence, check_profiles, run_comparison_session
from armbench.documents import dump_yaml
from armbench.errors import ArmbenchError, MissingRunsError
from armbench.explorer.runner import Budget, Perception, RunMetrics, run_exploration
from armbench.explorer.strategy import StrategyVariant
from armbench.harness.config import BenchmarkConfig, DevicePair
from armbench.harness.report import COMPARE_SUMMARY, EXPLORE_SUMMARY, build_report, write_report
from armbench.harness.store import RunSummary, summaries_to_csv
from armbench.simbench.photo import synthesize_chessboard_views
from armbench.simbench.registry import get_model_registry
from armbench.simbench.session import AppSession
from common.utils import armbench_version, atomic_write_text

SUMMARY_SCHEMA_VERSION = 1


# --- Logging Setup ---
class YamlFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        yaml = YAML()
        stream = StringIO()
        yaml.dump([_record_dict(self, record)], stream)
        return stream.getvalue().strip()


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps(_record_dict(self, record))


def _record_dict(formatter: logging.Formatter, record: logging.LogRecord) -> dict:
    return {
        "level": record.levelname,
        "name": record.name,
        "message": record.getMessage(),
        "time": formatter.formatTime(record, formatter.datefmt),
    }


def setup_logging(
    disable: bool,
    verbose: bool,
    quiet: bool,
    output: str,
    stream: StringIO | TextIO = sys.stdout,
) -> None:
    """Route the `armbench` loggers to `stream` in the requested format."""
    logger = logging.getLogger("armbench")
    logger.handlers.clear()
    logger.disabled = disable
    if disable:
        return
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.ERROR
    else:
        level = logging.INFO
    logger.setLevel(level)
    handler = logging.StreamHandler(stream)
    if output == "json":
        handler.setFormatter(JsonFormatter())
    elif output == "yaml":
        handler.setFormatter(YamlFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)


class ExitCode(IntEnum):
    ok = 0
    usage = 1
    run_failure = 2
    bugs_found = 3


def show_config(config: BenchmarkConfig, output: str = "text") -> str:
    """The effective configuration as JSON for `--output json`, YAML otherwise."""
    doc = config.model_dump(mode="json")
    if output == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    return dump_yaml(doc)


def log_validation_error(e: ValidationError, source: str | None = None) -> None:
    log = logging.getLogger("armbench.harness")
    where = f" in '{source}'" if source else ""
    log.error(f"❌ Invalid configuration{where}: {e.error_count()} error(s)")
    for err in e.errors():
        loc = " -> ".join(str(p) for p in err["loc"])
        log.error(f"  - Location '{loc}' -> {err['msg']}")


# --- calibrate ---


def cmd_calibrate(
    config: BenchmarkConfig,
    disable_log: bool = False,
    quiet_log: bool = False,
    verbose_log: bool = False,
    output: str = "text",
    log_stream: StringIO | TextIO = sys.stdout,
) -> ExitCode:
    """
    Calibrate the bench camera from synthesized chessboard views.

    The views are drawn from the configured camera's true intrinsics with the
    calibration seed, so a rerun with the same configuration writes a
    byte-identical calibration file.

    Returns:
        ExitCode: `ok`, or `run_failure` when calibration fails.
    """
    setup_logging(disable=disable_log, verbose=verbose_log, quiet=quiet_log, output=output, stream=log_stream)
    log = logging.getLogger("armbench.harness")
    log.debug(f"armbench version - {armbench_version()}")

    scene = config.scene
    views = synthesize_chessboard_views(
        config.camera.intrinsics,
        n_views=scene.chessboard_views,
        noise=scene.chessboard_noise,
        rng=np.random.default_rng(config.calibration.seed),
        grid=scene.chessboard_grid,
        square=scene.chessboard_square,
    )
    try:
        result = calibrate(views, refine=config.calibration.refine, estimate_k1=config.calibration.estimate_k1)
    except ArmbenchError as e:
        log.error(f"❌ Calibration failed: {e}")
        return ExitCode.run_failure

    path = atomic_write_text(config.calibration_path, result.to_json())
    i = result.intrinsics
    log.info(
        f"✅ Calibrated from {result.views} views, mean reprojection error {result.reprojection_error:.4f} px"
    )
    log.info(f"fx={i.fx:.2f} fy={i.fy:.2f} cx={i.cx:.2f} cy={i.cy:.2f} s={i.s:.3f} k1={i.k1:.2e} -> {path}")
    return ExitCode.ok


def load_intrinsics(config: BenchmarkConfig) -> CameraIntrinsics | None:
    """Calibrated intrinsics, or None when the configured perception needs none."""
    if config.exploration.perception == Perception.oracle:
        return None
    path = config.calibration_path
    if not path.is_file():
        raise FileNotFoundError(f"No calibration at '{path}'; run 'armbench calibrate' first")
    return CalibrationResult.from_json(path.read_text(encoding="utf-8")).intrinsics


# --- explore ---


class Cell(NamedTuple):
    app: str
    strategy: StrategyVariant
    seed: int
    budget: Budget


class CellOutcome(NamedTuple):
    row: dict | None
    failure: dict | None
    reports: list[dict]


def explore_grid(config: BenchmarkConfig) -> list[Cell]:
    apps = get_model_registry().expand_apps(config.apps)
    return [
        Cell(app, variant, seed, budget)
        for app in apps
        for variant in config.strategies
        for seed in config.seeds
        for budget in config.budgets
    ]


def _run_name(app_name: str, variant: str, budget: Budget, seed: int) -> str:
    return f"{app_name}-{variant}-{budget.granularity}-s{seed}".replace(":", "-")


def _summary_row(
    metrics: RunMetrics, app: str, device: str, cell: Cell, trace: str, compat_bugs: int = 0
) -> dict:
    return {
        "app": app,
        "device": device,
        "strategy": str(cell.strategy),
        "seed": cell.seed,
        "granularity": cell.budget.granularity,
        "steps": metrics.steps,
        "failed_steps": metrics.failed_steps,
        "distance": metrics.distance,
        "seconds": metrics.seconds,
        "screens_visited": metrics.screens_visited,
        "widgets_exercised": metrics.widgets_exercised,
        "crashes": metrics.crashes,
        "compat_bugs": compat_bugs,
        "recognition_rate": metrics.recognition_rate,
        "screen_coverage": metrics.screen_coverage,
        "widget_coverage": metrics.widget_coverage,
        "trace": trace,
    }


def _failure(cell: Cell, error: Exception, device: str) -> dict:
    return {
        "app": cell.app,
        "device": device,
        "strategy": str(cell.strategy),
        "seed": cell.seed,
        "granularity": cell.budget.granularity,
        "error": f"{type(error).__name__}: {error}",
    }


def explore_cell(
    config: BenchmarkConfig, cell: Cell, intrinsics: CameraIntrinsics | None, overlays: bool = False
) -> CellOutcome:
    """One grid cell; module level so a process pool can pickle it."""
    log = logging.getLogger("armbench.harness")
    registry = get_model_registry()
    try:
        app = registry.app(cell.app)
        device = registry.device(config.device)
        session = AppSession(app, device, config.camera, config.scene, seed=cell.seed)
        name = _run_name(app.name, cell.strategy, cell.budget, cell.seed)
        overlay_dir = config.out_dir / "overlays" / name if overlays else None
        trace, metrics = run_exploration(
            session,
            config.strategy(cell.strategy, cell.seed),
            cell.budget,
            config.arm,
            config.exploration.perception,
            intrinsics,
            overlay_dir,
        )
    except (ArmbenchError, ValidationError) as e:
        log.error(f"❌ {cell.app} {cell.strategy} seed {cell.seed} ({cell.budget.granularity}) failed: {e}")
        return CellOutcome(None, _failure(cell, e, config.device), [])

    trace_path = f"traces/{name}.jsonl"
    atomic_write_text(config.out_dir / trace_path, trace.to_jsonl())
    log.info(
        f"✅ {app.name} {cell.strategy} seed {cell.seed} ({cell.budget.granularity}): "
        f"{metrics.steps} steps, {metrics.distance:.1f} mm, {metrics.screens_visited} screens"
    )
    return CellOutcome(_summary_row(metrics, app.name, device.id, cell, trace_path), None, [])


def _run_cells(func, config: BenchmarkConfig, jobs: list[tuple]) -> list[CellOutcome]:
    if config.workers <= 1 or len(jobs) <= 1:
        return [func(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(func, *zip(*jobs, strict=True)))


def _grid_doc(config: BenchmarkConfig, apps: list[str]) -> dict:
    return {
        "apps": apps,
        "strategies": [str(s) for s in config.strategies],
        "seeds": list(config.seeds),
        "granularities": [b.granularity for b in config.budgets],
    }


def _write_summaries(out_dir: Path, name: str, grid: dict, rows: list[RunSummary], failures: list[dict]) -> None:
    doc = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "grid": grid,
        "runs": [r.row() for r in rows],
        "failures": failures,
    }
    atomic_write_text(out_dir / name, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    atomic_write_text(out_dir / name.replace(".json", ".csv"), summaries_to_csv(rows))


def _sorted_rows(outcomes: list[CellOutcome]) -> list[RunSummary]:
    return sorted((RunSummary(**o.row) for o in outcomes if o.row is not None), key=RunSummary.sort_key)


def _sorted_failures(outcomes: list[CellOutcome]) -> list[dict]:
    failures = [o.failure for o in outcomes if o.failure is not None]
    return sorted(failures, key=lambda f: (f["app"], f["strategy"], f["seed"], f["granularity"], f["device"]))


def cmd_explore(
    config: BenchmarkConfig,
    debug_overlays: bool = False,
    disable_log: bool = False,
    quiet_log: bool = False,
    verbose_log: bool = False,
    output: str = "text",
    log_stream: StringIO | TextIO = sys.stdout,
) -> ExitCode:
    """
    Run the (app x strategy x seed x budget) exploration grid.

    Writes one JSON-lines trace per run under `traces/` and the run summaries
    as `summary.json` and `summary.csv`. A failing run is recorded and the
    rest of the grid still runs.

    Returns:
        ExitCode: `ok`; `usage` without a calibration under camera perception
            or with an unknown app or device; `run_failure` if any run failed.
    """
    setup_logging(disable=disable_log, verbose=verbose_log, quiet=quiet_log, output=output, stream=log_stream)
    log = logging.getLogger("armbench.harness")
    log.debug(f"armbench version - {armbench_version()}")

    try:
        intrinsics = load_intrinsics(config)
        cells = explore_grid(config)
        get_model_registry().device(config.device)
    except (FileNotFoundError, ArmbenchError, ValidationError) as e:
        log.error(f"❌ {e}")
        return ExitCode.usage

    log.info(f"Exploring {len(cells)} run(s) with {config.workers} worker(s)")
    outcomes = _run_cells(explore_cell, config, [(config, c, intrinsics, debug_overlays) for c in cells])
    rows, failures = _sorted_rows(outcomes), _sorted_failures(outcomes)
    apps = sorted({c.app for c in cells}, key=[c.app for c in cells].index)
    _write_summaries(config.out_dir, EXPLORE_SUMMARY, _grid_doc(config, apps), rows, failures)

    if failures:
        log.error(f"❌ {len(failures)} of {len(cells)} run(s) failed; summary in '{config.out_dir}'")
        return ExitCode.run_failure
    log.info(f"✅ {len(rows)} run(s) complete; summary in '{config.out_dir / EXPLORE_SUMMARY}'")
    return ExitCode.ok


# --- compare ---


class CompareJob(NamedTuple):
    pair: DevicePair
    cell: Cell


def compare_cell(config: BenchmarkConfig, job: CompareJob, intrinsics: CameraIntrinsics | None) -> CellOutcome:
    log = logging.getLogger("armbench.harness")
    registry = get_model_registry()
    cell = job.cell
    try:
        app = registry.app(cell.app)
        device = registry.device(job.pair.device)
        reference = (
            registry.device(job.pair.reference) if job.pair.reference is not None else device.regular_twin()
        )
        name = _run_name(app.name, cell.strategy, cell.budget, cell.seed)
        run_dir = f"compare/{device.id}-vs-{reference.id}"
        result = run_comparison_session(
            app,
            device,
            reference,
            config.strategy(cell.strategy, cell.seed),
            cell.budget,
            config.out_dir / run_dir / cell.budget.granularity,
            arm=config.arm,
            rig=config.camera,
            scene=config.scene,
            perception=config.exploration.perception,
            intrinsics=intrinsics,
            threshold=config.compat.threshold,
            metric=config.compat.metric,
        )
    except (ArmbenchError, ValidationError) as e:
        log.error(f"❌ {cell.app} on {job.pair.device} {cell.strategy} seed {cell.seed} failed: {e}")
        return CellOutcome(None, _failure(cell, e, job.pair.device), [])

    trace_path = f"{run_dir}/traces/{name}.jsonl"
    atomic_write_text(config.out_dir / trace_path, result.trace.to_jsonl())
    prefix = f"{run_dir}/{cell.budget.granularity}"
    reports = [_relocate(r, prefix).model_dump(mode="json") for r in result.reports]
    bugs = sum(1 for r in result.reports if r.kind == BugKind.compatibility)
    log.info(
        f"✅ {app.name} on {device.id} vs {reference.id} {cell.strategy} seed {cell.seed}: "
        f"{len(result.reports)} report(s), {bugs} compatibility"
    )
    row = _summary_row(result.metrics, app.name, device.id, cell, trace_path, compat_bugs=bugs)
    return CellOutcome(row, None, reports)


def _relocate(report: BugReport, prefix: str) -> BugReport:
    paths = {k: f"{prefix}/{v}" for k, v in report.evidence.model_dump().items() if v is not None}
    return report.model_copy(update={"evidence": Evidence(**paths)})


def findings_table(reports: list[dict]) -> dict[str, dict[str, int]]:
    """Report counts by bug kind, then app."""
    counts = Counter((r["kind"], r["app"]) for r in reports)
    table: dict[str, dict[str, int]] = {str(kind): {} for kind in BugKind}
    for (kind, app), n in sorted(counts.items()):
        table[kind][app] = n
    return table


_FINDINGS_COLUMNS = (
    "kind",
    "app",
    "screen",
    "widget",
    "gesture",
    "step",
    "strategy",
    "seed",
    "device",
    "reference",
    "response_a",
    "response_b",
    "similarity_a",
    "similarity_b",
)


def findings_csv(reports: list[dict]) -> str:
    stream = StringIO()
    writer = csv.DictWriter(stream, fieldnames=_FINDINGS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({c: r[c] for c in _FINDINGS_COLUMNS})
    return stream.getvalue()


def cmd_compare(
    config: BenchmarkConfig,
    disable_log: bool = False,
    quiet_log: bool = False,
    verbose_log: bool = False,
    output: str = "text",
    log_stream: StringIO | TextIO = sys.stdout,
) -> ExitCode:
    """
    Run comparison sessions for every device pair over the grid.

    A pair whose screens differ in size or resolution is skipped with an
    error; the other pairs still run. Bug reports go to `findings.json` and
    `findings.csv`, the runs to `compare-summary.json` and `.csv`.

    Returns:
        ExitCode: `bugs_found` if any report was filed, `run_failure` if a run
            or pair failed, `ok` otherwise.
    """
    setup_logging(disable=disable_log, verbose=verbose_log, quiet=quiet_log, output=output, stream=log_stream)
    log = logging.getLogger("armbench.harness")
    log.debug(f"armbench version - {armbench_version()}")
    registry = get_model_registry()

    try:
        intrinsics = load_intrinsics(config) if config.pairs else None
        cells = explore_grid(config) if config.pairs else []
    except (FileNotFoundError, ArmbenchError, ValidationError) as e:
        log.error(f"❌ {e}")
        return ExitCode.usage

    jobs: list[CompareJob] = []
    pair_failures: list[dict] = []
    for pair in config.pairs:
        try:
            device = registry.device(pair.device)
            reference = registry.device(pair.reference) if pair.reference is not None else device.regular_twin()
            check_profiles(device, reference)
        except (ArmbenchError, ValidationError) as e:
            log.error(f"❌ Skipping pair {pair.device} / {pair.reference or 'regular twin'}: {e}")
            pair_failures.append({"device": pair.device, "reference": pair.reference, "error": str(e)})
            continue
        jobs.extend(CompareJob(pair, c) for c in cells)

    log.info(f"Comparing {len(jobs)} run(s) over {len(config.pairs)} pair(s)")
    outcomes = _run_cells(compare_cell, config, [(config, j, intrinsics) for j in jobs])
    rows, failures = _sorted_rows(outcomes), _sorted_failures(outcomes)
    reports = sorted(
        (r for o in outcomes for r in o.reports),
        key=lambda r: (r["app"], r["device"], r["strategy"], r["seed"], r["step"], r["kind"]),
    )
    findings = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "reports": reports,
        "table": findings_table(reports),
        "pair_failures": pair_failures,
    }
    atomic_write_text(config.out_dir / "findings.json", json.dumps(findings, sort_keys=True, indent=2) + "\n")
    atomic_write_text(config.out_dir / "findings.csv", findings_csv(reports))
    apps = sorted({c.app for c in cells}, key=[c.app for c in cells].index)
    _write_summaries(config.out_dir, COMPARE_SUMMARY, _grid_doc(config, apps), rows, failures)

    for kind, per_app in findings["table"].items():
        for app, n in per_app.items():
            log.info(f"{kind:>13} {app}: {n}")
    if reports:
        log.info(f"❌ {len(reports)} bug report(s) in '{config.out_dir / 'findings.json'}'")
        return ExitCode.bugs_found
    if failures or pair_failures:
        log.error(f"❌ {len(failures)} run(s) and {len(pair_failures)} pair(s) failed")
        return ExitCode.run_failure
    log.info("✅ No bugs found")
    return ExitCode.ok


# --- report ---


def cmd_report(
    run_dir: str | Path,
    disable_log: bool = False,
    quiet_log: bool = False,
    verbose_log: bool = False,
    output: str = "text",
    log_stream: StringIO | TextIO = sys.stdout,
) -> ExitCode:
    """
    Write `report.md`, `report.html` and `series.csv` for a run directory.

    Returns:
        ExitCode: `usage` when the directory holds no runs, `run_failure` when a
            summary disagrees with its trace, `ok` otherwise.
    """
    setup_logging(disable=disable_log, verbose=verbose_log, quiet=quiet_log, output=output, stream=log_stream)
    log = logging.getLogger("armbench.harness")
    try:
        report = build_report(run_dir)
    except MissingRunsError as e:
        log.error(f"❌ {e}")
        return ExitCode.usage

    for w in report.warnings:
        log.warning(f"⚠️ {w}")
    if report.mismatches:
        for m in report.mismatches:
            log.error(f"❌ {m}")
        log.error(f"❌ {len(report.mismatches)} summary value(s) do not match their traces")
        return ExitCode.run_failure

    paths = write_report(run_dir, report)
    log.info(f"✅ Report written with {len(report.warnings)} warning(s): {', '.join(str(p) for p in paths)}")
    return ExitCode.ok
