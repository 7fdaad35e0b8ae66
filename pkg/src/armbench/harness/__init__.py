"""
Benchmark orchestration: configuration, the calibrate/explore/compare/report
commands, run summaries and the comparison report.
"""

from armbench.harness.config import BenchmarkConfig, ConfigOverrides, DevicePair, load_config
from armbench.harness.core import (
    ExitCode,
    cmd_calibrate,
    cmd_compare,
    cmd_explore,
    cmd_report,
    setup_logging,
    show_config,
)
from armbench.harness.report import build_report, write_report
from armbench.harness.store import ResultsStore, RunSummary

__all__ = [
    "BenchmarkConfig",
    "ConfigOverrides",
    "DevicePair",
    "load_config",
    "ExitCode",
    "cmd_calibrate",
    "cmd_compare",
    "cmd_explore",
    "cmd_report",
    "setup_logging",
    "show_config",
    "build_report",
    "write_report",
    "ResultsStore",
    "RunSummary",
]
