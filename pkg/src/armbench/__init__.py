"""
armbench - a hardware-free testbench for robotic-arm GUI exploration

A simulated 4-DOF arm, a synthetic camera and procedurally generated apps on
regular and irregular screens, together with the vision pipeline that finds
the screen and its widgets in a photo, the strategies that decide what to
touch next, and a comparison oracle for irregular-screen compatibility bugs.
"""

from armbench.harness import (
    BenchmarkConfig,
    ExitCode,
    cmd_calibrate,
    cmd_compare,
    cmd_explore,
    cmd_report,
    load_config,
)
from common.utils import armbench_version

__all__ = [
    "BenchmarkConfig",
    "ExitCode",
    "cmd_calibrate",
    "cmd_compare",
    "cmd_explore",
    "cmd_report",
    "load_config",
    "armbench_version",
]
