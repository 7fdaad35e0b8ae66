# features/armbench/steps/armbench_steps.py

import os
import subprocess
import tempfile
from pathlib import Path
from typing import Any

from behave import given as _given
from behave import then as _then
from behave import when as _when
from behave.runner import Context

# Type cast behave decorators to Any to avoid "Object of type '_StepDecorator' is not callable" errors
given: Any = _given
when: Any = _when
then: Any = _then


def run_cli(args):
    env = {k: v for k, v in os.environ.items() if not k.startswith("ARMBENCH_")}
    return subprocess.run(["armbench", *args], capture_output=True, text=True, env=env)


def _remember(context: Context, result: subprocess.CompletedProcess) -> None:
    context.result = result
    print(f"CLI Output:\n{result.stdout}{result.stderr}")


@given("an empty output directory")
def step_impl_out_dir(context: Context):
    context.tmp = tempfile.TemporaryDirectory()
    context.add_cleanup(context.tmp.cleanup)
    context.out_dir = Path(context.tmp.name)


@given('the configuration "{config_file}"')
def step_impl_config(context: Context, config_file: str):
    if not os.path.exists(config_file):
        raise FileNotFoundError(f"Configuration file not found: {config_file}")
    context.config_file = config_file


@when('I run armbench "{command}"')
def step_impl_run_command(context: Context, command: str):
    args = ["--quiet", command, "--out", str(context.out_dir)]
    config_file = getattr(context, "config_file", None)
    if config_file:
        args.extend(["--config", config_file])
    _remember(context, run_cli(args))


@when("I run armbench report on the output directory")
def step_impl_run_report(context: Context):
    _remember(context, run_cli(["--quiet", "report", str(context.out_dir)]))


@when('I run armbench with "{arguments}"')
def step_impl_run_raw(context: Context, arguments: str):
    _remember(context, run_cli(arguments.split()))


@then("the exit code should be {code:d}")
def step_impl_exit_code(context: Context, code: int):
    assert context.result.returncode == code, f"Expected exit code {code}, got {context.result.returncode}"


@then("the exit code should be one of {codes}")
def step_impl_exit_codes(context: Context, codes: str):
    allowed = {int(c) for c in codes.split(",")}
    assert context.result.returncode in allowed, f"Exit code {context.result.returncode} not in {sorted(allowed)}"


@then('the output directory should contain "{name}"')
def step_impl_contains(context: Context, name: str):
    assert (context.out_dir / name).is_file(), f"{name} was not written to {context.out_dir}"


@then("the output directory should contain {count:d} traces")
def step_impl_trace_count(context: Context, count: int):
    traces = list((context.out_dir / "traces").glob("*.jsonl"))
    assert len(traces) == count, f"Expected {count} traces, found {len(traces)}"


@then('the output should contain "{text}"')
def step_impl_output_contains(context: Context, text: str):
    assert text in context.result.stdout, f"'{text}' not in output"
