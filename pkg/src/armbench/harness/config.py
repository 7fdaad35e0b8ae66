"""
The benchmark configuration document.

Every field has a default, so an empty document (or no document at all) is a
valid configuration. Values are resolved with the precedence
command-line flags > environment > file > defaults.
"""

import logging
import math
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator, model_validator

from armbench.compat.oracle import RESPONSE_THRESHOLD
from armbench.compat.similarity import SimilarityMetric
from armbench.documents import BenchBaseModel, load_document
from armbench.explorer.runner import Budget, Perception
from armbench.explorer.strategy import Strategy, StrategyVariant
from armbench.kinematics import ArmConfig
from armbench.simbench.photo import CameraRig, SceneConfig
from armbench.units import Radians

log = logging.getLogger("armbench.harness")

ENV_OUT = "ARMBENCH_OUT"
ENV_SEED = "ARMBENCH_SEED"


class DevicePair(BenchBaseModel):
    """A device under test and its reference; no reference means the device's regular twin."""

    device: str
    reference: str | None = None


class CalibrationSection(BenchBaseModel):
    seed: int = 0
    refine: bool = True
    estimate_k1: bool = False
    file: str | None = None


class ExplorationSection(BenchBaseModel):
    perception: Perception = Perception.camera
    cone_half_angle: Radians = Field(default=math.pi / 3, gt=0, le=math.pi)
    prefer_unvisited: bool = True
    scroll_probability: float = Field(default=0.05, ge=0, le=1)
    max_retries: int = Field(default=8, ge=0)


class CompatSection(BenchBaseModel):
    threshold: float = Field(default=RESPONSE_THRESHOLD, gt=0, le=1)
    metric: SimilarityMetric = SimilarityMetric.block


class BenchmarkConfig(BenchBaseModel):
    schema_version: Literal[1] = 1
    apps: list[str] = Field(default_factory=lambda: ["suite:*"], min_length=1)
    device: str = "punch-hole"
    pairs: list[DevicePair] = Field(default_factory=lambda: [DevicePair(device="punch-hole")])
    strategies: list[StrategyVariant] = Field(
        default_factory=lambda: list(StrategyVariant), min_length=1
    )
    seeds: list[int] = Field(default_factory=lambda: list(range(10)), min_length=1)
    budgets: list[Budget] = Field(default_factory=lambda: [Budget(steps=200)], min_length=1)
    arm: ArmConfig = Field(default_factory=ArmConfig)
    camera: CameraRig = Field(default_factory=CameraRig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    exploration: ExplorationSection = Field(default_factory=ExplorationSection)
    compat: CompatSection = Field(default_factory=CompatSection)
    workers: int = Field(default=1, ge=1)
    out: str = "armbench-out"

    @field_validator("budgets")
    @classmethod
    def _positive_budgets(cls, budgets: list[Budget]) -> list[Budget]:
        for b in budgets:
            if (b.steps is not None and b.steps <= 0) or (b.seconds is not None and b.seconds <= 0):
                raise ValueError(f"Budgets must be positive, got {b.model_dump(exclude_none=True)}")
        return budgets

    @model_validator(mode="after")
    def _unique_grid(self):
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError(f"Strategies are listed more than once: {[str(s) for s in self.strategies]}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"Seeds are listed more than once: {self.seeds}")
        return self

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def calibration_path(self) -> Path:
        return Path(self.calibration.file) if self.calibration.file else self.out_dir / "calibration.json"

    def strategy(self, variant: StrategyVariant, seed: int) -> Strategy:
        e = self.exploration
        return Strategy(
            variant=variant,
            seed=seed,
            cone_half_angle=e.cone_half_angle,
            prefer_unvisited=e.prefer_unvisited,
            scroll_probability=e.scroll_probability,
            max_retries=e.max_retries,
        )


class ConfigOverrides(BenchBaseModel):
    """Values given on the command line; None leaves the configured value alone."""

    seed: int | None = None
    strategies: list[StrategyVariant] | None = None
    budget_steps: int | None = None
    budget_seconds: float | None = None
    out: str | None = None


def load_config(
    path: str | Path | None = None,
    overrides: ConfigOverrides | None = None,
    environ: Mapping[str, str] | None = None,
) -> BenchmarkConfig:
    """
    The effective configuration.

    Raises:
        ValidationError: the document or the resolved values are invalid.
        ValueError: an environment override does not parse.
    """
    config = load_document(path, BenchmarkConfig) if path is not None else BenchmarkConfig()
    env = os.environ if environ is None else environ
    update: dict = {}
    if env.get(ENV_OUT):
        update["out"] = env[ENV_OUT]
    if env.get(ENV_SEED):
        try:
            update["seeds"] = [int(env[ENV_SEED])]
        except ValueError as e:
            raise ValueError(f"{ENV_SEED} must be an integer, got '{env[ENV_SEED]}'") from e

    o = overrides or ConfigOverrides()
    if o.out is not None:
        update["out"] = o.out
    if o.seed is not None:
        update["seeds"] = [o.seed]
    if o.strategies:
        update["strategies"] = o.strategies
    if o.budget_steps is not None or o.budget_seconds is not None:
        update["budgets"] = [{"steps": o.budget_steps, "seconds": o.budget_seconds}]
    if not update:
        return config
    log.debug(f"Configuration overrides: {update}")
    merged = config.model_dump(mode="json") | update
    return BenchmarkConfig.model_validate(merged)
