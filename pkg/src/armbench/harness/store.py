"""
Run summaries and their aggregation.

Summary rows are persisted as JSON and CSV next to the traces they describe.
For reporting they are loaded into an in-memory SQLite database and grouped
with SQL.
"""

import csv
import io
import logging
import math
from typing import NamedTuple

from sqlalchemy import func
from sqlmodel import Field, Session, SQLModel, create_engine, select

log = logging.getLogger("armbench.harness")

SUMMARY_COLUMNS = (
    "app",
    "device",
    "strategy",
    "seed",
    "granularity",
    "steps",
    "failed_steps",
    "distance",
    "seconds",
    "screens_visited",
    "widgets_exercised",
    "crashes",
    "compat_bugs",
    "recognition_rate",
    "screen_coverage",
    "widget_coverage",
    "trace",
)


class RunSummary(SQLModel, table=True):
    """One (app, strategy, seed, budget) cell of a completed grid."""

    id: int | None = Field(default=None, primary_key=True)
    app: str
    device: str
    strategy: str
    seed: int
    granularity: str
    steps: int
    failed_steps: int = 0
    distance: float
    seconds: float
    screens_visited: int
    widgets_exercised: int
    crashes: int
    compat_bugs: int = 0
    recognition_rate: float | None = None
    screen_coverage: float = 0.0
    widget_coverage: float = 0.0
    trace: str

    def sort_key(self) -> tuple:
        return (self.app, self.strategy, self.seed, self.granularity, self.device)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}


def summaries_to_csv(rows: list[RunSummary]) -> str:
    stream = io.StringIO()
    writer = csv.DictWriter(stream, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.row())
    return stream.getvalue()


class StrategyAggregate(NamedTuple):
    strategy: str
    granularity: str
    runs: int
    steps: float
    distance: float
    distance_sd: float | None
    seconds: float
    screens_visited: float
    widgets_exercised: float
    crashes: int
    compat_bugs: int


class ResultsStore:
    """Summary rows in an in-memory SQLite database."""

    def __init__(self, db_url: str = "sqlite:///:memory:"):
        self.engine = create_engine(db_url)
        SQLModel.metadata.create_all(self.engine, tables=[RunSummary.__table__])

    @property
    def session(self) -> Session:
        return Session(self.engine)

    def add(self, rows: list[RunSummary]) -> None:
        with self.session as session:
            for r in rows:
                session.add(RunSummary.model_validate(r.row()))
            session.commit()

    def count(self) -> int:
        with self.session as session:
            return session.exec(select(func.count()).select_from(RunSummary)).one()

    def cells(self) -> set[tuple[str, str, int, str]]:
        """(app, strategy, seed, granularity) of every stored row."""
        with self.session as session:
            rows = session.exec(
                select(RunSummary.app, RunSummary.strategy, RunSummary.seed, RunSummary.granularity)
            ).all()
        return {tuple(r) for r in rows}

    def aggregate(self) -> list[StrategyAggregate]:
        """Means per (strategy, granularity), distance with its sample standard deviation."""
        statement = (
            select(
                RunSummary.strategy,
                RunSummary.granularity,
                func.count(),
                func.avg(RunSummary.steps),
                func.avg(RunSummary.distance),
                func.sum(RunSummary.distance * RunSummary.distance),
                func.avg(RunSummary.seconds),
                func.avg(RunSummary.screens_visited),
                func.avg(RunSummary.widgets_exercised),
                func.sum(RunSummary.crashes),
                func.sum(RunSummary.compat_bugs),
            )
            .group_by(RunSummary.strategy, RunSummary.granularity)
            .order_by(RunSummary.strategy, RunSummary.granularity)
        )
        out = []
        with self.session as session:
            for strategy, granularity, n, steps, mean, squares, seconds, screens, widgets, crashes, bugs in session.exec(
                statement
            ):
                sd = None
                if n > 1:
                    sd = math.sqrt(max(squares - n * mean * mean, 0.0) / (n - 1))
                out.append(
                    StrategyAggregate(
                        strategy, granularity, n, steps, mean, sd, seconds, screens, widgets, crashes, bugs
                    )
                )
        return out
