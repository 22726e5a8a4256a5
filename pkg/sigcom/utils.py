"""Console progress and timing helpers for the CLI."""

import logging
import time
from typing import Optional

from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
)

logger = logging.getLogger("sigcom.utils")


class StepProgress:
    """Progress bar advanced by a pipeline callback.

    Usage:
        with StepProgress("Grid", total=4) as progress:
            run_grid(config, progress=progress.advance)
    """

    def __init__(self, description: str, total: int, console: Optional[Console] = None):
        self.description = description
        self.total = total
        self.console = console or Console(stderr=True, force_terminal=False, color_system=None)
        self.progress: Optional[Progress] = None
        self.task_id = None
        self.completed = 0

    def __enter__(self) -> "StepProgress":
        self.progress = Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(complete_style="white", finished_style="white"),
            TaskProgressColumn(),
            TimeElapsedColumn(),
            console=self.console,
            transient=True,
        )
        self.progress.__enter__()
        self.task_id = self.progress.add_task(self.description, total=self.total)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.progress:
            self.progress.__exit__(exc_type, exc_val, exc_tb)
            self.progress = None

    def advance(self, label: str) -> None:
        """Mark one step done; `label` names the step just finished."""
        self.completed += 1
        logger.debug(f"{self.description}: finished {label} ({self.completed}/{self.total})")
        if self.progress is not None:
            self.progress.update(
                self.task_id,
                advance=1,
                description=f"{self.description} ({label})",
            )


def format_duration(seconds: float) -> str:
    """Human-readable duration."""
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes = int(seconds // 60)
    return f"{minutes}m {int(seconds % 60)}s"


class OperationTimer:
    """Logs how long a block took at DEBUG level."""

    def __init__(self, description: str = "Operation"):
        self.description = description
        self.start_time: Optional[float] = None
        self.end_time: Optional[float] = None

    def __enter__(self) -> "OperationTimer":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_time = time.perf_counter()
        logger.debug(f"{self.description} completed in {format_duration(self.elapsed)}")

    @property
    def elapsed(self) -> float:
        if self.start_time is None:
            return 0.0
        return (self.end_time or time.perf_counter()) - self.start_time
