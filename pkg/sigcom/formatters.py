"""Result file formatting and the report writer.

Every float is written with 17 significant digits and nothing depends on
the wall clock, so identical runs produce identical bytes.
"""

import csv
import io
import json
import logging
import shutil
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from rich.table import Table
from rich.tree import Tree

from sigcom.exceptions import ReportError
from sigcom.ingest import SectorMap
from sigcom.pipeline import CellResult, GridResult, StabilityCurve
from sigcom.similarity import SymMatrix
from sigcom.spectral import SweepPoint

logger = logging.getLogger("sigcom.formatters")

GRID_COLUMNS = [
    "cell",
    "method",
    "filter",
    "algorithm",
    "status",
    "q",
    "n_communities",
    "theta",
    "density",
    "reason",
]
STABILITY_COLUMNS = [
    "window",
    "cell",
    "method",
    "filter",
    "algorithm",
    "status",
    "q",
    "n_communities",
    "reason",
]


def format_float(value: Optional[float]) -> str:
    """Full-precision float, empty for None."""
    if value is None:
        return ""
    return "%.17g" % value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text with '\\n' line endings; floats at full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def format_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def format_grid_csv(results: Sequence[CellResult]) -> str:
    rows = ([getattr(r, column) for column in GRID_COLUMNS] for r in results)
    return format_csv(GRID_COLUMNS, rows)


def format_grid_json(grid: GridResult) -> str:
    """Grid summary without assignments (those go to the partition files)."""
    return format_json(
        {
            "n_series": len(grid.tickers),
            "n_obs": grid.n_obs,
            "cells": [
                r.model_dump(mode="json", exclude={"assignment", "overlap"}) for r in grid.results
            ],
        }
    )


def format_partition_csv(tickers: Sequence[str], assignment: Sequence[int]) -> str:
    return format_csv(["ticker", "community"], zip(tickers, assignment))


def format_cell_report(result: CellResult) -> str:
    """Per-cell community report: q, K, sizes and the sector table when known."""
    report: dict[str, Any] = {
        "cell": result.cell,
        "q": result.q,
        "n_communities": result.n_communities,
        "sizes": result.sizes,
        "theta": result.theta,
        "density": result.density,
    }
    if result.overlap is not None:
        report["sectors"] = result.overlap.sectors
        report["communities"] = [c.model_dump(mode="json") for c in result.overlap.communities]
    return format_json(report)


def format_stability_csv(curve: StabilityCurve) -> str:
    rows = ([getattr(p, column) for column in STABILITY_COLUMNS] for p in curve.points)
    return format_csv(STABILITY_COLUMNS, rows)


def format_matrix_csv(matrix: SymMatrix) -> str:
    tickers = matrix.tickers or tuple(str(i) for i in range(matrix.size))
    rows = ([ticker, *row.tolist()] for ticker, row in zip(tickers, matrix.values))
    return format_csv(["ticker", *tickers], rows)


def format_signatures_csv(rows: Iterable[tuple[str, str, float]]) -> str:
    return format_csv(["ticker", "word", "coefficient"], rows)


def format_sweep_csv(points: Sequence[SweepPoint]) -> str:
    header = ["theta", "n_edges", "density", "n_components", "n_isolated"]
    return format_csv(header, ([getattr(p, c) for c in header] for p in points))


def format_labels_csv(tickers: Sequence[str], labels: Sequence[int]) -> str:
    return format_csv(["ticker", "block"], zip(tickers, labels))


def format_sectors_csv(sectors: SectorMap, tickers: Sequence[str]) -> str:
    return format_csv(["ticker", "sector"], ((t, sectors.label(t)) for t in tickers))


class ReportWriter:
    """Collects result files in memory and publishes them together.

    `commit` writes every file into a staging directory inside the output
    directory, then renames each into place. An unwritable output directory
    fails before any result file appears.
    """

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self._files: dict[str, str] = {}

    def add(self, name: str, content: str) -> None:
        if "/" in name or name.startswith("."):
            raise ReportError(f"Invalid report file name '{name}'")
        self._files[name] = content

    @property
    def names(self) -> list[str]:
        return sorted(self._files)

    def commit(self) -> list[Path]:
        """Write all collected files.

        Returns:
            Final paths in name order

        Raises:
            ReportError: The output directory or a file cannot be written
        """
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            staging = Path(tempfile.mkdtemp(dir=self.out_dir, prefix=".staging-"))
        except OSError as e:
            raise ReportError(f"Cannot write to output directory {self.out_dir}: {e}") from e

        try:
            for name in self.names:
                with open(staging / name, "w", encoding="utf-8", newline="") as f:
                    f.write(self._files[name])
            paths = []
            for name in self.names:
                target = self.out_dir / name
                (staging / name).replace(target)
                paths.append(target)
        except OSError as e:
            raise ReportError(f"Failed to write results to {self.out_dir}: {e}") from e
        finally:
            shutil.rmtree(staging, ignore_errors=True)

        logger.info(f"Wrote {len(paths)} files to {self.out_dir}")
        return paths


def emit_report(
    out_dir: Path,
    grid: Optional[GridResult] = None,
    stability: Optional[StabilityCurve] = None,
) -> list[Path]:
    """Write grid, partition, per-cell, spectrum, stability and dump files.

    Returns:
        Paths of the written files, sorted by name
    """
    writer = ReportWriter(out_dir)
    if grid is not None:
        writer.add("grid.csv", format_grid_csv(grid.results))
        writer.add("grid.json", format_grid_json(grid))
        for result in grid.results:
            if not result.ok:
                continue
            writer.add(
                f"partition_{result.cell}.csv",
                format_partition_csv(grid.tickers, result.assignment),
            )
            writer.add(f"report_{result.cell}.json", format_cell_report(result))
        for method, report in grid.spectra.items():
            writer.add(f"spectrum_{method}_rmt.json", format_json(report))
        for method, matrix in grid.matrices.items():
            writer.add(f"matrix_{method}.csv", format_matrix_csv(matrix))
        if grid.signature_rows:
            writer.add("signatures.csv", format_signatures_csv(grid.signature_rows))
    if stability is not None:
        writer.add("stability.csv", format_stability_csv(stability))
    return writer.commit()


def _q(value: Optional[float]) -> str:
    return f"{value:.4f}" if value is not None else "-"


def grid_table(grid: GridResult) -> Table:
    """Console summary of a grid run."""
    table = Table(title=f"Modularity grid ({len(grid.tickers)} series, {grid.n_obs} returns)")
    for column in ("Method", "Filter", "Algorithm", "q", "K", "Status"):
        table.add_column(column, justify="right" if column in ("q", "K") else "left")
    for r in grid.results:
        status = r.status if r.ok else f"{r.status}: {r.reason}"
        k = str(r.n_communities) if r.n_communities is not None else "-"
        table.add_row(str(r.method), str(r.filter), str(r.algorithm), _q(r.q), k, status)
    return table


def stability_table(curve: StabilityCurve) -> Table:
    """One row per cell, one column per window, entries q (K)."""
    table = Table(title="Stability analysis")
    table.add_column("Cell")
    for window in curve.windows:
        table.add_column(f"T={window}", justify="right")
    cells = list(dict.fromkeys(p.cell for p in curve.points))
    for cell in cells:
        by_window = {p.window: p for p in curve.series(cell)}
        entries = []
        for window in curve.windows:
            p = by_window.get(window)
            entries.append(f"{_q(p.q)} ({p.n_communities})" if p and p.q is not None else "-")
        table.add_row(cell, *entries)
    return table


def spectrum_tree(method: str, report: dict[str, Any]) -> Tree:
    """Eigenvalue buckets of one RMT split as a tree."""
    tree = Tree(f"{method}: N={report['n_series']}, T={report['n_obs']}")
    tree.add(f"lambda_max = {report['lambda_max']:.4f}")
    edges = tree.add(f"sigma^2 = {report['sigma2']:.4f}")
    if report["sigma2_fallback"]:
        edges.add("fallback to 1 (1 - lambda_max/N was not positive)")
    edges.add(f"lambda- = {report['lambda_minus']:.4f}")
    edges.add(f"lambda+ = {report['lambda_plus']:.4f}")
    buckets = tree.add("buckets")
    for name, count in report["buckets"].items():
        buckets.add(f"{name}: {count}")
    if "fisher_threshold" in report:
        tree.add(f"Fisher 5% threshold = {report['fisher_threshold']:.4f}")
    return tree
