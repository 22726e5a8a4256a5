"""`sigcom run`: evaluate the method x filter x algorithm grid."""

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from sigcom.commands import options
from sigcom.config import get_settings, load_run_config
from sigcom.formatters import emit_report, grid_table
from sigcom.pipeline import run_grid
from sigcom.utils import OperationTimer, StepProgress

logger = logging.getLogger("sigcom.commands.run")
console = Console()


def run_command(
    config: Optional[Path] = options.CONFIG,
    prices: Optional[Path] = options.PRICES,
    sectors: Optional[Path] = options.SECTORS,
    out: Optional[Path] = options.OUT,
    seed: Optional[int] = options.SEED,
    depth: Optional[int] = options.DEPTH,
    methods: Optional[str] = options.METHODS,
    filters: Optional[str] = options.FILTERS,
    algos: Optional[str] = options.ALGOS,
    threshold: Optional[float] = options.THRESHOLD,
    target_density: Optional[float] = options.TARGET_DENSITY,
    gamma: Optional[str] = options.GAMMA,
    lead_lag_input: Optional[str] = options.LEAD_LAG_INPUT,
    feature_scaling: Optional[str] = options.FEATURE_SCALING,
    sig_window: Optional[int] = options.SIG_WINDOW,
    min_coverage: Optional[float] = options.MIN_COVERAGE,
    shuffle: Optional[bool] = options.SHUFFLE,
    workers: Optional[int] = options.WORKERS,
    dump_matrices: Optional[bool] = typer.Option(
        None, "--dump-matrices/--no-dump-matrices", help="Also write matrix_<method>.csv"
    ),
    dump_signatures: Optional[bool] = typer.Option(
        None, "--dump-signatures/--no-dump-signatures", help="Also write signatures.csv"
    ),
):
    """Run the modularity grid and write grid, partition and spectrum files.

    Examples:
      # Every method, filter and algorithm
      sigcom run --prices prices.csv --sectors sectors.csv --out results/

      # Signature distance with RMT filtering only
      sigcom run --prices prices.csv --methods sig-ed --filters rmt --algos louvain
    """
    settings = get_settings()
    run_config = load_run_config(
        config,
        overrides=options.grid_overrides(
            prices=prices,
            sectors=sectors,
            out=out,
            seed=seed,
            depth=depth,
            methods=methods,
            filters=filters,
            algos=algos,
            threshold=threshold,
            target_density=target_density,
            gamma=gamma,
            lead_lag_input=lead_lag_input,
            feature_scaling=feature_scaling,
            sig_window=sig_window,
            min_coverage=min_coverage,
            shuffle=shuffle,
            workers=workers,
            dump_matrices=dump_matrices,
            dump_signatures=dump_signatures,
        ),
        defaults=options.settings_defaults(settings),
    )
    out_dir = run_config.resolve_out_dir(settings)

    with OperationTimer("Grid run"):
        with StepProgress("Evaluating methods", total=len(run_config.methods)) as progress:
            grid = run_grid(run_config, progress=progress.advance)

    paths = emit_report(out_dir, grid=grid)
    console.print(grid_table(grid))
    console.print(f"Wrote {len(paths)} files to {out_dir}")

    if grid.all_failed:
        first = grid.results[0]
        typer.echo(f"Error: every cell failed; first failure: {first.reason}", err=True)
        raise typer.Exit(first.exit_code or 3)
