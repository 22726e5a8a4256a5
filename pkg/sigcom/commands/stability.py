"""`sigcom stability`: modularity on growing prefixes of the panel."""

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from sigcom.commands import options
from sigcom.config import get_settings, load_run_config
from sigcom.formatters import emit_report, stability_table
from sigcom.pipeline import load_inputs, stability_analysis, stability_windows
from sigcom.utils import OperationTimer, StepProgress

logger = logging.getLogger("sigcom.commands.stability")
console = Console()


def stability_command(
    config: Optional[Path] = options.CONFIG,
    prices: Optional[Path] = options.PRICES,
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
    start_frac: Optional[float] = typer.Option(
        None, "--start-frac", help="First window as a share of the panel [default: 1/3]"
    ),
    step: Optional[int] = typer.Option(
        None, "--step", help="Observations added per window [default: about 10 steps]", min=1
    ),
):
    """Re-run the grid on prefix windows and write stability.csv.

    Windows start at the first observation with ceil(start_frac * T) returns
    and grow by --step until the whole panel is used.

    Examples:
      sigcom stability --prices prices.csv --methods correlation,sig-ed --filters rmt
    """
    settings = get_settings()
    run_config = load_run_config(
        config,
        overrides=options.grid_overrides(
            prices=prices,
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
            start_frac=start_frac,
            step=step,
        ),
        defaults=options.settings_defaults(settings),
    )
    out_dir = run_config.resolve_out_dir(settings)

    returns, _ = load_inputs(run_config)
    windows = stability_windows(returns.n_obs, run_config.start_frac, run_config.step)
    with OperationTimer("Stability analysis"):
        with StepProgress("Windows", total=len(windows)) as progress:
            curve = stability_analysis(run_config, returns=returns, progress=progress.advance)

    paths = emit_report(out_dir, stability=curve)
    console.print(stability_table(curve))
    console.print(f"Wrote {len(paths)} files to {out_dir}")

    failed = [p for p in curve.points if p.status == "failed"]
    if curve.points and len(failed) == len(curve.points):
        typer.echo(f"Error: every cell failed; first failure: {failed[0].reason}", err=True)
        raise typer.Exit(failed[0].exit_code or 3)
