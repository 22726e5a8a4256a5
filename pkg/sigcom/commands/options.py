"""Options shared by the run, stability and spectrum commands."""

from pathlib import Path
from typing import Any, Optional

import typer

from sigcom.config import Settings

CONFIG = typer.Option(None, "--config", help="TOML run configuration; flags override it")
PRICES = typer.Option(None, "--prices", help="Wide price CSV: date,<ticker1>,<ticker2>,...")
SECTORS = typer.Option(None, "--sectors", help="Sector CSV: ticker,sector")
OUT = typer.Option(None, "--out", help="Output directory [default: SIGCOM_OUTPUT_DIR]")
SEED = typer.Option(None, "--seed", help="Seed for shuffled Louvain node order", min=0)
DEPTH = typer.Option(None, "--depth", help="Signature truncation depth M [default: 3]", min=1)
METHODS = typer.Option(
    None, "--methods", help="Comma list of correlation, sig-ed, sig-cs, sig-rbf [default: all]"
)
FILTERS = typer.Option(None, "--filters", help="Comma list of threshold, rmt [default: both]")
ALGOS = typer.Option(None, "--algos", help="Comma list of louvain, greedy [default: both]")
THRESHOLD = typer.Option(None, "--threshold", help="Fixed edge threshold theta")
TARGET_DENSITY = typer.Option(
    None, "--target-density", help="Edge density used to pick theta [default: 0.1]"
)
GAMMA = typer.Option(None, "--gamma", help="RBF gamma, a positive number or 'median'")
LEAD_LAG_INPUT = typer.Option(
    None, "--lead-lag-input", help="Stream under the lead-lag path: cumulative or increments"
)
FEATURE_SCALING = typer.Option(
    None, "--feature-scaling", help="Signature feature scaling: none or standardize"
)
SIG_WINDOW = typer.Option(
    None,
    "--sig-window",
    help="Signature features per window of this many returns [default: whole path]",
    min=1,
)
MIN_COVERAGE = typer.Option(
    None, "--min-coverage", help="Drop tickers observed on fewer than this share of dates"
)
SHUFFLE = typer.Option(
    None, "--shuffle/--no-shuffle", help="Visit Louvain nodes in seeded random order"
)
WORKERS = typer.Option(None, "--workers", help="Threads evaluating methods", min=1)


def grid_overrides(**flags: Any) -> dict[str, Any]:
    """Map CLI flag values onto RunConfig fields; None means not given."""
    renames = {"out": "out_dir", "algos": "algorithms", "shuffle": "louvain_shuffle"}
    return {renames.get(name, name): value for name, value in flags.items()}


def settings_defaults(settings: Settings) -> dict[str, Any]:
    """RunConfig defaults taken from environment settings."""
    return {"workers": settings.workers}


def resolve_out(out: Optional[Path], settings: Settings) -> Path:
    return out if out is not None else settings.output_dir
