"""`sigcom synth`: write a planted-partition price panel."""

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from sigcom.commands import options
from sigcom.config import get_settings
from sigcom.formatters import ReportWriter, format_labels_csv, format_sectors_csv
from sigcom.ingest import price_panel_csv
from sigcom.synthetic import synth_panel

logger = logging.getLogger("sigcom.commands.synth")
console = Console()


def synth_command(
    out: Optional[Path] = options.OUT,
    n_series: int = typer.Option(40, "--n-series", help="Number of series N", min=1),
    n_obs: int = typer.Option(2000, "--n-obs", help="Number of price observations T", min=2),
    blocks: int = typer.Option(4, "--blocks", help="Number of planted blocks K", min=1),
    intra_corr: float = typer.Option(0.8, "--rho", help="Correlation inside a block"),
    market_corr: float = typer.Option(
        0.3, "--market", help="Correlation shared by all series (at most --rho)"
    ),
    volatility: float = typer.Option(0.01, "--volatility", help="Daily return volatility"),
    seed: int = typer.Option(0, "--seed", help="Random seed", min=0),
):
    """Generate prices.csv, sectors.csv and labels.csv with known blocks.

    Examples:
      sigcom synth --out data/ --n-series 40 --blocks 4 --rho 0.8 --seed 7
      sigcom run --prices data/prices.csv --sectors data/sectors.csv
    """
    settings = get_settings()
    out_dir = options.resolve_out(out, settings)

    synthetic = synth_panel(
        n_series=n_series,
        n_obs=n_obs,
        n_blocks=blocks,
        intra_corr=intra_corr,
        seed=seed,
        market_corr=market_corr,
        volatility=volatility,
    )
    tickers = synthetic.panel.tickers

    writer = ReportWriter(out_dir)
    writer.add("prices.csv", price_panel_csv(synthetic.panel))
    writer.add("sectors.csv", format_sectors_csv(synthetic.sectors, tickers))
    writer.add("labels.csv", format_labels_csv(tickers, synthetic.labels.tolist()))
    paths = writer.commit()

    console.print(
        f"Synthesized {n_series} series x {n_obs} prices in {blocks} blocks "
        f"(rho={intra_corr:g}, market={market_corr:g}, seed={seed})"
    )
    console.print(f"Wrote {len(paths)} files to {out_dir}")
