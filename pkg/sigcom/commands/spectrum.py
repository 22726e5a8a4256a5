"""`sigcom spectrum`: eigenvalue buckets and threshold sweeps per method."""

import logging
from pathlib import Path
from typing import Optional

from rich.console import Console

from sigcom.commands import options
from sigcom.config import Method, get_settings, load_run_config
from sigcom.exceptions import InsufficientObservationsError
from sigcom.formatters import ReportWriter, format_json, format_sweep_csv, spectrum_tree
from sigcom.pipeline import build_matrices, load_inputs
from sigcom.spectral import (
    fisher_threshold,
    quantile_thetas,
    rmt_decompose,
    spectral_report,
    threshold_sweep,
)

logger = logging.getLogger("sigcom.commands.spectrum")
console = Console()


def spectrum_command(
    config: Optional[Path] = options.CONFIG,
    prices: Optional[Path] = options.PRICES,
    out: Optional[Path] = options.OUT,
    depth: Optional[int] = options.DEPTH,
    methods: Optional[str] = options.METHODS,
    gamma: Optional[str] = options.GAMMA,
    lead_lag_input: Optional[str] = options.LEAD_LAG_INPUT,
    feature_scaling: Optional[str] = options.FEATURE_SCALING,
    sig_window: Optional[int] = options.SIG_WINDOW,
    min_coverage: Optional[float] = options.MIN_COVERAGE,
):
    """Write spectrum_<method>_rmt.json and threshold_sweep_<method>.csv.

    The spectrum holds the eigenvalues, the Marcenko-Pastur edges and how
    many eigenvalues fall in the noise, market and structure buckets.
    Correlation spectra also carry the 5% Fisher significance threshold.

    Examples:
      sigcom spectrum --prices prices.csv --methods correlation,sig-ed
    """
    settings = get_settings()
    run_config = load_run_config(
        config,
        overrides=options.grid_overrides(
            prices=prices,
            out=out,
            depth=depth,
            methods=methods,
            gamma=gamma,
            lead_lag_input=lead_lag_input,
            feature_scaling=feature_scaling,
            sig_window=sig_window,
            min_coverage=min_coverage,
        ),
        defaults=options.settings_defaults(settings),
    )
    out_dir = run_config.resolve_out_dir(settings)

    returns, _ = load_inputs(run_config)
    matrices = build_matrices(run_config, returns)

    writer = ReportWriter(out_dir)
    for method, matrix in matrices.items():
        sweep = threshold_sweep(matrix, quantile_thetas(matrix))
        writer.add(f"threshold_sweep_{method}.csv", format_sweep_csv(sweep))
        try:
            split = rmt_decompose(matrix, returns.n_obs)
        except InsufficientObservationsError as e:
            logger.warning(f"Skipping spectrum of {method}: {e}")
            continue
        report = spectral_report(split)
        if method == Method.CORRELATION:
            report["fisher_threshold"] = fisher_threshold(returns.n_obs)
        writer.add(f"spectrum_{method}_rmt.json", format_json(report))
        console.print(spectrum_tree(str(method), report))

    paths = writer.commit()
    console.print(f"Wrote {len(paths)} files to {out_dir}")
