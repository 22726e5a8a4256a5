"""Planted-partition price panels with known block labels."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from sigcom.exceptions import ValidationError
from sigcom.ingest import PricePanel, SectorMap

logger = logging.getLogger("sigcom.synthetic")

INITIAL_PRICE = 100.0
START_DATE = "2000-01-03"


@dataclass(frozen=True)
class SyntheticPanel:
    """Generated prices together with the planted block of every ticker."""

    panel: PricePanel
    labels: np.ndarray

    @property
    def sectors(self) -> SectorMap:
        """Planted blocks as a sector map (`block_<k>`)."""
        return SectorMap(
            sectors={t: f"block_{k}" for t, k in zip(self.panel.tickers, self.labels.tolist())}
        )


def block_labels(n_series: int, n_blocks: int) -> np.ndarray:
    """Contiguous, near-equal blocks: series i belongs to block i * K // N."""
    return np.arange(n_series) * n_blocks // n_series


def ticker_names(n_series: int) -> tuple[str, ...]:
    width = max(3, len(str(n_series - 1)))
    return tuple(f"S{i:0{width}d}" for i in range(n_series))


def synth_panel(
    n_series: int,
    n_obs: int,
    n_blocks: int,
    intra_corr: float,
    seed: Optional[int] = None,
    market_corr: float = 0.0,
    volatility: float = 0.01,
) -> SyntheticPanel:
    """Gaussian block-equicorrelated returns turned into prices.

    Returns follow vol * (sqrt(rho_m) g + sqrt(rho - rho_m) f_b + sqrt(1 - rho) e),
    so the correlation is rho inside a block and rho_m across blocks. Prices
    start at 100 and are the exponentiated cumulative returns, one price per
    business day.

    Args:
        n_series: N, number of series
        n_obs: T, number of price observations (T - 1 returns)
        n_blocks: K, number of planted blocks
        intra_corr: rho in [0, 1)
        seed: Seed for numpy's default generator
        market_corr: Common factor correlation, 0 <= rho_m <= rho
        volatility: Daily return standard deviation

    Raises:
        ValidationError: Any parameter outside its range
    """
    if n_series < 1:
        raise ValidationError(f"n_series must be >= 1, got {n_series}")
    if n_obs < 2:
        raise ValidationError(f"n_obs must be >= 2, got {n_obs}")
    if not 1 <= n_blocks <= n_series:
        raise ValidationError(f"n_blocks must be in [1, {n_series}], got {n_blocks}")
    if not 0.0 <= intra_corr < 1.0:
        raise ValidationError(f"intra_corr must be in [0, 1), got {intra_corr}")
    if not 0.0 <= market_corr <= intra_corr:
        raise ValidationError(
            f"market_corr must be in [0, intra_corr={intra_corr}], got {market_corr}"
        )
    if not volatility > 0:
        raise ValidationError(f"volatility must be positive, got {volatility}")

    rng = np.random.default_rng(seed)
    n_returns = n_obs - 1
    labels = block_labels(n_series, n_blocks)

    market = rng.standard_normal(n_returns)
    factors = rng.standard_normal((n_blocks, n_returns))
    noise = rng.standard_normal((n_series, n_returns))
    returns = volatility * (
        np.sqrt(market_corr) * market[None, :]
        + np.sqrt(intra_corr - market_corr) * factors[labels]
        + np.sqrt(1.0 - intra_corr) * noise
    )

    prices = np.empty((n_series, n_obs))
    prices[:, 0] = INITIAL_PRICE
    prices[:, 1:] = INITIAL_PRICE * np.exp(np.cumsum(returns, axis=1))

    timestamps = pd.bdate_range(start=START_DATE, periods=n_obs).to_numpy().astype("datetime64[D]")
    panel = PricePanel(
        tickers=ticker_names(n_series),
        timestamps=timestamps,
        values=prices,
        missing=np.zeros_like(prices, dtype=bool),
    )
    logger.info(
        f"Synthesized {n_series} series x {n_obs} dates in {n_blocks} blocks "
        f"(rho={intra_corr:g}, market={market_corr:g}, seed={seed})"
    )
    return SyntheticPanel(panel=panel, labels=labels)
