"""Loading, alignment and cleaning of price panels."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from sigcom.exceptions import DataError, EmptyPanelError, ParseError, ValidationError

logger = logging.getLogger("sigcom.ingest")

UNKNOWN_SECTOR = "Unknown"


@dataclass(frozen=True)
class PricePanel:
    """N aligned price series over T dates. Missing cells hold NaN."""

    tickers: tuple[str, ...]
    timestamps: np.ndarray  # datetime64[D], strictly increasing
    values: np.ndarray  # N x T
    missing: np.ndarray  # N x T booleans

    def __post_init__(self):
        if self.values.shape != (len(self.tickers), len(self.timestamps)):
            raise DataError(
                f"Panel shape {self.values.shape} does not match "
                f"{len(self.tickers)} tickers x {len(self.timestamps)} dates"
            )
        if len(self.timestamps) > 1 and not np.all(np.diff(self.timestamps) > np.timedelta64(0)):
            raise DataError("Panel timestamps must be strictly increasing")

    @property
    def n_series(self) -> int:
        return len(self.tickers)

    @property
    def n_obs(self) -> int:
        return len(self.timestamps)

    @property
    def coverage(self) -> np.ndarray:
        """Fraction of non-missing observations per ticker."""
        if self.n_obs == 0:
            return np.zeros(self.n_series)
        return 1.0 - self.missing.mean(axis=1)

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()


@dataclass(frozen=True)
class ReturnsPanel:
    """Logarithmic returns r_i(t) = ln(S_i(t) / S_i(t-1)), no missing entries."""

    tickers: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray  # N x (T - 1)

    def __post_init__(self):
        if self.values.shape != (len(self.tickers), len(self.timestamps)):
            raise DataError(
                f"Returns shape {self.values.shape} does not match "
                f"{len(self.tickers)} tickers x {len(self.timestamps)} dates"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("Returns panel contains non-finite values")

    @property
    def n_series(self) -> int:
        return len(self.tickers)

    @property
    def n_obs(self) -> int:
        return len(self.timestamps)

    def prefix(self, length: int) -> "ReturnsPanel":
        """First `length` return observations."""
        if not 1 <= length <= self.n_obs:
            raise ValidationError(f"Prefix length must be in [1, {self.n_obs}], got {length}")
        return ReturnsPanel(
            tickers=self.tickers,
            timestamps=self.timestamps[:length],
            values=self.values[:, :length],
        )


@dataclass(frozen=True)
class SectorMap:
    """Ticker to sector label mapping."""

    sectors: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.sectors)

    def label(self, ticker: str) -> str:
        return self.sectors.get(ticker, UNKNOWN_SECTOR)

    @property
    def labels(self) -> list[str]:
        """Distinct sector labels, sorted."""
        return sorted(set(self.sectors.values()))


def _read_header(path: Path, delimiter: str) -> list[str]:
    try:
        header = pd.read_csv(path, sep=delimiter, header=None, nrows=1, dtype=str)
    except pd.errors.EmptyDataError:
        raise ParseError(f"Price file {path} is empty", row=1)
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed CSV header in {path}: {e}", row=1) from e
    except UnicodeDecodeError as e:
        raise ParseError(f"Price file {path} is not valid UTF-8: {e}") from e
    return [str(v).strip() if not pd.isna(v) else "" for v in header.iloc[0].tolist()]


def load_price_panel(
    path: Path,
    delimiter: str = ",",
    date_column: str = "date",
) -> PricePanel:
    """Load a wide price CSV: `date,<ticker1>,<ticker2>,...`.

    Empty cells are missing observations. Rows are sorted by date.

    Raises:
        ParseError: Malformed CSV, bad date or non-numeric cell (names row/column)
        DataError: Non-positive or non-finite price (names ticker and date)
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Price file not found: {path}")

    header = _read_header(path, delimiter)
    if len(header) < 2 or header[0].lower() != date_column:
        raise ParseError(f"Expected header '{date_column},<tickers...>' in {path}", row=1)
    tickers = header[1:]
    for col, ticker in enumerate(tickers, start=2):
        if not ticker:
            raise ParseError("Empty ticker name in header", row=1, column=f"#{col}")
    duplicates = sorted({t for t in tickers if tickers.count(t) > 1})
    if duplicates:
        raise ParseError(f"Duplicate tickers in header: {', '.join(duplicates)}", row=1)

    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=None,
            skiprows=1,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=range(len(header)), dtype=str)
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed CSV in {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"Price file {path} is not valid UTF-8: {e}") from e

    # line numbers as they appear in the file (header is line 1)
    lines = np.arange(len(frame)) + 2

    if frame.shape[1] > len(header):
        extra = frame.iloc[:, len(header) :].notna().any(axis=1).to_numpy()
        raise ParseError(
            f"Row has more fields than the header ({len(header)})",
            row=int(lines[int(np.argmax(extra))]),
        )
    # columns missing from every row come back as NaN, like short rows
    frame = frame.reindex(columns=range(len(header))).astype(object)
    frame.columns = header

    dates = pd.to_datetime(frame[header[0]].str.strip(), format="%Y-%m-%d", errors="coerce")
    bad_dates = dates.isna().to_numpy()
    if bad_dates.any():
        first = int(np.argmax(bad_dates))
        raise ParseError(
            f"Invalid date '{frame.iloc[first, 0]}', expected YYYY-MM-DD",
            row=int(lines[first]),
            column=header[0],
        )
    if dates.duplicated().any():
        dup = dates[dates.duplicated()].iloc[0]
        raise ParseError(f"Duplicate date {dup.date().isoformat()}", column=header[0])

    values = np.empty((len(tickers), len(frame)), dtype=float)
    for i, ticker in enumerate(tickers):
        raw = frame[ticker].str.strip()
        short = raw.isna().to_numpy()
        if short.any():
            first = int(np.argmax(short))
            raise ParseError(
                "Row has fewer fields than the header", row=int(lines[first]), column=ticker
            )
        empty = (raw == "").to_numpy()
        numeric = pd.to_numeric(raw.where(~empty), errors="coerce").to_numpy(dtype=float)
        unparsable = np.isnan(numeric) & ~empty
        if unparsable.any():
            first = int(np.argmax(unparsable))
            raise ParseError(
                f"Non-numeric price '{raw.iloc[first]}'", row=int(lines[first]), column=ticker
            )
        values[i] = numeric

    order = np.argsort(dates.to_numpy(), kind="stable")
    timestamps = dates.to_numpy()[order].astype("datetime64[D]")
    values = values[:, order]
    missing = np.isnan(values)

    invalid = ~missing & ~(np.isfinite(values) & (values > 0))
    if invalid.any():
        i, t = np.argwhere(invalid)[0]
        raise DataError(
            f"Invalid price {values[i, t]!r} for {tickers[i]} on {timestamps[t]}: "
            "prices must be finite and positive"
        )

    logger.info(f"Loaded {len(tickers)} series x {len(timestamps)} dates from {path}")
    return PricePanel(
        tickers=tuple(tickers), timestamps=timestamps, values=values, missing=missing
    )


def price_panel_csv(panel: PricePanel) -> str:
    """Panel as CSV text in the format load_price_panel reads."""
    frame = pd.DataFrame(
        np.where(panel.missing, np.nan, panel.values).T,
        columns=list(panel.tickers),
    )
    frame.insert(0, "date", pd.to_datetime(panel.timestamps).strftime("%Y-%m-%d"))
    return frame.to_csv(index=False, float_format="%.17g", na_rep="", lineterminator="\n")


def write_price_panel(panel: PricePanel, path: Path) -> None:
    """Write a panel in the format load_price_panel reads."""
    Path(path).write_text(price_panel_csv(panel), encoding="utf-8")
    logger.debug(f"Wrote price panel to {path}")


def filter_insufficient(panel: PricePanel, min_coverage: float = 0.99) -> PricePanel:
    """Drop tickers with coverage below `min_coverage` and fill the rest.

    Remaining gaps are forward-filled; leading gaps are back-filled from the
    first observation. The result has no missing entries.

    Raises:
        ValidationError: min_coverage outside (0, 1]
        EmptyPanelError: Every ticker was dropped
    """
    if not 0.0 < min_coverage <= 1.0:
        raise ValidationError(f"min_coverage must be in (0, 1], got {min_coverage}")

    keep = panel.coverage >= min_coverage
    dropped = [t for t, k in zip(panel.tickers, keep) if not k]
    if dropped:
        logger.info(
            f"Dropping {len(dropped)} tickers with coverage below {min_coverage:g}: "
            f"{', '.join(dropped[:10])}{' ...' if len(dropped) > 10 else ''}"
        )
    if not keep.any():
        raise EmptyPanelError(f"No ticker reaches coverage {min_coverage:g}; panel is empty")

    kept = pd.DataFrame(panel.values[keep].T)
    filled = kept.ffill().bfill().to_numpy().T.copy()
    return PricePanel(
        tickers=tuple(t for t, k in zip(panel.tickers, keep) if k),
        timestamps=panel.timestamps.copy(),
        values=filled,
        missing=np.zeros_like(filled, dtype=bool),
    )


def compute_log_returns(panel: PricePanel) -> ReturnsPanel:
    """Logarithmic increments of every series.

    Raises:
        DataError: The panel still has missing entries or fewer than 2 dates
    """
    if not panel.is_complete:
        raise DataError("Panel has missing entries; run filter_insufficient first")
    if panel.n_obs < 2:
        raise DataError(f"At least 2 dates are needed for returns, got {panel.n_obs}")
    returns = np.diff(np.log(panel.values), axis=1)
    return ReturnsPanel(
        tickers=panel.tickers,
        timestamps=panel.timestamps[1:].copy(),
        values=returns,
    )


def load_sector_map(path: Path, tickers: Optional[Iterable[str]] = None) -> SectorMap:
    """Load a two-column `ticker,sector` CSV.

    Args:
        path: CSV file with header `ticker,sector`
        tickers: Panel tickers; mapped tickers absent from it produce a warning

    Raises:
        ParseError: Missing columns or malformed file
        DataError: Duplicate ticker
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Sector file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"Malformed sector CSV {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"Sector file {path} is not valid UTF-8: {e}") from e

    frame.columns = [c.strip().lower() for c in frame.columns]
    if list(frame.columns[:2]) != ["ticker", "sector"]:
        raise ParseError(f"Expected header 'ticker,sector' in {path}", row=1)

    frame["ticker"] = frame["ticker"].str.strip()
    frame["sector"] = frame["sector"].str.strip()
    duplicated = frame["ticker"][frame["ticker"].duplicated()]
    if not duplicated.empty:
        raise DataError(f"Duplicate ticker in sector map: {duplicated.iloc[0]}")

    sectors = dict(zip(frame["ticker"], frame["sector"]))
    if tickers is not None:
        unknown = sorted(set(sectors) - set(tickers))
        if unknown:
            logger.warning(
                f"{len(unknown)} sector-map tickers are not in the panel: "
                f"{', '.join(unknown[:10])}{' ...' if len(unknown) > 10 else ''}"
            )
    logger.info(f"Loaded {len(sectors)} sector labels ({len(set(sectors.values()))} sectors)")
    return SectorMap(sectors=sectors)
