"""Correlation and signature-based similarity matrices."""

import logging
from dataclasses import dataclass
from enum import StrEnum
from typing import Literal, Optional, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from sigcom.exceptions import DataError, NumericError, ValidationError
from sigcom.ingest import ReturnsPanel
from sigcom.signature import lead_lag_batch, path_signatures

logger = logging.getLogger("sigcom.similarity")


class MatrixKind(StrEnum):
    CORRELATION = "correlation"
    SIMILARITY_ED = "similarity-ed"
    SIMILARITY_CS = "similarity-cs"
    SIMILARITY_RBF = "similarity-rbf"


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with unit diagonal."""

    values: np.ndarray
    kind: MatrixKind
    tickers: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"Expected a square matrix, got shape {v.shape}")
        if self.tickers is not None and len(self.tickers) != v.shape[0]:
            raise ValidationError(
                f"{len(self.tickers)} tickers for a {v.shape[0]}x{v.shape[0]} matrix"
            )

    @property
    def size(self) -> int:
        return self.values.shape[0]


def _finalize(values: np.ndarray) -> np.ndarray:
    values = 0.5 * (values + values.T)
    np.fill_diagonal(values, 1.0)
    return values


def correlation_matrix(returns: ReturnsPanel) -> SymMatrix:
    """Pearson correlation with 1/T population normalization, diagonal exactly 1.

    Raises:
        ValidationError: Fewer than 2 series
        DataError: A series has zero variance (names the ticker)
    """
    x = returns.values
    if returns.n_series < 2:
        raise ValidationError(f"Correlation needs at least 2 series, got {returns.n_series}")
    constant = np.ptp(x, axis=1) == 0.0
    if constant.any():
        ticker = returns.tickers[int(np.argmax(constant))]
        raise DataError(f"Series {ticker} has zero variance; correlation is undefined")

    centered = x - x.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / x.shape[1]
    std = np.sqrt(np.diag(cov))
    corr = np.clip(cov / np.outer(std, std), -1.0, 1.0)
    return SymMatrix(values=_finalize(corr), kind=MatrixKind.CORRELATION, tickers=returns.tickers)


def scale_features(
    features: np.ndarray, method: Literal["none", "standardize"] = "none"
) -> np.ndarray:
    """Optional column scaling of a feature matrix."""
    if method == "none":
        return features
    if method == "standardize":
        centered = features - features.mean(axis=0)
        std = features.std(axis=0)
        return np.divide(centered, std, out=centered.copy(), where=std > 0)
    raise ValidationError(f"Unknown feature scaling '{method}'")


def signature_levels(
    returns: ReturnsPanel,
    depth: int = 3,
    lead_lag_input: Literal["cumulative", "increments"] = "cumulative",
) -> list[np.ndarray]:
    """Per-level signature arrays (N x 2**k) of every series' lead-lag path.

    With "cumulative" the lead-lag path is built on the running sum of log
    returns starting at 0; with "increments" on the returns themselves,
    prefixed by 0.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    return path_signatures(lead_lag_batch(_streams(returns.values, lead_lag_input)), depth)


def _streams(values: np.ndarray, lead_lag_input: str) -> np.ndarray:
    """Rows of `values` turned into streams starting at 0."""
    zeros = np.zeros((values.shape[0], 1))
    if lead_lag_input == "cumulative":
        return np.hstack([zeros, np.cumsum(values, axis=1)])
    if lead_lag_input == "increments":
        return np.hstack([zeros, values])
    raise ValidationError(f"Unknown lead-lag input '{lead_lag_input}'")


def _level_features(levels: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(levels[1:], axis=1)


def windowed_signature_features(
    returns: ReturnsPanel,
    window: int,
    depth: int = 3,
    lead_lag_input: Literal["cumulative", "increments"] = "cumulative",
    scaling: Literal["none", "standardize"] = "none",
) -> np.ndarray:
    """Signature features of consecutive windows, concatenated per series.

    Window k covers returns [k * window, (k + 1) * window) and its stream is
    re-based to 0. A shorter final window is kept. Row layout is window-major:
    levels 1..M of window 0, then of window 1, and so on.

    Over the whole path, levels 1 and 2 only see the total return and the
    quadratic variation. Per-window features keep the timing of moves, so
    distances between rows follow co-movement.

    Raises:
        ValidationError: window or depth below 1
    """
    if window < 1:
        raise ValidationError(f"Signature window must be >= 1, got {window}")
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    x = returns.values
    n, t = x.shape
    n_full = t // window
    blocks = []
    if n_full:
        full = x[:, : n_full * window].reshape(n * n_full, window)
        levels = path_signatures(lead_lag_batch(_streams(full, lead_lag_input)), depth)
        blocks.append(_level_features(levels).reshape(n, -1))
    if t % window:
        rest = x[:, n_full * window :]
        levels = path_signatures(lead_lag_batch(_streams(rest, lead_lag_input)), depth)
        blocks.append(_level_features(levels))
    features = np.concatenate(blocks, axis=1)
    logger.debug(
        f"Windowed signature features: {n} series x {features.shape[1]} words "
        f"({n_full} full windows of {window})"
    )
    return scale_features(features, scaling)


def features_from_levels(
    levels: list[np.ndarray], scaling: Literal["none", "standardize"] = "none"
) -> np.ndarray:
    """Concatenate levels 1..M into an N x F feature matrix and scale it."""
    features = np.concatenate(levels[1:], axis=1)
    logger.debug(f"Signature features: {features.shape[0]} series x {features.shape[1]} words")
    return scale_features(features, scaling)


def signature_features(
    returns: ReturnsPanel,
    depth: int = 3,
    lead_lag_input: Literal["cumulative", "increments"] = "cumulative",
    scaling: Literal["none", "standardize"] = "none",
) -> np.ndarray:
    """N x F matrix whose row i is the truncated signature of series i's lead-lag path."""
    return features_from_levels(signature_levels(returns, depth, lead_lag_input), scaling)


def _check_features(features: np.ndarray) -> np.ndarray:
    f = np.asarray(features, dtype=float)
    if f.ndim != 2 or f.shape[0] < 1:
        raise ValidationError(f"Expected an N x F feature matrix, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DataError("Feature matrix contains non-finite values")
    return f


def _distances(features: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    if features.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(features, metric=metric))


def similarity_ed(features: np.ndarray, tickers: Optional[tuple[str, ...]] = None) -> SymMatrix:
    """p_ij = 1 / (1 + ||f_i - f_j||)."""
    f = _check_features(features)
    values = 1.0 / (1.0 + _distances(f))
    return SymMatrix(values=_finalize(values), kind=MatrixKind.SIMILARITY_ED, tickers=tickers)


def similarity_cs(features: np.ndarray, tickers: Optional[tuple[str, ...]] = None) -> SymMatrix:
    """p_ij = (1 + cos(f_i, f_j)) / 2.

    Raises:
        DataError: A feature row is zero, so its cosine is undefined
    """
    f = _check_features(features)
    norms = np.linalg.norm(f, axis=1)
    zero = norms == 0.0
    if zero.any():
        row = int(np.argmax(zero))
        name = tickers[row] if tickers is not None else f"row {row}"
        raise DataError(f"Feature vector of {name} is zero; cosine similarity is undefined")
    unit = f / norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    values = 0.5 * (1.0 + cos)
    return SymMatrix(values=_finalize(values), kind=MatrixKind.SIMILARITY_CS, tickers=tickers)


def median_gamma(features: np.ndarray) -> float:
    """gamma = 1 / (2 m^2) with m the median of the positive pairwise distances.

    Pairs of identical rows are left out of the median, so duplicated series
    do not collapse the bandwidth.

    Raises:
        NumericError: Every pairwise distance is zero
    """
    f = _check_features(features)
    if f.shape[0] < 2:
        raise NumericError("The median heuristic needs at least 2 series")
    distances = pdist(f)
    positive = distances[distances > 0.0]
    if positive.size == 0:
        raise NumericError("Every pairwise distance is zero; cannot pick an RBF bandwidth")
    m = float(np.median(positive))
    return 1.0 / (2.0 * m * m)


def similarity_rbf(
    features: np.ndarray,
    gamma: Union[float, Literal["median"]] = "median",
    tickers: Optional[tuple[str, ...]] = None,
) -> SymMatrix:
    """p_ij = exp(-gamma ||f_i - f_j||^2)."""
    f = _check_features(features)
    if gamma == "median":
        gamma = median_gamma(f)
        logger.debug(f"RBF bandwidth from median heuristic: gamma={gamma:.6g}")
    elif not (isinstance(gamma, (int, float)) and gamma > 0):
        raise ValidationError(f"gamma must be positive or 'median', got {gamma!r}")
    values = np.exp(-float(gamma) * _distances(f, metric="sqeuclidean"))
    return SymMatrix(values=_finalize(values), kind=MatrixKind.SIMILARITY_RBF, tickers=tickers)
