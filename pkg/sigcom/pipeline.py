"""End-to-end runs: the method x filter x algorithm grid and the stability analysis."""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel

from sigcom.community import (
    GainMatrix,
    SectorOverlapReport,
    gain_from_adjacency,
    gain_from_rmt,
    greedy_cnm,
    louvain,
    sector_overlap,
)
from sigcom.config import Algorithm, FilterKind, Method, RunConfig
from sigcom.exceptions import (
    ConfigurationError,
    InsufficientObservationsError,
    SigcomError,
    ValidationError,
)
from sigcom.ingest import (
    ReturnsPanel,
    SectorMap,
    compute_log_returns,
    filter_insufficient,
    load_price_panel,
    load_sector_map,
)
from sigcom.signature import TruncatedSignature, signature_rows
from sigcom.similarity import (
    SymMatrix,
    correlation_matrix,
    features_from_levels,
    signature_levels,
    similarity_cs,
    similarity_ed,
    similarity_rbf,
    windowed_signature_features,
)
from sigcom.spectral import (
    RmtSplit,
    rmt_decompose,
    spectral_report,
    suggest_threshold,
    threshold_filter,
)

logger = logging.getLogger("sigcom.pipeline")

CellStatus = Literal["ok", "failed", "skipped"]
ProgressCallback = Callable[[str], None]


@dataclass(frozen=True)
class Cell:
    """One (method, filter, algorithm) combination of the grid."""

    method: Method
    filter: FilterKind
    algorithm: Algorithm

    @property
    def name(self) -> str:
        return f"{self.method}_{self.filter}_{self.algorithm}"


def grid_cells(config: RunConfig) -> list[Cell]:
    """Cells in configured order: methods outermost, algorithms innermost."""
    return [
        Cell(method=m, filter=f, algorithm=a)
        for m, f, a in itertools.product(config.methods, config.filters, config.algorithms)
    ]


class CellResult(BaseModel):
    """Outcome of one grid cell."""

    cell: str
    method: Method
    filter: FilterKind
    algorithm: Algorithm
    status: CellStatus
    q: Optional[float] = None
    n_communities: Optional[int] = None
    sizes: list[int] = []
    theta: Optional[float] = None
    density: Optional[float] = None
    reason: Optional[str] = None
    exit_code: Optional[int] = None
    assignment: Optional[list[int]] = None
    overlap: Optional[SectorOverlapReport] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class MethodOutcome:
    """Matrix, optional RMT split and cell results for one method."""

    method: Method
    matrix: Optional[SymMatrix]
    split: Optional[RmtSplit]
    results: list[CellResult]


@dataclass
class GridResult:
    """Everything a grid run produced, in configured cell order."""

    tickers: tuple[str, ...]
    n_obs: int
    results: list[CellResult]
    spectra: dict[str, dict] = field(default_factory=dict)
    matrices: dict[str, SymMatrix] = field(default_factory=dict)
    signature_rows: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.results if r.status == "failed")

    @property
    def all_failed(self) -> bool:
        return bool(self.results) and all(r.status == "failed" for r in self.results)


def load_inputs(config: RunConfig) -> tuple[ReturnsPanel, Optional[SectorMap]]:
    """Load, clean and difference the configured price panel; load sectors if given.

    Raises:
        ConfigurationError: No price file configured
    """
    if config.prices is None:
        raise ConfigurationError("A price file is required (--prices or `prices` in the config)")
    panel = filter_insufficient(load_price_panel(config.prices), config.min_coverage)
    returns = compute_log_returns(panel)
    sectors = load_sector_map(config.sectors, returns.tickers) if config.sectors else None
    return returns, sectors


def _failed(cell: Cell, error: SigcomError, status: CellStatus = "failed") -> CellResult:
    level = logging.INFO if status == "skipped" else logging.WARNING
    logger.log(level, f"Cell {cell.name} {status}: {error}")
    return CellResult(
        cell=cell.name,
        method=cell.method,
        filter=cell.filter,
        algorithm=cell.algorithm,
        status=status,
        reason=str(error),
        exit_code=error.exit_code if status == "failed" else None,
    )


class _MethodRunner:
    """Evaluates every cell of one method on one returns panel."""

    def __init__(
        self,
        config: RunConfig,
        returns: ReturnsPanel,
        sectors: Optional[SectorMap],
        features: Optional[np.ndarray],
        features_error: Optional[SigcomError] = None,
    ):
        self.config = config
        self.returns = returns
        self.sectors = sectors
        self.features = features
        self.features_error = features_error

    def matrix(self, method: Method) -> SymMatrix:
        if method == Method.CORRELATION:
            return correlation_matrix(self.returns)
        if self.features_error is not None:
            raise self.features_error
        features = self.features
        tickers = self.returns.tickers
        if method == Method.SIG_ED:
            return similarity_ed(features, tickers=tickers)
        if method == Method.SIG_CS:
            return similarity_cs(features, tickers=tickers)
        return similarity_rbf(features, gamma=self.config.gamma, tickers=tickers)

    def threshold_gain(self, matrix: SymMatrix) -> tuple[GainMatrix, float, float]:
        theta = self.config.threshold
        if theta is None:
            theta = suggest_threshold(matrix, self.config.effective_target_density).theta
        adjacency = threshold_filter(matrix, theta)
        return gain_from_adjacency(adjacency), adjacency.theta, adjacency.density

    def detect(self, cell: Cell, gain: GainMatrix) -> CellResult:
        if cell.algorithm == Algorithm.LOUVAIN:
            seed = self.config.seed if self.config.louvain_shuffle else None
            partition = louvain(gain, seed=seed)
        else:
            partition = greedy_cnm(gain)
        overlap = (
            sector_overlap(partition, self.sectors, self.returns.tickers)
            if self.sectors is not None
            else None
        )
        return CellResult(
            cell=cell.name,
            method=cell.method,
            filter=cell.filter,
            algorithm=cell.algorithm,
            status="ok",
            q=partition.q,
            n_communities=partition.n_communities,
            sizes=partition.sizes,
            assignment=partition.assignment.tolist(),
            overlap=overlap,
        )

    def run(self, method: Method) -> MethodOutcome:
        cells = [
            Cell(method=method, filter=f, algorithm=a)
            for f, a in itertools.product(self.config.filters, self.config.algorithms)
        ]
        try:
            matrix = self.matrix(method)
        except SigcomError as e:
            return MethodOutcome(method, None, None, [_failed(c, e) for c in cells])

        split: Optional[RmtSplit] = None
        split_error: Optional[SigcomError] = None
        if FilterKind.RMT in self.config.filters:
            try:
                split = rmt_decompose(matrix, self.returns.n_obs)
            except SigcomError as e:
                split_error = e

        results = []
        gains: dict[FilterKind, tuple] = {}
        for cell in cells:
            try:
                if cell.filter == FilterKind.RMT:
                    if split_error is not None:
                        raise split_error
                    gain, theta, density = gain_from_rmt(split, matrix), None, None
                else:
                    if cell.filter not in gains:
                        gains[cell.filter] = self.threshold_gain(matrix)
                    gain, theta, density = gains[cell.filter]
                result = self.detect(cell, gain)
                results.append(result.model_copy(update={"theta": theta, "density": density}))
            except InsufficientObservationsError as e:
                results.append(_failed(cell, e, status="skipped"))
            except SigcomError as e:
                results.append(_failed(cell, e))
        return MethodOutcome(method, matrix, split, results)


def _signature_inputs(
    config: RunConfig, returns: ReturnsPanel
) -> tuple[Optional[list[np.ndarray]], Optional[np.ndarray], Optional[SigcomError]]:
    """Whole-path signature levels and the feature matrix the signature methods compare."""
    if not any(m != Method.CORRELATION for m in config.methods):
        return None, None, None
    try:
        levels = signature_levels(returns, config.depth, config.lead_lag_input)
        if config.sig_window is None:
            features = features_from_levels(levels, config.feature_scaling)
        else:
            features = windowed_signature_features(
                returns,
                config.sig_window,
                depth=config.depth,
                lead_lag_input=config.lead_lag_input,
                scaling=config.feature_scaling,
            )
        return levels, features, None
    except SigcomError as e:
        return None, None, e


def _evaluate(
    config: RunConfig,
    returns: ReturnsPanel,
    sectors: Optional[SectorMap],
    workers: int,
    progress: Optional[ProgressCallback] = None,
) -> tuple[list[MethodOutcome], Optional[list[np.ndarray]]]:
    levels, features, error = _signature_inputs(config, returns)
    runner = _MethodRunner(config, returns, sectors, features, error)

    def run(method: Method) -> MethodOutcome:
        outcome = runner.run(method)
        if progress is not None:
            progress(str(method))
        return outcome

    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(run, config.methods))
    return outcomes, levels


def run_grid(
    config: RunConfig,
    returns: Optional[ReturnsPanel] = None,
    sectors: Optional[SectorMap] = None,
    progress: Optional[ProgressCallback] = None,
) -> GridResult:
    """Evaluate every grid cell.

    A failing cell is recorded with its reason and the others proceed. RMT
    cells on panels with T <= N are skipped.

    Args:
        config: Run configuration
        returns: Pre-loaded returns; loaded from `config.prices` when None
        sectors: Sector map used for per-cell overlap reports
        progress: Called with the method name after each method completes

    Returns:
        GridResult with cell results in configured order
    """
    if returns is None:
        returns, loaded_sectors = load_inputs(config)
        sectors = sectors or loaded_sectors

    logger.info(
        f"Running grid on {returns.n_series} series x {returns.n_obs} returns: "
        f"{len(grid_cells(config))} cells"
    )
    outcomes, levels = _evaluate(config, returns, sectors, config.workers, progress)

    grid = GridResult(
        tickers=returns.tickers,
        n_obs=returns.n_obs,
        results=[r for outcome in outcomes for r in outcome.results],
    )
    for outcome in outcomes:
        if outcome.split is not None:
            grid.spectra[str(outcome.method)] = spectral_report(outcome.split)
        if config.dump_matrices and outcome.matrix is not None:
            grid.matrices[str(outcome.method)] = outcome.matrix
    if config.dump_signatures and levels is not None:
        grid.signature_rows = signature_dump(returns.tickers, levels, config.depth)

    if grid.n_failed:
        logger.warning(f"{grid.n_failed} of {len(grid.results)} cells failed")
    return grid


def signature_dump(
    tickers: tuple[str, ...], levels: list[np.ndarray], depth: int
) -> list[tuple[str, str, float]]:
    """(ticker, word, coefficient) rows, words of length 0..depth in lexicographic order."""
    sigs = [
        TruncatedSignature(dim=2, depth=depth, levels=tuple(level[i] for level in levels))
        for i in range(len(tickers))
    ]
    return signature_rows(tickers, sigs)


def default_step(n_obs: int) -> int:
    """round((T - ceil(T/3)) / 10), at least 1."""
    return max(1, round((n_obs - math.ceil(n_obs / 3)) / 10))


def stability_windows(n_obs: int, start_frac: float, step: Optional[int] = None) -> list[int]:
    """Prefix window lengths ceil(f T), ceil(f T) + s, ..., ending exactly at T.

    Raises:
        ValidationError: Bad fraction or step, or a first window shorter than 2
    """
    if not 0.0 < start_frac < 1.0:
        raise ValidationError(f"start_frac must be in (0, 1), got {start_frac}")
    if step is None:
        step = default_step(n_obs)
    if step < 1:
        raise ValidationError(f"step must be >= 1, got {step}")
    # the epsilon keeps f*T that is integral up to rounding from jumping up
    start = math.ceil(start_frac * n_obs - 1e-9)
    if start < 2:
        raise ValidationError(
            f"First stability window holds {start} observations; at least 2 are needed"
        )
    windows = list(range(start, n_obs + 1, step))
    if windows[-1] != n_obs:
        windows.append(n_obs)
    return windows


class StabilityPoint(BaseModel):
    """Result of one cell on one window."""

    window: int
    cell: str
    method: Method
    filter: FilterKind
    algorithm: Algorithm
    status: CellStatus
    q: Optional[float] = None
    n_communities: Optional[int] = None
    reason: Optional[str] = None
    exit_code: Optional[int] = None


class StabilityCurve(BaseModel):
    """Modularity and community count of each cell as the window grows."""

    windows: list[int]
    points: list[StabilityPoint]

    def series(self, cell: str) -> list[StabilityPoint]:
        return [p for p in self.points if p.cell == cell]


def stability_analysis(
    config: RunConfig,
    returns: Optional[ReturnsPanel] = None,
    progress: Optional[ProgressCallback] = None,
) -> StabilityCurve:
    """Re-run the grid on growing prefixes of the returns panel.

    Windows start at the first observation. RMT cells on windows with
    T_k <= N are skipped with a reason.
    """
    if returns is None:
        returns, _ = load_inputs(config)
    windows = stability_windows(returns.n_obs, config.start_frac, config.step)
    logger.info(f"Stability analysis over {len(windows)} windows: {windows}")

    points = []
    for window in windows:
        prefix = returns.prefix(window)
        outcomes, _ = _evaluate(config, prefix, None, config.workers)
        for result in (r for outcome in outcomes for r in outcome.results):
            points.append(
                StabilityPoint(
                    window=window,
                    cell=result.cell,
                    method=result.method,
                    filter=result.filter,
                    algorithm=result.algorithm,
                    status=result.status,
                    q=result.q,
                    n_communities=result.n_communities,
                    reason=result.reason,
                    exit_code=result.exit_code,
                )
            )
        if progress is not None:
            progress(f"T={window}")
    return StabilityCurve(windows=windows, points=points)


def build_matrices(config: RunConfig, returns: ReturnsPanel) -> dict[Method, SymMatrix]:
    """The configured methods' matrices, computed in configured order.

    Raises:
        SigcomError: The first method whose matrix cannot be built
    """
    _, features, error = _signature_inputs(config, returns)
    runner = _MethodRunner(config, returns, None, features, error)
    return {method: runner.matrix(method) for method in config.methods}
