"""Eigendecomposition, Marcenko-Pastur filtering and threshold (asset graph) filtering."""

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Union

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.stats import norm

from sigcom.exceptions import (
    InsufficientObservationsError,
    NumericError,
    ValidationError,
)
from sigcom.similarity import SymMatrix

logger = logging.getLogger("sigcom.spectral")

SYMMETRY_TOLERANCE = 1e-10
# eigenvalues this close to lambda_plus count as noise
NOISE_EDGE_TOLERANCE = 1e-12
SIGN_TIE_TOLERANCE = 1e-12

MatrixLike = Union[SymMatrix, np.ndarray]


def _as_array(matrix: MatrixLike) -> np.ndarray:
    a = matrix.values if isinstance(matrix, SymMatrix) else np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"Expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("Matrix contains non-finite entries")
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def eigh(matrix: MatrixLike) -> SpectralDecomposition:
    """Full eigensystem of a symmetric matrix.

    Each eigenvector is signed so that its largest-magnitude entry is positive
    (the first such entry when magnitudes tie).

    Raises:
        ValidationError: The matrix is not symmetric within 1e-10
        NumericError: The eigensolver does not converge
    """
    a = _as_array(matrix)
    scale = max(1.0, float(np.abs(a).max()))
    asymmetry = float(np.abs(a - a.T).max())
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise ValidationError(f"Matrix is not symmetric (max |A - A^T| = {asymmetry:.3g})")

    try:
        values, vectors = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as e:
        raise NumericError(f"Eigendecomposition did not converge: {e}") from e

    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    magnitude = np.abs(vectors)
    leading = np.argmax(magnitude >= magnitude.max(axis=0) - SIGN_TIE_TOLERANCE, axis=0)
    signs = np.sign(vectors[leading, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return SpectralDecomposition(eigenvalues=values, eigenvectors=vectors * signs)


def mp_bounds(n_series: int, n_obs: int, sigma2: float = 1.0) -> tuple[float, float]:
    """Support edges sigma^2 (1 -+ sqrt(N / T))^2 of the Marcenko-Pastur law.

    Raises:
        ValidationError: n_series < 2 or sigma2 <= 0
        InsufficientObservationsError: T <= N
    """
    if n_series < 2:
        raise ValidationError(f"Need at least 2 series, got {n_series}")
    if n_obs <= n_series:
        raise InsufficientObservationsError(
            f"Random-matrix filtering needs T > N, got T={n_obs}, N={n_series}"
        )
    if not sigma2 > 0:
        raise ValidationError(f"sigma2 must be positive, got {sigma2}")
    ratio = np.sqrt(n_series / n_obs)
    return sigma2 * (1.0 - ratio) ** 2, sigma2 * (1.0 + ratio) ** 2


@dataclass(frozen=True)
class RmtSplit:
    """Noise, market and structure components of a matrix; they sum to the input."""

    noise: np.ndarray
    market: np.ndarray
    structure: np.ndarray
    lambda_minus: float
    lambda_plus: float
    lambda_max: float
    sigma2: float
    sigma2_fallback: bool
    eigenvalues: np.ndarray
    market_vector: np.ndarray
    n_obs: int
    n_noise: int
    n_structure: int

    @property
    def n_series(self) -> int:
        return self.eigenvalues.size


def rmt_decompose(matrix: MatrixLike, n_obs: int) -> RmtSplit:
    """Split a matrix into noise, market mode and remaining structure.

    sigma^2 = 1 - lambda_max / N (set to 1 with a warning when not positive).
    The top eigenpair is the market mode; eigenvalues above lambda_plus form
    the structure; the rest is noise. Only the first eigenpair is the market:
    a later eigenvalue tied with lambda_max goes to the structure, so the
    three parts still add up to the input.

    Raises:
        ValidationError: N < 3
        InsufficientObservationsError: T <= N
    """
    a = _as_array(matrix)
    n = a.shape[0]
    if n < 3:
        raise ValidationError(f"Random-matrix decomposition needs N >= 3, got {n}")
    if n_obs <= n:
        raise InsufficientObservationsError(
            f"Random-matrix filtering needs T > N, got T={n_obs}, N={n}"
        )

    decomposition = eigh(matrix)
    lam = decomposition.eigenvalues
    vectors = decomposition.eigenvectors
    lambda_max = float(lam[0])

    sigma2 = 1.0 - lambda_max / n
    fallback = False
    if sigma2 <= 0:
        logger.warning(
            f"1 - lambda_max/N = {sigma2:.4g} is not positive; using sigma^2 = 1 instead"
        )
        sigma2 = 1.0
        fallback = True
    lambda_minus, lambda_plus = mp_bounds(n, n_obs, sigma2)

    rest = np.arange(n) > 0
    structure_mask = rest & (lam > lambda_plus + NOISE_EDGE_TOLERANCE)
    noise_mask = rest & ~structure_mask

    def component(mask: np.ndarray) -> np.ndarray:
        v = vectors[:, mask]
        return (v * lam[mask]) @ v.T

    market_vector = vectors[:, 0].copy()
    split = RmtSplit(
        noise=component(noise_mask),
        market=lambda_max * np.outer(market_vector, market_vector),
        structure=component(structure_mask),
        lambda_minus=float(lambda_minus),
        lambda_plus=float(lambda_plus),
        lambda_max=lambda_max,
        sigma2=float(sigma2),
        sigma2_fallback=fallback,
        eigenvalues=lam.copy(),
        market_vector=market_vector,
        n_obs=int(n_obs),
        n_noise=int(noise_mask.sum()),
        n_structure=int(structure_mask.sum()),
    )
    logger.debug(
        f"RMT split N={n} T={n_obs}: lambda_max={lambda_max:.4g}, "
        f"lambda_plus={lambda_plus:.4g}, structure={split.n_structure}, noise={split.n_noise}"
    )
    return split


def spectral_report(split: RmtSplit) -> dict[str, Any]:
    """JSON-ready summary of an RMT split."""
    return {
        "n_series": split.n_series,
        "n_obs": split.n_obs,
        "eigenvalues": [float(v) for v in split.eigenvalues],
        "lambda_minus": split.lambda_minus,
        "lambda_plus": split.lambda_plus,
        "lambda_max": split.lambda_max,
        "sigma2": split.sigma2,
        "sigma2_fallback": split.sigma2_fallback,
        "buckets": {
            "noise": split.n_noise,
            "structure": split.n_structure,
            "market": 1,
        },
    }


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary symmetric adjacency without self-loops."""

    values: np.ndarray
    theta: float

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.values.sum(axis=1)

    @property
    def n_edges(self) -> int:
        return int(self.values.sum()) // 2

    @property
    def is_empty(self) -> bool:
        """True when the filter removed every edge."""
        return self.n_edges == 0

    @property
    def n_isolated(self) -> int:
        return int((self.degrees == 0).sum())

    @property
    def density(self) -> float:
        pairs = self.size * (self.size - 1) // 2
        return self.n_edges / pairs if pairs else 0.0


def _threshold_adjacency(a: np.ndarray, theta: float) -> AdjacencyMatrix:
    keep = a >= theta
    keep &= keep.T
    np.fill_diagonal(keep, False)
    return AdjacencyMatrix(values=keep.astype(np.int64), theta=float(theta))


def threshold_filter(matrix: MatrixLike, theta: float) -> AdjacencyMatrix:
    """Keep an edge i-j (i != j) when the entry is >= theta."""
    adjacency = _threshold_adjacency(_as_array(matrix), theta)
    if adjacency.is_empty:
        logger.warning(f"Threshold {theta:.6g} leaves no edges")
    return adjacency


@dataclass(frozen=True)
class ThresholdChoice:
    theta: float
    density: float
    n_edges: int


def suggest_threshold(matrix: MatrixLike, target_density: float) -> ThresholdChoice:
    """Smallest off-diagonal entry value whose threshold graph has density <= target.

    When ties make the target unreachable the largest entry is returned with
    its (higher) density.

    Raises:
        ValidationError: target_density outside (0, 1] or fewer than 2 nodes
    """
    if not 0.0 < target_density <= 1.0:
        raise ValidationError(f"target_density must be in (0, 1], got {target_density}")
    a = _as_array(matrix)
    n = a.shape[0]
    if n < 2:
        raise ValidationError("Threshold selection needs at least 2 nodes")

    upper = np.sort(a[np.triu_indices(n, k=1)])
    candidates = np.unique(upper)
    edges = upper.size - np.searchsorted(upper, candidates, side="left")
    densities = edges / upper.size

    meets = np.flatnonzero(densities <= target_density)
    if meets.size:
        i = int(meets[0])
    else:
        i = candidates.size - 1
        logger.warning(
            f"No threshold reaches density {target_density:g}; "
            f"using theta={candidates[i]:.6g} with density {densities[i]:.4g}"
        )
    return ThresholdChoice(
        theta=float(candidates[i]), density=float(densities[i]), n_edges=int(edges[i])
    )


def fisher_threshold(n_obs: int, alpha: float = 0.05) -> float:
    """Smallest correlation significant at level alpha (two-sided, Fisher z-transform)."""
    if n_obs <= 3:
        raise InsufficientObservationsError(f"Fisher threshold needs T > 3, got {n_obs}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    z = norm.ppf(1.0 - alpha / 2.0)
    return float(np.tanh(z / np.sqrt(n_obs - 3)))


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    n_edges: int
    density: float
    n_components: int
    n_isolated: int


def threshold_sweep(matrix: MatrixLike, thetas: Iterable[float]) -> list[SweepPoint]:
    """Edge count, density and connectivity of the threshold graph for each theta."""
    a = _as_array(matrix)
    points = []
    for theta in thetas:
        adjacency = _threshold_adjacency(a, float(theta))
        n_components, _ = connected_components(adjacency.values, directed=False)
        points.append(
            SweepPoint(
                theta=float(theta),
                n_edges=adjacency.n_edges,
                density=adjacency.density,
                n_components=int(n_components),
                n_isolated=adjacency.n_isolated,
            )
        )
    return points


def quantile_thetas(matrix: MatrixLike, n_points: int = 21) -> np.ndarray:
    """Distinct quantiles of the off-diagonal entries, for threshold sweeps."""
    a = _as_array(matrix)
    n = a.shape[0]
    if n < 2:
        raise ValidationError("Threshold sweeps need at least 2 nodes")
    upper = a[np.triu_indices(n, k=1)]
    return np.unique(np.quantile(upper, np.linspace(0.0, 1.0, n_points)))
