"""Modularity objectives and their maximizers.

Every objective is a gain matrix B with a positive normalizer c:
Q(eta) = (1 / c) * sum over ordered pairs (i, j) with eta_i == eta_j of B_ij.
The diagonal is included; it is the same for every partition.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from sigcom.exceptions import NumericError, ValidationError
from sigcom.ingest import SectorMap
from sigcom.similarity import SymMatrix
from sigcom.spectral import AdjacencyMatrix, RmtSplit

logger = logging.getLogger("sigcom.community")

# moves and merges must beat this modularity gain
GAIN_TOLERANCE = 1e-12
BRUTE_FORCE_LIMIT = 12

StepCallback = Callable[[np.ndarray, float], None]


class GainMode(StrEnum):
    CONFIGURATION = "configuration"
    RMT = "rmt"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GainMatrix:
    """Symmetric gain matrix B and its normalizer."""

    values: np.ndarray
    c_norm: float
    mode: GainMode = GainMode.CUSTOM

    def __post_init__(self):
        b = self.values
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
            raise ValidationError(f"Gain matrix must be non-empty and square, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise NumericError("Gain matrix contains non-finite entries")
        scale = max(1.0, float(np.abs(b).max()))
        if np.abs(b - b.T).max() > 1e-12 * scale:
            raise ValidationError("Gain matrix must be symmetric")
        if not self.c_norm > 0:
            raise NumericError(f"Modularity normalizer must be positive, got {self.c_norm}")

    @property
    def size(self) -> int:
        return self.values.shape[0]


def canonical_labels(assignment: Sequence[int]) -> np.ndarray:
    """Relabel communities 0..K-1 in order of first appearance."""
    labels = np.asarray(assignment)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


@dataclass(frozen=True)
class Partition:
    """Community assignment with contiguous labels and its modularity."""

    assignment: np.ndarray
    q: float

    @property
    def n_communities(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    @property
    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.n_communities).tolist()

    def members(self) -> list[list[int]]:
        return [np.flatnonzero(self.assignment == k).tolist() for k in range(self.n_communities)]


def gain_from_adjacency(adj: AdjacencyMatrix) -> GainMatrix:
    """Configuration-model gain B_ij = A_ij - k_i k_j / 2l, normalizer 2l.

    Raises:
        NumericError: The graph has no edges
    """
    a = adj.values.astype(float)
    k = a.sum(axis=1)
    two_l = float(k.sum())
    if two_l == 0:
        raise NumericError("Graph has no edges; modularity is undefined")
    return GainMatrix(values=a - np.outer(k, k) / two_l, c_norm=two_l, mode=GainMode.CONFIGURATION)


def gain_from_rmt(split: RmtSplit, original: SymMatrix) -> GainMatrix:
    """Structure component as gain, normalizer sum_ij of the original matrix.

    Raises:
        NumericError: The normalizer is not positive
    """
    c_norm = float(original.values.sum())
    if not c_norm > 0:
        raise NumericError(f"C_norm = {c_norm:.6g} is not positive; modularity is undefined")
    structure = 0.5 * (split.structure + split.structure.T)
    return GainMatrix(values=structure, c_norm=c_norm, mode=GainMode.RMT)


def modularity(gain: GainMatrix, assignment: Sequence[int]) -> float:
    """Q = (1 / c_norm) * sum of B_ij over same-community ordered pairs."""
    eta = np.asarray(assignment)
    if eta.shape != (gain.size,):
        raise ValidationError(f"Assignment length {eta.size} does not match N={gain.size}")
    same = eta[:, None] == eta[None, :]
    return float(gain.values[same].sum() / gain.c_norm)


def _aggregate(b: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    indicator = np.zeros((labels.size, k))
    indicator[np.arange(labels.size), labels] = 1.0
    return indicator.T @ b @ indicator


def _local_moving(
    b: np.ndarray,
    c_norm: float,
    order_rng: Optional[np.random.Generator],
    report: Optional[Callable[[np.ndarray, float], None]],
) -> tuple[np.ndarray, bool]:
    """Move nodes between communities until a full sweep changes nothing."""
    n = b.shape[0]
    comm = np.arange(n)
    sizes = np.ones(n, dtype=np.int64)
    # links[i, c] = sum of B_ij over j in community c
    links = b.copy()
    threshold = GAIN_TOLERANCE * c_norm / 2.0
    moved_any = False

    while True:
        moved = False
        order = order_rng.permutation(n) if order_rng is not None else range(n)
        for i in order:
            current = comm[i]
            stay = links[i, current] - b[i, i]
            candidates = np.where(sizes > 0, links[i], -np.inf)
            candidates[current] = -np.inf
            if sizes[current] > 1:
                # a node sharing its community may also open an empty one
                candidates[int(np.flatnonzero(sizes == 0)[0])] = 0.0
            best = int(np.argmax(candidates))
            best_value = candidates[best]

            if not best_value - stay > threshold:
                continue

            links[:, current] -= b[:, i]
            links[:, best] += b[:, i]
            sizes[current] -= 1
            sizes[best] += 1
            comm[i] = best
            moved = True
            moved_any = True
            if report is not None:
                report(comm, 2.0 * (best_value - stay) / c_norm)
        if not moved:
            return comm, moved_any


def _lift_step(on_step: StepCallback, node_comm: np.ndarray, local: np.ndarray, delta: float):
    on_step(local[node_comm].copy(), delta)


def louvain(
    gain: GainMatrix,
    seed: Optional[int] = None,
    on_step: Optional[StepCallback] = None,
) -> Partition:
    """Louvain modularity maximization on a dense gain matrix.

    Phase one sweeps nodes (ascending order, or a seeded shuffle when `seed`
    is given) and moves each to the community with the largest gain, staying
    put on ties. Phase two collapses communities into nodes and repeats.

    Args:
        gain: Objective to maximize
        seed: Seed for shuffled node order; None keeps ascending order
        on_step: Called after every accepted move with the node-level
            assignment and the modularity gain of that move
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    node_comm = np.arange(gain.size)
    b = gain.values.copy()
    level = 0

    while True:
        report = None
        if on_step is not None:
            # lift moves on aggregated nodes back to the original nodes
            report = partial(_lift_step, on_step, node_comm)

        local, moved = _local_moving(b, gain.c_norm, rng, report)
        if not moved:
            break
        local = canonical_labels(local)
        node_comm = local[node_comm]
        b = _aggregate(b, local, int(local.max()) + 1)
        level += 1
        logger.debug(f"Louvain level {level}: {b.shape[0]} communities")

    assignment = canonical_labels(node_comm)
    return Partition(assignment=assignment, q=modularity(gain, assignment))


def greedy_cnm(gain: GainMatrix, on_step: Optional[StepCallback] = None) -> Partition:
    """Clauset-Newman-Moore agglomeration.

    Starting from singletons, merge the pair of communities with the largest
    gain 2 * sum_{i in a, j in b} B_ij / c_norm (smallest index pair on ties)
    until no merge gains more than the tolerance.
    """
    n = gain.size
    e = gain.values.copy()
    active = np.ones(n, dtype=bool)
    labels = np.arange(n)
    q = modularity(gain, labels)
    best_labels, best_q = labels.copy(), q
    pair_mask = np.triu(np.ones((n, n), dtype=bool), k=1)

    while active.sum() > 1:
        valid = pair_mask & active[:, None] & active[None, :]
        scores = np.where(valid, e, -np.inf)
        flat = int(np.argmax(scores))
        a, b = divmod(flat, n)
        delta = 2.0 * scores[a, b] / gain.c_norm
        if not delta > GAIN_TOLERANCE:
            break

        e[a, :] += e[b, :]
        e[:, a] += e[:, b]
        active[b] = False
        labels[labels == b] = a
        q += delta
        if on_step is not None:
            on_step(labels.copy(), delta)
        if q > best_q:
            best_labels, best_q = labels.copy(), q

    assignment = canonical_labels(best_labels)
    return Partition(assignment=assignment, q=modularity(gain, assignment))


def brute_force_partition(gain: GainMatrix) -> Partition:
    """Exact maximizer over all set partitions (restricted growth strings).

    Among partitions within the tolerance of the best, the one with more
    communities wins.

    Raises:
        ValidationError: N > 12
    """
    n = gain.size
    if n > BRUTE_FORCE_LIMIT:
        raise ValidationError(f"Exhaustive search is limited to N <= {BRUTE_FORCE_LIMIT}, got {n}")
    b = gain.values
    rows = np.zeros((n, n))  # rows[c] = sum of B[j, :] over j in community c
    eta = np.zeros(n, dtype=np.int64)
    best = {"total": -np.inf, "k": 0, "eta": eta.copy()}
    tol = GAIN_TOLERANCE * gain.c_norm

    def visit(i: int, k: int, total: float) -> None:
        if i == n:
            if total > best["total"] + tol or (
                total >= best["total"] - tol and k > best["k"]
            ):
                best.update(total=total, k=k, eta=eta.copy())
            return
        for c in range(k + 1):
            delta = 2.0 * rows[c, i] + b[i, i]
            eta[i] = c
            rows[c] += b[i]
            visit(i + 1, max(k, c + 1), total + delta)
            rows[c] -= b[i]

    visit(0, 0, 0.0)
    assignment = canonical_labels(best["eta"])
    return Partition(assignment=assignment, q=modularity(gain, assignment))


class CommunityOverlap(BaseModel):
    """How one community spreads over sectors."""

    community: int
    size: int
    counts: dict[str, int]
    purity: float


class SectorOverlapReport(BaseModel):
    """Community-by-sector contingency table."""

    sectors: list[str]
    communities: list[CommunityOverlap]


def sector_overlap(
    partition: Partition, sectors: SectorMap, tickers: Sequence[str]
) -> SectorOverlapReport:
    """Count sectors inside every community; purity is the largest sector share."""
    if len(tickers) != partition.assignment.size:
        raise ValidationError(
            f"{len(tickers)} tickers for a partition of {partition.assignment.size} nodes"
        )
    labels = [sectors.label(t) for t in tickers]
    sector_names = sorted(set(labels))
    rows = []
    for k, members in enumerate(partition.members()):
        counts = {name: 0 for name in sector_names}
        for i in members:
            counts[labels[i]] += 1
        size = len(members)
        rows.append(
            CommunityOverlap(
                community=k,
                size=size,
                counts=counts,
                purity=max(counts.values()) / size if size else 0.0,
            )
        )
    return SectorOverlapReport(sectors=sector_names, communities=rows)
