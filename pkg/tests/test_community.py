"""Tests for modularity objectives and community detection."""

import numpy as np
import pytest

from sigcom.community import (
    GainMatrix,
    GainMode,
    Partition,
    brute_force_partition,
    canonical_labels,
    gain_from_adjacency,
    gain_from_rmt,
    greedy_cnm,
    louvain,
    modularity,
    sector_overlap,
)
from sigcom.exceptions import NumericError, ValidationError
from sigcom.ingest import SectorMap
from sigcom.similarity import MatrixKind, SymMatrix
from sigcom.spectral import AdjacencyMatrix, rmt_decompose


def _graph(n: int, edges: list[tuple[int, int]]) -> GainMatrix:
    a = np.zeros((n, n), dtype=np.int64)
    for i, j in edges:
        a[i, j] = a[j, i] = 1
    return gain_from_adjacency(AdjacencyMatrix(values=a, theta=0.5))


def _cliques(sizes: list[int]) -> GainMatrix:
    edges, start = [], 0
    for size in sizes:
        members = range(start, start + size)
        edges += [(i, j) for i in members for j in members if i < j]
        start += size
    return _graph(start, edges)


def _random_gain(rng: np.random.Generator, n: int) -> GainMatrix:
    b = rng.standard_normal((n, n))
    b = 0.5 * (b + b.T)
    return GainMatrix(values=b, c_norm=float(np.abs(b).sum()))


def _planted_two_blocks(rng: np.random.Generator, size: int = 6, signal: float = 3.0):
    labels = np.repeat([0, 1], size)
    sign = np.where(labels[:, None] == labels[None, :], 1.0, -1.0)
    noise = np.triu(rng.standard_normal((2 * size, 2 * size)))
    noise = noise + np.triu(noise, 1).T
    b = signal * sign + noise
    return GainMatrix(values=b, c_norm=float(np.abs(b).sum())), labels


def _traced(detect, gain: GainMatrix) -> Partition:
    """Run a maximizer and check that every reported step raises Q by its delta."""
    steps = []
    partition = detect(gain, on_step=lambda eta, delta: steps.append((eta, delta)))
    q = modularity(gain, np.arange(gain.values.shape[0]))
    for eta, delta in steps:
        assert delta > 0
        new_q = modularity(gain, eta)
        assert new_q - q == pytest.approx(delta, abs=1e-12)
        q = new_q
    assert partition.q == pytest.approx(q, abs=1e-12)
    return partition


TRIANGLE = [(0, 1), (1, 2), (0, 2)]
TWO_TRIANGLES = TRIANGLE + [(3, 4), (4, 5), (3, 5)]


class TestGainMatrices:
    """Test gain construction and validation."""

    def test_configuration_gain(self):
        """Test B = A - k k^T / 2l on a triangle."""
        gain = _graph(3, TRIANGLE)
        assert gain.mode == GainMode.CONFIGURATION
        assert gain.c_norm == 6.0
        assert gain.values[0, 1] == pytest.approx(1.0 - 4.0 / 6.0)
        assert gain.values[0, 0] == pytest.approx(-4.0 / 6.0)

    def test_empty_graph_is_numeric_error(self):
        """Test that an edgeless graph has no modularity."""
        with pytest.raises(NumericError):
            _graph(3, [])

    def test_rejects_asymmetric(self):
        """Test that gain matrices must be symmetric."""
        with pytest.raises(ValidationError):
            GainMatrix(values=np.array([[0.0, 1.0], [0.0, 0.0]]), c_norm=1.0)

    def test_rejects_non_positive_normalizer(self):
        """Test that the normalizer must be positive."""
        with pytest.raises(NumericError):
            GainMatrix(values=np.zeros((2, 2)), c_norm=0.0)

    def test_rmt_gain(self):
        """Test that the RMT gain is the structure part over the sum of the matrix."""
        rng = np.random.default_rng(0)
        values = np.corrcoef(rng.standard_normal((6, 200)))
        matrix = SymMatrix(values=values, kind=MatrixKind.CORRELATION)
        split = rmt_decompose(matrix, 200)
        gain = gain_from_rmt(split, matrix)
        assert gain.mode == GainMode.RMT
        assert gain.c_norm == pytest.approx(values.sum())
        assert np.allclose(gain.values, split.structure)


class TestModularity:
    """Test the modularity function."""

    def test_triangle(self):
        """Test the whole triangle at 0 and singletons at -1/3."""
        gain = _graph(3, TRIANGLE)
        assert modularity(gain, [0, 0, 0]) == pytest.approx(0.0, abs=1e-15)
        assert modularity(gain, [0, 1, 2]) == pytest.approx(-1.0 / 3.0)

    def test_two_triangles(self):
        """Test the natural split of two disjoint triangles."""
        assert modularity(_graph(6, TWO_TRIANGLES), [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5)

    def test_label_invariance(self):
        """Test that renaming communities does not change Q."""
        gain = _graph(6, TWO_TRIANGLES)
        assert modularity(gain, [4, 4, 4, 9, 9, 9]) == modularity(gain, [0, 0, 0, 1, 1, 1])

    def test_length_mismatch(self):
        """Test that the assignment must cover every node."""
        with pytest.raises(ValidationError):
            modularity(_graph(3, TRIANGLE), [0, 0])

    def test_canonical_labels(self):
        """Test relabelling by first appearance."""
        assert canonical_labels([5, 5, 2, 7, 2]).tolist() == [0, 0, 1, 2, 1]


class TestAlgorithms:
    """Test Louvain, greedy agglomeration and exhaustive search."""

    @pytest.mark.parametrize("detect", [louvain, greedy_cnm, brute_force_partition])
    def test_two_triangles(self, detect):
        """Test that every maximizer splits two triangles."""
        partition = detect(_graph(6, TWO_TRIANGLES))
        assert partition.assignment.tolist() == [0, 0, 0, 1, 1, 1]
        assert partition.q == pytest.approx(0.5)

    @pytest.mark.parametrize("detect", [louvain, greedy_cnm])
    def test_planted_cliques(self, detect):
        """Test recovery of disjoint cliques."""
        partition = detect(_cliques([5, 4, 6]))
        assert partition.sizes == [5, 4, 6]
        assert partition.n_communities == 3

    def test_louvain_deterministic(self):
        """Test that repeated runs and equal seeds agree."""
        gain = _random_gain(np.random.default_rng(3), 10)
        assert np.array_equal(louvain(gain).assignment, louvain(gain).assignment)
        assert np.array_equal(louvain(gain, seed=4).assignment, louvain(gain, seed=4).assignment)

    def test_louvain_steps_increase_modularity(self):
        """Test that every reported move raises Q by the reported gain."""
        gain = _random_gain(np.random.default_rng(5), 12)
        steps = []
        partition = louvain(gain, on_step=lambda eta, delta: steps.append((eta, delta)))

        assert steps
        q = modularity(gain, np.arange(12))
        for eta, delta in steps:
            assert delta > 0
            new_q = modularity(gain, eta)
            assert new_q - q == pytest.approx(delta, abs=1e-12)
            q = new_q
        assert partition.q == pytest.approx(q, abs=1e-12)

    def test_greedy_steps_increase_modularity(self):
        """Test that every merge raises Q by the reported gain."""
        gain = _random_gain(np.random.default_rng(6), 10)
        steps = []
        partition = greedy_cnm(gain, on_step=lambda eta, delta: steps.append((eta, delta)))

        q = modularity(gain, np.arange(10))
        for eta, delta in steps:
            assert delta > 0
            new_q = modularity(gain, eta)
            assert new_q - q == pytest.approx(delta, abs=1e-12)
            q = new_q
        assert partition.q >= modularity(gain, np.arange(10))

    def test_heuristics_never_beat_exhaustive_search(self):
        """Test Louvain and greedy against the exact optimum on 200 small gains."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            gain = _random_gain(rng, n)
            best = brute_force_partition(gain)
            assert best.q == pytest.approx(modularity(gain, best.assignment))
            assert _traced(louvain, gain).q <= best.q + 1e-10
            assert _traced(greedy_cnm, gain).q <= best.q + 1e-10
            for _ in range(5):
                assert modularity(gain, rng.integers(0, n, size=n)) <= best.q + 1e-10

    @pytest.mark.parametrize("detect", [louvain, greedy_cnm])
    def test_planted_two_blocks(self, detect):
        """Test exact recovery of two blocks whose signal is 3x the noise, over 100 trials."""
        rng = np.random.default_rng(11)
        exact = 0
        for _ in range(100):
            gain, labels = _planted_two_blocks(rng)
            partition = _traced(detect, gain)
            exact += partition.assignment.tolist() == labels.tolist()
        assert exact >= 95

    def test_louvain_reaches_optimum_on_planted_graph(self):
        """Test that Louvain matches the exact optimum on clear blocks."""
        gain = _cliques([4, 4, 3])
        assert louvain(gain).q == pytest.approx(brute_force_partition(gain).q)

    def test_zero_gain_prefers_singletons(self):
        """Test that ties go to the partition with more communities."""
        partition = brute_force_partition(GainMatrix(values=np.zeros((4, 4)), c_norm=1.0))
        assert partition.n_communities == 4
        assert partition.q == 0.0

    def test_exhaustive_search_limit(self):
        """Test that N > 12 is refused."""
        with pytest.raises(ValidationError):
            brute_force_partition(GainMatrix(values=np.zeros((13, 13)), c_norm=1.0))


class TestSectorOverlap:
    """Test community-by-sector contingency."""

    def test_counts_and_purity(self):
        """Test counts per sector and the dominant share."""
        partition = Partition(assignment=np.array([0, 0, 0, 1]), q=0.1)
        sectors = SectorMap(sectors={"A": "Energy", "B": "Energy", "C": "Tech", "D": "Tech"})
        report = sector_overlap(partition, sectors, ["A", "B", "C", "D"])

        assert report.sectors == ["Energy", "Tech"]
        assert report.communities[0].counts == {"Energy": 2, "Tech": 1}
        assert report.communities[0].purity == pytest.approx(2 / 3)
        assert report.communities[1].size == 1
        assert report.communities[1].purity == 1.0

    def test_unmapped_tickers(self):
        """Test that tickers without a sector count as Unknown."""
        partition = Partition(assignment=np.array([0, 0]), q=0.0)
        report = sector_overlap(partition, SectorMap(), ["A", "B"])
        assert report.communities[0].counts == {"Unknown": 2}

    def test_length_mismatch(self):
        """Test that tickers must match the partition size."""
        with pytest.raises(ValidationError):
            sector_overlap(Partition(assignment=np.array([0]), q=0.0), SectorMap(), ["A", "B"])
