"""Tests for lead-lag paths and truncated signatures."""

import itertools
import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from sigcom.exceptions import DataError, ValidationError
from sigcom.signature import (
    LeadLagPath,
    TruncatedSignature,
    chen_concat,
    feature_length,
    format_word,
    lead_lag,
    lead_lag_batch,
    levy_area,
    n_coefficients,
    path_signature,
    path_signatures,
    segment_signature,
    signature_feature_vector,
    signature_rows,
    words,
)


def _quadrature_signature(points: np.ndarray, depth: int) -> dict[tuple[int, ...], float]:
    """Iterated integrals by exact polynomial integration along each segment."""
    dim = points.shape[1]
    all_words = [
        w for k in range(1, depth + 1) for w in itertools.product(range(1, dim + 1), repeat=k)
    ]
    values = {(): 1.0, **{w: 0.0 for w in all_words}}
    for delta in np.diff(points, axis=0):
        running = {(): Polynomial([1.0])}
        for w in all_words:
            integrand = running[w[:-1]] * delta[w[-1] - 1]
            running[w] = Polynomial([values[w]]) + integrand.integ()
        values = {w: float(p(1.0)) for w, p in running.items()}
    return values


def _random_path(rng: np.random.Generator, n_segments: int, dim: int = 2) -> np.ndarray:
    return np.vstack([np.zeros(dim), np.cumsum(rng.standard_normal((n_segments, dim)), axis=0)])


class TestWords:
    """Test word indexing helpers."""

    def test_coefficient_counts(self):
        """Test (d^(M+1) - 1) / (d - 1) including the empty word."""
        assert n_coefficients(2, 3) == 15
        assert feature_length(2, 3) == 14
        assert n_coefficients(1, 4) == 5
        assert n_coefficients(3, 2) == 13

    def test_lexicographic_order(self):
        """Test that words of one level come in lexicographic order."""
        assert words(2, 2) == [(1, 1), (1, 2), (2, 1), (2, 2)]
        assert format_word((1, 2, 2)) == "122"


class TestLeadLag:
    """Test the lead-lag embedding."""

    def test_two_point_stream(self):
        """Test the staircase of [0, 1]."""
        path = lead_lag([0.0, 1.0])
        assert path.points.tolist() == [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]

    def test_rebased_to_origin(self):
        """Test that the stream is shifted to start at 0."""
        path = lead_lag([5.0, 6.0, 4.0])
        assert path.points[0].tolist() == [0.0, 0.0]
        assert path.points[-1].tolist() == [-1.0, -1.0]
        assert path.n_segments == 4

    def test_path_shape_and_moves(self):
        """Test 2n+1 points with one coordinate changing per step."""
        rng = np.random.default_rng(3)
        path = lead_lag(np.cumsum(rng.standard_normal(20)))
        assert path.points.shape == (41, 2)
        assert np.all((np.diff(path.points, axis=0) != 0).sum(axis=1) <= 1)

    def test_batch_matches_single(self):
        """Test that batched lead-lag equals per-stream lead-lag."""
        rng = np.random.default_rng(4)
        streams = rng.standard_normal((3, 6))
        batch = lead_lag_batch(streams)
        for i in range(3):
            assert np.array_equal(batch[i], lead_lag(streams[i]).points)

    def test_short_stream_rejected(self):
        """Test that a single value is not a stream."""
        with pytest.raises(ValidationError):
            lead_lag([1.0])

    def test_non_finite_rejected(self):
        """Test that NaN values are rejected."""
        with pytest.raises(DataError):
            lead_lag([0.0, float("nan")])

    def test_invalid_path_rejected(self):
        """Test that paths not starting at the origin are invalid."""
        with pytest.raises(ValidationError, match="origin"):
            LeadLagPath(points=np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 2.0]]))
        with pytest.raises(ValidationError, match="one coordinate"):
            LeadLagPath(points=np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]))


class TestSegmentSignature:
    """Test the signature of a single linear segment."""

    def test_tensor_exponential(self):
        """Test that word w of length k maps to prod(delta_w) / k!."""
        delta = np.array([2.0, -3.0])
        sig = segment_signature(delta, depth=3)
        for k in range(4):
            for w in words(2, k):
                expected = math.prod(delta[i - 1] for i in w) / math.factorial(k)
                assert sig[w] == pytest.approx(expected, rel=1e-14)

    def test_invalid_depth(self):
        """Test that depth must be positive."""
        with pytest.raises(ValidationError):
            segment_signature([1.0, 0.0], depth=0)


class TestPathSignature:
    """Test signatures of piecewise-linear paths."""

    def test_unit_lead_lag_values(self):
        """Test the lead-lag of [0, 1]: S(12) = 1, S(21) = 0, area 1/2."""
        sig = path_signature(lead_lag([0.0, 1.0]), depth=2)
        assert sig["1"] == 1.0
        assert sig["2"] == 1.0
        assert sig["12"] == 1.0
        assert sig["21"] == 0.0
        assert levy_area(sig) == 0.5

    def test_matches_quadrature(self):
        """Test exact agreement with polynomial quadrature on random paths."""
        rng = np.random.default_rng(2024)
        for _ in range(100):
            points = _random_path(rng, int(rng.integers(1, 51)))
            sig = path_signature(points, depth=3)
            oracle = _quadrature_signature(points, depth=3)
            for word, expected in oracle.items():
                assert sig[word] == pytest.approx(expected, rel=1e-8, abs=1e-10)

    def test_chen_identity(self):
        """Test that splitting a path and concatenating signatures changes nothing."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            points = _random_path(rng, int(rng.integers(2, 30)))
            split = int(rng.integers(1, points.shape[0] - 1))
            whole = path_signature(points, depth=3)
            joined = chen_concat(
                path_signature(points[: split + 1], depth=3),
                path_signature(points[split:], depth=3),
            )
            for a, b in zip(whole.levels, joined.levels):
                assert np.allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_collinear_insertion_invariance(self):
        """Test that inserting a point inside a segment leaves the signature unchanged."""
        rng = np.random.default_rng(8)
        for _ in range(100):
            points = _random_path(rng, int(rng.integers(1, 20)))
            j = int(rng.integers(0, points.shape[0] - 1))
            t = float(rng.uniform(0.1, 0.9))
            inserted = np.insert(points, j + 1, points[j] + t * (points[j + 1] - points[j]), axis=0)
            a = path_signature(points, depth=3)
            b = path_signature(inserted, depth=3)
            for la, lb in zip(a.levels, b.levels):
                assert np.allclose(la, lb, rtol=1e-12, atol=1e-12)

    def test_levy_area_is_half_quadratic_variation(self):
        """Test that the lead-lag area equals half the quadratic variation."""
        rng = np.random.default_rng(11)
        for _ in range(100):
            stream = np.concatenate([[0.0], np.cumsum(0.01 * rng.standard_normal(60))])
            sig = path_signature(lead_lag(stream), depth=2)
            qv = float(np.sum(np.diff(stream) ** 2))
            assert levy_area(sig) == pytest.approx(qv / 2, abs=1e-12)

    def test_batched_rows_are_bit_identical(self):
        """Test that path_signatures reproduces path_signature exactly."""
        rng = np.random.default_rng(5)
        streams = np.cumsum(rng.standard_normal((4, 25)), axis=1)
        paths = lead_lag_batch(streams)
        levels = path_signatures(paths, depth=3)
        for i in range(4):
            single = path_signature(paths[i], depth=3)
            for k in range(4):
                assert np.array_equal(levels[k][i], single.levels[k])

    def test_constant_path_is_identity(self):
        """Test that a path that never moves has the identity signature."""
        sig = path_signature(np.zeros((3, 2)), depth=3)
        identity = TruncatedSignature.identity(2, 3)
        for a, b in zip(sig.levels, identity.levels):
            assert np.array_equal(a, b)

    def test_feature_vector_excludes_constant(self):
        """Test that features are levels 1..M only."""
        sig = path_signature(lead_lag([0.0, 1.0, 0.5]), depth=3)
        features = signature_feature_vector(sig)
        assert features.shape == (14,)
        assert features[0] == sig["1"]
        assert features[-1] == sig["222"]


class TestSignatureErrors:
    """Test invalid signature operations."""

    def test_chen_mismatch(self):
        """Test that signatures of different depth cannot be joined."""
        with pytest.raises(ValidationError):
            chen_concat(TruncatedSignature.identity(2, 2), TruncatedSignature.identity(2, 3))

    def test_word_out_of_range(self):
        """Test that letters must lie in 1..d and words fit the depth."""
        sig = TruncatedSignature.identity(2, 2)
        with pytest.raises(ValidationError):
            sig["13"]
        with pytest.raises(ValidationError):
            sig["111"]

    def test_signature_rows(self):
        """Test the debug dump rows."""
        sig = path_signature(lead_lag([0.0, 1.0]), depth=1)
        rows = signature_rows(["AAA"], [sig])
        assert rows == [("AAA", "", 1.0), ("AAA", "1", 1.0), ("AAA", "2", 1.0)]
