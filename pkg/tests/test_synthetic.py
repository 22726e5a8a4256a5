"""Tests for planted-partition panels."""

import numpy as np
import pytest

from sigcom.exceptions import ValidationError
from sigcom.ingest import compute_log_returns
from sigcom.synthetic import INITIAL_PRICE, block_labels, synth_panel, ticker_names


class TestBlockLabels:
    """Test block assignment and ticker naming."""

    def test_contiguous_blocks(self):
        """Test i * K // N labelling."""
        assert block_labels(6, 3).tolist() == [0, 0, 1, 1, 2, 2]
        assert block_labels(5, 2).tolist() == [0, 0, 0, 1, 1]

    def test_ticker_names(self):
        """Test zero-padded names."""
        assert ticker_names(3) == ("S000", "S001", "S002")
        assert ticker_names(1200)[-1] == "S1199"


class TestSynthPanel:
    """Test synthetic price generation."""

    def test_shape_and_start(self):
        """Test dimensions, starting price and business-day dates."""
        synthetic = synth_panel(4, 10, 2, 0.5, seed=1)
        panel = synthetic.panel

        assert panel.values.shape == (4, 10)
        assert np.all(panel.values[:, 0] == INITIAL_PRICE)
        assert np.all(panel.values > 0)
        assert panel.is_complete
        assert str(panel.timestamps[0]) == "2000-01-03"
        weekdays = (panel.timestamps.astype("datetime64[D]").view("int64") - 4) % 7
        assert np.all(weekdays < 5)

    def test_seed_reproducible(self):
        """Test that equal seeds give identical panels."""
        a = synth_panel(5, 50, 2, 0.6, seed=42)
        b = synth_panel(5, 50, 2, 0.6, seed=42)
        c = synth_panel(5, 50, 2, 0.6, seed=43)
        assert np.array_equal(a.panel.values, b.panel.values)
        assert not np.array_equal(a.panel.values, c.panel.values)

    def test_block_correlations(self):
        """Test correlation rho inside blocks and rho_m across blocks."""
        synthetic = synth_panel(8, 20001, 2, 0.8, seed=0, market_corr=0.3)
        corr = np.corrcoef(compute_log_returns(synthetic.panel).values)
        labels = synthetic.labels
        same = (labels[:, None] == labels[None, :]) & ~np.eye(8, dtype=bool)
        across = labels[:, None] != labels[None, :]

        assert corr[same].mean() == pytest.approx(0.8, abs=0.03)
        assert corr[across].mean() == pytest.approx(0.3, abs=0.05)

    def test_volatility(self):
        """Test the daily return standard deviation."""
        synthetic = synth_panel(3, 20001, 1, 0.5, seed=2, volatility=0.02)
        returns = compute_log_returns(synthetic.panel).values
        assert returns.std(axis=1) == pytest.approx([0.02] * 3, rel=0.05)

    def test_sector_map(self):
        """Test that blocks double as sectors."""
        sectors = synth_panel(4, 5, 2, 0.5, seed=0).sectors
        assert sectors.label("S000") == "block_0"
        assert sectors.label("S003") == "block_1"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_series": 0},
            {"n_obs": 1},
            {"n_blocks": 5},
            {"intra_corr": 1.0},
            {"intra_corr": 0.2, "market_corr": 0.3},
            {"volatility": 0.0},
        ],
    )
    def test_invalid_parameters(self, kwargs):
        """Test that out-of-range parameters are rejected."""
        args = {"n_series": 4, "n_obs": 10, "n_blocks": 2, "intra_corr": 0.5, **kwargs}
        with pytest.raises(ValidationError):
            synth_panel(**args)
