"""Tests for the side-information state and greedy ordering."""

from __future__ import annotations

import numpy as np
import pytest

from cran_compression.channel_model import ChannelSet
from cran_compression.errors import DuplicateStationError, InvalidInputError, SizeLimitError
from cran_compression.greedy import (
    SideInfoState,
    best_order_exhaustive,
    fixed_order_compress,
    greedy_compress,
    push_side_info,
)
from cran_compression.hermitian import HermitianMatrix
from cran_compression.rates import sum_rate, vertex_rates
from cran_compression.schemes import CompressionScheme
from tests.conftest import ChannelFactory


class TestSideInfoState:
    """Tests for push_side_info."""

    def test_scalar_push(self) -> None:
        """Test 1 - 1 / (1 + 2) after one unit-gain description."""
        state = SideInfoState.empty(HermitianMatrix.identity(1))
        state = push_side_info(state, 0, np.array([[1.0]]), np.array([[1.0]]))
        assert state.selected == (0,)
        assert state.sigma_cond.array[0, 0].real == pytest.approx(2.0 / 3.0)
        assert 0 in state

    def test_zero_gain_is_no_information(self) -> None:
        """Test that a zero description leaves the covariance unchanged."""
        prior = HermitianMatrix.identity(2)
        state = push_side_info(SideInfoState.empty(prior), 3, np.zeros((2, 2)), np.ones((2, 2)))
        assert np.allclose(state.sigma_cond.array, prior.array)

    def test_duplicate(self) -> None:
        """Test that a BS cannot be pushed twice."""
        state = SideInfoState.empty(HermitianMatrix.identity(1))
        state = push_side_info(state, 0, np.array([[1.0]]), np.array([[1.0]]))
        with pytest.raises(DuplicateStationError):
            push_side_info(state, 0, np.array([[1.0]]), np.array([[1.0]]))

    def test_shape_mismatch(self) -> None:
        """Test that the gain must match the channel rows."""
        state = SideInfoState.empty(HermitianMatrix.identity(1))
        with pytest.raises(InvalidInputError, match="does not match"):
            push_side_info(state, 0, np.eye(2), np.array([[1.0]]))

    def test_noise_blocks(self) -> None:
        """Test the stacked description noise A A^H + I."""
        state = SideInfoState.empty(HermitianMatrix.identity(1))
        state = push_side_info(state, 0, np.array([[2.0]]), np.array([[1.0]]))
        state = push_side_info(state, 1, np.array([[1.0]]), np.array([[1.0]]))
        assert np.allclose(state.sigma_t, np.diag([5.0, 2.0]))


class TestGreedyCompress:
    """Tests for greedy_compress."""

    def test_single_bs(self) -> None:
        """Test that one BS is simply compressed."""
        channels = ChannelSet.from_matrices([[[1.0]]])
        solution = greedy_compress(channels, [1.0])
        assert solution.order == (0,)
        assert solution[0].backhaul_used == pytest.approx(1.0)

    def test_stronger_bs_first(self, scalar_channels: ChannelSet) -> None:
        """Test that the BS with the larger channel is decoded first."""
        reversed_channels = ChannelSet.from_matrices(
            [scalar_channels.channels[1], scalar_channels.channels[0]]
        )
        assert greedy_compress(reversed_channels, [1.0, 1.0]).order == (1, 0)
        assert greedy_compress(scalar_channels, [1.0, 1.0]).order == (0, 1)

    def test_tie_lower_index(self) -> None:
        """Test that identical BSs are ordered by index."""
        channels = ChannelSet.from_matrices([[[1.0]], [[1.0]], [[1.0]]])
        assert greedy_compress(channels, [1.0, 1.0, 1.0]).order == (0, 1, 2)

    def test_zero_channel_last(self) -> None:
        """Test that a BS without signal is appended last with a zero design."""
        channels = ChannelSet.from_matrices([[[0.0]], [[1.0]]])
        solution = greedy_compress(channels, [1.0, 1.0])
        assert solution.order == (1, 0)
        assert solution[0].is_zero
        assert solution[0].no_signal
        assert solution.step_objectives[-1] == 0.0

    def test_step_objectives_sum_to_rate(self, make_channels: ChannelFactory) -> None:
        """Test that the per-step net rates add up to the sum-rate."""
        channels = make_channels(n_b=4)
        solution = greedy_compress(channels, [2.0, 1.0, 1.0, 0.5])
        total = sum_rate(channels.sigma_x, channels, solution)
        assert sum(solution.step_objectives) == pytest.approx(total, abs=1e-8)

    def test_vertex_meets_capacities(self, make_channels: ChannelFactory) -> None:
        """Test that each BS spends exactly its own backhaul along the chosen order."""
        channels = make_channels(n_b=3)
        capacities = [1.5, 1.0, 0.5]
        solution = greedy_compress(channels, capacities)
        rates = vertex_rates(solution.order, channels, solution)
        for bs, rate in rates.items():
            assert rate == pytest.approx(capacities[bs], abs=1e-8)

    def test_side_info_not_worse(self, make_channels: ChannelFactory) -> None:
        """Test that along a two-BS order side information never loses sum-rate."""
        for _ in range(10):
            channels = make_channels(n_b=2)
            capacities = [1.0, 1.0]
            si = fixed_order_compress(channels, capacities, (0, 1), CompressionScheme.MAXRATE_SI)
            nsi = fixed_order_compress(channels, capacities, (0, 1), CompressionScheme.MAXRATE_NSI)
            rate_si = sum_rate(channels.sigma_x, channels, si)
            rate_nsi = sum_rate(channels.sigma_x, channels, nsi)
            assert rate_si >= rate_nsi - 1e-9


class TestOrdering:
    """Tests for fixed and exhaustive orders."""

    def test_fixed_order_matches_greedy(self, make_channels: ChannelFactory) -> None:
        """Test that replaying the greedy order reproduces its designs."""
        channels = make_channels(n_b=3)
        greedy = greedy_compress(channels, [1.0, 2.0, 0.5])
        replay = fixed_order_compress(channels, [1.0, 2.0, 0.5], greedy.order)
        for bs in greedy.order:
            assert np.allclose(replay[bs].omega.array, greedy[bs].omega.array)

    def test_exhaustive_is_an_upper_bound(self, make_channels: ChannelFactory) -> None:
        """Test that the best order is at least as good as the greedy one."""
        for _ in range(5):
            channels = make_channels(n_b=3)
            capacities = [1.0, 0.7, 1.3]
            greedy = greedy_compress(channels, capacities)
            best = best_order_exhaustive(channels, capacities)
            greedy_rate = sum_rate(channels.sigma_x, channels, greedy)
            best_rate = sum_rate(channels.sigma_x, channels, best)
            assert best_rate >= greedy_rate - 1e-9

    def test_exhaustive_size_limit(self) -> None:
        """Test that more than six BSs are refused."""
        channels = ChannelSet.from_matrices([[[1.0]]] * 7)
        with pytest.raises(SizeLimitError):
            best_order_exhaustive(channels, [1.0] * 7)

    def test_greedy_beats_identity_order_on_average(self, make_channels: ChannelFactory) -> None:
        """Test that over 50 drops the greedy order is at least as good as index order."""
        capacities = [0.5, 1.0, 2.0]
        greedy_rates = []
        identity_rates = []
        for _ in range(50):
            channels = make_channels(n_b=3)
            greedy = greedy_compress(channels, capacities)
            identity = fixed_order_compress(channels, capacities, (0, 1, 2))
            greedy_rates.append(sum_rate(channels.sigma_x, channels, greedy))
            identity_rates.append(sum_rate(channels.sigma_x, channels, identity))
        assert np.mean(greedy_rates) >= np.mean(identity_rates) - 1e-9


class TestConditionalCovariance:
    """Tests of the conditional covariance along a decoding order."""

    def test_never_increases(self, make_channels: ChannelFactory) -> None:
        """Test that each recovered description shrinks Sigma_cond in the Loewner order."""
        for _ in range(10):
            channels = make_channels(n_b=4)
            solution = greedy_compress(channels, [1.0, 2.0, 0.5, 1.5])
            state = SideInfoState.empty(channels.sigma_x)
            for bs in solution.order:
                before = state.sigma_cond.array
                state = push_side_info(state, bs, solution[bs].gain, channels.channels[bs])
                after = state.sigma_cond.array
                assert np.linalg.eigvalsh(after - before).max() <= 1e-9
                assert np.all(np.linalg.eigvalsh(after) <= np.linalg.eigvalsh(before) + 1e-9)
