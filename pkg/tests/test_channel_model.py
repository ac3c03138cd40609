"""Tests for topologies and channel realizations."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from cran_compression.channel_model import (
    AntennaCounts,
    ChannelSet,
    Topology,
    cell_centers,
    db_to_linear,
    generate_channels,
    generate_topology,
    pathloss_variance,
)
from cran_compression.config import TopologyConfig
from cran_compression.errors import InvalidInputError
from cran_compression.schemes import BsRole


def _single_link(distance: float) -> Topology:
    return Topology(
        bs_positions=np.zeros((1, 2)),
        bs_roles=(BsRole.MBS,),
        ms_positions=np.array([[distance, 0.0]]),
        cell_centers=np.zeros((1, 2)),
        cell_radius=1.0,
        pathloss_exponent=3.5,
        reference_distance=0.5,
    )


class TestTopology:
    """Tests for generate_topology."""

    def test_deterministic(self) -> None:
        """Test that the same seed gives the same positions."""
        cfg: TopologyConfig = {"n_cells": 3, "n_hbs_per_cell": 2, "n_ms_per_cell": 3}
        a = generate_topology(cfg, 5)
        b = generate_topology(cfg, 5)
        assert np.array_equal(a.bs_positions, b.bs_positions)
        assert np.array_equal(a.ms_positions, b.ms_positions)

    def test_cell_major_order(self) -> None:
        """Test that every cell starts with its MBS at the cell center."""
        topo = generate_topology({"n_cells": 3, "n_hbs_per_cell": 2, "n_ms_per_cell": 1}, 1)
        assert topo.n_b == 9
        assert topo.n_m == 3
        mbs = [i for i, role in enumerate(topo.bs_roles) if role is BsRole.MBS]
        assert mbs == [0, 3, 6]
        assert np.allclose(topo.bs_positions[mbs], topo.cell_centers)

    def test_nodes_inside_cells(self) -> None:
        """Test that HBSs and MSs lie inside their cell."""
        topo = generate_topology({"n_cells": 3, "n_hbs_per_cell": 4, "n_ms_per_cell": 5}, 2)
        for pos, cell in zip(topo.bs_positions, topo.bs_cells, strict=True):
            assert np.linalg.norm(pos - topo.cell_centers[cell]) <= topo.cell_radius + 1e-12
        for pos, cell in zip(topo.ms_positions, topo.ms_cells, strict=True):
            assert np.linalg.norm(pos - topo.cell_centers[cell]) <= topo.cell_radius + 1e-12

    def test_mbs_only(self) -> None:
        """Test a topology without HBSs."""
        topo = generate_topology({"n_hbs_per_cell": 0, "n_ms_per_cell": 2}, 0)
        assert topo.bs_roles == (BsRole.MBS,)

    def test_hot_spot_nodes(self) -> None:
        """Test that hot-spot nodes lie inside the hot spot, which lies inside the cell."""
        cfg: TopologyConfig = {
            "n_hbs_per_cell": 2,
            "n_ms_per_cell": 2,
            "hot_spot": {"radius_ratio": 0.25, "n_hbs": 3, "n_ms": 4},
        }
        topo = generate_topology(cfg, 9)
        assert topo.hot_spot is not None
        center, radius = topo.hot_spot.center, topo.hot_spot.radius
        assert np.linalg.norm(center) + radius <= topo.cell_radius + 1e-12
        spot_bs = [p for p, g in zip(topo.bs_positions, topo.bs_groups, strict=True) if g == 2]
        spot_ms = [p for p, g in zip(topo.ms_positions, topo.ms_groups, strict=True) if g == 2]
        assert len(spot_bs) == 3
        assert len(spot_ms) == 4
        for pos in spot_bs + spot_ms:
            assert np.linalg.norm(pos - center) <= radius + 1e-12

    def test_cell_spacing(self) -> None:
        """Test that three cells are 2 R cos(30 deg) apart."""
        centers = cell_centers(3, 2.0 * math.cos(math.radians(30.0)))
        for i in range(3):
            for j in range(i + 1, 3):
                gap = np.linalg.norm(centers[i] - centers[j])
                assert abs(gap - math.sqrt(3.0)) < 1e-12

    def test_snapshot_round_trip(self) -> None:
        """Test the JSON snapshot of a topology."""
        topo = generate_topology({"hot_spot": {"radius_ratio": 0.5, "n_hbs": 1, "n_ms": 1}}, 3)
        restored = Topology.from_dict(json.loads(json.dumps(topo.to_dict())))
        assert np.array_equal(restored.bs_positions, topo.bs_positions)
        assert restored.bs_roles == topo.bs_roles
        assert restored.ms_groups == topo.ms_groups


class TestChannels:
    """Tests for generate_channels."""

    def test_pathloss_values(self) -> None:
        """Test the path-loss formula at D0 and 2 D0."""
        assert pathloss_variance(0.5, 0.5, 3.5) == pytest.approx(1.0)
        assert pathloss_variance(1.0, 0.5, 3.5) == pytest.approx(2.0**-3.5)

    def test_pathloss_monotone(self) -> None:
        """Test that a farther MS gets a strictly smaller variance."""
        near, far = pathloss_variance(np.array([0.3, 0.6]), 0.5, 3.5)
        assert far < near

    def test_db_to_linear(self) -> None:
        """Test the dB conversion."""
        assert db_to_linear(0.0) == 1.0
        assert db_to_linear(10.0) == pytest.approx(10.0)

    @pytest.mark.parametrize(("distance", "expected"), [(0.5, 1.0), (1.0, 2.0**-3.5)])
    def test_empirical_variance(self, distance: float, expected: float) -> None:
        """Test the per-entry variance over 10^5 draws."""
        topo = _single_link(distance)
        channels = generate_channels(topo, AntennaCounts(bs=(100_000,), ms=(1,)), 1.0, 4)
        h = channels.channels[0][:, 0]
        assert np.mean(np.abs(h) ** 2) == pytest.approx(expected, rel=0.03)
        assert np.var(h.real) == pytest.approx(expected / 2.0, rel=0.05)
        assert np.var(h.imag) == pytest.approx(expected / 2.0, rel=0.05)

    def test_deterministic(self) -> None:
        """Test that the same seed gives the same channels."""
        topo = generate_topology({"n_hbs_per_cell": 2, "n_ms_per_cell": 3}, 0)
        a = generate_channels(topo, {"n_bs": 2, "n_ms": 1}, 1.0, 8)
        b = generate_channels(topo, {"n_bs": 2, "n_ms": 1}, 1.0, 8)
        for ha, hb in zip(a.channels, b.channels, strict=True):
            assert np.array_equal(ha, hb)

    def test_shapes(self) -> None:
        """Test the channel shapes and the transmit covariance."""
        topo = generate_topology({"n_hbs_per_cell": 2, "n_ms_per_cell": 3}, 0)
        channels = generate_channels(topo, {"n_bs": 2, "n_ms": 2}, 2.0, 1)
        assert channels.n_b == 3
        assert channels.n_x == 6
        assert channels.n_m == 3
        assert channels.bs_antennas() == (2, 2, 2)
        assert np.allclose(channels.sigma_x.array, 2.0 * np.eye(6))

    def test_antenna_count_mismatch(self) -> None:
        """Test that counts must match the topology."""
        topo = _single_link(0.5)
        with pytest.raises(InvalidInputError, match="do not match"):
            generate_channels(topo, AntennaCounts(bs=(1, 1), ms=(1,)), 1.0, 0)

    def test_collocated_nodes(self) -> None:
        """Test that a BS and an MS at the same position are rejected."""
        with pytest.raises(InvalidInputError, match="share a position"):
            generate_channels(_single_link(0.0), AntennaCounts(bs=(1,), ms=(1,)), 1.0, 0)


class TestChannelSet:
    """Tests for ChannelSet."""

    def test_from_matrices_scalars(self) -> None:
        """Test that scalars become 1 x 1 channels."""
        channels = ChannelSet.from_matrices([2.0, 1.0], p_tx=3.0)
        assert channels.n_b == 2
        assert channels.channels[0].shape == (1, 1)
        assert channels.sigma_x.array[0, 0] == 3.0

    def test_rejects_wrong_width(self) -> None:
        """Test that every channel must have n_x columns."""
        with pytest.raises(InvalidInputError, match="expected"):
            ChannelSet.from_matrices([np.ones((1, 2)), np.ones((1, 3))])

    def test_subset(self) -> None:
        """Test restricting to a subset of BSs."""
        channels = ChannelSet.from_matrices([[[1.0]], [[2.0]], [[3.0]]])
        sub = channels.subset([2, 0])
        assert sub.n_b == 2
        assert sub.channels[0][0, 0] == 3.0

    def test_snapshot_round_trip(self, rng: np.random.Generator) -> None:
        """Test the JSON snapshot of a channel set."""
        draws = rng.standard_normal((2, 2, 3)) + 1j * rng.standard_normal((2, 2, 3))
        channels = ChannelSet.from_matrices(list(draws))
        restored = ChannelSet.from_dict(json.loads(json.dumps(channels.to_dict())))
        for a, b in zip(channels.channels, restored.channels, strict=True):
            assert np.array_equal(a, b)
