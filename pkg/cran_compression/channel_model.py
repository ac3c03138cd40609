"""
Random network topologies and Rayleigh-fading channel realizations.

A drop places one MBS at the center of every cell, scatters HBSs and MSs
uniformly inside the (circular) cells and, optionally, a second group of
HBSs and MSs inside a hot spot overlaid on the first cell. Channels are
circularly-symmetric Gaussian with variance (D0 / d)^nu per entry.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import AntennaConfig, TopologyConfig, resolve_topology, validate_topology_config
from .errors import InvalidInputError
from .hermitian import ComplexArray, HermitianMatrix, RealArray
from .schemes import BsRole

logger = logging.getLogger(__name__)

COLLISION_FRACTION = 1e-6
"""MSs closer than this fraction of R_cell to a BS are redrawn."""


def db_to_linear(value_db: float) -> float:
    """Convert a power in dB to linear scale."""
    return float(10.0 ** (value_db / 10.0))


def pathloss_variance(distance: float | RealArray, reference: float, exponent: float) -> Any:
    """Per-entry channel variance (D0 / d)^nu."""
    return (reference / np.asarray(distance, dtype=np.float64)) ** exponent


def cell_centers(n_cells: int, spacing: float) -> RealArray:
    """
    Centers of `n_cells` cells with adjacent centers `spacing` apart.

    A single cell sits at the origin; several cells sit on a regular polygon
    around it (three cells form the usual hexagonal cluster).
    """
    if n_cells == 1:
        return np.zeros((1, 2))
    circumradius = spacing / (2.0 * math.sin(math.pi / n_cells))
    angles = 2.0 * math.pi * np.arange(n_cells) / n_cells + math.pi / 2.0
    return np.column_stack([circumradius * np.cos(angles), circumradius * np.sin(angles)])


def _uniform_in_disc(
    rng: np.random.Generator, center: RealArray, radius: float, n: int
) -> RealArray:
    r = radius * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return np.asarray(center, dtype=np.float64) + np.column_stack(
        [r * np.cos(theta), r * np.sin(theta)]
    )


@dataclass(frozen=True)
class HotSpot:
    """Disc hosting the second node group."""

    center: RealArray
    radius: float


@dataclass(frozen=True)
class Topology:
    """Node positions of one drop."""

    bs_positions: RealArray
    """BS coordinates, shape (n_B, 2)."""

    bs_roles: tuple[BsRole, ...]
    ms_positions: RealArray
    """MS coordinates, shape (n_M, 2)."""

    cell_centers: RealArray
    cell_radius: float
    pathloss_exponent: float = 3.5
    reference_distance: float = 0.5
    bs_cells: tuple[int, ...] = ()
    bs_groups: tuple[int, ...] = ()
    """1 for nodes dropped in the cell, 2 for nodes dropped in the hot spot."""

    ms_cells: tuple[int, ...] = ()
    ms_groups: tuple[int, ...] = ()
    hot_spot: HotSpot | None = None

    def __post_init__(self) -> None:
        if self.bs_positions.shape != (len(self.bs_roles), 2):
            raise InvalidInputError(
                f"bs_positions shape {self.bs_positions.shape} does not match "
                f"{len(self.bs_roles)} roles"
            )
        if self.ms_positions.ndim != 2 or self.ms_positions.shape[1] != 2:
            raise InvalidInputError(f"ms_positions must be (n, 2), got {self.ms_positions.shape}")
        if self.pathloss_exponent <= 2.0 or self.reference_distance <= 0.0:
            raise InvalidInputError("pathloss exponent must exceed 2 and D0 must be positive")

    @property
    def n_b(self) -> int:
        return int(self.bs_positions.shape[0])

    @property
    def n_m(self) -> int:
        return int(self.ms_positions.shape[0])

    def distances(self) -> RealArray:
        """BS-to-MS distance matrix, shape (n_B, n_M)."""
        diff = self.bs_positions[:, None, :] - self.ms_positions[None, :, :]
        result: RealArray = np.sqrt(np.sum(diff**2, axis=-1))
        return result

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible snapshot (see docs/config-schema.md)."""
        return {
            "cell_centers": self.cell_centers.tolist(),
            "cell_radius": self.cell_radius,
            "pathloss_exponent": self.pathloss_exponent,
            "reference_distance": self.reference_distance,
            "hot_spot": None
            if self.hot_spot is None
            else {"center": self.hot_spot.center.tolist(), "radius": self.hot_spot.radius},
            "bs": [
                {"position": pos.tolist(), "role": role.value, "cell": cell, "group": group}
                for pos, role, cell, group in zip(
                    self.bs_positions, self.bs_roles, self.bs_cells, self.bs_groups, strict=True
                )
            ],
            "ms": [
                {"position": pos.tolist(), "cell": cell, "group": group}
                for pos, cell, group in zip(
                    self.ms_positions, self.ms_cells, self.ms_groups, strict=True
                )
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Topology:
        hot = data.get("hot_spot")
        bs = data["bs"]
        ms = data["ms"]
        return cls(
            bs_positions=np.array([b["position"] for b in bs], dtype=np.float64).reshape(-1, 2),
            bs_roles=tuple(BsRole(b["role"]) for b in bs),
            ms_positions=np.array([m["position"] for m in ms], dtype=np.float64).reshape(-1, 2),
            cell_centers=np.array(data["cell_centers"], dtype=np.float64).reshape(-1, 2),
            cell_radius=float(data["cell_radius"]),
            pathloss_exponent=float(data["pathloss_exponent"]),
            reference_distance=float(data["reference_distance"]),
            bs_cells=tuple(int(b["cell"]) for b in bs),
            bs_groups=tuple(int(b["group"]) for b in bs),
            ms_cells=tuple(int(m["cell"]) for m in ms),
            ms_groups=tuple(int(m["group"]) for m in ms),
            hot_spot=None
            if hot is None
            else HotSpot(np.array(hot["center"], dtype=np.float64), float(hot["radius"])),
        )


def generate_topology(cfg: TopologyConfig, seed: int) -> Topology:
    """
    Drop BSs and MSs for one Monte-Carlo realization.

    BSs are ordered cell by cell: the MBS first, then the cell's HBSs, then
    (cell 0 only) the hot-spot HBSs. MSs follow the same cell-major order.

    Args:
        cfg: Topology parameters; missing fields take their defaults.
        seed: Seed of the drop; equal seeds give identical topologies.

    Raises:
        ConfigError: If the configuration is invalid.
    """
    validate_topology_config(cfg)
    resolved = resolve_topology(cfg)
    rng = np.random.default_rng(seed)
    radius = float(resolved["cell_radius"])
    centers = cell_centers(int(resolved["n_cells"]), float(resolved["cell_spacing"]))
    n_hbs = int(resolved["n_hbs_per_cell"])
    n_ms = int(resolved["n_ms_per_cell"])

    hot_cfg = resolved.get("hot_spot")
    hot_spot: HotSpot | None = None
    if hot_cfg is not None:
        spot_radius = radius * float(hot_cfg.get("radius_ratio", 1.0))
        spot_center = _uniform_in_disc(rng, centers[0], radius - spot_radius, 1)[0]
        hot_spot = HotSpot(center=spot_center, radius=spot_radius)

    bs_blocks: list[RealArray] = []
    roles: list[BsRole] = []
    bs_cells: list[int] = []
    bs_groups: list[int] = []
    ms_plan: list[tuple[RealArray, float, int, int, int]] = []
    for cell, center in enumerate(centers):
        bs_blocks.append(center[None, :])
        roles.append(BsRole.MBS)
        bs_cells.append(cell)
        bs_groups.append(1)
        bs_blocks.append(_uniform_in_disc(rng, center, radius, n_hbs))
        roles.extend([BsRole.HBS] * n_hbs)
        bs_cells.extend([cell] * n_hbs)
        bs_groups.extend([1] * n_hbs)
        ms_plan.append((center, radius, n_ms, cell, 1))
        if cell == 0 and hot_spot is not None and hot_cfg is not None:
            n_spot_hbs = int(hot_cfg.get("n_hbs", 0))
            bs_blocks.append(_uniform_in_disc(rng, hot_spot.center, hot_spot.radius, n_spot_hbs))
            roles.extend([BsRole.HBS] * n_spot_hbs)
            bs_cells.extend([0] * n_spot_hbs)
            bs_groups.extend([2] * n_spot_hbs)
            ms_plan.append((hot_spot.center, hot_spot.radius, int(hot_cfg.get("n_ms", 0)), 0, 2))

    bs_positions = np.vstack(bs_blocks)
    min_gap = COLLISION_FRACTION * radius
    ms_blocks: list[RealArray] = []
    ms_cells: list[int] = []
    ms_groups: list[int] = []
    for center, region, count, cell, group in ms_plan:
        block = _uniform_in_disc(rng, center, region, count)
        for m in range(count):
            while np.min(np.linalg.norm(bs_positions - block[m], axis=1)) <= min_gap:
                logger.debug("Redrawing MS too close to a BS in cell %d", cell)
                block[m] = _uniform_in_disc(rng, center, region, 1)[0]
        ms_blocks.append(block)
        ms_cells.extend([cell] * count)
        ms_groups.extend([group] * count)

    return Topology(
        bs_positions=bs_positions,
        bs_roles=tuple(roles),
        ms_positions=np.vstack(ms_blocks) if ms_blocks else np.zeros((0, 2)),
        cell_centers=centers,
        cell_radius=radius,
        pathloss_exponent=float(resolved["pathloss_exponent"]),
        reference_distance=float(resolved["reference_distance"]),
        bs_cells=tuple(bs_cells),
        bs_groups=tuple(bs_groups),
        ms_cells=tuple(ms_cells),
        ms_groups=tuple(ms_groups),
        hot_spot=hot_spot,
    )


@dataclass(frozen=True)
class AntennaCounts:
    """Per-node antenna counts."""

    bs: tuple[int, ...]
    ms: tuple[int, ...]

    @classmethod
    def uniform(cls, topo: Topology, antennas: AntennaConfig) -> AntennaCounts:
        return cls(
            bs=(int(antennas.get("n_bs", 1)),) * topo.n_b,
            ms=(int(antennas.get("n_ms", 1)),) * topo.n_m,
        )


def _matrix_to_json(matrix: ComplexArray) -> dict[str, Any]:
    return {"real": np.real(matrix).tolist(), "imag": np.imag(matrix).tolist()}


def _matrix_from_json(data: dict[str, Any], shape: tuple[int, int]) -> ComplexArray:
    real = np.array(data["real"], dtype=np.float64).reshape(shape)
    imag = np.array(data["imag"], dtype=np.float64).reshape(shape)
    return real + 1j * imag


@dataclass(frozen=True)
class ChannelSet:
    """
    Channels H_i (n_{B,i} x n_x) of every BS plus the transmit covariance.

    n_x is the total number of MS antennas; H_i concatenates the per-MS blocks.
    """

    channels: tuple[ComplexArray, ...]
    sigma_x: HermitianMatrix
    ms_antennas: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        n_x = self.sigma_x.dim
        for i, h in enumerate(self.channels):
            if h.ndim != 2 or h.shape[1] != n_x:
                raise InvalidInputError(
                    f"channel of BS {i} has shape {h.shape}; expected (n_B, {n_x})"
                )
            if not np.all(np.isfinite(h)):
                raise InvalidInputError(f"channel of BS {i} has non-finite entries")
        if self.ms_antennas and sum(self.ms_antennas) != n_x:
            raise InvalidInputError("ms_antennas do not add up to the dimension of sigma_x")

    @classmethod
    def from_matrices(
        cls,
        channels: Sequence[Any],
        p_tx: float = 1.0,
        sigma_x: HermitianMatrix | None = None,
    ) -> ChannelSet:
        """Build a channel set from array-likes; scalars become 1 x 1 matrices."""
        mats = tuple(np.atleast_2d(np.asarray(h, dtype=np.complex128)) for h in channels)
        if sigma_x is None:
            if not mats:
                raise InvalidInputError("cannot infer the transmit dimension without channels")
            sigma_x = HermitianMatrix.identity(mats[0].shape[1], p_tx)
        return cls(channels=mats, sigma_x=sigma_x)

    @property
    def n_b(self) -> int:
        return len(self.channels)

    @property
    def n_x(self) -> int:
        return self.sigma_x.dim

    @property
    def n_m(self) -> int:
        """Number of MSs (one per antenna when the grouping is unknown)."""
        return len(self.ms_antennas) if self.ms_antennas else self.n_x

    def bs_antennas(self) -> tuple[int, ...]:
        return tuple(int(h.shape[0]) for h in self.channels)

    def subset(self, indices: Sequence[int]) -> ChannelSet:
        """Channel set restricted to the given BSs, in the given order."""
        return ChannelSet(
            channels=tuple(self.channels[i] for i in indices),
            sigma_x=self.sigma_x,
            ms_antennas=self.ms_antennas,
        )

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible snapshot (see docs/config-schema.md)."""
        return {
            "n_x": self.n_x,
            "ms_antennas": list(self.ms_antennas),
            "sigma_x": _matrix_to_json(self.sigma_x.array),
            "channels": [
                {"n_b": int(h.shape[0]), **_matrix_to_json(h)} for h in self.channels
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ChannelSet:
        n_x = int(data["n_x"])
        return cls(
            channels=tuple(
                _matrix_from_json(h, (int(h["n_b"]), n_x)) for h in data["channels"]
            ),
            sigma_x=HermitianMatrix(_matrix_from_json(data["sigma_x"], (n_x, n_x)), psd=True),
            ms_antennas=tuple(int(n) for n in data.get("ms_antennas", [])),
        )


def generate_channels(
    topo: Topology,
    antennas: AntennaCounts | AntennaConfig,
    p_tx: float,
    seed: int,
) -> ChannelSet:
    """
    Draw one Rayleigh-fading realization for a topology.

    Args:
        topo: Node positions.
        antennas: Per-node counts, or a config applying one count per node kind.
        p_tx: Linear transmit power; Sigma_x = p_tx * I.
        seed: Seed of the realization.

    Raises:
        InvalidInputError: If the antenna counts do not match the topology or
            a BS and an MS coincide.
    """
    if isinstance(antennas, AntennaCounts):
        counts = antennas
    else:
        counts = AntennaCounts.uniform(topo, antennas)
    if len(counts.bs) != topo.n_b or len(counts.ms) != topo.n_m:
        raise InvalidInputError(
            f"antenna counts ({len(counts.bs)} BS, {len(counts.ms)} MS) do not match "
            f"topology ({topo.n_b} BS, {topo.n_m} MS)"
        )
    if p_tx < 0:
        raise InvalidInputError(f"transmit power must be nonnegative, got {p_tx}")
    distances = topo.distances()
    if distances.size and np.min(distances) <= 0.0:
        raise InvalidInputError("a BS and an MS share a position")

    variance = pathloss_variance(distances, topo.reference_distance, topo.pathloss_exponent)
    # expand per-MS variances to per-antenna columns
    column_var = np.repeat(variance, counts.ms, axis=1)
    n_x = int(sum(counts.ms))
    rng = np.random.default_rng(seed)
    channels: list[ComplexArray] = []
    for i, n_b in enumerate(counts.bs):
        scale = np.sqrt(column_var[i] / 2.0)
        draw = rng.standard_normal((n_b, n_x)) + 1j * rng.standard_normal((n_b, n_x))
        channels.append(np.asarray(draw * scale[None, :], dtype=np.complex128))
    return ChannelSet(
        channels=tuple(channels),
        sigma_x=HermitianMatrix.identity(n_x, p_tx),
        ms_antennas=counts.ms,
    )
