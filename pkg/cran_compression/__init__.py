"""
Cloud-RAN uplink compression simulator.

Distributed (Wyner-Ziv) compression of base-station signals over finite
backhaul links: closed-form Max-Rate and MMSE designs, greedy sequential
ordering, worst-case robust compression and joint HBS selection, plus a
Monte-Carlo experiment runner.
"""

from __future__ import annotations

# Channel model
from .channel_model import (
    AntennaCounts,
    ChannelSet,
    HotSpot,
    Topology,
    db_to_linear,
    generate_channels,
    generate_topology,
)

# Compression solvers
from .compression import (
    MmseVariant,
    design_compression,
    max_rate_compress,
    max_rate_compress_form,
    mmse_compress,
    mmse_preprocessing,
)

# Configuration
from .config import (
    PRESETS,
    AntennaConfig,
    ExperimentConfig,
    HotSpotConfig,
    SelectionConfig,
    TopologyConfig,
    config_hash,
    load_config,
    preset_config,
    resolve_config,
    validate_experiment_config,
)

# Experiments
from .drop_runner import ImperfectSiOutcome, evaluate_imperfect_si, run_drop

# Errors
from .errors import (
    ConfigError,
    CranError,
    DuplicateStationError,
    InfeasibleBoundsError,
    InvalidInputError,
    NumericalError,
    RobustSolverError,
    SizeLimitError,
)

# Events
from .events import (
    DropCompletedEvent,
    ExperimentCompletedEvent,
    ExperimentError,
    ExperimentEvent,
    ExperimentFailedEvent,
    ExperimentStartedEvent,
    PointCompletedEvent,
)
from .experiment import Experiment, ExperimentResult, StreamedExperiment, run_experiment

# Greedy ordering
from .greedy import (
    SideInfoState,
    best_order_exhaustive,
    fixed_order_compress,
    greedy_compress,
    push_side_info,
)

# Numerical kernel
from .hermitian import (
    EigenPair,
    HermitianMatrix,
    cond_cov,
    eig_desc,
    log2det,
    logdet_cap,
)
from .output_files import OutputFiles, read_rows, write_results

# Rates
from .rates import (
    CompressionDesign,
    CompressionSolution,
    RegionCheck,
    net_rate,
    region_check,
    side_rate_f,
    sum_rate,
    vertex_rates,
)

# Robust compression
from .robust import (
    PerturbedDesigner,
    UncertaintyBounds,
    UncertaintySample,
    candidate_set,
    qs_coeffs,
    robust_compress,
    robust_compress_form,
    robust_kkt_residual,
    sample_uncertainty,
    worst_case_rate,
)
from .rows import DropOutcome, ResultRow
from .run_options import RunOptions
from .schemes import (
    BsRole,
    CompressionScheme,
    MmseTarget,
    RobustnessScheme,
    Scenario,
    SelectionScheme,
    SweepAxis,
)

# HBS selection
from .selection import (
    SelectionResult,
    baseline_select,
    block_coordinate_ascent,
    omega_update,
    selection_objective,
    shared_backhaul_usage,
    two_phase_select,
    update_kkt_residual,
)
from .simulator import Simulator

__version__ = "0.1.0"

__all__ = [
    # Version
    "__version__",
    # Main classes
    "Simulator",
    "Experiment",
    "ExperimentResult",
    "StreamedExperiment",
    "run_experiment",
    "run_drop",
    "evaluate_imperfect_si",
    "ImperfectSiOutcome",
    "RunOptions",
    "OutputFiles",
    "write_results",
    "read_rows",
    # Events and rows
    "ExperimentEvent",
    "ExperimentStartedEvent",
    "DropCompletedEvent",
    "PointCompletedEvent",
    "ExperimentCompletedEvent",
    "ExperimentFailedEvent",
    "ExperimentError",
    "DropOutcome",
    "ResultRow",
    # Configuration
    "ExperimentConfig",
    "TopologyConfig",
    "HotSpotConfig",
    "AntennaConfig",
    "SelectionConfig",
    "PRESETS",
    "preset_config",
    "load_config",
    "resolve_config",
    "validate_experiment_config",
    "config_hash",
    # Vocabularies
    "BsRole",
    "CompressionScheme",
    "MmseTarget",
    "RobustnessScheme",
    "Scenario",
    "SelectionScheme",
    "SweepAxis",
    # Numerical kernel
    "HermitianMatrix",
    "EigenPair",
    "eig_desc",
    "log2det",
    "logdet_cap",
    "cond_cov",
    # Channel model
    "Topology",
    "HotSpot",
    "AntennaCounts",
    "ChannelSet",
    "generate_topology",
    "generate_channels",
    "db_to_linear",
    # Rates
    "CompressionDesign",
    "CompressionSolution",
    "RegionCheck",
    "side_rate_f",
    "net_rate",
    "sum_rate",
    "vertex_rates",
    "region_check",
    # Compression solvers
    "MmseVariant",
    "max_rate_compress",
    "max_rate_compress_form",
    "mmse_compress",
    "mmse_preprocessing",
    "design_compression",
    # Greedy ordering
    "SideInfoState",
    "push_side_info",
    "greedy_compress",
    "fixed_order_compress",
    "best_order_exhaustive",
    # Robust compression
    "UncertaintyBounds",
    "UncertaintySample",
    "PerturbedDesigner",
    "qs_coeffs",
    "candidate_set",
    "worst_case_rate",
    "robust_compress",
    "robust_compress_form",
    "robust_kkt_residual",
    "sample_uncertainty",
    # HBS selection
    "SelectionResult",
    "omega_update",
    "update_kkt_residual",
    "block_coordinate_ascent",
    "two_phase_select",
    "baseline_select",
    "selection_objective",
    "shared_backhaul_usage",
    # Errors
    "CranError",
    "InvalidInputError",
    "NumericalError",
    "SizeLimitError",
    "InfeasibleBoundsError",
    "RobustSolverError",
    "DuplicateStationError",
    "ConfigError",
]
