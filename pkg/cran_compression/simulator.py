"""
Main Simulator class.
"""

from __future__ import annotations

from .config import ExperimentConfig, preset_config
from .experiment import Experiment
from .run_options import RunOptions


class Simulator:
    """
    Simulator is the entry point for running Monte-Carlo experiments.

    Use `start_experiment()` with a config or `start_preset()` with the name of
    one of the bundled studies.

    Example:
        ```python
        from cran_compression import Simulator

        simulator = Simulator({"max_concurrency": 8})
        experiment = simulator.start_experiment({"scenario": "compare_schemes", "n_drops": 10})
        result = await experiment.run()
        for row in result.rows:
            print(row["scheme"], row["per_ms_rate_mean"])
        ```
    """

    def __init__(self, options: RunOptions | None = None) -> None:
        """
        Initialize the simulator.

        Args:
            options: Default run options for every experiment it starts.
        """
        self._options: RunOptions = options or {}

    def start_experiment(self, cfg: ExperimentConfig) -> Experiment:
        """
        Configure a new experiment.

        Raises:
            ConfigError: If the config is invalid.
        """
        return Experiment(cfg, self._options)

    def start_preset(self, name: str, overrides: ExperimentConfig | None = None) -> Experiment:
        """
        Configure one of the bundled studies, optionally overriding top-level fields.

        Raises:
            ConfigError: If the preset does not exist or the result is invalid.
        """
        cfg = preset_config(name)
        cfg.update(overrides or {})
        return Experiment(cfg, self._options)
