"""Configuration management for spmvtune."""

import os
import json
import logging
from dataclasses import dataclass, asdict, field
from typing import List, Optional

from .formats import FORMAT_NAMES

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
CLASSIFIER_LEARNERS = ("decision_tree", "random_forest", "nearest_centroid")
REGRESSOR_LEARNERS = ("decision_tree", "random_forest", "knn", "linear")


@dataclass
class TuneConfig:
    """spmvtune configuration with validation."""

    # Timing protocol
    min_total_ms: float = 200.0
    max_reps: int = 200000
    warmup_runs: int = 3

    # Memory guards
    dense_guard_cells: int = 10 ** 7
    ell_guard_slots: int = 2 ** 31

    # Format parameters
    block_h: int = 2
    block_w: int = 2
    slice_height: int = 2
    default_format: str = "csr"

    # Executable sweep space
    worker_counts: List[int] = field(default_factory=lambda: [1, 2, 4])
    rows_per_chunk: List[int] = field(default_factory=lambda: [64, 512])
    default_worker_count: int = 1
    default_rows_per_chunk: int = 512

    # Learning
    train_split: float = 0.8
    search_trials: int = 20
    seed: int = 0
    n_jobs: int = 1
    learner: str = "decision_tree"
    overhead_learner: str = "random_forest"

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self):
        """Validate configuration on construction."""
        self.validate()

    def validate(self):
        """Validate configuration values."""
        errors = []

        if self.min_total_ms <= 0:
            errors.append("min_total_ms must be positive")
        if self.max_reps < 1:
            errors.append("max_reps must be at least 1")
        if self.warmup_runs < 0:
            errors.append("warmup_runs must be non-negative")

        if self.dense_guard_cells < 1:
            errors.append("dense_guard_cells must be positive")
        if self.ell_guard_slots < 1:
            errors.append("ell_guard_slots must be positive")

        for name in ("block_h", "block_w", "slice_height"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1")
        if self.default_format not in FORMAT_NAMES:
            errors.append(f"default_format must be one of {', '.join(FORMAT_NAMES)}")

        if not self.worker_counts or any(w < 1 for w in self.worker_counts):
            errors.append("worker_counts must be a non-empty list of positive counts")
        if not self.rows_per_chunk or any(r < 1 for r in self.rows_per_chunk):
            errors.append("rows_per_chunk must be a non-empty list of positive counts")
        if len(set(self.worker_counts)) != len(self.worker_counts):
            errors.append("worker_counts contains duplicates")
        if len(set(self.rows_per_chunk)) != len(self.rows_per_chunk):
            errors.append("rows_per_chunk contains duplicates")
        if self.default_worker_count not in self.worker_counts:
            errors.append("default_worker_count must be one of worker_counts")
        if self.default_rows_per_chunk not in self.rows_per_chunk:
            errors.append("default_rows_per_chunk must be one of rows_per_chunk")

        if not 0 < self.train_split < 1:
            errors.append("train_split must be between 0 and 1 (exclusive)")
        if self.search_trials < 1:
            errors.append("search_trials must be at least 1")
        if self.n_jobs == 0:
            errors.append("n_jobs must be non-zero")
        if self.learner not in CLASSIFIER_LEARNERS:
            errors.append(f"learner must be one of {', '.join(CLASSIFIER_LEARNERS)}")
        if self.overhead_learner not in REGRESSOR_LEARNERS:
            errors.append(f"overhead_learner must be one of {', '.join(REGRESSOR_LEARNERS)}")

        if str(self.log_level).upper() not in LOG_LEVELS:
            errors.append(f"log_level must be one of {', '.join(LOG_LEVELS)}")

        if errors:
            raise ValueError(f"Configuration validation failed: {'; '.join(errors)}")

    def to_dict(self) -> dict:
        """Convert configuration to dictionary."""
        return asdict(self)

    def timing_params(self):
        """Timing protocol used by the harness and `features --time`."""
        from .harness import TimingParams
        return TimingParams(min_total_seconds=self.min_total_ms / 1000.0,
                            max_reps=self.max_reps,
                            warmup=self.warmup_runs)

    def format_params(self):
        """Block/slice shapes and memory guards for conversions."""
        from .harness import FormatParams
        return FormatParams(block_h=self.block_h, block_w=self.block_w,
                            slice_height=self.slice_height,
                            slot_guard=self.ell_guard_slots,
                            dense_guard=self.dense_guard_cells)

    def exec_space(self):
        """The executable {format} x {worker_count} x {rows_per_chunk} space."""
        from .dataset import ConfigDimension, ConfigSpace
        return ConfigSpace((
            ConfigDimension("format", tuple(FORMAT_NAMES)),
            ConfigDimension("worker_count", tuple(self.worker_counts)),
            ConfigDimension("rows_per_chunk", tuple(self.rows_per_chunk)),
        ))

    def default_point(self):
        """The untuned configuration reports compare against."""
        from .dataset import ConfigPoint
        return ConfigPoint((("format", self.default_format),
                            ("worker_count", self.default_worker_count),
                            ("rows_per_chunk", self.default_rows_per_chunk)))


class ConfigManager:
    """Manages configuration loading, saving, and updates."""

    def __init__(self, config_file: str):
        self.config_file = config_file
        self.logger = logging.getLogger(__name__)

    def load_config(self) -> TuneConfig:
        """Load and validate configuration from file."""
        try:
            if os.path.exists(self.config_file):
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                if not isinstance(data, dict):
                    raise ValueError("Configuration file must hold a JSON object")

                unknown = sorted(set(data) - set(TuneConfig.__dataclass_fields__))
                if unknown:
                    self.logger.warning("Ignoring unknown configuration keys: %s", unknown)
                    for key in unknown:
                        data.pop(key)

                config = TuneConfig(**data)
                self.logger.info("Configuration loaded from %s", self.config_file)
                return config
            else:
                self.logger.info("Configuration file not found, creating default: %s", self.config_file)
                config = TuneConfig()
                self.save_config(config)
                return config

        except (json.JSONDecodeError, ValueError, TypeError) as e:
            self.logger.error("Error loading configuration: %s", e)
            self.logger.info("Creating backup of invalid config and using defaults")

            if os.path.exists(self.config_file):
                backup_file = f"{self.config_file}.backup"
                os.replace(self.config_file, backup_file)
                self.logger.info("Invalid config backed up to %s", backup_file)

            config = TuneConfig()
            self.save_config(config)
            return config

    def save_config(self, config: TuneConfig):
        """Save configuration to file."""
        try:
            config_dir = os.path.dirname(self.config_file)
            if config_dir:
                os.makedirs(config_dir, exist_ok=True)

            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(config.to_dict(), f, indent=2)

            self.logger.info("Configuration saved to %s", self.config_file)

        except OSError as e:
            self.logger.error("Error saving configuration: %s", e)
            raise

    def update_config(self, config: TuneConfig, updates: dict) -> TuneConfig:
        """Update configuration with new values."""
        config_dict = config.to_dict()
        config_dict.update(updates)

        new_config = TuneConfig(**config_dict)
        self.save_config(new_config)

        self.logger.info("Configuration updated: %s", list(updates.keys()))
        return new_config
