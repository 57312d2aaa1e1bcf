"""
Typed configuration model with precedence-based loader.

Precedence (lowest to highest):
    defaults < config file (YAML) < profile overlay < env vars < CLI flags
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from echoloc.errors import ConfigError

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Section dataclasses
# ---------------------------------------------------------------------------

@dataclass
class PropagationConfig:
    sample_rate: int = 16_000
    speed_of_sound: float = 343.0
    rays_per_endpoint: int = 100_000
    max_bounces: int = 50
    rir_duration: float = 1.0
    seed: int = 0
    russian_roulette_start: int = 8
    block_size: int = 4_096         # ray indices per random-stream block

    @property
    def num_samples(self) -> int:
        return int(round(self.rir_duration * self.sample_rate))

    def validate(self) -> list[str]:
        errors = []
        if self.sample_rate <= 0:
            errors.append("propagation.sample_rate must be > 0")
        if self.speed_of_sound <= 0:
            errors.append("propagation.speed_of_sound must be > 0")
        if self.rays_per_endpoint < 1:
            errors.append("propagation.rays_per_endpoint must be >= 1")
        if self.max_bounces < 0:
            errors.append("propagation.max_bounces must be >= 0")
        if self.rir_duration <= 0:
            errors.append("propagation.rir_duration must be > 0")
        if self.russian_roulette_start < 0:
            errors.append("propagation.russian_roulette_start must be >= 0")
        if self.block_size < 1:
            errors.append("propagation.block_size must be >= 1")
        return errors


@dataclass
class AudioConfig:
    peak_target_db: float = -1.0
    loudness_target_lufs: float = -15.0
    window_length: int = 512
    hop: int = 160
    floor_db: float = -80.0
    anti_clip_db: float = -1.0

    def validate(self) -> list[str]:
        errors = []
        if self.window_length < 2 or self.window_length & (self.window_length - 1):
            errors.append("audio.window_length must be a power of two")
        if not 0 < self.hop <= self.window_length:
            errors.append("audio.hop must be in (0, window_length]")
        if self.peak_target_db > 0 or self.anti_clip_db > 0:
            errors.append("audio peak targets must be <= 0 dBFS")
        return errors


@dataclass
class DatasetConfig:
    spacing: float = 0.52
    height: float = 1.7
    grid_rows: int = 8
    grid_cols: int = 8
    shrink: float = 0.9
    test_count: int = 250
    coords_test_count: int = 100
    folds: int = 5

    def validate(self) -> list[str]:
        errors = []
        if self.spacing <= 0:
            errors.append("dataset.spacing must be > 0")
        if self.grid_rows < 1 or self.grid_cols < 1:
            errors.append("dataset grid must be at least 1x1")
        if not 0 < self.shrink <= 1:
            errors.append("dataset.shrink must be in (0, 1]")
        if self.test_count < 1 or self.coords_test_count < 1:
            errors.append("dataset test counts must be >= 1")
        if self.folds < 2:
            errors.append("dataset.folds must be >= 2")
        return errors


@dataclass
class ConvBlockConfig:
    kernel_size: int = 3
    channels: int = 8
    pool_size: int = 2
    batch_norm: bool = True


@dataclass
class ModelConfig:
    task: str = "regions"            # "regions" (softmax head) | "coords" (linear 2-vector)
    input_shape: list[int] = field(default_factory=lambda: [64, 64])
    conv_blocks: list[ConvBlockConfig] = field(
        default_factory=lambda: [ConvBlockConfig(channels=8), ConvBlockConfig(channels=16)]
    )
    dense_sizes: list[int] = field(default_factory=lambda: [128, 64])
    num_classes: int = 10
    learning_rate: float = 1e-2
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    bn_momentum: float = 0.99
    bn_epsilon: float = 1e-5

    @property
    def output_size(self) -> int:
        return self.num_classes if self.task == "regions" else 2

    def validate(self) -> list[str]:
        errors = []
        if self.task not in ("regions", "coords"):
            errors.append(f"model.task must be 'regions' or 'coords', got {self.task!r}")
        if len(self.input_shape) != 2 or min(self.input_shape) < 1:
            errors.append("model.input_shape must be two positive integers")
        if self.task == "regions" and self.num_classes < 2:
            errors.append("model.num_classes must be >= 2")
        if self.learning_rate <= 0:
            errors.append("model.learning_rate must be > 0")
        if self.batch_size < 1:
            errors.append("model.batch_size must be >= 1")
        if self.epochs < 0:
            errors.append("model.epochs must be >= 0")
        for i, block in enumerate(self.conv_blocks):
            if block.kernel_size < 1 or block.kernel_size % 2 == 0:
                errors.append(f"model.conv_blocks[{i}].kernel_size must be odd and positive")
            if block.channels < 1 or block.pool_size < 1:
                errors.append(f"model.conv_blocks[{i}] channels and pool_size must be >= 1")
        return errors

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ModelConfig:
        raw = dict(raw)
        blocks = raw.pop("conv_blocks", None)
        cfg = _build_section(cls, raw)
        if blocks is not None:
            cfg.conv_blocks = [_build_section(ConvBlockConfig, b) for b in blocks if isinstance(b, dict)]
        return cfg


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "echoloc-out"
    threads: int = 1


# ---------------------------------------------------------------------------
# Root config
# ---------------------------------------------------------------------------

@dataclass
class EcholocConfig:
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    run: RunConfig = field(default_factory=RunConfig)
    profiles: dict[str, dict[str, Any]] = field(default_factory=dict)

    def validate(self) -> list[str]:
        return (
            self.propagation.validate()
            + self.audio.validate()
            + self.dataset.validate()
            + self.model.validate()
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("profiles", None)
        return d


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _apply_dotpath(obj: Any, dotpath: str, value: Any) -> None:
    """Walk obj via dotpath and set the final attribute."""
    parts = dotpath.split(".")
    for part in parts[:-1]:
        obj = getattr(obj, part)
    if not hasattr(obj, parts[-1]):
        raise ConfigError(f"Unknown config key: {dotpath}")
    setattr(obj, parts[-1], value)


def _deep_merge(base: dict, overlay: dict) -> dict:
    """Recursively merge overlay into base, returning a new dict."""
    merged = dict(base)
    for k, v in overlay.items():
        if k in merged and isinstance(merged[k], dict) and isinstance(v, dict):
            merged[k] = _deep_merge(merged[k], v)
        else:
            merged[k] = v
    return merged


def _coerce(value: str, target_type: type) -> Any:
    """Coerce a string env value to the target type."""
    if target_type is bool:
        return value.lower() in ("1", "true", "yes", "on")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def _build_section(cls: type, raw: dict) -> Any:
    """Build a dataclass section from a raw dict, ignoring unknown keys."""
    valid_fields = {f.name for f in fields(cls)}
    filtered = {k: v for k, v in raw.items() if k in valid_fields}
    return cls(**filtered)


# ---------------------------------------------------------------------------
# ENV var mapping
# ---------------------------------------------------------------------------

_ENV_MAP: dict[str, tuple[str, type]] = {
    "ECHOLOC_SEED":               ("run.seed", int),
    "ECHOLOC_OUTPUT_DIR":         ("run.output_dir", str),
    "ECHOLOC_THREADS":            ("run.threads", int),
    "ECHOLOC_SAMPLE_RATE":        ("propagation.sample_rate", int),
    "ECHOLOC_RAYS_PER_ENDPOINT":  ("propagation.rays_per_endpoint", int),
    "ECHOLOC_MAX_BOUNCES":        ("propagation.max_bounces", int),
    "ECHOLOC_RIR_DURATION":       ("propagation.rir_duration", float),
    "ECHOLOC_EPOCHS":             ("model.epochs", int),
    "ECHOLOC_LEARNING_RATE":      ("model.learning_rate", float),
    "ECHOLOC_BATCH_SIZE":         ("model.batch_size", int),
}

CONFIG_CANDIDATES = (
    Path("echoloc.yaml"),
    Path("echoloc.yml"),
    Path.home() / ".config" / "echoloc" / "config.yaml",
)


def find_config_path() -> Path | None:
    """Find a config file in the standard locations."""
    for p in CONFIG_CANDIDATES:
        if p.is_file():
            return p
    return None


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------

def load_config(
    config_path: str | Path | None = None,
    *,
    profile: str | None = None,
    cli_overrides: dict[str, Any] | None = None,
) -> EcholocConfig:
    """
    Build an EcholocConfig by layering sources in precedence order:

        defaults  <  config file  <  profile  <  env vars  <  CLI flags

    Parameters
    ----------
    config_path : path to YAML config file (optional)
    profile : name of a profile to apply from the config file
    cli_overrides : dict of dotpath -> value CLI flag overrides; ``None``
        values are skipped so unset flags keep lower-precedence values

    Raises
    ------
    ConfigError
        If the file cannot be parsed or the merged config is invalid.
    """
    raw: dict[str, Any] = {}

    # --- 1. Config file ---
    if config_path is not None:
        p = Path(config_path).expanduser()
        if p.is_file():
            try:
                with p.open("r", encoding="utf-8") as f:
                    file_data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Cannot parse config file {p}: {e}") from e
            raw = _deep_merge(raw, file_data)
            logger.debug("Loaded config file %s", p)

    # --- 2. Profile overlay ---
    if profile:
        profile_data = raw.get("profiles", {}).get(profile)
        if profile_data is None:
            raise ConfigError(f"Unknown profile: {profile}")
        raw = _deep_merge(raw, profile_data)

    cfg = EcholocConfig(
        propagation=_build_section(PropagationConfig, raw.get("propagation", {})),
        audio=_build_section(AudioConfig, raw.get("audio", {})),
        dataset=_build_section(DatasetConfig, raw.get("dataset", {})),
        model=ModelConfig.from_dict(raw.get("model", {})),
        run=_build_section(RunConfig, raw.get("run", {})),
        profiles=raw.get("profiles", {}),
    )

    # --- 3. Env var overrides ---
    for env_var, (dotpath, target_type) in _ENV_MAP.items():
        val = os.environ.get(env_var)
        if val is not None:
            try:
                _apply_dotpath(cfg, dotpath, _coerce(val, target_type))
            except ValueError as e:
                raise ConfigError(f"Invalid value for {env_var}: {val!r}") from e

    # --- 4. CLI flag overrides ---
    if cli_overrides:
        for dotpath, value in cli_overrides.items():
            if value is not None:
                _apply_dotpath(cfg, dotpath, value)

    errors = cfg.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg
