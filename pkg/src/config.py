"""Run configuration: defaults, optional YAML/JSON file and CLI overrides"""
from pathlib import Path
from typing import Any, Iterable, Optional

import yaml
from loguru import logger

from foiwatch.errors import InputError
from foiwatch.models.box import Zone
from foiwatch.models.reference import ClassTaxonomy
from foiwatch.models.track import TrackerConfig
from foiwatch.taxonomy import PRESETS, get_taxonomy
from foiwatch.utils import settings


class Config:
    """Session tunables shared by every subcommand"""

    # Embeddings
    DIM: int = settings.DEFAULT_DIM

    # Tracker
    IOU_THRESHOLD: float = settings.DEFAULT_IOU_THRESHOLD
    FEATURE_THRESHOLD: float = settings.DEFAULT_FEATURE_THRESHOLD
    MAX_MISSES: int = settings.DEFAULT_MAX_MISSES
    BUFFER_SIZE: int = settings.DEFAULT_BUFFER_SIZE

    # Alerting
    APPROACH_WINDOW: int = settings.DEFAULT_APPROACH_WINDOW
    ZONES: list[Zone] = []

    TAXONOMY: str = 'functional'

    # Logging
    LOG_LEVEL: str = "INFO"

    TUNABLES = ('dim', 'iou_threshold', 'feature_threshold', 'max_misses', 'buffer_size',
                'approach_window', 'zone', 'taxonomy', 'log_level')

    @classmethod
    def reset(cls) -> None:
        cls.DIM = settings.DEFAULT_DIM
        cls.IOU_THRESHOLD = settings.DEFAULT_IOU_THRESHOLD
        cls.FEATURE_THRESHOLD = settings.DEFAULT_FEATURE_THRESHOLD
        cls.MAX_MISSES = settings.DEFAULT_MAX_MISSES
        cls.BUFFER_SIZE = settings.DEFAULT_BUFFER_SIZE
        cls.APPROACH_WINDOW = settings.DEFAULT_APPROACH_WINDOW
        cls.ZONES = []
        cls.TAXONOMY = 'functional'
        cls.LOG_LEVEL = "INFO"

    @classmethod
    def load(cls, config_path: Optional[str] = None, overrides: Optional[dict[str, Any]] = None,
             extra_keys: Iterable[str] = ()) -> dict[str, Any]:
        """
        Load and validate configuration. Explicit overrides beat file values, which beat defaults.

        Args:
            config_path: YAML or JSON file whose keys mirror the long CLI flags
            overrides: Tunables given on the command line (None values are ignored)
            extra_keys: Further keys the file may set (the running subcommand's flags)

        Returns:
            File values for `extra_keys`, keyed with underscores

        Raises:
            InputError: missing/unparsable file, unknown key or invalid value
        """
        file_values = cls._read_file(config_path) if config_path else {}

        allowed = set(cls.TUNABLES) | set(extra_keys)
        unknown = sorted(set(file_values) - allowed)
        if unknown:
            raise InputError(f"Unknown configuration keys in {config_path}: {', '.join(unknown)}")

        values = {k: v for k, v in file_values.items() if k in cls.TUNABLES}
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})

        try:
            cls.DIM = int(values.get('dim', cls.DIM))
            cls.IOU_THRESHOLD = float(values.get('iou_threshold', cls.IOU_THRESHOLD))
            cls.FEATURE_THRESHOLD = float(values.get('feature_threshold', cls.FEATURE_THRESHOLD))
            cls.MAX_MISSES = int(values.get('max_misses', cls.MAX_MISSES))
            cls.BUFFER_SIZE = int(values.get('buffer_size', cls.BUFFER_SIZE))
            cls.APPROACH_WINDOW = int(values.get('approach_window', cls.APPROACH_WINDOW))
        except (TypeError, ValueError) as e:
            raise InputError(f"Invalid numeric configuration value: {e}") from e
        cls.TAXONOMY = str(values.get('taxonomy', cls.TAXONOMY))
        cls.LOG_LEVEL = str(values.get('log_level', cls.LOG_LEVEL)).upper()
        if 'zone' in values:
            cls.ZONES = cls._parse_zones(values['zone'])

        cls._validate()

        logger.debug("Configuration loaded")
        logger.debug(f"Dim: {cls.DIM}, taxonomy: {cls.TAXONOMY}")
        logger.debug(f"Tracker: IoU >= {cls.IOU_THRESHOLD}, feature >= {cls.FEATURE_THRESHOLD}, "
                     f"max misses {cls.MAX_MISSES}, buffer {cls.BUFFER_SIZE}")
        logger.debug(f"Zones: {[zone.name for zone in cls.ZONES]}")
        return {k: v for k, v in file_values.items() if k not in cls.TUNABLES}

    @staticmethod
    def _read_file(config_path: str) -> dict[str, Any]:
        if not Path(config_path).exists():
            raise InputError(f"Config file not found: {config_path}")
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise InputError(f"Config file {config_path} is not valid YAML/JSON: {e}") from e
        if config_data is None:
            return {}
        if not isinstance(config_data, dict):
            raise InputError(f"Config file {config_path} must hold a mapping of flag names to values")
        return {str(key).replace('-', '_'): value for key, value in config_data.items()}

    @staticmethod
    def _parse_zones(raw: Any) -> list[Zone]:
        items = [raw] if isinstance(raw, str) else list(raw or [])
        zones = []
        for n, item in enumerate(items, start=1):
            try:
                zones.append(Zone.parse(str(item), default_name=f"zone-{n}"))
            except ValueError as e:
                raise InputError(str(e)) from e
        return zones

    @classmethod
    def _validate(cls) -> None:
        if cls.DIM < 1:
            raise InputError("dim must be at least 1")
        if not 0.0 <= cls.IOU_THRESHOLD <= 1.0:
            raise InputError("iou_threshold must be within [0, 1]")
        if cls.FEATURE_THRESHOLD < 0.0:
            raise InputError("feature_threshold must not be negative")
        if cls.MAX_MISSES < 1:
            raise InputError("max_misses must be at least 1")
        if cls.BUFFER_SIZE < 1:
            raise InputError("buffer_size must be at least 1")
        if cls.APPROACH_WINDOW < 2:
            raise InputError("approach_window must be at least 2")
        if cls.TAXONOMY not in PRESETS:
            raise InputError(f"taxonomy must be one of: {', '.join(PRESETS)}")

        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if cls.LOG_LEVEL not in valid_levels:
            raise InputError(f"log_level must be one of: {', '.join(valid_levels)}")

        names = [zone.name for zone in cls.ZONES]
        if len(set(names)) != len(names):
            raise InputError(f"zone names must be unique, got {names}")
        if cls.FEATURE_THRESHOLD > 1.0:
            logger.warning("feature_threshold above 1 disables the appearance fallback")

    @classmethod
    def tracker_config(cls) -> TrackerConfig:
        return TrackerConfig(iou_threshold=cls.IOU_THRESHOLD, feature_threshold=cls.FEATURE_THRESHOLD,
                             max_misses=cls.MAX_MISSES, buffer_size=cls.BUFFER_SIZE)

    @classmethod
    def taxonomy(cls) -> ClassTaxonomy:
        return get_taxonomy(cls.TAXONOMY)
