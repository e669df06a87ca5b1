"""
Settings manager for the Morrey toolkit
Loads the JSON project settings, the optional .env file and sets up logging
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from . import config
from .errors import ConfigError

logger = logging.getLogger(__name__)

_ENV_LOADED = False

REQUIRED_SECTIONS = ("project_name", "version", "default_settings", "thresholds", "logging")


def default_settings() -> Dict[str, Any]:
    """Built-in settings used when configs/main_config.json is missing or broken"""
    return {
        "project_name": "Morrey Vanishing Toolkit",
        "version": "1.0.0",
        "default_settings": {
            "fast_path_threshold": config.FAST_PATH_THRESHOLD,
            "oracle_size_guard": config.ORACLE_SIZE_GUARD,
            "riesz_self_cell": config.RIESZ_SELF_CELL,
            "default_ladder_ratio": config.DEFAULT_LADDER_RATIO,
            "dominance_delta": config.DOMINANCE_DELTA,
            "dominance_tolerance": config.DOMINANCE_TOLERANCE,
            "threads": 1,
        },
        "thresholds": dict(config.VANISHING_THRESHOLDS),
        "logging": {
            "log_level": "INFO",
            "log_to_file": False,
            "log_file": "logs/morrey.log",
        },
    }


def load_environment() -> None:
    """Load variables from a .env file once per process"""
    global _ENV_LOADED
    if not _ENV_LOADED:
        load_dotenv()
        _ENV_LOADED = True


class ConfigManager:
    """Manages the JSON settings file of the toolkit"""

    def __init__(self, settings_path: Optional[str] = None):
        """Initialize the manager; MORREY_SETTINGS overrides the default path"""
        load_environment()
        self.settings_path = (settings_path
                              or os.getenv("MORREY_SETTINGS")
                              or config.DEFAULT_SETTINGS_PATH)
        self.config: Dict[str, Any] = {}
        self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load settings from JSON, falling back to the built-in defaults"""
        defaults = default_settings()
        try:
            with open(self.settings_path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
            logger.debug("Loaded settings from %s", self.settings_path)
        except FileNotFoundError:
            logger.debug("Settings file %s not found, using defaults", self.settings_path)
            loaded = {}
        except json.JSONDecodeError as e:
            logger.warning("Error reading settings %s: %s; using defaults", self.settings_path, e)
            loaded = {}

        # Section-wise merge so a partial file keeps the remaining defaults
        merged = dict(defaults)
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(defaults.get(key), dict):
                section = dict(defaults[key])
                section.update(value)
                merged[key] = section
            else:
                merged[key] = value
        self.config = merged
        return self.config

    def save_config(self, settings: Optional[Dict[str, Any]] = None) -> bool:
        """Save settings to the JSON file"""
        if settings:
            self.config = settings
        try:
            directory = os.path.dirname(self.settings_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self.settings_path, "w", encoding="utf-8") as f:
                json.dump(self.config, f, indent=2, ensure_ascii=False)
            logger.info("Settings saved to %s", self.settings_path)
            return True
        except OSError as e:
            logger.error("Error saving settings: %s", e)
            return False

    def get_setting(self, section: str, key: str, default: Any = None) -> Any:
        """Get one value from a settings section"""
        return self.config.get(section, {}).get(key, default)

    def get_thresholds(self) -> Dict[str, Any]:
        """Vanishing-diagnostic thresholds"""
        return dict(self.config.get("thresholds", {}))

    def validate_config(self) -> bool:
        """Validate the current settings"""
        for key in REQUIRED_SECTIONS:
            if key not in self.config:
                logger.error("Missing required settings key: %s", key)
                return False
        mode = self.get_setting("default_settings", "riesz_self_cell")
        if mode not in ("ball", "drop"):
            logger.error("riesz_self_cell must be 'ball' or 'drop', got %r", mode)
            return False
        return True


def resolve_threads(config_threads: Optional[int] = None,
                    flag_threads: Optional[int] = None) -> int:
    """Worker count: command-line flag, then MORREY_THREADS, then RunConfig, then 1"""
    load_environment()
    candidates = [
        ("--threads", flag_threads),
        ("MORREY_THREADS", os.getenv("MORREY_THREADS") or None),
        ("run.threads", config_threads),
    ]
    for source, value in candidates:
        if value is None:
            continue
        try:
            threads = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{source} must be an integer, got {value!r}")
        if threads < 1:
            raise ConfigError(f"{source} must be at least 1, got {threads}")
        return threads
    return 1


def setup_logging(settings: Optional[Dict[str, Any]] = None) -> None:
    """Configure the root logger from the 'logging' settings section"""
    load_environment()
    section = (settings or {}).get("logging", {})
    level_name = os.getenv("MORREY_LOG_LEVEL") or section.get("log_level", "INFO")
    level = getattr(logging, str(level_name).upper(), logging.INFO)

    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_morrey", False):
            root.removeHandler(handler)

    formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                                  datefmt="%H:%M:%S")
    console = logging.StreamHandler()
    console.setFormatter(formatter)
    console._morrey = True
    root.addHandler(console)

    if section.get("log_to_file"):
        log_file = Path(section.get("log_file", "logs/morrey.log"))
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        file_handler._morrey = True
        root.addHandler(file_handler)

    root.setLevel(level)
