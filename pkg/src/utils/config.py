#!/usr/bin/env python3

import copy
import os
import json
import logging
from typing import Dict, Any, Optional

from utils.errors import ConfigError

DEFAULT_CONFIG: Dict[str, Any] = {
    'general': {
        'poll_interval': 60,         # Seconds between re-assessments in watch mode
        'unit_label': 'conventional units'
    },
    'assessment': {
        'window_seconds': 86400,     # Empirical frequency window
        'smoothing_alpha': 0,        # 0 = raw relative frequency, 1 = Laplace
        'opportunities': {
            'mode': 'count',         # 'count' or 'time'
            'default': 100,
            'per_threat': {},
            'time_unit_seconds': 3600
        },
        'gate_threshold': None
    },
    'scales': {
        'frequency': [1, 10, 50, 100],       # Events per year
        'loss': [1000, 2500, 5000, 10000]    # Conventional units
    },
    'matrix': [
        ['low', 'low', 'low', 'medium', 'medium'],
        ['low', 'low', 'medium', 'medium', 'high'],
        ['low', 'medium', 'medium', 'high', 'high'],
        ['medium', 'medium', 'high', 'high', 'critical'],
        ['medium', 'high', 'high', 'critical', 'critical']
    ],
    'ahp': {
        'strict_scale': False,
        'consistency_threshold': 0.1
    },
    'report': {
        'sink_path': None
    }
}


class ConfigLoader:
    """Loads and validates configuration for the risk engine."""

    def __init__(self, config_path: Optional[str] = None, strict: bool = False):
        """Initialize the Config Loader.

        Args:
            config_path (Optional[str]): Path to the configuration file, or None for defaults
            strict (bool): Raise ConfigError instead of falling back to defaults
        """
        self.logger = logging.getLogger('risk_engine.config')
        self.config_path = config_path
        self.strict = strict
        self.default_config = copy.deepcopy(DEFAULT_CONFIG)

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file or use defaults.

        Returns:
            Dict[str, Any]: Configuration dictionary
        """
        config = copy.deepcopy(self.default_config)

        if self.config_path is None:
            self.logger.debug("No configuration file given, using defaults")
            return config

        if os.path.exists(self.config_path):
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    file_config = json.load(f)

                if not isinstance(file_config, dict):
                    raise ValueError("top-level JSON value must be an object")

                self._merge_configs(config, file_config)
                self.logger.info(f"Loaded configuration from {self.config_path}")

            except Exception as e:
                self.logger.error(f"Error loading configuration from {self.config_path}: {str(e)}")
                if self.strict:
                    raise ConfigError(f"Cannot read configuration {self.config_path}: {e}") from e
                self.logger.info("Using default configuration")
                config = copy.deepcopy(self.default_config)
        elif self.strict:
            raise ConfigError(f"Configuration file {self.config_path} not found")
        else:
            self.logger.info(f"Configuration file {self.config_path} not found, using defaults")

            try:
                os.makedirs(os.path.dirname(os.path.abspath(self.config_path)), exist_ok=True)
                with open(self.config_path, 'w', encoding='utf-8') as f:
                    json.dump(config, f, indent=2)
                self.logger.info(f"Created default configuration file at {self.config_path}")
            except Exception as e:
                self.logger.error(f"Error creating default configuration file: {str(e)}")

        return config

    def _merge_configs(self, base_config: Dict[str, Any], override_config: Dict[str, Any]) -> None:
        """Recursively merge override_config into base_config.

        Args:
            base_config (Dict[str, Any]): Base configuration to merge into
            override_config (Dict[str, Any]): Configuration to merge from
        """
        for key, value in override_config.items():
            if key in base_config and isinstance(base_config[key], dict) and isinstance(value, dict):
                self._merge_configs(base_config[key], value)
            else:
                base_config[key] = value
