"""
Configuration singleton. Values come from the settings module, then an optional .env file next
to it, then the process environment (recognised variables only).
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import importlib
import os
import pathlib
from pathlib import Path
from typing import Any, ClassVar, Dict, Optional

from dotenv import dotenv_values

from plirls.exceptions import ConfigError


class Config:
    _instance: ClassVar[Optional['Config']] = None
    env_vars: Dict[str, Any] = {}

    # DIR PATHS
    DIR_PATH: ClassVar[pathlib.Path] = pathlib.Path(__file__).parents[2]
    ENV_FILE_PATH: ClassVar[pathlib.Path] = Path(pathlib.Path(__file__).parents[0] / '.env')
    SETTINGS_FILE_PATH: ClassVar[str] = str(pathlib.Path(__file__).parents[0] / 'settings.py')

    def __init__(self):
        self.env_vars = {}
        self.settings_module = importlib.import_module("plirls.config.settings")
        self._load_settings_vars()

        # .env file first, then the live environment on top
        overrides = {k: v for k, v in dotenv_values(self.ENV_FILE_PATH).items() if v is not None}
        for name in self.RECOGNISED_ENV_VARS:
            if os.getenv(name) is not None:
                overrides[name] = os.environ[name]
        for key, value in overrides.items():
            self._set_override(key, value)

    def _load_settings_vars(self):
        for attribute_name in dir(self.settings_module):
            if not attribute_name.startswith('__') and not attribute_name.endswith('__'):
                attribute_value = getattr(self.settings_module, attribute_name)
                # Filter out functions, classes and imported typing helpers
                if not callable(attribute_value):
                    setattr(self, attribute_name, attribute_value)
                    self.env_vars[attribute_name] = attribute_value

    def _set_override(self, key: str, raw: str):
        """Coerce an env string to the type of the matching setting, if there is one."""
        current = getattr(self, key, None)
        value: Any = raw
        try:
            if isinstance(current, bool):
                value = raw.strip().lower() in ('1', 'true', 'yes', 'on')
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
        except ValueError as e:
            raise ConfigError(f"{key}={raw!r} is not a valid {type(current).__name__}") from e
        setattr(self, key, value)
        self.env_vars[key] = value

    @property
    def threads(self) -> int:
        return max(1, int(self.PLIRLS_THREADS))

    @classmethod
    def get_instance(cls):
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    @classmethod
    def reload_config(cls):
        """Re-read settings and environment in place, so module-level `c` references stay valid."""
        if cls._instance is None:
            return cls.get_instance()
        cls._instance.__init__()
        return cls._instance


c = Config.get_instance()  # Singleton instance of Config
