"""
The features module contains code handling the setting and reading of
anyplan harness settings. Settings are read once, at import time, and are
not reconfigured during execution.

Setting values are set from, in order:

  1. environment variables,
  2. an .ini file
  3. default values set in code
"""
import os
from configparser import ConfigParser
from typing import Callable, Tuple, TypeVar

T = TypeVar("T")

_TRUTHY = ("1", "true", "yes", "on")


def _to_bool(value: str) -> bool:
    return value.strip().lower() in _TRUTHY


def _to_floats(value: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in value.split(",") if v.strip())


class Features:
    """
    The Features class holds the harness settings that can be configured
    per deployment: trace cadence, execution speed, default budgets, worker
    count and nearest-neighbour index options.
    """

    def __init__(self, config_parser: ConfigParser):
        # Get each value first from the environment, second from the ini
        # file, else from the code default. The requirement to convert
        # environment variable strings to typed values makes this uglier
        # than ideal.
        self._config = config_parser

        self.trace_hz: float = self._get("bench", "trace_hz", float, 10.0)
        self.execution_speed: float = self._get(
            "bench", "execution_speed", float, 1.0
        )
        self.default_budgets: Tuple[float, ...] = self._get(
            "bench", "default_budgets", _to_floats, (0.3, 1.0, 3.0, 10.0, 30.0)
        )
        self.trace_every_iterations: int = self._get(
            "bench", "trace_every_iterations", int, 100
        )
        self.seconds_per_iteration: float = self._get(
            "bench", "seconds_per_iteration", float, 1e-4
        )
        self.workers: int = self._get("bench", "workers", int, 1)
        self.use_kdtree: bool = self._get("graph", "use_kdtree", _to_bool, True)
        self.kdtree_rebuild: int = self._get("graph", "kdtree_rebuild", int, 256)

    def _get(self, section: str, key: str, convert: Callable[[str], T], default: T) -> T:
        env_value = os.getenv(f"ANYPLAN_{key.upper()}")
        if env_value is not None:
            return convert(env_value)
        if self._config.has_option(section, key):
            return convert(self._config.get(section, key))
        return default

    @staticmethod
    def create_from_config_files(*paths) -> "Features":
        """
        Create a new Features instance from a set of configuration files.

        :param paths: configuration files to parse
        """
        config = ConfigParser()
        # config.read() requires an iterable of paths. The paths tuple is
        # enough to satisfy this requirement.
        config.read(paths)
        return Features(config)
