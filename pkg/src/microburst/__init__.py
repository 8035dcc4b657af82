"""Packet-level discrete-event simulation of data-center micro-bursts,
queue-growth dynamics, and slope-based ECN marking."""

__version__ = "0.1.0"

from .config import RunConfig, load_config, config_from_dict, ConfigError
from .sim import run_simulation, write_outputs

__all__ = ["RunConfig", "load_config", "config_from_dict", "ConfigError",
           "run_simulation", "write_outputs", "__version__"]
