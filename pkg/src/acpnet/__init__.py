"""Discrete-event simulation of adaptive continuous entanglement generation in quantum networks."""
from .config import ConfigError, load_config, parse_config
from .network import Network
from .params import Params
from .scenario import RunResult, Scenario, TrafficPhase, run_scenario

__all__ = ["ConfigError", "Network", "Params", "RunResult", "Scenario", "TrafficPhase",
           "load_config", "parse_config", "run_scenario"]
__version__ = "0.1.0"
