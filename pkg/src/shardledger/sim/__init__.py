from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .runner import RunResult, node_key, run_scenario

__all__ = ["ConfigError", "RunResult", "ScenarioConfig", "load_config", "node_key", "parse_config", "run_scenario"]
