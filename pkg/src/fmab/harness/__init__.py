from fmab.harness.config import ConfigError, RunConfig, load_config, parse_config
from fmab.harness.episode import RunResult, run_episode
from fmab.harness.export import Table, export, read_table

__all__ = [
    "ConfigError", "RunConfig", "RunResult", "Table",
    "export", "load_config", "parse_config", "read_table", "run_episode",
]
