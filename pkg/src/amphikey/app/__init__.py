"""Operational entry points: server, client and the scenario runner."""

from .client import ClientConfig, run_client
from .logs import EventLog, read_log
from .scenario import ScenarioReport, ScenarioSpec, Tamper, load_suite, run_scenario
from .server import AmphikeyServer, ServerConfig, run_server

__all__ = [
    "AmphikeyServer", "ClientConfig", "EventLog", "ScenarioReport", "ScenarioSpec", "ServerConfig",
    "Tamper", "load_suite", "read_log", "run_client", "run_scenario", "run_server",
]
