"""Exact instantaneous dynamic equilibrium flows in single-sink fluid queue networks."""
from .network import Network, build_network, parse_network, serialize_network, stats
from .flowstate import FlowOverTime, PhaseRecord
from .solver import SolverConfig, SolveResult, solve, solve_acyclic, solve_general

__all__ = [
    "Network", "build_network", "parse_network", "serialize_network", "stats",
    "FlowOverTime", "PhaseRecord",
    "SolverConfig", "SolveResult", "solve", "solve_acyclic", "solve_general",
]
