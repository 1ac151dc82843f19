"""Multi-agent relative-motion simulator (C++ core, Python front end).

Configs may be given as dicts, JSON text, or omitted for defaults. Policies
are baseline names (``"greedy"``, ``"potential"``, ``"potential+intent"``,
``"random"``) or callables ``fn(observation, graph) -> action`` where an
action is a discrete index 0..4 or a force ``(fx, fy)``.
"""

import json as _json

from . import _core
from ._core import (
    ABI_VERSION,
    CRITICAL_INCLINATION_RAD,
    FEATURE_DIM_HIDING,
    FEATURE_DIM_SHARING,
    POLICIES,
    ConfigError,
    InvalidParameter,
    PlacementError,
    SimulationError,
    c_param,
    cw_closed_form,
    graph_roundtrip,
    ground_closed_form,
    mean_motion_for_radius,
    moving_average,
    validate_dynamics,
)

__version__ = _core.__version__

__all__ = [
    "ABI_VERSION",
    "CRITICAL_INCLINATION_RAD",
    "FEATURE_DIM_HIDING",
    "FEATURE_DIM_SHARING",
    "POLICIES",
    "ConfigError",
    "InvalidParameter",
    "PlacementError",
    "SimulationError",
    "World",
    "baseline_action",
    "c_param",
    "config",
    "cw_closed_form",
    "graph_roundtrip",
    "ground_closed_form",
    "mean_motion_for_radius",
    "moving_average",
    "propagate",
    "run_episode",
    "run_goal_sharing_sweep",
    "run_inclination_sweep",
    "run_scalability",
    "validate_dynamics",
]


def _text(cfg):
    if cfg is None:
        return ""
    if isinstance(cfg, str):
        return cfg
    return _json.dumps(cfg)


def config(cfg=None):
    """Fully populated, validated config as a dict."""
    return _json.loads(_core.normalize_config(_text(cfg)))


class World(_core.World):
    def __init__(self, cfg=None, seed=0):
        super().__init__(_text(cfg), seed)


def propagate(cfg, state, force=(0.0, 0.0), steps=1):
    return _core.propagate(_text(cfg), list(state), list(force), steps)


def baseline_action(policy, world, agent, stream_seed=0):
    return _core.baseline_action(policy, world, agent, stream_seed)


def run_episode(cfg, policy, seed=0, goal_reset_rho=None):
    return _core.run_episode(_text(cfg), policy, seed, goal_reset_rho)


def run_scalability(cfg, policy, seed=0, jobs=1):
    """Returns (cells, episode_records)."""
    return _core.run_scalability(_text(cfg), policy, seed, jobs)


def run_inclination_sweep(cfg, policy, seed=0, jobs=1):
    """Returns (cells, episode_records); the regime is forced to cw_j2."""
    return _core.run_inclination_sweep(_text(cfg), policy, seed, jobs)


def run_goal_sharing_sweep(cfg, policy, seed=0, jobs=1):
    """Returns (points, episode_records)."""
    return _core.run_goal_sharing_sweep(_text(cfg), policy, seed, jobs)
