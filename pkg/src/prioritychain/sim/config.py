"""Scenario configuration and its INI-style file format.

A config file has one ``[scenario]`` section and optional ``[node.<id>]``
sections describing non-honest behaviour::

    [scenario]
    n_nodes = 10
    seed = 7
    duration = 300
    tx_rate_normal = 1.0
    tx_rate_priority = 0.1
    network_latency = 0.1, 0.5

    [node.3]
    kind = empty-block

Every key is optional except ``n_nodes``; unknown sections or keys are
errors. See the README for the full key list.
"""
from __future__ import annotations

import configparser
import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from ..core import NodeId
from ..errors import ConfigError


class BehaviorKind(enum.Enum):
    HONEST = "honest"
    MALICIOUS_REVIEWER = "malicious-reviewer"
    LAZY_LEADER = "lazy-leader"
    EMPTY_BLOCK = "empty-block"
    COLLUDER = "colluder"


# Malicious reviewers report honestly for this many review rounds first.
HONEST_WARMUP_ROUNDS = 2


@dataclass(frozen=True)
class BehaviorProfile:
    kind: BehaviorKind = BehaviorKind.HONEST
    flip_prob: float = 0.0
    delay: float = 0.0
    group_id: int = 0
    p_fa: float | None = None
    p_md: float | None = None
    latency: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob {self.flip_prob} outside [0, 1]")
        if self.delay < 0 or self.latency < 0:
            raise ConfigError("delay and latency must be >= 0")
        for name in ("p_fa", "p_md"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")

    def flip_probability(self, rounds_reviewed: int) -> float:
        """Chance of inverting the posterior in the next review."""
        if self.kind is BehaviorKind.COLLUDER:
            return 1.0
        if self.kind is BehaviorKind.MALICIOUS_REVIEWER and rounds_reviewed >= HONEST_WARMUP_ROUNDS:
            return self.flip_prob
        return 0.0


HONEST = BehaviorProfile()


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int
    seed: int = 0
    duration: float = 300.0
    tx_rate_normal: float = 1.0
    tx_rate_priority: float = 0.1
    m: int = 10
    w: float = 5.0
    b_max: int = 10
    n_candidates: int | None = None
    d_min: float = 0.33
    d_max: float = 0.67
    alpha: float = 0.5
    p_work_good: float = 0.8
    p_fa: float = 0.1
    p_md: float = 0.1
    fee_flag: bool = True
    network_latency: tuple[float, float] = (0.1, 0.5)
    behaviors: Mapping[NodeId, BehaviorProfile] = field(default_factory=dict)
    initial_leader: NodeId | None = None
    epoch_budget: float = 100.0
    follower_share: float = 0.5
    # a block whose priority transactions lagged the leader's readiness by
    # more than this is bad work
    lag_tolerance: float = 0.5
    fee_range: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ConfigError("need at least 3 nodes (one leader, two reviewers)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if not self.duration > 0:
            raise ConfigError("duration must be > 0")
        if self.tx_rate_normal < 0 or self.tx_rate_priority < 0:
            raise ConfigError("arrival rates must be >= 0")
        if self.m < 1 or not self.w > 0 or self.b_max < 1:
            raise ConfigError("need m >= 1, w > 0, b_max >= 1")
        if not 0.0 <= self.d_min < self.d_max <= 1.0:
            raise ConfigError(f"need 0 <= d_min < d_max <= 1, got {self.d_min}, {self.d_max}")
        for name in ("alpha", "p_work_good", "p_fa", "p_md", "follower_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        lo, hi = self.network_latency
        if not 0 <= lo <= hi:
            raise ConfigError(f"network_latency bounds {self.network_latency} invalid")
        if self.n_candidates is not None and not 1 <= self.n_candidates <= math.ceil(self.n_nodes / 10):
            raise ConfigError(f"n_candidates {self.n_candidates} outside [1, ceil(n_nodes/10)]")
        for node in self.behaviors:
            if not 0 <= node < self.n_nodes:
                raise ConfigError(f"behaviour given for unknown node {node}")
        if self.initial_leader is not None and not 0 <= self.initial_leader < self.n_nodes:
            raise ConfigError(f"initial_leader {self.initial_leader} is not a node")
        if self.epoch_budget < 0 or self.lag_tolerance < 0:
            raise ConfigError("epoch_budget and lag_tolerance must be >= 0")

    def behavior(self, node: NodeId) -> BehaviorProfile:
        return self.behaviors.get(node, HONEST)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)


_SCENARIO_TYPES = {
    f.name: f.type for f in dataclasses.fields(ScenarioConfig) if f.name != "behaviors"
}
_BEHAVIOR_KEYS = {
    "kind": str,
    "flip_prob": float,
    "delay": float,
    "group": int,
    "p_fa": float,
    "p_md": float,
    "latency": float,
}


def _convert(key: str, raw: str, typ: str):
    raw = raw.strip()
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ.startswith("int | None") or typ.startswith("NodeId | None"):
            return None if raw.lower() == "none" else int(raw)
        if typ.startswith("tuple"):
            parts = [float(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError(raw)
            return tuple(parts)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    raise ConfigError(f"unsupported key type for {key}")


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    kwargs = {}
    for key, raw in parser["scenario"].items():
        if key not in _SCENARIO_TYPES:
            raise ConfigError(f"unknown scenario key {key!r}")
        kwargs[key] = _convert(key, raw, _SCENARIO_TYPES[key])
    if "n_nodes" not in kwargs:
        raise ConfigError("scenario needs n_nodes")
    behaviors = {}
    for section in parser.sections():
        if section == "scenario":
            continue
        if not section.startswith("node."):
            raise ConfigError(f"unknown section [{section}]")
        try:
            node = int(section[len("node."):])
        except ValueError as exc:
            raise ConfigError(f"bad node section [{section}]") from exc
        opts = {}
        for key, raw in parser[section].items():
            if key not in _BEHAVIOR_KEYS:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                opts[key] = _BEHAVIOR_KEYS[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key} in [{section}]: {raw!r}") from exc
        try:
            kind = BehaviorKind(opts.pop("kind", "honest"))
        except ValueError as exc:
            raise ConfigError(f"unknown behaviour kind in [{section}]") from exc
        if "group" in opts:
            opts["group_id"] = opts.pop("group")
        behaviors[node] = BehaviorProfile(kind=kind, **opts)
    return ScenarioConfig(behaviors=behaviors, **kwargs)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
