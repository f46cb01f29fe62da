"""Experiment configuration: a flat, typed key-value file with sections.

Grammar (INI, parsed by configparser): four sections, all optional except
[run]. Unknown keys are rejected with a field-level message.

    [run]           system, environment, num_executors, seed, max_env_steps,
                    eval_interval, eval_episodes, max_episode_steps, mode, name
    [env]           num_agents
    [architecture]  kind (decentralised|centralised|networked), edges ("0-1, 1-2")
    [wrappers]      fingerprint, communication, channel_size, channel_noise,
                    channel_shared, mixer
    [hyper]         any hyperparameter key of the chosen system

Hyperparameter resolution order: system defaults (the base configuration
tables), then environment-specific overrides, then the [hyper] section.
The fully resolved values are written to <run_dir>/effective_config.ini.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from ..architectures import centralised, decentralised, networked_from_edges
from ..distribution import RunPlan
from ..envs import make_env
from ..systems import ALGORITHMS, DEFAULT_HYPERS, ENV_OVERRIDES, SystemSpec
from ..wrappers import BroadcastChannel

ENVIRONMENTS = ("switch", "spread_discrete", "spread_continuous", "matrix", "matrix_qmix")

_RUN_KEYS = {
    "system": str,
    "environment": str,
    "num_executors": int,
    "seed": int,
    "max_env_steps": int,
    "eval_interval": int,
    "eval_episodes": int,
    "max_episode_steps": int,
    "mode": str,
    "name": str,
}
_ENV_KEYS = {"num_agents": int}
_ARCH_KEYS = {"kind": str, "edges": str}
_WRAPPER_KEYS = {
    "fingerprint": bool,
    "communication": bool,
    "channel_size": int,
    "channel_noise": float,
    "channel_shared": bool,
    "mixer": str,
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _coerce(raw: str, proto):
    if proto is bool or isinstance(proto, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected boolean, got {raw!r}")
    if proto is int or isinstance(proto, int):
        return int(raw)
    if proto is float or isinstance(proto, float):
        return float(raw)
    if isinstance(proto, list):
        return [int(x) for x in raw.replace(" ", "").split(",") if x]
    return raw


@dataclass
class ExperimentConfig:
    system: str = "madqn_ff"
    environment: str = "spread_discrete"
    num_executors: int = 1
    seed: int = 0
    max_env_steps: int = 100_000
    eval_interval: int = 20  # training episodes between evaluator aggregations
    eval_episodes: int = 10
    max_episode_steps: int = 1_000
    mode: str = "inprocess"
    name: str = "run"
    num_agents: int = 3
    architecture: str = "decentralised"
    edges: list[tuple[int, int]] = field(default_factory=list)
    fingerprint: bool = False
    communication: bool = False
    channel_size: int = 1
    channel_noise: float = 0.0
    channel_shared: bool = True
    mixer: str = ""
    hyper_overrides: dict = field(default_factory=dict)

    # -- parsing ----------------------------------------------------------------

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError([f"config file not found or empty: {path}"])
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser) -> "ExperimentConfig":
        cfg = cls()
        errors: list[str] = []
        known_sections = {"run", "env", "architecture", "wrappers", "hyper"}
        for section in parser.sections():
            if section not in known_sections:
                errors.append(f"[{section}]: unknown section")
        for section, keys in (("run", _RUN_KEYS), ("env", _ENV_KEYS), ("wrappers", _WRAPPER_KEYS)):
            if not parser.has_section(section):
                continue
            for key, raw in parser.items(section):
                if key not in keys:
                    errors.append(f"[{section}] {key}: unknown key")
                    continue
                attr = {"name": "name"}.get(key, key)
                try:
                    setattr(cfg, attr, _coerce(raw, keys[key]))
                except ValueError as exc:
                    errors.append(f"[{section}] {key}: {exc}")
        if parser.has_section("architecture"):
            for key, raw in parser.items("architecture"):
                if key == "kind":
                    cfg.architecture = raw.strip()
                elif key == "edges":
                    try:
                        cfg.edges = [
                            tuple(int(x) for x in pair.split("-"))
                            for pair in raw.replace(" ", "").split(",")
                            if pair
                        ]
                    except ValueError:
                        errors.append(f"[architecture] edges: expected pairs like 0-1, got {raw!r}")
                else:
                    errors.append(f"[architecture] {key}: unknown key")
        if parser.has_section("hyper"):
            if cfg.system in DEFAULT_HYPERS:
                defaults = DEFAULT_HYPERS[cfg.system]
                for key, raw in parser.items("hyper"):
                    if key not in defaults:
                        errors.append(f"[hyper] {key}: unknown key for system {cfg.system}")
                        continue
                    try:
                        cfg.hyper_overrides[key] = _coerce(raw, defaults[key])
                    except ValueError as exc:
                        errors.append(f"[hyper] {key}: {exc}")
            else:
                errors.append(f"[run] system: unknown system {cfg.system!r}")
        errors.extend(cfg.validate())
        if errors:
            raise ConfigError(errors)
        return cfg

    def validate(self) -> list[str]:
        errors = []
        if self.system not in ALGORITHMS:
            errors.append(f"[run] system: unknown system {self.system!r}")
        if self.environment not in ENVIRONMENTS:
            errors.append(f"[run] environment: unknown environment {self.environment!r}")
        if self.mode not in ("inprocess", "local"):
            errors.append(f"[run] mode: expected inprocess or local, got {self.mode!r}")
        if self.num_executors < 1:
            errors.append("[run] num_executors: must be >= 1")
        if self.architecture not in ("decentralised", "centralised", "networked"):
            errors.append(f"[architecture] kind: unknown {self.architecture!r}")
        if self.architecture == "networked" and not self.edges:
            errors.append("[architecture] edges: required for networked")
        return errors

    # -- construction -----------------------------------------------------------

    def resolved_hyper(self) -> dict:
        if self.system not in DEFAULT_HYPERS:
            raise ConfigError([f"unknown system {self.system!r}"])
        merged = dict(DEFAULT_HYPERS[self.system])
        env_over = ENV_OVERRIDES.get(self.environment, {})
        merged.update({k: v for k, v in env_over.items() if k in merged})
        merged.update(self.hyper_overrides)
        return merged

    def to_system_spec(self) -> SystemSpec:
        kind = {
            "decentralised": decentralised,
            "centralised": centralised,
        }.get(self.architecture)
        arch = kind() if kind else networked_from_edges(self.num_agents, self.edges)
        channel = None
        if self.communication or self.system == "dial":
            channel = BroadcastChannel(self.channel_shared, self.channel_size, self.channel_noise)
        return SystemSpec(
            algorithm=self.system,
            architecture=arch,
            hyper=self.resolved_hyper(),
            communication=channel,
            fingerprint=self.fingerprint,
            mixer=self.mixer or None,
        )

    def env_kwargs(self) -> dict:
        if self.environment in ("matrix", "matrix_qmix"):
            return {}
        return {"num_agents": self.num_agents}

    def to_plan(self, run_dir: str | None = None) -> RunPlan:
        return RunPlan(
            system=self.to_system_spec(),
            env_key=self.environment,
            env_kwargs=self.env_kwargs(),
            seed=self.seed,
            num_executors=self.num_executors,
            executor_env_steps=max(1, self.max_env_steps // self.num_executors),
            eval_interval_episodes=self.eval_interval,
            eval_episodes=self.eval_episodes,
            max_episode_steps=self.max_episode_steps,
            replay_port=int(os.environ.get("MAVA_REPLAY_PORT", "0")),
            trainer_port=int(os.environ.get("MAVA_TRAINER_PORT", "0")),
            run_dir=run_dir,
        )

    def agent_ids(self) -> list[str]:
        env = make_env(self.environment, seed=0, **self.env_kwargs())
        return sorted(env.agents)

    # -- provenance ---------------------------------------------------------------

    def write_effective(self, path: str) -> None:
        parser = configparser.ConfigParser()
        parser["run"] = {
            "system": self.system,
            "environment": self.environment,
            "num_executors": str(self.num_executors),
            "seed": str(self.seed),
            "max_env_steps": str(self.max_env_steps),
            "eval_interval": str(self.eval_interval),
            "eval_episodes": str(self.eval_episodes),
            "max_episode_steps": str(self.max_episode_steps),
            "mode": self.mode,
            "name": self.name,
        }
        parser["env"] = {"num_agents": str(self.num_agents)}
        parser["architecture"] = {"kind": self.architecture}
        if self.edges:
            parser["architecture"]["edges"] = ", ".join(f"{i}-{j}" for i, j in self.edges)
        parser["wrappers"] = {
            "fingerprint": str(self.fingerprint).lower(),
            "communication": str(self.communication or self.system == "dial").lower(),
            "channel_size": str(self.channel_size),
            "channel_noise": str(self.channel_noise),
            "channel_shared": str(self.channel_shared).lower(),
            "mixer": self.mixer or {"vdn": "additive", "qmix": "monotonic"}.get(self.system, ""),
        }
        hyper = self.resolved_hyper()
        parser["hyper"] = {
            k: ",".join(str(x) for x in v) if isinstance(v, list) else str(v) for k, v in sorted(hyper.items())
        }
        with open(path, "w") as fh:
            parser.write(fh)
