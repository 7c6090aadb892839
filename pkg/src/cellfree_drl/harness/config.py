"""Experiment configuration: one JSON document with a section per component."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from ..baselines import BaselineConfig, Method
from ..ddpg.agent import AgentConfig
from ..objective import ObjectiveConfig
from ..phy import EnergyParams
from ..scenario import ScenarioConfig

OUTPUT_ENV = "C2F_OUTPUT_DIR"


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class EvalConfig:
    n_draws: int = 1
    n_eval_episodes: int = 5
    n_seeds: int = 1

    def __post_init__(self):
        if min(self.n_draws, self.n_eval_episodes, self.n_seeds) < 1:
            raise ValueError("eval counts must be >= 1")


def _names(cls) -> list[str]:
    return [f.name for f in fields(cls)]


# keys accepted in each section; scenario also takes noise power in dBm and
# the baseline section lists the methods run by `compare`
SECTION_KEYS = {
    "scenario": _names(ScenarioConfig) + ["noise_power_dbm"],
    "objective": _names(ObjectiveConfig),
    "agent": _names(AgentConfig),
    "baseline": _names(BaselineConfig) + ["methods"],
    "energy": _names(EnergyParams),
    "eval": _names(EvalConfig),
}
TOP_LEVEL_KEYS = ("output_dir", "checkpoint_every")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    objective: ObjectiveConfig
    agent: AgentConfig
    baseline: BaselineConfig | None
    methods: tuple
    energy: EnergyParams
    eval: EvalConfig
    output_dir: Path
    checkpoint_every: int
    raw: dict

    @property
    def seeds(self) -> list[int]:
        return [self.scenario.seed + i for i in range(self.eval.n_seeds)]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("top level of the config must be a JSON object")
        raw = copy.deepcopy(raw)
        unknown = set(raw) - set(SECTION_KEYS) - set(TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}; valid: "
                              f"{sorted(SECTION_KEYS) + list(TOP_LEVEL_KEYS)}")
        for section, allowed in SECTION_KEYS.items():
            body = raw.get(section, {})
            if not isinstance(body, dict):
                raise ConfigError(f"section '{section}' must be an object")
            bad = set(body) - set(allowed)
            if bad:
                raise ConfigError(f"unknown key(s) {sorted(bad)} in '{section}'; "
                                  f"valid: {sorted(allowed)}")
        try:
            scenario = ScenarioConfig.from_dict(raw.get("scenario", {}))
            objective = ObjectiveConfig(**raw.get("objective", {}))
            agent = AgentConfig.from_dict(raw.get("agent", {}))
            energy = EnergyParams(**raw.get("energy", {}))
            evaluation = EvalConfig(**raw.get("eval", {}))
            baseline, methods = _baseline(raw.get("baseline"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        every = raw.get("checkpoint_every", 100)
        if not isinstance(every, int) or every < 1:
            raise ConfigError("checkpoint_every must be a positive integer")
        out = os.environ.get(OUTPUT_ENV) or raw.get("output_dir", "runs")
        if Method.GRAPH_SPECTRAL in methods and \
                scenario.K + scenario.k_change_max > scenario.L:
            raise ConfigError("GRAPH_SPECTRAL needs at most L users (K + k_change_max <= L)")
        return cls(scenario, objective, agent, baseline, methods, energy, evaluation,
                   Path(out), every, raw)

    def with_override(self, section: str | None, key: str, value) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        if section is None:
            raw[key] = value
        else:
            raw.setdefault(section, {})[key] = value
        return ExperimentConfig.from_dict(raw)


def _baseline(body):
    if not body:
        return None, ()
    body = dict(body)
    methods = body.pop("methods", None)
    if methods is None:
        methods = [body["method"]] if "method" in body else []
    methods = tuple(Method(m) for m in methods)
    if methods and "method" not in body:
        body["method"] = methods[0]
    return BaselineConfig(**body), methods


def _json_error(path, text: str, exc: json.JSONDecodeError) -> ConfigError:
    lines = text.splitlines() or [""]
    line = lines[min(exc.lineno, len(lines)) - 1]
    caret = " " * (exc.colno - 1) + "^"
    return ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}\n    {caret}")


def read_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _json_error(path, text, exc) from exc


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(read_json(path))


def valid_grid_keys() -> list[str]:
    keys = [f"{s}.{k}" for s, ks in SECTION_KEYS.items() for k in ks]
    return keys + ["checkpoint_every"]


def resolve_key(key: str) -> tuple[str | None, str]:
    """Map 'section.field' or an unambiguous bare field name to (section, field)."""
    if key in TOP_LEVEL_KEYS:
        return None, key
    if "." in key:
        section, name = key.split(".", 1)
        if name in SECTION_KEYS.get(section, ()):
            return section, name
    else:
        owners = [s for s, ks in SECTION_KEYS.items() if key in ks]
        if len(owners) == 1:
            return owners[0], key
        if len(owners) > 1:
            raise ConfigError(f"grid key '{key}' is ambiguous; use one of "
                              f"{[f'{s}.{key}' for s in owners]}")
    raise ConfigError(f"unknown grid key '{key}'; valid keys: {', '.join(valid_grid_keys())}")


def load_grid(path) -> dict:
    grid = read_json(path)
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid must be a non-empty JSON object of key -> list of values")
    for key, values in grid.items():
        resolve_key(key)
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid values for '{key}' must be a non-empty list")
    return grid
