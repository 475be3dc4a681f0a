"""Run configuration: YAML parsing, validation and seeded sub-streams."""

from __future__ import annotations

import copy
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .envs import DSTConfig, FourRoomConfig, build_continuing_mdp, build_dst, build_four_room, build_random_momdp, build_toy3
from .momdp import TabularMOMDP, one_hot_wrap
from .ols import SFOLSConfig
from .qlearning import QLearnConfig

ALGORITHMS = ("sfols", "wcpi", "sip", "random_weights")
SOLVERS = ("planner", "qlearning")
ENVS = ("dst", "four_room", "random", "toy3", "continuing")

DEFAULTS = {
    "seed": 0,
    "env": {"name": "dst"},
    "algorithm": {"name": "sfols", "epsilon": 0.0, "max_iterations": 1000, "max_iters": 100, "num_iters": 20, "negative": 0.1},
    "solver": {"name": "planner", "tol": 1e-8, "qlearning": {}},
    "evaluation": {"num_weights": 64, "hypervolume_ref": None},
    "lifelong": {"phases": 10, "steps_per_phase": 10_000, "max_episode_steps": 1_000},
    "output": {"dir": "runs/out", "include_sf_tables": False},
}


class ConfigError(ValueError):
    pass


def sub_seed(seed: int, name: str) -> int:
    """Independent seed for the named stream (env, solver, eval, lifelong)."""
    return int(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]).generate_state(1)[0])


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {path}{k}")
        if isinstance(base[k], dict) and k != "params":
            if not isinstance(v, dict):
                raise ConfigError(f"{path}{k} must be a mapping")
            if k in ("qlearning", "env"):
                out[k] = {**base[k], **v}
            else:
                out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    raw: dict

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def env_name(self) -> str:
        return self.raw["env"]["name"]

    @property
    def algorithm(self) -> str:
        return self.raw["algorithm"]["name"]

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["output"]["dir"])

    def solver_config(self) -> SFOLSConfig:
        s, a = self.raw["solver"], self.raw["algorithm"]
        qfields = {f.name for f in fields(QLearnConfig)}
        try:
            q = QLearnConfig(**{k: v for k, v in s["qlearning"].items() if k in qfields})
            return SFOLSConfig(epsilon=float(a["epsilon"]), max_iterations=int(a["max_iterations"]), solver=s["name"], planner_tol=float(s["tol"]), qlearning=q, seed=sub_seed(self.seed, "solver"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def build_env(self) -> TabularMOMDP:
        return build_env(self.raw["env"], sub_seed(self.seed, "env"))


def build_env(env_doc: dict, env_seed: int = 0) -> TabularMOMDP:
    name = env_doc.get("name")
    params = dict(env_doc.get("params") or {})
    if not isinstance(name, str):
        raise ConfigError("env.name must be a string")
    if name.startswith("one_hot:"):
        return one_hot_wrap(build_env({"name": name.split(":", 1)[1], "params": params}, env_seed))
    try:
        if name == "dst":
            if "treasures" in params:
                params["treasures"] = tuple(tuple(t) for t in params["treasures"])
            for k in ("start",):
                if k in params:
                    params[k] = tuple(params[k])
            return build_dst(DSTConfig(**params))
        if name == "four_room":
            if "layout" in params:
                params["layout"] = tuple(params["layout"])
            return build_four_room(FourRoomConfig(**params))
        if name == "random":
            params.setdefault("seed", env_seed)
            return build_random_momdp(**params)
        if name == "continuing":
            params.setdefault("seed", env_seed)
            return build_continuing_mdp(**params)
        if name == "toy3":
            if params:
                raise ConfigError("toy3 takes no parameters")
            return build_toy3()
    except TypeError as exc:
        raise ConfigError(f"bad parameters for env {name!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown env {name!r}; expected one of {ENVS} or one_hot:<env>")


def parse_config(doc: dict | None, seed_override: int | None = None, out_override: str | None = None) -> RunConfig:
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    raw = _merge(DEFAULTS, doc)
    if seed_override is not None:
        raw["seed"] = seed_override
    if out_override is not None:
        raw["output"]["dir"] = str(out_override)
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool) or raw["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if raw["algorithm"]["name"] not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {raw['algorithm']['name']!r}; expected one of {ALGORITHMS}")
    if raw["solver"]["name"] not in SOLVERS:
        raise ConfigError(f"unknown solver {raw['solver']['name']!r}; expected one of {SOLVERS}")
    n = raw["evaluation"]["num_weights"]
    if not isinstance(n, int) or n < 0:
        raise ConfigError("evaluation.num_weights must be a non-negative integer")
    cfg = RunConfig(raw)
    cfg.solver_config()  # validates the solver block
    return cfg


def load_config(path, seed_override: int | None = None, out_override: str | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(doc, seed_override, out_override)
