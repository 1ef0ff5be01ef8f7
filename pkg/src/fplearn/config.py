"""Experiment configuration files (JSON, schema version 1).

A configuration looks like::

    {
      "schema": 1,
      "name": "fig1-abm",
      "engine": "abm",
      "game": {"payoff": [[0, 1], [1, 0]], "labels": ["L", "R"]},
      "init": {"kind": "uniform_box", "lo": [0, 3], "hi": [1, 4]},
      "params": {"N": 1000, "h": 0.001, "mu": 0, "horizon_t": 20, "seed": 1},
      "output": {"dir": "runs/fig1-abm", "formats": ["csv", "svg", "final"]}
    }

Engines and their parameters (required keys have no default):

=========== ===============================================================
abm         N, h, horizon_t; mu=0, sample_every, seed=0, tie
meanfield   M, dt, horizon_t; mu=0, h=0, diffusion=false, ensemble="sample",
            sample_every, seed=0, tie
box         dt, horizon_t; method="euler", sample_every  (init: square box)
brd         dt, horizon_t; mu=0, method="euler", sample_every, tie
meanbr2x2   dt, horizon_t, br0; l=1, method="euler", sample_every
=========== ===============================================================

``tie`` is ``"lowest"`` or ``"uniform"``; ``sample_every`` defaults to
``horizon_t / 200``. Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .distributions import KINDS, InitialDistribution
from .game import LOWEST, UNIFORM, Game

SCHEMA_VERSION = 1
ENGINES = ("abm", "meanfield", "box", "brd", "meanbr2x2")
FORMATS = ("csv", "svg", "final")

_COMMON = {"horizon_t": None, "sample_every": None, "seed": 0}
ENGINE_PARAMS: dict[str, dict[str, Any]] = {
    "abm": {**_COMMON, "N": None, "h": None, "mu": 0.0, "tie": LOWEST},
    "meanfield": {**_COMMON, "M": None, "dt": None, "mu": 0.0, "h": 0.0, "diffusion": False,
                  "ensemble": "sample", "tie": LOWEST},
    "box": {**_COMMON, "dt": None, "method": "euler"},
    "brd": {**_COMMON, "dt": None, "mu": 0.0, "method": "euler", "tie": LOWEST},
    "meanbr2x2": {**_COMMON, "dt": None, "br0": None, "l": 1.0, "method": "euler"},
}
OPTIONAL_NONE = {"sample_every"}
NEEDS_INIT = {"abm", "meanfield", "box", "brd"}


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


@dataclass
class ExperimentConfig:
    name: str
    engine: str
    game: Game
    params: dict
    init: Optional[InitialDistribution] = None
    output_dir: Optional[str] = None
    formats: tuple = FORMATS
    description: str = ""
    source: Optional[str] = field(default=None, compare=False)

    @property
    def seed(self) -> int:
        return int(self.params["seed"])

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(self.name, self.engine, self.game, {**self.params, "seed": int(seed)},
                                self.init, self.output_dir, self.formats, self.description,
                                self.source)

    def as_dict(self) -> dict:
        doc = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "engine": self.engine,
            "game": {"payoff": self.game.payoff.tolist(), "labels": list(self.game.labels)},
            "params": dict(self.params),
            "output": {"formats": list(self.formats)},
        }
        if self.description:
            doc["description"] = self.description
        if self.init is not None:
            doc["init"] = self.init.as_dict()
        return doc


def _reject_unknown(obj: dict, allowed, where: str):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}")


def _require_dict(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where!r} must be an object")
    return obj


def _number(params: dict, key: str, positive=False, nonneg=False, integer=False):
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"params.{key} must be a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"params.{key} must be an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"params.{key} must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"params.{key} must be nonnegative, got {v!r}")
    return int(v) if integer else float(v)


def parse_config(doc: dict, source: Optional[str] = None) -> ExperimentConfig:
    doc = _require_dict(doc, "config")
    _reject_unknown(doc, ("schema", "name", "description", "engine", "game", "init", "params",
                          "output"), "config")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    engine = doc.get("engine")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {engine!r}")

    if "game" not in doc:
        raise ConfigError("missing required key 'game'")
    g = _require_dict(doc["game"], "game")
    _reject_unknown(g, ("payoff", "labels"), "game")
    if "payoff" not in g:
        raise ConfigError("missing required key 'payoff' in game")
    try:
        game = Game(np.array(g["payoff"], dtype=float), tuple(g.get("labels", ())))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid payoff: {exc}") from None

    defaults = ENGINE_PARAMS[engine]
    raw = _require_dict(doc.get("params", {}), "params")
    _reject_unknown(raw, defaults, f"params for engine {engine!r}")
    params = {**defaults, **raw}
    missing = [k for k, v in params.items() if v is None and k not in OPTIONAL_NONE]
    if missing:
        raise ConfigError(f"missing required key 'params.{missing[0]}' for engine {engine!r}")

    params["horizon_t"] = _number(params, "horizon_t", positive=True)
    if params["sample_every"] is None:
        params["sample_every"] = params["horizon_t"] / 200
    params["sample_every"] = _number(params, "sample_every", positive=True)
    params["seed"] = _number(params, "seed", nonneg=True, integer=True)
    for key in ("dt",):
        if key in params:
            params[key] = _number(params, key, positive=True)
    if "mu" in params:
        params["mu"] = _number(params, "mu", nonneg=True)
    if engine == "abm":
        params["N"] = _number(params, "N", integer=True)
        if params["N"] < 2:
            raise ConfigError("params.N must be at least 2")
        params["h"] = _number(params, "h", positive=True)
    if engine == "meanfield":
        params["M"] = _number(params, "M", positive=True, integer=True)
        params["h"] = _number(params, "h", nonneg=True)
        if not isinstance(params["diffusion"], bool):
            raise ConfigError("params.diffusion must be true or false")
        if params["diffusion"] and params["h"] == 0:
            raise ConfigError("params.h must be positive when diffusion is on")
        if params["ensemble"] not in ("sample", "lattice"):
            raise ConfigError("params.ensemble must be 'sample' or 'lattice'")
    if "h" in params and params.get("mu", 0) * params["h"] > 1:
        raise ConfigError(f"memory factor mu*h = {params['mu'] * params['h']:g} must lie in [0, 1]")
    if "tie" in params and params["tie"] not in (LOWEST, UNIFORM):
        raise ConfigError(f"params.tie must be {LOWEST!r} or {UNIFORM!r}")
    if "method" in params and params["method"] not in ("euler", "rk4"):
        raise ConfigError("params.method must be 'euler' or 'rk4'")
    if engine == "meanbr2x2":
        if game.n != 2:
            raise ConfigError("engine 'meanbr2x2' needs a 2x2 game")
        params["l"] = _number(params, "l", nonneg=True)
        br0 = params["br0"]
        if (not isinstance(br0, list) or len(br0) != 2
                or abs(sum(br0) - 1) > 1e-12 or min(br0) < 0):
            raise ConfigError("params.br0 must be a 2-component simplex vector")

    init = None
    if engine in NEEDS_INIT:
        if "init" not in doc:
            raise ConfigError(f"missing required key 'init' for engine {engine!r}")
        d = _require_dict(doc["init"], "init")
        _reject_unknown(d, ("kind", "lo", "hi", "x", "counts"), "init")
        if d.get("kind") not in KINDS:
            raise ConfigError(f"init.kind must be one of {KINDS}")
        try:
            init = InitialDistribution(**d)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid init: {exc}") from None
        if init.n != game.n:
            raise ConfigError(f"init is {init.n}-dimensional but the game has {game.n} actions")
        if engine == "box":
            if game.n != 2 or init.kind != "uniform_box":
                raise ConfigError("engine 'box' needs a 2x2 game and a uniform_box init")
            sides = np.subtract(init.hi, init.lo)
            if abs(sides[0] - sides[1]) > 1e-12:
                raise ConfigError("engine 'box' needs a square init box")
        if engine == "meanfield" and params["ensemble"] == "lattice" and init.kind == "point_mass":
            raise ConfigError("lattice ensembles need a box init")
    elif "init" in doc:
        raise ConfigError(f"key 'init' is not used by engine {engine!r}")

    out = _require_dict(doc.get("output", {}), "output")
    _reject_unknown(out, ("dir", "formats"), "output")
    formats = tuple(out.get("formats", FORMATS))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output format {bad[0]!r}; known: {FORMATS}")

    name = doc.get("name") or (Path(source).stem if source else engine)
    return ExperimentConfig(str(name), engine, game, params, init, out.get("dir"), formats,
                            str(doc.get("description", "")), source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(doc, str(path))


def preset_names() -> list[str]:
    files = resources.files("fplearn") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def preset_path(name: str) -> Path:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return Path(str(resources.files("fplearn") / "presets" / f"{name}.json"))


def load_preset(name: str) -> ExperimentConfig:
    return load_config(preset_path(name))
