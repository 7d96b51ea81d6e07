"""Run configuration files (TOML).

Grammar::

    [run]
    problem = "square_cantilever"   # catalog name; omit when [problem] is given
    res = 64                        # optional resolution override
    r_min = 3.0                     # optional filter radius in multiples of d_m
    mesh = "voronoi"                # optional mesh kind for the cantilevers
    seed = 0                        # required whenever the mesh is a Voronoi mesh
    output = "run"                  # output directory

    [optimizer]
    max_iters = 400
    tol = 0.01
    method = "mma"                  # or "oc"

    [problem]                       # optional inline definition, same keys as
    name = "custom"                 # ProblemDefinition.to_dict()
    ...
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from vemtopo.benchmarks import get_problem
from vemtopo.errors import ConfigError
from vemtopo.problem import ProblemDefinition
from vemtopo.topopt.optimize import OptimizerOptions

_PROBLEM_KW = ("mesh",)


@dataclass
class RunConfig:
    problem: ProblemDefinition
    output: Path = Path("run")
    seed: int | None = None
    max_iters: int = 400
    tol: float = 0.01
    method: str = "mma"
    source: dict = field(default_factory=dict)

    def options(self, **kw) -> OptimizerOptions:
        return OptimizerOptions(max_iters=self.max_iters, tol=self.tol, method=self.method, **kw)

    def to_dict(self) -> dict:
        return {
            "run": {"output": str(self.output)} | ({} if self.seed is None else {"seed": self.seed}),
            "optimizer": {"max_iters": self.max_iters, "tol": self.tol, "method": self.method},
            "problem": self.problem.to_dict(),
        }


def config_from_dict(data: dict) -> RunConfig:
    run = dict(data.get("run", {}))
    opt = dict(data.get("optimizer", {}))
    seed = run.get("seed")
    try:
        if "problem" in data:
            problem = ProblemDefinition.from_dict(data["problem"])
        elif "problem" in run:
            kw = {k: run[k] for k in _PROBLEM_KW if k in run}
            if seed is not None:
                kw["seed"] = int(seed)
            problem = get_problem(run["problem"], res=run.get("res"), r_min=run.get("r_min"), **kw)
        else:
            raise ConfigError("config names no problem: set run.problem or add a [problem] table")
    except KeyError as exc:
        raise ConfigError(f"invalid problem: {exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid problem: {exc}") from None
    recipe = problem.mesh_recipe
    if recipe.generator == "voronoi":
        # catalog builders carry a default seed, so named problems must state one
        if seed is None and ("problem" not in data or "seed" not in recipe.params):
            raise ConfigError("a seed is required for Voronoi meshes (run.seed)")
        if seed is not None and "problem" in data:
            recipe.params["seed"] = int(seed)
    try:
        cfg = RunConfig(problem, Path(run.get("output", "run")), None if seed is None else int(seed),
                        int(opt.get("max_iters", 400)), float(opt.get("tol", 0.01)),
                        str(opt.get("method", "mma")), data)
        cfg.options()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid optimizer options: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def ensure_output_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory not writable: {path}")
    return path


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{_key(k)} = {_value(x)}" for k, x in v.items() if x is not None) + "}"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def _key(k: str) -> str:
    return k if k.replace("_", "").replace("-", "").isalnum() else _value(str(k))


def dumps_toml(data: dict) -> str:
    """Top-level tables become sections; nested values are written inline."""
    out = []
    for section, body in data.items():
        out.append(f"[{_key(section)}]")
        out += [f"{_key(k)} = {_value(v)}" for k, v in body.items() if v is not None]
        out.append("")
    return "\n".join(out)


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps_toml(cfg.to_dict()))
