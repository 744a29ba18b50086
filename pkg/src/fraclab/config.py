"""Run configuration: strict TOML/JSON parsing into validated objects.

Every section has a fixed key set; unknown keys are rejected by name.  All
cross-field checks of the underlying objects (kernel, grid, data, solver
and verifier geometry) run here, before any computation starts.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .grid import DirichletProblem, Domain, Grid, boundary_data
from .kernel import KernelSpec
from .solver import SolveConfig

KERNEL_KEYS = {"n": 1, "s": 0.4, "p": 2.0, "lam": 1.0, "Lam": 1.0, "family": "constant", "period": 0.25,
               "width": 0.5, "bump_center": None, "seed": None, "allow_supercritical": False}
GRID_KEYS = {"L": None, "h": None, "cells": None, "far_field": True, "omega": None}
OMEGA_KEYS = {"shape": None, "center": None, "size": None}
DATA_KEYS = {"profile": "zero", "center": None, "width": None, "height": None, "position": None,
             "slope": None, "offset": None, "axis": None, "value": None, "path": None}
SOLVER_KEYS = {"grad_tol": None, "energy_tol": 1e-15, "max_iters": 100_000, "delta_schedule": None,
               "shrink": 0.5, "armijo": 1e-4, "method": "newton", "init": "harmonic", "seed": None,
               "stall_window": 200}
OUTPUT_KEYS = {"dir": "runs", "formats": ["csv", "json"]}
VERIFY_KEYS = {
    "caccioppoli": {"draws": 50, "seed": None, "ceiling": math.inf, "hard": False},
    "log": {"x0": None, "R": None, "r": None, "d": [0.01, 0.1, 1.0], "relative": True, "spread": 10.0,
            "hard": False},
    "poincare_log": {"x0": None, "R": None, "r": None, "a": None, "b": math.e, "d": 0.1,
                     "ceiling": math.inf, "hard": False},
    "sup": {"x0": None, "r": None, "deltas": [0.1, 0.5, 1.0], "ceiling": math.inf, "hard": False},
    "degiorgi": {"x0": None, "r": None, "k": 0.0, "J": 20, "delta": 1.0, "safety": 2.0, "hard": False},
    "holder": {"x0": None, "r": None, "levels": 4, "sigma": 0.25, "hard": False},
    "lemma32": {"samples": 1_000_000, "seed": None, "hard": True},
    "tail": {"x0": None, "R": None, "k": 0.0, "sign": "plus", "quadrature": "midpoint", "hard": False},
}
TOP_KEYS = {"seed", "kernel", "grid", "data", "solver", "verify", "output"}


def _strict(section: str, given, allowed: dict) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigurationError(f"[{section}] must be a table")
    for key in given:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {key!r} in [{section}]")
    out = copy.deepcopy(allowed)
    out.update(given)
    return out


@dataclass
class RunConfig:
    raw: dict
    seed: int
    kernel: KernelSpec
    grid: Grid
    problem: DirichletProblem
    solver: SolveConfig
    verify: dict
    output: dict

    @property
    def digest(self) -> str:
        """Hash of the normalized configuration (output section excluded)."""
        body = {k: v for k, v in self.raw.items() if k != "output"}
        text = json.dumps(_jsonable(body), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def load(path) -> dict:
    """Read a TOML (or ``.json``) file into a dictionary."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _point(value, n, default):
    if value is None:
        return default
    pt = np.atleast_1d(np.asarray(value, dtype=float))
    if pt.shape != (n,):
        raise ConfigurationError(f"point {value!r} must have {n} coordinates")
    return pt


def _geometry(omega: Domain, n: int, sec: dict, name: str) -> float:
    """Default ``x0`` to the domain center; return its distance to the boundary."""
    x0 = _point(sec.get("x0"), n, np.asarray(omega.center))
    if not omega.contains(x0[None, :])[0]:
        raise ConfigurationError(f"[verify.{name}] x0 = {x0.tolist()} lies outside the domain")
    sec["x0"] = x0.tolist()
    return omega.boundary_distance(x0)


def parse(raw: dict, seed: int | None = None) -> RunConfig:
    """Validate ``raw`` and build the run objects; ``seed`` overrides the file."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a table")
    for key in raw:
        if key not in TOP_KEYS:
            raise ConfigurationError(f"unknown top-level key {key!r}")
    raw = copy.deepcopy(raw)
    top_seed = int(raw.get("seed", 0) if seed is None else seed)
    if not 0 <= top_seed < 2 ** 64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    raw["seed"] = top_seed

    kern = _strict("kernel", raw.get("kernel"), KERNEL_KEYS)
    if kern["seed"] is None:
        kern["seed"] = top_seed
    kwargs = {k: v for k, v in kern.items() if v is not None}
    if "bump_center" in kwargs:
        kwargs["bump_center"] = tuple(np.atleast_1d(kwargs["bump_center"]).tolist())
    try:
        kernel = KernelSpec(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"[kernel]: {exc}") from None
    raw["kernel"] = kern

    grid_sec = _strict("grid", raw.get("grid"), GRID_KEYS)
    om = _strict("grid.omega", grid_sec["omega"], OMEGA_KEYS)
    if om["shape"] is None:
        om["shape"] = "interval" if kernel.n == 1 else "box"
    if om["center"] is None:
        om["center"] = [0.0] * kernel.n
    if om["size"] is None:
        om["size"] = [1.0]
    omega = Domain(om["shape"], tuple(np.atleast_1d(om["center"]).tolist()),
                   tuple(np.atleast_1d(om["size"]).tolist()))
    grid_sec["omega"] = om
    L = grid_sec["L"]
    if L is None:
        L = float(np.max(omega.extent()) + omega.diameter)
        grid_sec["L"] = L
    if grid_sec["h"] is None and grid_sec["cells"] is None:
        raise ConfigurationError("[grid] needs h or cells")
    if grid_sec["h"] is not None and grid_sec["cells"] is not None:
        raise ConfigurationError("[grid] takes h or cells, not both")
    h = grid_sec["h"] if grid_sec["h"] is not None else 2.0 * L / int(grid_sec["cells"])
    grid_sec["h"] = float(h)
    grid_sec["cells"] = None
    grid = Grid(kernel.n, float(L), float(h), omega)
    raw["grid"] = grid_sec

    data = _strict("data", raw.get("data"), DATA_KEYS)
    params = {k: v for k, v in data.items() if k != "profile" and v is not None}
    if "center" in params:
        params["center"] = tuple(np.atleast_1d(params["center"]).tolist())
    g = boundary_data(grid, data["profile"], **params)
    raw["data"] = data
    problem = DirichletProblem(kernel, grid, g, far_field=bool(grid_sec["far_field"]))

    sol_sec = _strict("solver", raw.get("solver"), SOLVER_KEYS)
    if sol_sec["seed"] is None:
        sol_sec["seed"] = top_seed
    skw = {k: v for k, v in sol_sec.items() if v is not None}
    if "delta_schedule" in skw:
        skw["delta_schedule"] = tuple(skw["delta_schedule"])
    solver = SolveConfig(**skw)
    raw["solver"] = sol_sec

    ver_in = raw.get("verify") or {}
    if not isinstance(ver_in, dict):
        raise ConfigurationError("[verify] must be a table")
    verify = {}
    for name, sec in ver_in.items():
        if name not in VERIFY_KEYS:
            raise ConfigurationError(f"unknown verifier {name!r} in [verify]")
        verify[name] = _strict(f"verify.{name}", sec, VERIFY_KEYS[name])
    raw["verify"] = verify
    for name, sec in verify.items():
        _check_verifier(name, sec, kernel, omega, top_seed)

    out = _strict("output", raw.get("output"), OUTPUT_KEYS)
    for fmt in out["formats"]:
        if fmt not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format {fmt!r}")
    raw["output"] = out
    return RunConfig(raw=raw, seed=top_seed, kernel=kernel, grid=grid, problem=problem, solver=solver,
                     verify=verify, output=out)


def defaults_for(name: str, cfg: RunConfig) -> dict:
    """Verifier section with defaults, for verifiers not named in the file."""
    if name in cfg.verify:
        return cfg.verify[name]
    sec = copy.deepcopy(VERIFY_KEYS[name])
    _check_verifier(name, sec, cfg.kernel, cfg.grid.omega, cfg.seed)
    return sec


def _check_verifier(name: str, sec: dict, kernel: KernelSpec, omega: Domain, seed: int):
    n = kernel.n
    if "seed" in sec and sec["seed"] is None:
        sec["seed"] = seed
    if name == "caccioppoli":
        if int(sec["draws"]) < 1:
            raise ConfigurationError("[verify.caccioppoli] draws must be positive")
    elif name in ("log", "poincare_log"):
        depth = _geometry(omega, n, sec, name)
        if sec["R"] is None:
            sec["R"] = 0.9 * depth
        if sec["r"] is None:
            sec["r"] = sec["R"] / 2
        if sec["R"] > depth:
            raise ConfigurationError(f"[verify.{name}] B_R(x0) leaves the domain")
        if 2 * sec["r"] > sec["R"]:
            raise ConfigurationError(f"[verify.{name}] need 2r <= R")
        ds = sec["d"] if isinstance(sec["d"], list) else [sec["d"]]
        if any(d <= 0 for d in ds):
            raise ConfigurationError(f"[verify.{name}] d must be positive")
        if name == "poincare_log" and sec["b"] <= 1:
            raise ConfigurationError("[verify.poincare_log] b must exceed 1")
    elif name in ("sup", "degiorgi"):
        depth = _geometry(omega, n, sec, name)
        if sec["r"] is None:
            sec["r"] = 0.9 * depth
        if sec["r"] > depth:
            raise ConfigurationError(f"[verify.{name}] B_r(x0) leaves the domain")
        if kernel.sp >= n:
            raise ConfigurationError(f"[verify.{name}] needs sp < n")
        deltas = sec["deltas"] if name == "sup" else [sec["delta"]]
        if any(not 0 < d <= 1 for d in deltas):
            raise ConfigurationError(f"[verify.{name}] delta must lie in (0, 1]")
    elif name == "holder":
        depth = _geometry(omega, n, sec, name)
        if sec["r"] is None:
            sec["r"] = depth / 2
        if 2 * sec["r"] > depth:
            raise ConfigurationError("[verify.holder] B_2r(x0) leaves the domain")
        if int(sec["levels"]) < 4:
            raise ConfigurationError("[verify.holder] levels must be at least 4")
        if not 0 < sec["sigma"] <= 0.25:
            raise ConfigurationError("[verify.holder] sigma must lie in (0, 1/4]")
    elif name == "lemma32":
        if int(sec["samples"]) < 1:
            raise ConfigurationError("[verify.lemma32] samples must be positive")
    elif name == "tail":
        depth = _geometry(omega, n, sec, name)
        if sec["R"] is None:
            sec["R"] = depth
        if sec["R"] <= 0:
            raise ConfigurationError("[verify.tail] R must be positive")
        if sec["sign"] not in ("plus", "minus"):
            raise ConfigurationError("[verify.tail] sign must be 'plus' or 'minus'")
        if sec["quadrature"] not in ("midpoint", "cell"):
            raise ConfigurationError("[verify.tail] quadrature must be 'midpoint' or 'cell'")
