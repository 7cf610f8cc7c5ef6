"""TOML experiment configuration: parsing, validation and object construction.

Example::

    suite = "calibrate"

    [operator]
    name = "identity"
    params = { N = 1 }

    [grid]
    box = [-1.0, 1.0]
    cells = 64

    [mask]
    name = "full-box"

    [seeds]
    ensemble = 0
    sampling = 0
"""

from __future__ import annotations

import inspect
import os
from dataclasses import dataclass, field

import tomli

from ..errors import ConfigError, GreenLabError
from ..fem import SolverSettings
from ..grid import MASKS, build_grid, builtin_mask
from ..operator import BUILTINS, builtin
from ..verify.suites import SUITE_NAMES, SuiteContext

MEMORY_ENV = "GREENLAB_MEMORY_MB"
DEFAULT_MEMORY_MB = 4096
RANDOMIZED_SUITES = {"boundary", "regularity", "all"}

_NUM = (int, float)

# section -> key -> (accepted types, required, default)
SCHEMA = {
    "operator": {"name": (str, True, None), "params": (dict, False, {})},
    "grid": {"box": (list, True, None), "cells": ((int, list), True, None)},
    "mask": {"name": (str, False, "full-box"), "params": (dict, False, {})},
    "solver": {"rel_tol": (_NUM, False, 1e-8), "max_iter": (int, False, 20000),
               "method": (str, False, "auto"), "restart": (int, False, 30)},
    "seeds": {"ensemble": (int, False, None), "sampling": (int, False, None)},
    "output": {"dir": (str, False, "greenlab-out"), "fields": (bool, False, False),
               "formats": (list, False, ["json", "csv", "dat"])},
    "green": {"rho_cells": (_NUM, False, 2.0), "exterior_levels": (int, False, 4),
              "pole": (list, False, None), "load": (str, False, None)},
    "regularity": {"ensemble_size": (int, False, 16), "cells": (int, False, 48),
                   "sample_count": (int, False, 100_000)},
}
REQUIRED_SECTIONS = ("operator", "grid")
TOP_LEVEL = {"suite": (str, False, "calibrate")}


@dataclass
class ExperimentConfig:
    suite: str
    operator: dict
    grid: dict
    mask: dict
    solver: dict
    seeds: dict
    output: dict
    green: dict
    regularity: dict
    raw: dict = field(default_factory=dict, repr=False)

    def as_dict(self):
        return {"suite": self.suite, **{s: dict(getattr(self, s)) for s in SCHEMA}}

    @property
    def cells(self):
        c = self.grid["cells"]
        return (c, c, c) if isinstance(c, int) else tuple(c)

    @property
    def box(self):
        b = self.grid["box"]
        return [b, b, b] if len(b) == 2 and not isinstance(b[0], list) else b

    def build_spec(self):
        return builtin(self.operator["name"], **self.operator["params"])

    def build_mask(self, cells=None):
        g = build_grid(self.box, self.cells if cells is None else cells)
        return builtin_mask(g, self.mask["name"], **self.mask["params"])

    def settings(self):
        s = self.solver
        return SolverSettings(rel_tol=float(s["rel_tol"]), max_iter=s["max_iter"], method=s["method"],
                              restart=s["restart"], seed=self.seeds["ensemble"] or 0)

    def context(self):
        g = self.green
        return SuiteContext(
            spec=self.build_spec(), mask=self.build_mask(), settings=self.settings(),
            rho_cells=float(g["rho_cells"]), exterior_levels=g["exterior_levels"],
            pole=None if g["pole"] is None else tuple(map(float, g["pole"])),
            seed=self.seeds["ensemble"] or 0, sampling_seed=self.seeds["sampling"] or 0,
            ensemble_size=self.regularity["ensemble_size"], regularity_cells=self.regularity["cells"],
            sample_count=self.regularity["sample_count"], mask_name=self.mask["name"],
            mask_params=dict(self.mask["params"]))


def _type_name(t):
    if isinstance(t, tuple):
        return " or ".join(_type_name(x) for x in t)
    return {int: "integer", float: "float", str: "string", bool: "boolean", list: "array",
            dict: "table"}[t]


def _check_type(path, value, types):
    types = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(path, f"expected {_type_name(types)}, got boolean")
    if not isinstance(value, types):
        raise ConfigError(path, f"expected {_type_name(types)}, got {type(value).__name__}")


def _section(doc, name):
    table = doc.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(name, "expected a table")
    out = {}
    for key in table:
        if key not in SCHEMA[name]:
            raise ConfigError(f"{name}.{key}", "unknown key")
    for key, (types, required, default) in SCHEMA[name].items():
        path = f"{name}.{key}"
        if key not in table:
            if required:
                raise ConfigError(path, "missing required key")
            out[key] = default
            continue
        _check_type(path, table[key], types)
        out[key] = table[key]
    return out


def _check_params(path, factory, params, skip=()):
    sig = inspect.signature(factory)
    names = [p for p in sig.parameters if p not in skip]
    for k in params:
        if k not in names:
            raise ConfigError(f"{path}.{k}", f"unknown parameter (accepted: {', '.join(names)})")


def _check_box(box):
    def pair(v, path):
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(t, _NUM) and not isinstance(t, bool)
                                                           for t in v)):
            raise ConfigError(path, "expected [lo, hi]")
        if not v[0] < v[1]:
            raise ConfigError(path, "need lo < hi")
    if len(box) == 2 and not isinstance(box[0], list):
        pair(box, "grid.box")
    elif len(box) == 3:
        for i, v in enumerate(box):
            pair(v, f"grid.box[{i}]")
    else:
        raise ConfigError("grid.box", "expected [lo, hi] or three [lo, hi] pairs")


def _check_cells(cells):
    vals = [cells] if isinstance(cells, int) else cells
    if isinstance(cells, list) and len(cells) != 3:
        raise ConfigError("grid.cells", "expected an integer or three integers")
    for v in vals:
        if not isinstance(v, int) or isinstance(v, bool) or v < 4:
            raise ConfigError("grid.cells", "cell counts must be integers >= 4")


def memory_budget_mb():
    raw = os.environ.get(MEMORY_ENV)
    if raw is None:
        return DEFAULT_MEMORY_MB
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(MEMORY_ENV, f"not a number: {raw!r}") from None


def memory_estimate_mb(cells, N, levels=1):
    """Rough peak: two assembled systems (forward, transpose) plus Krylov work vectors."""
    nodes = 1
    for c in cells:
        nodes *= c + 1
    dofs = nodes * N
    per_system = dofs * 27 * N * 12
    work = dofs * N * 8 * 40
    fields = dofs * N * 8 * levels
    return (2 * per_system + work + fields) / 2 ** 20


def parse_config(text, suite=None, seed=None):
    """Validate TOML ``text``; ``suite`` and ``seed`` override the file like the CLI flags do."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<document>", f"invalid TOML: {exc}") from None
    for key in doc:
        if key not in SCHEMA and key not in TOP_LEVEL:
            raise ConfigError(key, "unknown key")
    for name in REQUIRED_SECTIONS:
        if name not in doc:
            raise ConfigError(name, "missing required section")
    sections = {name: _section(doc, name) for name in SCHEMA}
    top = doc.get("suite", TOP_LEVEL["suite"][2])
    _check_type("suite", top, str)
    if suite is not None:
        top = suite
    if top not in SUITE_NAMES and top != "all":
        raise ConfigError("suite", f"unknown suite {top!r} (choose from {', '.join(SUITE_NAMES + ('all',))})")

    op = sections["operator"]
    if op["name"] not in BUILTINS:
        raise ConfigError("operator.name", f"unknown operator {op['name']!r}")
    _check_params("operator.params", BUILTINS[op["name"]], op["params"])
    m = sections["mask"]
    if m["name"] not in MASKS:
        raise ConfigError("mask.name", f"unknown mask {m['name']!r}")
    _check_params("mask.params", MASKS[m["name"]], m["params"], skip=("grid",))
    _check_box(sections["grid"]["box"])
    _check_cells(sections["grid"]["cells"])
    s = sections["solver"]
    if s["method"] not in ("auto", "cg", "gmres", "block"):
        raise ConfigError("solver.method", "expected auto, cg, gmres or block")
    if not 0 < s["rel_tol"] < 1:
        raise ConfigError("solver.rel_tol", "must lie in (0, 1)")
    g = sections["green"]
    if g["pole"] is not None and (len(g["pole"]) != 3 or not all(isinstance(v, _NUM) for v in g["pole"])):
        raise ConfigError("green.pole", "expected three numbers")
    if g["exterior_levels"] < 0:
        raise ConfigError("green.exterior_levels", "must be >= 0")
    if g["rho_cells"] < 2:
        raise ConfigError("green.rho_cells", "must be >= 2 (resolvability floor)")
    if sections["regularity"]["ensemble_size"] < 16:
        raise ConfigError("regularity.ensemble_size", "must be >= 16")
    bad = [f for f in sections["output"]["formats"] if f not in ("json", "csv", "dat")]
    if bad:
        raise ConfigError("output.formats", f"unknown format {bad[0]!r}")

    seeds = sections["seeds"]
    if seed is not None:
        seeds = {"ensemble": int(seed), "sampling": int(seed)}
    if top in RANDOMIZED_SUITES:
        for k in ("ensemble", "sampling"):
            if seeds[k] is None:
                raise ConfigError(f"seeds.{k}", f"required by suite {top!r}")
    sections["seeds"] = seeds

    cfg = ExperimentConfig(suite=top, raw=doc, **sections)
    try:
        N = cfg.build_spec().N
    except GreenLabError as exc:
        raise ConfigError("operator.params", str(exc)) from None
    except TypeError as exc:
        raise ConfigError("operator.params", str(exc)) from None
    need = memory_estimate_mb(cfg.cells, N, 1 + g["exterior_levels"])
    budget = memory_budget_mb()
    if need > budget:
        raise ConfigError("grid.cells", f"estimated memory {need:.0f} MB exceeds the budget of {budget:.0f} MB "
                                        f"(set {MEMORY_ENV} to raise it)")
    return cfg


def load_config(path, suite=None, seed=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, suite, seed)
