"""Scenario configuration: versioned YAML schema with total validation.

A scenario file describes one desk experiment: mesh, initial crack, material,
surface energy, boundary displacement, and the per-command knobs.  Parsing is
total: any unknown key, missing requirement, or type mismatch raises
ConfigError with a dotted path to the offending field, so CI failures point at
the exact line of the config rather than at a traceback downstream.

Boundary data and position-dependent toughness are expression strings over
x, y (and t for load scaling) evaluated in a whitelisted numpy namespace; no
builtins are reachable from expressions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import yaml

from .geometry import (CrackSet, Mesh, ball_region, build_interval_mesh,
                       build_rect_mesh, build_slit_disk_mesh, crack_from_path,
                       crack_from_paths, empty_crack, read_mesh, whole_region)
from .elastostatics import BoundaryDisplacement
from .energetics import MaterialSpec, SurfaceEnergySpec
from .quasistatic import LoadSchedule

SCHEMA = "fracturelab/1"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------

_EXPR_NAMES = {
    "sign": np.sign, "abs": np.abs, "sqrt": np.sqrt, "exp": np.exp,
    "log": np.log, "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "tanh": np.tanh, "arctan2": np.arctan2, "hypot": np.hypot,
    "where": np.where, "minimum": np.minimum, "maximum": np.maximum,
    "clip": np.clip, "pi": math.pi, "e": math.e,
}


def compile_expression(expr: str, where: str) -> Callable[..., np.ndarray]:
    """Compile an expression over x, y, t into a vectorized callable.

    The callable takes (points, t) with points of shape (n, dim); x is the
    first coordinate and y the second (y evaluates to 0.0 in 1D).  Unknown
    names fail at compile probing, not at solve time.
    """
    if not isinstance(expr, str) or not expr.strip():
        raise ConfigError(f"{where}: expected a nonempty expression string")
    try:
        code = compile(expr, f"<{where}>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: {exc.msg} at column {exc.offset}")
    allowed = set(_EXPR_NAMES) | {"x", "y", "t"}
    unknown = sorted(set(code.co_names) - allowed)
    if unknown:
        raise ConfigError(
            f"{where}: unknown names {', '.join(unknown)}; available: "
            "x, y, t and " + ", ".join(sorted(_EXPR_NAMES)))

    def evaluate(points: np.ndarray, t: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        env = dict(_EXPR_NAMES)
        env["x"] = pts[:, 0]
        env["y"] = pts[:, 1] if pts.shape[1] > 1 else np.zeros(pts.shape[0])
        env["t"] = t
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float),
                               (pts.shape[0],)).copy()

    evaluate.expression = expr
    return evaluate


# ---------------------------------------------------------------------------
# Schema walk
# ---------------------------------------------------------------------------

_ALLOWED: dict[str, set[str]] = {
    "": {"schema", "mesh", "crack", "material", "surface", "boundary",
         "schedule", "search", "measures", "state", "evolve", "verify",
         "output"},
    "mesh": {"kind", "length", "segments", "width", "height", "resolution",
             "pattern", "radius", "h", "path"},
    "crack": {"nodes", "paths", "slit"},
    "material": {"kind", "mu"},
    "surface": {"kind", "G", "expr", "bounds"},
    "boundary": {"expr", "breaks"},
    "schedule": {"times"},
    "search": {"depth", "budget", "nucleation", "mode"},
    "measures": {"radii", "fan", "region"},
    "measures.region": {"kind", "center", "r"},
    "state": {"kind", "t", "amplitude"},
    "evolve": {"modes", "hop_depth"},
    "verify": {"suites", "pairs", "inject_nonequilibrium"},
    "output": {"dir"},
}


def _require_mapping(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'document'}: expected a mapping, "
                          f"got {type(node).__name__}")
    return node


def _reject_unknown(node: dict, path: str) -> None:
    allowed = _ALLOWED.get(path)
    if allowed is None:
        return
    for key in node:
        if not isinstance(key, str) or key not in allowed:
            dotted = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"{dotted}: unknown key; allowed under "
                              f"{path or 'the document root'}: "
                              + ", ".join(sorted(allowed)))
    for key, child in node.items():
        if isinstance(child, dict):
            _reject_unknown(child, f"{path}.{key}" if path else key)


def _number(node: dict, key: str, path: str, default=None,
            positive: bool = False) -> float | None:
    if key not in node:
        if default is not None or key in ("t",):
            return default
        raise ConfigError(f"{path}.{key}: required")
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, "
                          f"got {type(v).__name__}")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v}")
    return float(v)


def _integer(node: dict, key: str, path: str, default=None,
             minimum: int | None = None) -> int:
    if key not in node:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, "
                          f"got {type(v).__name__}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {v}")
    return v


def _boolean(node: dict, key: str, path: str, default: bool) -> bool:
    if key not in node:
        return default
    v = node[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected true/false, "
                          f"got {type(v).__name__}")
    return v


def _choice(node: dict, key: str, path: str, options: tuple[str, ...],
            default: str | None = None) -> str:
    if key not in node:
        if default is None:
            raise ConfigError(f"{path}.{key}: required "
                              f"(one of {', '.join(options)})")
        return default
    v = node[key]
    if v not in options:
        raise ConfigError(f"{path}.{key}: expected one of "
                          f"{', '.join(options)}, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# Scenario object
# ---------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    """Validated scenario with builders for every domain object.

    `raw` is the parsed document (echoed into reports); `sha256` is the
    content hash of its canonical JSON form, identifying the scenario
    independent of YAML formatting.
    """

    raw: dict
    sha256: str
    _slit_path: list[int] | None = field(default=None, repr=False)
    _mesh: Mesh | None = field(default=None, repr=False)

    # -- mesh and crack -----------------------------------------------------

    def build_mesh(self) -> Mesh:
        if self._mesh is not None:
            return self._mesh
        node = _require_mapping(self.raw.get("mesh"), "mesh")
        kind = _choice(node, "kind", "mesh",
                       ("interval", "rect", "disk", "file"))
        if kind == "interval":
            mesh = build_interval_mesh(
                _number(node, "length", "mesh", positive=True),
                _integer(node, "segments", "mesh", minimum=2))
        elif kind == "rect":
            mesh = build_rect_mesh(
                _number(node, "width", "mesh", positive=True),
                _number(node, "height", "mesh", positive=True),
                _integer(node, "resolution", "mesh", minimum=2),
                _choice(node, "pattern", "mesh",
                        ("alternate", "uniform"), "alternate"))
        elif kind == "disk":
            mesh, self._slit_path = build_slit_disk_mesh(
                _number(node, "radius", "mesh", 1.0, positive=True),
                _number(node, "h", "mesh", 1.0 / 64.0, positive=True))
        else:
            path = node.get("path")
            if not isinstance(path, str):
                raise ConfigError("mesh.path: required file path")
            try:
                mesh = read_mesh(path)
            except OSError as exc:
                raise ConfigError(f"mesh.path: cannot read {path}: {exc}")
        self._mesh = mesh
        return mesh

    def build_crack(self) -> CrackSet:
        mesh = self.build_mesh()
        node = self.raw.get("crack")
        if node is None:
            return empty_crack(mesh)
        node = _require_mapping(node, "crack")
        if _boolean(node, "slit", "crack", False):
            if self._slit_path is None:
                raise ConfigError("crack.slit: needs mesh.kind disk")
            if "nodes" in node or "paths" in node:
                raise ConfigError("crack.slit: exclusive with nodes/paths")
            return crack_from_path(mesh, self._slit_path)
        if "nodes" in node and "paths" in node:
            raise ConfigError("crack.nodes: exclusive with crack.paths")
        if "nodes" in node:
            return crack_from_path(mesh, _node_list(node["nodes"],
                                                    "crack.nodes"))
        if "paths" in node:
            paths = node["paths"]
            if not isinstance(paths, list) or not paths:
                raise ConfigError("crack.paths: expected a nonempty list "
                                  "of node paths")
            return crack_from_paths(mesh, [
                _node_list(p, f"crack.paths[{i}]")
                for i, p in enumerate(paths)])
        return empty_crack(mesh)

    # -- physics ------------------------------------------------------------

    def material(self) -> MaterialSpec:
        node = _require_mapping(self.raw.get("material", {"kind": "antiplane"}),
                                "material")
        _choice(node, "kind", "material", ("antiplane",), "antiplane")
        return MaterialSpec("antiplane",
                            mu=_number(node, "mu", "material", 1.0,
                                       positive=True))

    def surface(self) -> SurfaceEnergySpec:
        node = _require_mapping(self.raw.get("surface", {}), "surface")
        kind = _choice(node, "kind", "surface", ("griffith", "weighted"),
                       "griffith")
        if kind == "griffith":
            return SurfaceEnergySpec("griffith",
                                     G=_number(node, "G", "surface", 1.0,
                                               positive=True))
        fn = compile_expression(node.get("expr", ""), "surface.expr")
        bounds = node.get("bounds")
        if bounds is not None:
            if (not isinstance(bounds, list) or len(bounds) != 2
                    or not all(isinstance(b, (int, float)) for b in bounds)
                    or bounds[0] <= 0 or bounds[1] < bounds[0]):
                raise ConfigError("surface.bounds: expected [lo, hi] with "
                                  "0 < lo <= hi")
            bounds = (float(bounds[0]), float(bounds[1]))
        return SurfaceEnergySpec("weighted", weight=lambda p: fn(p),
                                 weight_bounds=bounds)

    def boundary_at(self, t: float) -> BoundaryDisplacement:
        node = _require_mapping(self.raw.get("boundary"), "boundary")
        fn = compile_expression(node.get("expr", ""), "boundary.expr")
        breaks = _boolean(node, "breaks", "boundary", False)
        return BoundaryDisplacement(
            lambda p, t=float(t): fn(p, t),
            label=f"{fn.expression} @ t={t:g}", breaks=breaks)

    def schedule(self) -> LoadSchedule:
        node = _require_mapping(self.raw.get("schedule"), "schedule")
        times = node.get("times")
        if (not isinstance(times, list) or len(times) < 1
                or not all(isinstance(v, (int, float))
                           and not isinstance(v, bool) for v in times)):
            raise ConfigError("schedule.times: expected a list of numbers")
        times = tuple(float(v) for v in times)
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ConfigError("schedule.times: must be strictly increasing")
        return LoadSchedule(times, self.boundary_at)

    # -- command knobs ------------------------------------------------------

    def search_params(self) -> dict:
        node = _require_mapping(self.raw.get("search", {}), "search")
        return {
            "depth": _integer(node, "depth", "search", 1, minimum=1),
            "budget": _integer(node, "budget", "search", 10000, minimum=1),
            "nucleation": _boolean(node, "nucleation", "search", False),
            "mode": _choice(node, "mode", "search",
                            ("exhaustive", "greedy"), "exhaustive"),
        }

    def measure_params(self) -> dict:
        node = _require_mapping(self.raw.get("measures", {}), "measures")
        radii = node.get("radii")
        if radii is not None:
            if (not isinstance(radii, list) or len(radii) < 3
                    or not all(isinstance(v, (int, float))
                               and not isinstance(v, bool) and v > 0
                               for v in radii)):
                raise ConfigError("measures.radii: expected >= 3 positive "
                                  "numbers")
            if any(b >= a for a, b in zip(radii[:-1], radii[1:])):
                raise ConfigError("measures.radii: must be strictly "
                                  "decreasing")
            radii = [float(v) for v in radii]
        return {
            "radii": radii,
            "fan": _integer(node, "fan", "measures", 16, minimum=2),
            "region": node.get("region"),
        }

    def region(self, mesh: Mesh):
        raw = self.measure_params()["region"]
        if raw is None:
            return whole_region(mesh)
        node = _require_mapping(raw, "measures.region")
        kind = _choice(node, "kind", "measures.region", ("whole", "ball"),
                       "whole")
        if kind == "whole":
            return whole_region(mesh)
        center = node.get("center")
        if (not isinstance(center, list) or len(center) != mesh.dim
                or not all(isinstance(v, (int, float)) for v in center)):
            raise ConfigError(f"measures.region.center: expected {mesh.dim} "
                              "coordinates")
        return ball_region(mesh, [float(v) for v in center],
                           _number(node, "r", "measures.region",
                                   positive=True))

    def state_params(self) -> dict:
        node = _require_mapping(self.raw.get("state", {}), "state")
        kind = _choice(node, "kind", "state", ("solve", "manufactured"),
                       "solve")
        return {
            "kind": kind,
            "t": _number(node, "t", "state", 1.0),
            "amplitude": _number(node, "amplitude", "state", 1.0,
                                 positive=True),
        }

    def evolve_params(self) -> dict:
        node = _require_mapping(self.raw.get("evolve", {}), "evolve")
        modes = node.get("modes", ["minimal"])
        if (not isinstance(modes, list) or not modes
                or not all(m in ("minimal", "equilibrium") for m in modes)):
            raise ConfigError("evolve.modes: expected a nonempty subset of "
                              "[minimal, equilibrium]")
        return {
            "modes": list(dict.fromkeys(modes)),
            "hop_depth": _integer(node, "hop_depth", "evolve", 1, minimum=1),
        }

    def verify_params(self) -> dict:
        node = _require_mapping(self.raw.get("verify", {}), "verify")
        suites = node.get("suites", ["battery", "hypotheses", "axioms"])
        known = ("battery", "hypotheses", "axioms", "chain")
        if (not isinstance(suites, list) or not suites
                or not all(s in known for s in suites)):
            raise ConfigError("verify.suites: expected a nonempty subset of "
                              f"[{', '.join(known)}]")
        return {
            "suites": list(dict.fromkeys(suites)),
            "pairs": _integer(node, "pairs", "verify", 100, minimum=1),
            "inject_nonequilibrium": _boolean(node, "inject_nonequilibrium",
                                              "verify", False),
        }

    def output_dir(self) -> str:
        node = _require_mapping(self.raw.get("output", {}), "output")
        d = node.get("dir", "out")
        if not isinstance(d, str) or not d:
            raise ConfigError("output.dir: expected a directory path")
        return d


def _node_list(raw: Any, path: str) -> list[int]:
    if (not isinstance(raw, list) or not raw
            or not all(isinstance(v, int) and not isinstance(v, bool)
                       and v >= 0 for v in raw)):
        raise ConfigError(f"{path}: expected a list of node indices")
    return list(raw)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}")
    return parse_config(doc)


def parse_config(doc: Any) -> ScenarioConfig:
    doc = _require_mapping(doc, "")
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {schema!r}")
    _reject_unknown(doc, "")
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                           default=str)
    sha = hashlib.sha256(canonical.encode()).hexdigest()
    cfg = ScenarioConfig(doc, sha)
    # probe every section now so errors surface at load, not mid-run;
    # mesh-free scenarios are fine (verify runs on canonical setups) as
    # long as nothing else references geometry
    if "mesh" in doc:
        cfg.build_mesh()
        cfg.build_crack()
    elif "crack" in doc:
        raise ConfigError("crack: needs a mesh section")
    cfg.material()
    cfg.surface()
    if "boundary" in doc:
        cfg.boundary_at(0.0)
    if "schedule" in doc:
        cfg.schedule()
    cfg.search_params()
    cfg.measure_params()
    cfg.state_params()
    cfg.evolve_params()
    cfg.verify_params()
    cfg.output_dir()
    return cfg
