"""Experiment configuration: JSON schema, loading and object construction."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import domain as dom
from .balayage import BoundaryData
from .errors import DataError, DomainError, ValidationError
from .measure import AnnulusRegion, BallRegion, MeasureSpec, check_region

ANALYSES = ("gauge", "uf", "sandwich", "kappa", "existence", "boundary_limit", "riccati", "u_k")

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_point_list = {"type": "array", "items": _vector}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "measure", "analyses"],
    "properties": {
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim"],
            "properties": {
                "dim": {"type": "integer", "minimum": 3},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "center": _vector,
                "x0": _vector,
            },
        },
        "measure": {
            "type": "object",
            "required": ["kind"],
            "oneOf": [
                {
                    "additionalProperties": False,
                    "required": ["kind", "amplitude", "support"],
                    "properties": {
                        "kind": {"const": "radial_density"},
                        "profile": {"enum": ["constant", "linear", "bump"]},
                        "amplitude": {"type": "number", "minimum": 0},
                        "support": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "resolution": {"$ref": "#/$defs/resolution"},
                        "rule": {"enum": ["gauss", "spiral"]},
                        "target_norm": {"type": "number", "minimum": 0},
                    },
                },
                {
                    "additionalProperties": False,
                    "required": ["kind", "radius", "density"],
                    "properties": {
                        "kind": {"const": "uniform_ball_density"},
                        "center": _vector,
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "density": {"type": "number", "minimum": 0},
                        "resolution": {"$ref": "#/$defs/resolution"},
                        "rule": {"enum": ["gauss", "spiral"]},
                        "target_norm": {"type": "number", "minimum": 0},
                    },
                },
                {
                    "additionalProperties": False,
                    "required": ["kind", "atoms"],
                    "properties": {
                        "kind": {"const": "atoms"},
                        "atoms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["point", "mass"],
                                "properties": {"point": _vector, "mass": {"type": "number", "minimum": 0}},
                            },
                        },
                    },
                },
            ],
        },
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f": {
                    "type": "object",
                    "required": ["kind"],
                    "oneOf": [
                        {
                            "additionalProperties": False,
                            "required": ["kind", "value"],
                            "properties": {"kind": {"const": "constant"}, "value": {"type": "number"}},
                        },
                        {
                            "additionalProperties": False,
                            "required": ["kind", "constant", "slope"],
                            "properties": {
                                "kind": {"const": "affine"},
                                "constant": {"type": "number"},
                                "slope": _vector,
                            },
                        },
                        {
                            "additionalProperties": False,
                            "required": ["kind", "points", "masses"],
                            "properties": {
                                "kind": {"const": "atoms"},
                                "points": _point_list,
                                "masses": {"type": "array", "items": {"type": "number"}},
                            },
                        },
                        {
                            "additionalProperties": False,
                            "required": ["kind"],
                            "properties": {"kind": {"const": "harmonic_measure"}},
                        },
                    ],
                },
                "nodes": {"type": "integer", "minimum": 4},
                "rule": {"enum": ["gauss", "spiral"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
                "max_terms": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "norm_method": {"enum": ["power_iteration", "dense_eigen"]},
                "max_nodes": {"type": "integer", "minimum": 1},
            },
        },
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": _point_list,
                "sample_count": {"type": "integer", "minimum": 1},
                "z_count": {"type": "integer", "minimum": 1},
                "kappa_samples": {"type": "integer", "minimum": 1},
                "boundary_steps": {"type": "integer", "minimum": 1, "maximum": 40},
                "riccati_grid": {"type": "integer", "minimum": 16},
                "C_suff": {"type": "number", "minimum": 1},
                "region": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["center"],
                    "properties": {
                        "center": _vector,
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "inner": {"type": "number", "minimum": 0},
                        "outer": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "analyses": {"type": "array", "minItems": 1, "items": {"enum": list(ANALYSES)}, "uniqueItems": True},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string", "minLength": 1},
                "report": {"type": "string", "minLength": 1},
                "csv": {"type": "boolean"},
            },
        },
    },
    "$defs": {
        "resolution": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 2,
            "maxItems": 2,
        }
    },
}

DEFAULTS = {
    "boundary": {"f": {"kind": "constant", "value": 1.0}, "nodes": 200, "rule": "gauss"},
    "solver": {"tol": 1e-10, "max_terms": 5000, "seed": 0, "norm_method": "power_iteration", "max_nodes": 16384},
    "evaluation": {"sample_count": 20, "z_count": 12, "kappa_samples": 20000, "boundary_steps": 10,
                   "riccati_grid": 2000},
    "output": {"dir": ".", "report": "report.json", "csv": True},
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ConfigError(ValidationError):
    """Config is not schema-valid or describes an impossible configuration."""


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _matching_branch(err):
    # the branch whose "kind" constant matches explains the failure best
    kind_failed = {e.schema_path[0] for e in err.context if list(e.relative_path) == ["kind"]}
    chosen = [e for e in err.context if e.schema_path[0] not in kind_failed]
    return chosen or err.context


def validate_document(doc) -> None:
    """Raise :class:`ConfigError` naming the path of the first schema violation."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    err = errors[0]
    # oneOf failures hide the useful message in the best-matching branch
    if err.validator == "oneOf" and err.context:
        best = jsonschema.exceptions.best_match(_matching_branch(err))
        path = ".".join([str(p) for p in err.absolute_path] + [str(p) for p in best.relative_path])
        raise ConfigError(f"{path or '<root>'}: {best.message}", path or "<root>")
    raise ConfigError(f"{_path(err)}: {err.message}", _path(err))


def load(path) -> dict:
    """Read and schema-check a config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "<file>") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<file>") from exc
    validate_document(doc)
    return doc


def with_defaults(doc: dict) -> dict:
    out = copy.deepcopy(doc)
    for block, values in DEFAULTS.items():
        merged = dict(values)
        merged.update(out.get(block, {}))
        out[block] = merged
    return out


@dataclass
class Experiment:
    """Objects built from a validated config."""

    config: dict
    domain: dom.BallDomain
    spec: MeasureSpec
    resolution: tuple
    rule: str
    target_norm: float | None
    boundary: BoundaryData
    quadrature: dom.SphereQuadrature
    points: np.ndarray
    region: object


def _semantic(path, fn, *args):
    try:
        return fn(*args)
    except (ValidationError, DomainError, DataError) as exc:
        sub = getattr(exc, "path", None)
        full = f"{path}.{sub}" if sub else path
        raise ConfigError(f"{full}: {exc}", full) from exc


def _domain(block) -> dom.BallDomain:
    n = block["dim"]
    center = block.get("center", [0.0] * n)
    return dom.BallDomain(n, np.asarray(center, dtype=float), block.get("radius", 1.0), block.get("x0"))


def _spec(block, d: dom.BallDomain) -> MeasureSpec:
    kind = block["kind"]
    if kind == "radial_density":
        spec = MeasureSpec.radial(block.get("profile", "constant"), block["amplitude"], block["support"])
    elif kind == "uniform_ball_density":
        spec = MeasureSpec.uniform_ball(block.get("center", list(d.center)), block["radius"], block["density"])
    else:
        spec = MeasureSpec.from_atoms([(a["point"], a["mass"]) for a in block["atoms"]])
    spec.validate(d)
    return spec


def _boundary(block, d: dom.BallDomain, q: dom.SphereQuadrature) -> BoundaryData:
    kind = block["kind"]
    if kind == "constant":
        return BoundaryData.constant(block["value"])
    if kind == "affine":
        slope = np.asarray(block["slope"], dtype=float)
        if slope.shape != (d.dim,):
            raise ValidationError("slope must have the domain dimension", "slope")
        vals = block["constant"] + ((q.nodes - d.center) / d.radius) @ slope
        return BoundaryData.on_nodes(vals)
    if kind == "atoms":
        pts = np.asarray(block["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != d.dim:
            raise ValidationError("atom points must have the domain dimension", "points")
        d.check_boundary(pts)
        return BoundaryData.atoms(pts, block["masses"])
    return BoundaryData.harmonic_measure(d, q)


def _region(block, d: dom.BallDomain):
    if block is None:
        region = BallRegion(tuple(d.center), 0.25 * d.radius)
    elif "radius" in block:
        region = BallRegion(tuple(block["center"]), block["radius"])
    elif "outer" in block:
        region = AnnulusRegion(tuple(block["center"]), block.get("inner", 0.0), block["outer"])
    else:
        raise ValidationError("region needs radius or outer", "region")
    check_region(region, d)
    if not region.inside(d):
        raise ValidationError("region must lie strictly inside the domain", "region")
    return region


def build(doc: dict) -> Experiment:
    """Turn a schema-valid document into domain, measure and boundary objects."""
    cfg = with_defaults(doc)
    d = _semantic("domain", _domain, cfg["domain"])
    spec = _semantic("measure", _spec, cfg["measure"], d)
    mb = cfg["measure"]
    bb = cfg["boundary"]
    q = _semantic("boundary", dom.sphere_quadrature, d, bb["nodes"], bb["rule"])
    f = _semantic("boundary.f", _boundary, bb["f"], d, q)
    ev = cfg["evaluation"]
    pts = np.atleast_2d(np.asarray(ev.get("points", [list(d.x0)]), dtype=float))
    if pts.shape[1] != d.dim:
        raise ConfigError("evaluation.points: wrong dimension", "evaluation.points")
    _semantic("evaluation.points", d.check_interior, pts)
    region = _semantic("evaluation.region", _region, ev.get("region"), d)
    return Experiment(cfg, d, spec, tuple(mb.get("resolution", (16, 64))), mb.get("rule", "gauss"),
                      mb.get("target_norm"), f, q, pts, region)


def set_path(doc: dict, path: str, value: float) -> dict:
    """Copy of ``doc`` with the numeric entry at dotted ``path`` replaced."""
    out = copy.deepcopy(doc)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        if isinstance(node, list):
            k = int(k)
        try:
            node = node[k]
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: no such config entry", path) from exc
    last = keys[-1]
    try:
        if isinstance(node, list):
            last = int(last)
        current = node[last]
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: no such config entry", path) from exc
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"{path}: not a numeric entry", path)
    node[last] = int(value) if isinstance(current, int) and float(value).is_integer() else float(value)
    validate_document(out)
    return out
