"""JSON experiment configurations and their schemas.

A configuration is a JSON object with a mandatory ``experiment`` field
selecting one of ``quarter_circle``, ``cantilever``, ``heavy_top`` or
``generic``; each experiment has its own closed schema (unknown keys are
rejected). Validation errors name the offending key as a JSON path such
as ``$.loads.force_1``.
"""

import json
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ConfigError

KINDS = ["r12", "r3so3", "se3"]

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}
_common = {
    "schema_version": {"const": 1},
    "experiment": {"type": "string"},
    "name": {"type": "string"},
    "out": {"type": "string"},
}
_element = {
    "kind": {"enum": KINDS},
    "order": {"enum": [1, 2]},
    "integration": {"enum": ["full", "reduced"]},
}


def _closed(properties, required=()):
    return {
        "type": "object",
        "properties": {**_common, **properties},
        "required": ["experiment", *required],
        "additionalProperties": False,
    }


SCHEMAS = {
    "quarter_circle": _closed(
        {
            "kinds": {"type": "array", "items": {"enum": KINDS}, "minItems": 1},
            "order": {"enum": [1, 2]},
            "n_nodes": {"type": "integer", "minimum": 2},
            "samples": {"type": "integer", "minimum": 2},
        }
    ),
    "cantilever": _closed(
        {
            **_element,
            "rho": _pos,
            "atol": _pos,
            "n_el": {
                "oneOf": [
                    {"type": "integer", "minimum": 1},
                    {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                ]
            },
            "n_load_steps": {"type": "integer", "minimum": 1},
            "max_iter": {"type": "integer", "minimum": 1},
            "samples": {"type": "integer", "minimum": 2},
            "plateau_guard": {"type": "boolean"},
            "jobs": {"type": "integer", "minimum": 1},
            "reference": {
                "type": "object",
                "properties": {
                    **_element,
                    "n_el": {"type": "integer", "minimum": 1},
                    "cache_dir": {"type": "string"},
                    "paper_size": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        }
    ),
    "heavy_top": _closed(
        {
            "stiffness_factor": _pos,
            "t_end": _pos,
            "atol": _pos,
            "rtol": _pos,
            "rigid_tol": _pos,
            "fixed_step": _pos,
            "n_samples": {"type": "integer", "minimum": 2},
        }
    ),
    "generic": _closed(
        {
            **_element,
            "n_el": {"type": "integer", "minimum": 1},
            "q0": {"type": "array", "items": {"type": "number"}},
            "geometry": {
                "type": "object",
                "properties": {"length": _pos, "origin": _vec3, "psi": _vec3},
                "additionalProperties": False,
            },
            "section": {
                "type": "object",
                "properties": {
                    "shape": {"enum": ["circular", "rectangular"]},
                    "radius": _pos,
                    "width": _pos,
                    "height": _pos,
                    "rho0": _pos,
                    "E": _pos,
                    "G": _pos,
                    "nu": {"type": "number", "minimum": -1, "exclusiveMaximum": 0.5},
                },
                "required": ["shape", "E"],
                "additionalProperties": False,
            },
            "stiffness_scale": _pos,
            "loads": {
                "type": "object",
                "properties": {
                    "line_force": _vec3,
                    "line_moment": _vec3,
                    "force_0": _vec3,
                    "moment_0": _vec3,
                    "force_1": _vec3,
                    "moment_1": _vec3,
                    "follower_0": {"type": "boolean"},
                    "follower_1": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
            "boundary": {
                "type": "object",
                "properties": {
                    "clamped": {"type": "array", "items": {"type": "integer"}, "uniqueItems": True},
                    "pinned": {"type": "array", "items": {"type": "integer"}, "uniqueItems": True},
                },
                "additionalProperties": False,
            },
            "analysis": {"enum": ["static", "dynamic"]},
            "static": {
                "type": "object",
                "properties": {
                    "n_load_steps": {"type": "integer", "minimum": 1},
                    "atol": _pos,
                    "max_iter": {"type": "integer", "minimum": 1},
                },
                "additionalProperties": False,
            },
            "dynamic": {
                "type": "object",
                "properties": {
                    "t_end": _pos,
                    "atol": _pos,
                    "rtol": _pos,
                    "fixed_step": _pos,
                    "n_samples": {"type": "integer", "minimum": 2},
                },
                "required": ["t_end"],
                "additionalProperties": False,
            },
            "initial_velocity": {"type": "array", "items": {"type": "number"}},
        },
        required=("kind", "n_el", "section"),
    ),
}


def _json_path(error):
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    if error.validator == "additionalProperties":
        # the offending key itself is only mentioned in the message
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        if extra:
            path += f".{extra[0]}"
    elif error.validator == "required":
        path += "." + error.message.split("'")[1]
    return path


def validate(config):
    """Check ``config`` against its experiment schema; return it unchanged."""
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object", "$")
    experiment = config.get("experiment")
    if experiment not in SCHEMAS:
        raise ConfigError(f"must be one of {sorted(SCHEMAS)}, got {experiment!r}", "$.experiment")
    validator = Draft202012Validator(SCHEMAS[experiment])
    # report wrong values before missing keys so a bad field is named first
    errors = sorted(
        validator.iter_errors(config),
        key=lambda e: (e.validator == "required", [str(p) for p in e.absolute_path], e.message),
    )
    if errors:
        err = errors[0]
        path = _json_path(err)
        raise ConfigError(err.message, path)
    if experiment == "generic" and config.get("analysis") == "dynamic" and "dynamic" not in config:
        raise ConfigError("required for dynamic analysis", "$.dynamic")
    if config.get("kind") in ("r3so3", "se3") and config.get("order", 1) != 1:
        raise ConfigError("two-node interpolations require order 1", "$.order")
    return config


def load(path):
    """Read and validate a configuration file."""
    try:
        config = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", "") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}", "$") from exc
    return validate(config)
