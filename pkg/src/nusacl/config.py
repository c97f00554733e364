"""Experiment configuration: documented JSON schema, strict validation,
and conversion into stream/cycle objects.

Every section is optional and falls back to package defaults, but unknown
keys anywhere in the document are rejected before any compute starts.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import jsonschema

from .adapter import VARIANTS
from .continual import STREAM_KINDS, CycleConfig, TaskStream
from .errors import ConfigError

SUBSPACE_MODES = ("tail", "top", "random")
SWEEP_AXES = ("mode", "r", "rho", "variant")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "stream": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(STREAM_KINDS)},
                "num_tasks": {"type": "integer", "minimum": 2},
                "classes_per_task": {"type": "integer", "minimum": 1},
                "samples_per_class_train": {"type": "integer", "minimum": 1},
                "samples_per_class_test": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "input_dim": {"type": "integer", "minimum": 2},
            },
        },
        "adapter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variant": {"enum": list(VARIANTS)},
                "mode": {"enum": list(SUBSPACE_MODES)},
                "r_max": {"type": "integer", "minimum": 1},
                "rho": {"type": "number", "exclusiveMinimum": 0.0, "exclusiveMaximum": 1.0},
                "alpha": {"type": "number", "exclusiveMinimum": 0.0},
            },
        },
        "training": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iterations": {"type": "integer", "minimum": 0},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0.0},
                "warmup_fraction": {"type": "number", "minimum": 0.0, "maximum": 0.5},
                "schedule": {"enum": ["cosine", "constant"]},
                "batch_size": {"type": "integer", "minimum": 1},
                "max_grad_norm": {"type": "number", "minimum": 0.0},
                "pretrain_steps": {"type": "integer", "minimum": 0},
                "pretrain_lr": {"type": "number", "exclusiveMinimum": 0.0},
                "seeds": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 1,
                },
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hidden_dims": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 1},
                    "minItems": 1,
                },
                "init_gain": {"type": "number", "exclusiveMinimum": 0.0},
                "init_r95_frac": {"type": "number", "exclusiveMinimum": 0.0, "exclusiveMaximum": 1.0},
                "adapt_layers": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                },
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string", "minLength": 1},
            },
        },
    },
}

_STREAM_DEFAULTS = {
    "kind": "split_gaussians",
    "num_tasks": 5,
    "classes_per_task": 2,
    "samples_per_class_train": 100,
    "samples_per_class_test": 50,
    "seed": 0,
    "input_dim": 32,
}


def _field_path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "(root)"


def validate_config(document) -> dict:
    """Validate a parsed JSON document against the config schema.

    Raises ConfigError carrying the offending field path.
    """
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object", field_path="(root)")
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(first.message, field_path=_field_path(first))
    return document


def load_config(path) -> dict:
    """Read, parse, and validate a config file."""
    try:
        with open(path) as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field_path="(file)")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}", field_path="(file)")
    return validate_config(document)


def build_stream(document: dict) -> TaskStream:
    merged = {**_STREAM_DEFAULTS, **document.get("stream", {})}
    return TaskStream(**merged)


def build_cycle(document: dict) -> CycleConfig:
    defaults = asdict(CycleConfig())
    adapter = document.get("adapter", {})
    training = document.get("training", {})
    model = document.get("model", {})
    merged = dict(defaults)
    for section in (adapter, training, model):
        for key, value in section.items():
            if key == "seeds":
                continue
            merged[key] = value
    if "hidden_dims" in merged and merged["hidden_dims"] is not None:
        merged["hidden_dims"] = tuple(merged["hidden_dims"])
    if merged.get("adapt_layers") is not None:
        merged["adapt_layers"] = tuple(merged["adapt_layers"])
    return CycleConfig(**merged)


def build_seeds(document: dict) -> list[int]:
    return list(document.get("training", {}).get("seeds", [0]))


def output_directory(document: dict, override=None):
    if override is not None:
        return override
    return document.get("outputs", {}).get("directory", "nusacl_out")
