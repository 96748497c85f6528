"""Shipped JSON schemas and validation against them."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError
from referencing import Registry, Resource

__all__ = ["SCHEMA_NAMES", "load_schema", "validate_json", "SchemaError"]

SCHEMA_NAMES = (
    "gateset",
    "pauli_channel",
    "noise_model",
    "cptp_spec",
    "run_config",
    "gauge",
    "learnable_report",
    "dataset",
    "fit_report",
    "region",
    "gauge_check",
    "report",
)


class SchemaError(ValueError):
    """A JSON document does not match its schema."""

    def __init__(self, name: str, err: ValidationError):
        path = "/".join(str(p) for p in err.absolute_path) or "(root)"
        self.name = name
        self.path = path
        super().__init__(f"{name}: {err.message} at {path}")


def _file(name: str) -> str:
    return f"{name}.schema.json"


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise KeyError(f"no schema named {name!r}; known: {SCHEMA_NAMES}")
    text = resources.files(__package__).joinpath("schemas").joinpath(_file(name)).read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _registry() -> Registry:
    pairs = [(_file(n), Resource.from_contents(load_schema(n))) for n in SCHEMA_NAMES]
    return Registry().with_resources(pairs)


@lru_cache(maxsize=None)
def _validator(name: str) -> Draft202012Validator:
    return Draft202012Validator(load_schema(name), registry=_registry())


def validate_json(obj, name: str) -> None:
    """Raise SchemaError on the first (most relevant) violation."""
    errors = sorted(_validator(name).iter_errors(obj), key=lambda e: e.path)
    if errors:
        raise SchemaError(name, errors[0])
