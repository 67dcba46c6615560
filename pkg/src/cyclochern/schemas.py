"""JSON schemas for all on-disk formats, validated on load.

Matrices are row-major lists of [re, im] pairs.  All formats are plain
JSON so files diff cleanly and are language neutral.
"""

import jsonschema

from .errors import InvalidInputError

SCHEMA_VERSION = 1

_complex_pair = {"type": "array", "items": {"type": "number"},
                 "minItems": 2, "maxItems": 2}

_complex_matrix = {"type": "array",
                   "items": {"type": "array", "items": _complex_pair}}

ALGEBRA_SCHEMA = {
    "type": "object",
    "required": ["basis", "degrees", "unit", "structure", "differential"],
    "properties": {
        "basis": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "degrees": {"type": "array", "items": {"type": "integer"}},
        "unit": {"type": "integer", "minimum": 0},
        "structure": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"},
                      "minItems": 5, "maxItems": 5},
        },
        "differential": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"},
                      "minItems": 4, "maxItems": 4},
        },
        "seminorm_weights": {"type": "array",
                             "items": {"type": "number", "exclusiveMinimum": 0}},
    },
}

CHAIN_SCHEMA = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "algebra": {"type": "string"},
        "reduced": {"type": "boolean"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["arity", "coeff", "factors"],
                "properties": {
                    "arity": {"type": "integer", "minimum": 0},
                    "coeff": _complex_pair,
                    "factors": {"type": "array",
                                "items": {"type": "integer", "minimum": 0}},
                },
            },
        },
    },
}

MODULE_SCHEMA = {
    "type": "object",
    "required": ["dim", "grading", "Q", "c"],
    "properties": {
        "algebra": {"type": ["string", "object"]},
        "dim": {"type": "integer", "minimum": 1},
        "grading": _complex_matrix,
        "Q": _complex_matrix,
        "c": {"type": "object", "additionalProperties": _complex_matrix},
    },
}

IDEMPOTENT_SCHEMA = {
    "type": "object",
    "required": ["size", "entries"],
    "properties": {
        "size": {"type": "integer", "minimum": 1},
        # entries[r][c] = coefficient vector over the algebra basis
        "entries": {"type": "array",
                    "items": {"type": "array", "items": {"type": "array",
                                                         "items": _complex_pair}}},
    },
}

PATH_SCHEMA = {
    "type": "object",
    "required": ["samples"],
    "properties": {
        "samples": {
            "type": "array", "minItems": 2,
            "items": {
                "type": "object",
                "required": ["s", "idempotent"],
                "properties": {
                    "s": {"type": "number"},
                    "idempotent": IDEMPOTENT_SCHEMA,
                    "derivative": IDEMPOTENT_SCHEMA,
                },
            },
        },
    },
}

FAMILY_SCHEMA = {
    "type": "object",
    "required": ["samples"],
    "properties": {
        "samples": {
            "type": "array", "minItems": 2,
            "items": {
                "type": "object",
                "required": ["s", "module"],
                "properties": {
                    "s": {"type": "number"},
                    "module": {"type": ["string", "object"]},
                    "Qdot": _complex_matrix,
                    "cdot": {"type": "object",
                             "additionalProperties": _complex_matrix},
                },
            },
        },
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["suite", "schema_version", "tool_version", "seed", "checks",
                 "passed"],
    "properties": {
        "suite": {"type": "string"},
        "schema_version": {"type": "integer"},
        "tool_version": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "identity", "residual", "tolerance", "passed"],
                "properties": {
                    "id": {"type": "string"},
                    "identity": {"type": "string"},
                    "residual": {"type": ["number", "null"]},
                    "bound": {"type": ["number", "null"]},
                    "tolerance": {"type": ["number", "null"]},
                    "passed": {"type": ["boolean", "string"]},
                    "wall_ms": {"type": "number"},
                },
            },
        },
    },
}

_SCHEMAS = {
    "algebra": ALGEBRA_SCHEMA,
    "chain": CHAIN_SCHEMA,
    "module": MODULE_SCHEMA,
    "idempotent": IDEMPOTENT_SCHEMA,
    "path": PATH_SCHEMA,
    "family": FAMILY_SCHEMA,
    "report": REPORT_SCHEMA,
}


def validate_payload(data: dict, kind: str):
    try:
        jsonschema.validate(data, _SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise InvalidInputError(f"invalid {kind} file: {exc.message}") from exc
