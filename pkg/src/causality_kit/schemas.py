"""JSON schemas for the file formats and the CLI reports."""

from __future__ import annotations

import jsonschema

_number = {"type": "number"}
_rational = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}

SLOT = {"type": "object", "required": ["label", "dim"],
        "properties": {"label": {"type": "string"}, "dim": {"type": "integer", "minimum": 1}}}

MATRIX = {
    "type": "object",
    "required": ["slots", "entries"],
    "properties": {
        "slots": {"type": "array", "items": SLOT},
        "entries": {"type": "array", "items": {"type": "array", "items": _number,
                                                "minItems": 2, "maxItems": 2}},
    },
}

PARTY = {"type": "object", "required": ["name", "d_in", "d_out"],
         "properties": {"name": {"type": "string"}, "d_in": {"type": "integer", "minimum": 1},
                        "d_out": {"type": "integer", "minimum": 1}}}

PROCESS_MATRIX = {**MATRIX, "required": ["slots", "entries", "parties"],
                  "properties": {**MATRIX["properties"], "parties": {"type": "array", "items": PARTY,
                                                                     "minItems": 1}}}

INSTRUMENT = {"type": "object", "required": ["party", "outcomes"],
              "properties": {"party": PARTY, "outcomes": {"type": "array", "items": MATRIX, "minItems": 1}}}

INSTRUMENT_SET = {"type": "object", "required": ["instruments"],
                  "properties": {"instruments": {"type": "array",
                                                 "items": {"type": "array", "items": INSTRUMENT,
                                                           "minItems": 1}}}}

SCENARIO = {"type": "object", "required": ["parties", "settings", "outcomes"],
            "properties": {"parties": {"type": "array", "items": {"type": "string"}},
                           "settings": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                           "outcomes": {"type": "array", "items": {"type": "integer", "minimum": 1}}}}

_nested = {"type": "array"}

TABLE = {"type": "object", "required": ["scenario", "p"], "properties": {"scenario": SCENARIO, "p": _nested}}

GAME = {"type": "object", "required": ["scenario", "payoff"],
        "properties": {"scenario": SCENARIO, "payoff": _nested, "distribution": _nested}}

FEASIBILITY_REPORT = {
    "type": "object",
    "required": ["status", "residual", "iterations", "exact"],
    "properties": {
        "status": {"enum": ["feasible", "infeasible", "inconclusive", "certified-infeasible"]},
        "residual": {"type": ["number", "string"]},
        "iterations": {"type": "integer"},
        "exact": {"type": "boolean"},
        "violated_margin": _number,
        "certificate": {"type": "object"},
        "witness": {"type": "object"},
    },
}

VALIDATION_REPORT = {
    "type": "object",
    "required": ["ok", "hermitian", "min_eigenvalue", "trace", "expected_trace", "forbidden_types", "failures"],
    "properties": {"ok": {"type": "boolean"}, "failures": {"type": "array", "items": {"type": "string"}},
                   "forbidden_types": {"type": "object"}},
}

BOUND_REPORT = {"type": "object", "required": ["bound", "exact"],
                "properties": {"bound": _rational, "exact": {"type": "boolean"}}}

PIPELINE_REPORT = {
    "type": "object",
    "required": ["pipeline", "ok", "verdict", "stages"],
    "properties": {"pipeline": {"type": "string"}, "ok": {"type": "boolean"}, "verdict": {"type": "string"},
                   "stages": {"type": "array", "items": {"type": "object", "required": ["stage", "ok"]}}},
}

SUITE_REPORT = {
    "type": "object",
    "required": ["passed", "criteria"],
    "properties": {"passed": {"type": "boolean"},
                   "criteria": {"type": "array", "items": {
                       "type": "object", "required": ["criterion", "title", "passed", "seconds", "subchecks"]}}},
}


def check(instance, schema) -> None:
    """Raise ``jsonschema.ValidationError`` when ``instance`` does not match."""
    jsonschema.validate(instance, schema)
