"""Published JSON Schemas for the documents the HTTP API exchanges.

Kept as plain dicts so clients in any language can consume them
(``GET /schemas`` serves the catalog); the test suite validates every API
response against these.
"""

NUMBER = {"type": "number"}
STRING = {"type": "string"}
INT = {"type": "integer"}

SESSION = {
    "type": "object",
    "required": ["schema", "session_id", "windows", "events", "labels"],
    "properties": {
        "schema": {"const": 1},
        "session_id": STRING,
        "spectrum_unit": {"enum": ["db", "linear"]},
        "windows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["window_id", "t_start_ms", "t_end_ms", "power", "network", "spectrum_psd"],
                "properties": {
                    "window_id": INT,
                    "t_start_ms": INT,
                    "t_end_ms": INT,
                    "power": {"type": "array", "items": NUMBER},
                    "network": {"type": "array", "items": NUMBER},
                    "spectrum_psd": {"type": "array", "items": NUMBER},
                    "annotation": {"type": ["string", "null"]},
                    "cluster": {"type": ["integer", "null"]},
                },
            },
        },
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["event_id", "kind", "t_ms", "from_window", "to_window"],
                "properties": {
                    "event_id": INT,
                    "kind": STRING,
                    "t_ms": INT,
                    "from_window": INT,
                    "to_window": INT,
                },
            },
        },
        "labels": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "origin"],
                "properties": {
                    "name": STRING,
                    "origin": {"enum": ["human", "merged", "collaged", "ground_truth"]},
                },
            },
        },
    },
}

FSM = {
    "type": "object",
    "required": ["schema", "states", "transitions", "initial"],
    "properties": {
        "schema": {"const": 1},
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "origin"],
                "properties": {
                    "name": STRING,
                    "origin": {"enum": ["human", "merged", "collaged", "ground_truth"]},
                },
            },
        },
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "event", "to"],
                "properties": {"from": STRING, "event": STRING, "to": STRING},
            },
        },
        "initial": {"type": ["string", "null"]},
    },
}

EMBEDDING_VIEW = {
    "type": "object",
    "required": ["points"],
    "properties": {
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["window_id", "x", "y", "cluster", "annotation"],
                "properties": {
                    "window_id": INT,
                    "x": NUMBER,
                    "y": NUMBER,
                    "cluster": {"type": ["integer", "null"]},
                    "annotation": {"type": ["string", "null"]},
                },
            },
        }
    },
}

CORRELATION = {
    "type": "object",
    "required": ["rows", "cols", "cells"],
    "properties": {
        "rows": {"type": "array", "items": STRING},
        "cols": {"type": "array", "items": INT},
        "cells": {"type": "array", "items": {"type": "array", "items": NUMBER}},
    },
}

EVAL_REPORT = {
    "type": "object",
    "required": ["confusion", "true_classes", "pred_classes", "precision", "recall", "f1", "accuracy"],
    "properties": {
        "confusion": {"type": "array", "items": {"type": "array", "items": INT}},
        "true_classes": {"type": "array", "items": STRING},
        "pred_classes": {"type": "array"},
        "precision": {"type": "number", "minimum": 0, "maximum": 1},
        "recall": {"type": "number", "minimum": 0, "maximum": 1},
        "f1": {"type": "number", "minimum": 0, "maximum": 1},
        "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "mapping": {"type": "object"},
    },
}

VERIFICATION_STEP = {
    "type": "object",
    "required": ["window_id", "predicted", "distance", "transition_valid", "event_kind"],
    "properties": {
        "window_id": INT,
        "predicted": STRING,
        "distance": {"type": "number", "minimum": 0},
        "transition_valid": {"type": ["boolean", "null"]},
        "event_kind": {"type": ["string", "null"]},
    },
}

ERROR = {
    "type": "object",
    "required": ["code", "stage", "detail"],
    "properties": {"code": STRING, "stage": STRING, "detail": STRING},
}

ARTIFACT_MANIFEST = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "required": ["file", "sha256", "input_hash"],
        "properties": {
            "file": STRING,
            "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
            "input_hash": STRING,
            "meta": {"type": "object"},
        },
    },
}

SCHEMAS = {
    "session": SESSION,
    "fsm": FSM,
    "embedding_view": EMBEDDING_VIEW,
    "correlation": CORRELATION,
    "eval_report": EVAL_REPORT,
    "verification_step": VERIFICATION_STEP,
    "error": ERROR,
    "artifact_manifest": ARTIFACT_MANIFEST,
}
