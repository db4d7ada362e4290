"""Committed shapes of the CLI's JSON outputs.

Each schema is a minimal structural contract: required keys with a type
(or a tuple of alternatives), plus optional keys.  ``check`` raises on
drift; the test suite validates every subcommand's output against these.
"""

from __future__ import annotations

NUMBER = (int, float)

CERTIFICATE = {"required": {"status": str, "conflicted": list}, "optional": {}}

COMPILE = {
    "required": {
        "nodes": int,
        "decision_nodes": int,
        "classification": str,
        "sdd": str,
        "vtree": str,
    },
    "optional": {"models": int},
}

LEARN = {
    "required": {
        "mode": str,
        "rows": int,
        "dropped": int,
        "parameterized_nodes": int,
        "context_totals": dict,
        "output": str,
    },
    "optional": {"ess": (int, float, type(None))},
}

QUERY = {
    "required": {"type": str, "model": str, "evidence": str},
    "optional": {
        "value": NUMBER,
        "lower": NUMBER,
        "upper": NUMBER,
        "iterations": int,
        "certificate": CERTIFICATE,
        "upper_certificate": CERTIFICATE,
        "assignment": dict,
    },
}

ROBUST = {
    "required": {"V": NUMBER, "label": str, "map": dict, "certificate": CERTIFICATE},
    "optional": {},
}

EXPERIMENT = {
    "required": {"scenario": str, "cells": int, "seed": int, "digit_prior": str, "output": str},
    "optional": {},
}

SCHEMAS = {
    "compile": COMPILE,
    "learn": LEARN,
    "query": QUERY,
    "robust": ROBUST,
    "experiment": EXPERIMENT,
}


def check(payload: dict, schema: dict) -> None:
    """Raise ValueError when the payload does not match the schema."""
    if not isinstance(payload, dict):
        raise ValueError(f"expected an object, got {type(payload).__name__}")
    allowed = dict(schema["required"]) | dict(schema["optional"])
    for key, value in payload.items():
        if key not in allowed:
            raise ValueError(f"unexpected key {key!r}")
        expected = allowed[key]
        if isinstance(expected, dict):
            check(value, expected)
        elif not isinstance(value, expected):
            raise ValueError(f"key {key!r}: expected {expected}, got {type(value).__name__}")
    for key in schema["required"]:
        if key not in payload:
            raise ValueError(f"missing required key {key!r}")
