"""JSON schema for the reports the command line emits."""

from __future__ import annotations

import jsonschema

__all__ = ["REPORT_SCHEMA", "validate_report"]

_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}

_CEP = {
    "type": "object",
    "properties": {
        "test": {"const": "cep"},
        "tested": {"type": "integer", "minimum": 1},
        "conditioning": {"type": "array", "items": {"type": "integer"}},
        "alpha": _PROB,
        "bootstrap": {"type": "integer", "minimum": 1},
        "reject": {"type": "boolean"},
        "min_adjusted_pvalue": _PROB,
        "dropped_columns": {"type": "array"},
        "pointwise": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "z": _PROB,
                    "beta": _NUM_ARRAY,
                    "statistic": {"type": "number", "minimum": 0},
                    "pvalue": _PROB,
                    "adjusted_pvalue": _PROB,
                    "df": {"type": "integer", "minimum": 1},
                },
                "required": ["z", "statistic", "pvalue", "adjusted_pvalue", "df"],
            },
        },
    },
    "required": ["test", "tested", "conditioning", "alpha", "reject", "pointwise"],
}

_LRA = {
    "type": "object",
    "properties": {
        "test": {"const": "lra"},
        "tested": {"type": "integer", "minimum": 1},
        "conditioning": {"type": "array", "items": {"type": "integer"}},
        "f_statistic": {"type": "number", "minimum": 0},
        "p_f": _PROB,
        "ad_statistic": {"type": "number"},
        "p_normal": _PROB,
        "p_adjusted": _PROB,
        "df_model": {"type": "integer", "minimum": 1},
        "df_resid": {"type": "integer", "minimum": 1},
    },
    "required": ["test", "tested", "conditioning", "p_f", "p_normal", "p_adjusted"],
}

_SRA = {
    "type": "object",
    "properties": {
        "test": {"const": "sra"},
        "score": {"enum": ["crps", "dss"]},
        "tested": {"type": "integer", "minimum": 1},
        "conditioning": {"type": "array", "items": {"type": "integer"}},
        "statistic": {"type": "number", "minimum": 0},
        "pvalue": _PROB,
        "df": {"type": "integer", "minimum": 2},
    },
    "required": ["test", "score", "tested", "statistic", "pvalue", "df"],
}

_MCT = {
    "type": "object",
    "properties": {
        "test": {"const": "mct"},
        "tested": {"type": "integer", "minimum": 1},
        "reference": {"type": "integer", "minimum": 1},
        "grid": _NUM_ARRAY,
        "statistic": {"type": "number", "minimum": 0},
        "pvalue": _PROB,
        "df": {"type": "integer", "minimum": 1},
        "fragile": {"const": True},
    },
    "required": ["test", "tested", "reference", "grid", "statistic", "pvalue", "df", "fragile"],
}

_FS = {
    "type": "object",
    "properties": {
        "test": {"const": "fs"},
        "forecaster": {"enum": [1, 2]},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "length": {"type": "integer", "minimum": 1},
                    "pass_rate": _PROB,
                    "stderr": {"type": "number", "minimum": 0},
                    "replications": {"type": "integer", "minimum": 1},
                },
                "required": ["length", "pass_rate", "replications"],
            },
        },
    },
    "required": ["test", "forecaster", "rows"],
}

_POWER = {
    "type": "object",
    "properties": {
        "test": {"const": "power"},
        "scenario": {"type": "string"},
        "inner_test": {"type": "string"},
        "rate": _PROB,
        "stderr": {"type": "number", "minimum": 0},
        "replications": {"type": "integer", "minimum": 1},
        "completed": {"type": "integer", "minimum": 0},
        "failed": {"type": "integer", "minimum": 0},
        "alpha": _PROB,
    },
    "required": ["test", "scenario", "inner_test", "rate", "replications", "completed", "alpha"],
}

_DIAG = {
    "type": "object",
    "properties": {
        "test": {"enum": ["diag-marginal", "diag-pithist"]},
        "tested": {"type": "integer", "minimum": 1},
    },
    "required": ["test", "tested"],
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "oneOf": [_CEP, _LRA, _SRA, _MCT, _FS, _POWER, _DIAG],
}


def validate_report(report: dict) -> None:
    """Raise jsonschema.ValidationError when the report violates the schema."""
    jsonschema.validate(report, REPORT_SCHEMA)
