"""JSON scene files: validation, construction and summaries.

A construction is either a normal form
``{"kind": ..., "n": ..., "params": {...}, "epsilon": 1, "chart": {"box": ..., "margin": ...}}``
or a glue construction ``{"blocks": [construction, ...]}``.  A scene wraps a
construction together with verification settings.
"""

import json

import jsonschema
import numpy as np

from . import glue as gl
from . import normalforms as nf
from .fields import Chart, ParamFn

_PARAM = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/coeff"}},
        {
            "type": "object",
            "required": ["coeffs"],
            "properties": {
                "coeffs": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/coeff"}},
                "var": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    ]
}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {
        "coeff": {
            "oneOf": [
                {"type": "number"},
                {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            ]
        },
        "param": _PARAM,
        "box": {
            "type": "array",
            "minItems": 1,
            "maxItems": 8,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "chart": {
            "type": "object",
            "required": ["box"],
            "properties": {
                "box": {"$ref": "#/definitions/box"},
                "margin": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "normal_form": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(nf.KINDS)},
                "n": {"type": "integer", "minimum": 1, "maximum": 8},
                "params": {
                    "type": "object",
                    "properties": {
                        "X": {"$ref": "#/definitions/param"},
                        "Y": {"$ref": "#/definitions/param"},
                        "Z": {"$ref": "#/definitions/param"},
                        "lambda": {"$ref": "#/definitions/param"},
                        "h": {"$ref": "#/definitions/param"},
                        "omega": {"$ref": "#/definitions/param"},
                        "alpha": {"type": "number"},
                        "beta": {"type": "number"},
                        "sigma": {"enum": list(nf.SIGMA_VARIANTS)},
                    },
                    "additionalProperties": False,
                },
                "epsilon": {"enum": [1, -1]},
                "chart": {"$ref": "#/definitions/chart"},
                "region": {"type": "array", "items": {"$ref": "#/definitions/box"}},
            },
            "additionalProperties": False,
        },
        "glue": {
            "type": "object",
            "required": ["blocks"],
            "properties": {
                "blocks": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"$ref": "#/definitions/construction"},
                },
                "region": {"type": "array", "items": {"$ref": "#/definitions/box"}},
            },
            "additionalProperties": False,
        },
        "construction": {
            "oneOf": [{"$ref": "#/definitions/normal_form"}, {"$ref": "#/definitions/glue"}]
        },
        "trial": {
            "type": "object",
            "required": ["p0", "v0"],
            "properties": {
                "p0": {"type": "array", "items": {"type": "number"}},
                "v0": {"type": "array", "items": {"type": "number"}},
                "T": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "verification": {
            "type": "object",
            "properties": {
                "n_points": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "tolerances": {
                    "type": "object",
                    "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
                },
                "geodesic_trials": {
                    "oneOf": [
                        {"type": "integer", "minimum": 0},
                        {"type": "array", "items": {"$ref": "#/definitions/trial"}},
                    ]
                },
            },
            "additionalProperties": False,
        },
    },
    "oneOf": [
        {
            "type": "object",
            "required": ["construction"],
            "properties": {
                "construction": {"$ref": "#/definitions/construction"},
                "verification": {"$ref": "#/definitions/verification"},
                "summary": {},
            },
            "additionalProperties": False,
        },
        {"$ref": "#/definitions/construction"},
    ],
}

REQUIRED_PARAMS = {
    "dini": ("X", "Y"),
    "levicivita3": ("X", "Y", "Z"),
    "real_jordan": ("lambda",),
    "real_jordan_normalized": ("h",),
    "complex_jordan": ("lambda",),
    "complex_jordan_normalized": ("h",),
    "affine_complex3": ("alpha", "beta", "lambda"),
    "aminova": (),
}

FIXED_DIM = {"dini": 2, "levicivita3": 3, "affine_complex3": 3, "aminova": 4}


class SceneError(ValueError):
    """Scene input is malformed; the message names the offending field."""


def _path(error):
    parts = ["$"] + [f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path]
    return "".join(parts)


def validate(obj):
    """Schema-check a scene or construction; raises :class:`SceneError`."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise SceneError(f"{_path(best)}: {best.message}")
    _check_semantics(obj.get("construction", obj), "$.construction" if "construction" in obj else "$")


def _check_semantics(c, where):
    if "blocks" in c:
        for i, b in enumerate(c["blocks"]):
            _check_semantics(b, f"{where}.blocks[{i}]")
        return
    kind = c["kind"]
    params = c.get("params", {})
    missing = [p for p in REQUIRED_PARAMS[kind] if p not in params]
    if missing:
        raise SceneError(f"{where}.params: kind {kind!r} needs {', '.join(missing)}")
    if kind not in FIXED_DIM and "n" not in c:
        raise SceneError(f"{where}.n: kind {kind!r} needs a block size")
    if kind in FIXED_DIM and "n" in c and c["n"] != FIXED_DIM[kind]:
        raise SceneError(f"{where}.n: kind {kind!r} has dimension {FIXED_DIM[kind]}")


def loads(text):
    """Parse and validate scene JSON text."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise SceneError("$: expected a JSON object")
    validate(obj)
    return obj


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _param(x):
    return ParamFn.from_json(x)


def _chart(c):
    ch = c.get("chart")
    if ch is None:
        return None
    return Chart(ch["box"], margin=ch.get("margin", 1e-3))


def build(construction):
    """Turn a construction dict into a :class:`~geodeq.normalforms.Pair`."""
    c = construction
    if "blocks" in c:
        pair = gl.glue([build(b) for b in c["blocks"]])
        if c.get("region") is not None:
            pair.region = c["region"]
        return pair
    kind = c["kind"]
    p = c.get("params", {})
    eps = c.get("epsilon", 1)
    chart = _chart(c)
    if kind == "dini":
        pair = nf.dini_pair(_param(p["X"]), _param(p["Y"]), chart, eps)
    elif kind == "levicivita3":
        pair = nf.levicivita3_pair(_param(p["X"]), _param(p["Y"]), _param(p["Z"]), chart, eps)
    elif kind == "real_jordan":
        pair = nf.real_jordan_pair(c["n"], _param(p["lambda"]), chart, eps)
    elif kind == "real_jordan_normalized":
        pair = nf.real_jordan_normalized_pair(
            c["n"], _param(p["h"]), chart, eps, p.get("sigma", "paired")
        )
    elif kind == "complex_jordan":
        pair = nf.complex_jordan_pair(c["n"], _param(p["lambda"]), chart, eps)
    elif kind == "complex_jordan_normalized":
        pair = nf.complex_jordan_normalized_pair(
            c["n"], _param(p["h"]), chart, eps, p.get("sigma", "paired")
        )
    elif kind == "affine_complex3":
        pair = nf.affine_complex3_pair(p["alpha"], p["beta"], _param(p["lambda"]), chart, eps)
    else:
        omega = _param(p["omega"]) if "omega" in p else None
        pair = nf.aminova_pair(omega, chart)
    if c.get("region") is not None:
        pair.region = c["region"]
    return pair


def construction_of(obj):
    return obj.get("construction", obj)


def _matrix_json(M):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if not np.any(M.imag):
            M = M.real
        else:
            return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return [[float(x) for x in row] for row in M]


def summary(pair):
    """Matrices at the chart centre, plus text templates where available."""
    center = pair.chart.center
    out = {
        "kind": pair.kind,
        "dim": pair.dim,
        "chart_box": pair.chart.box.tolist(),
        "exclusions": [e.name for e in pair.chart.exclusions],
        "center": [float(x) for x in center],
    }
    if pair.chart.contains(center):
        out["g"] = _matrix_json(pair.g(center))
        out["L"] = _matrix_json(pair.L(center))
        try:
            out["gbar"] = _matrix_json(pair.gbar(center))
        except (np.linalg.LinAlgError, ZeroDivisionError, ValueError):
            out["gbar"] = None
    else:
        out["note"] = "chart centre lies in an excluded set; matrices omitted"
    sym = nf.symbolic_summary(pair)
    if sym is not None:
        out["symbolic"] = sym
    return out


def resolve(obj):
    """Fully resolved scene: construction, verification defaults and summary."""
    construction = construction_of(obj)
    pair = build(construction)
    ver = {"n_points": 100, "seed": 0, "tolerances": {}, "geodesic_trials": 3}
    ver.update(obj.get("verification", {}))
    return {"construction": construction, "verification": ver, "summary": summary(pair)}, pair
