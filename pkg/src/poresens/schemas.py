"""JSON schemas of every file the package reads or writes.

All documents carry ``"schema": "poresens/1"``; input files may omit it.
"""
from __future__ import annotations

import jsonschema

SCHEMA_TAG = "poresens/1"

_num = {"type": "number"}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_box = {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}
_tag = {"const": SCHEMA_TAG}

MESH = {
    "type": "object",
    "required": ["nodes", "elements"],
    "properties": {
        "schema": _tag,
        "nodes": {"type": "array", "items": _point},
        "elements": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                                "minItems": 3, "maxItems": 3}},
        "boundary_edges": {"type": "array", "items": {
            "type": "object", "required": ["n"],
            "properties": {"n": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                 "minItems": 2, "maxItems": 2},
                           "tag": {"type": "string"}}}},
        "node_sets": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "integer"}}},
        "element_sets": {"type": "object",
                         "additionalProperties": {"type": "array", "items": {"type": "integer"}}},
        "thickness": {"type": "number", "exclusiveMinimum": 0},
    },
}

_pore = {
    "type": "object",
    "required": ["id", "center", "boundary"],
    "properties": {"id": {"type": "string", "minLength": 1}, "center": _point,
                   "boundary": {"type": "array", "items": _point, "minItems": 3}},
}

PORES = {
    "oneOf": [
        {"type": "array", "items": _pore},
        {"type": "object", "required": ["pores"],
         "properties": {"schema": _tag, "pores": {"type": "array", "items": _pore}}},
    ]
}

QUANTITY = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["compliance", "nodal_disp", "region_avg_disp"]},
        "component": {"enum": ["x", "y"]},
        "node": {"type": "integer", "minimum": 0},
        "point": _point,
        "box": _box,
        "region": {"type": "string"},
        "name": {"type": "string"},
    },
    "additionalProperties": False,
}

CONFIG = {
    "type": "object",
    "required": ["material", "boundary_conditions", "quantities"],
    "additionalProperties": False,
    "properties": {
        "schema": _tag,
        "geometry": {
            "type": "object",
            "properties": {
                "width": {"type": "number", "exclusiveMinimum": 0},
                "height": {"type": "number", "exclusiveMinimum": 0},
                "outline": {"type": "array", "items": _point, "minItems": 3},
                "tags": {"type": "array", "items": {"type": "string"}},
                "regions": {"type": "object", "additionalProperties": _box},
            },
            "additionalProperties": False,
        },
        "material": {
            "type": "object", "required": ["E", "nu"], "additionalProperties": False,
            "properties": {"E": {"type": "number", "exclusiveMinimum": 0},
                           "nu": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 0.5},
                           "thickness": {"type": "number", "exclusiveMinimum": 0}},
        },
        "boundary_conditions": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "dirichlet": {"type": "array", "items": {
                    "type": "object", "required": ["tag"], "additionalProperties": False,
                    "properties": {"tag": {"type": "string"}, "components": {"enum": ["x", "y", "xy"]},
                                   "value": {"oneOf": [_num, _point]}}}},
                "tractions": {"type": "array", "items": {
                    "type": "object", "required": ["tag", "vector"], "additionalProperties": False,
                    "properties": {"tag": {"type": "string"}, "vector": _point}}},
                "point_loads": {"type": "array", "items": {
                    "type": "object", "required": ["point", "force"], "additionalProperties": False,
                    "properties": {"point": _point, "force": _point}}},
                "body_force": _point,
            },
        },
        "quantities": {"type": "array", "items": QUANTITY, "minItems": 1},
        "mesh": {"type": "string"},
        "pores": {"type": "string"},
        "dense_h": {"type": "number", "exclusiveMinimum": 0},
        "estimator": {
            "type": "object", "additionalProperties": False,
            "properties": {"xi": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "bem_elements": {"type": "integer", "minimum": 16}},
        },
        "oracle": {
            "type": "object", "additionalProperties": False,
            "properties": {"h": {"type": "number", "exclusiveMinimum": 0},
                           "tol": {"type": "number", "exclusiveMinimum": 0},
                           "max_refinements": {"type": "integer", "minimum": 1},
                           "grading": {"type": "number", "exclusiveMinimum": 0},
                           "pore_size_ratio": {"type": "number", "exclusiveMinimum": 0},
                           "converge_on": {"enum": ["delta", "value"]}},
        },
        "sweep": {
            "type": "object", "additionalProperties": False,
            "properties": {"radius": {"type": "number", "exclusiveMinimum": 0},
                           "segments": {"type": "integer", "minimum": 16},
                           "center": _point,
                           "box": _box},
        },
    },
}

_envelope = {
    "type": "object",
    "required": ["schema", "kind", "config", "inputs"],
    "properties": {
        "schema": _tag,
        "kind": {"type": "string"},
        "config": {"type": "object"},
        "inputs": {"type": "object", "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
    },
}


def _report(kind: str, required: list, props: dict) -> dict:
    s = {"allOf": [_envelope, {"type": "object", "required": required,
                               "properties": {"kind": {"const": kind}, **props}}]}
    return s


_nullable = {"type": ["number", "null"]}
_est_entry = {"type": "object",
              "required": ["spec", "psi0", "D", "D_topo", "D_shape", "psi_pred", "pores"],
              "properties": {"psi0": _num, "D": _num, "psi_pred": _num, "I_psi": _nullable, "I_D": _nullable,
                             "pores": {"type": "array"}}}

OUTPUTS = {
    "solve": _report("solve", ["psi0", "displacement", "stress"],
                     {"psi0": {"type": "array", "items": _num}, "displacement": {"type": "array"},
                      "stress": {"type": "array"}}),
    "estimate": _report("estimate", ["reports"], {"reports": {"type": "array", "items": _est_entry}}),
    "oracle": _report("oracle", ["oracle"], {"oracle": {"type": "object", "required": ["psi", "psi0", "history"]}}),
    "compare": _report("compare", ["reports"], {"reports": {"type": "array", "items": _est_entry}}),
    "sweep": _report("sweep", ["param", "rows"], {"param": {"type": "string"}, "rows": {"type": "array"}}),
    "stats": _report("stats", ["fits"], {"fits": {"type": "object"}}),
}


def validate(document, schema, what: str = "document") -> None:
    """Raise ``ValueError`` with a one-line message when ``document`` does not conform."""
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValueError(f"invalid {what} at {where}: {exc.message}") from None
