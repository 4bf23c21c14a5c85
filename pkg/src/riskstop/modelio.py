"""JSON model files.

Layout::

    {
      "name": "asset-sale",                  (optional)
      "horizon": 3,
      "grid": [[0.0, 0.5, 1.0]],             one coordinate list per dimension
      "kernel": {"tabular": [T x n x n]}
             or {"shared_shock": {"atoms": [...], "probs": [...],
                                  "map": {"name": "max", "params": {}}}},
      "costs": {"stop": [(T+1) x n], "continue": [T x n]},
      "risk": ["cvar:0.5"]                   one entry, or one per epoch
    }

States are flattened in row-major order over the grid dimensions.  Floats
are written with ``repr`` precision, so saving and loading reproduces the
model exactly.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ModelFileError, RiskStopError
from .model import (CostModel, SharedShockDynamics, StateGrid, StoppingModel,
                    build_shared_shock_kernel, build_tabular_kernel, shock_map_from_spec)
from .risk import FiniteDistribution, RiskSpec

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}

SCHEMA = {
    "type": "object",
    "required": ["horizon", "grid", "kernel", "costs", "risk"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "horizon": {"type": "integer", "minimum": 1},
        "grid": _MAT,
        "kernel": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "tabular": {"type": "array", "items": _MAT, "minItems": 1},
                "shared_shock": {
                    "type": "object",
                    "required": ["atoms", "probs", "map"],
                    "additionalProperties": False,
                    "properties": {
                        "atoms": _VEC,
                        "probs": _VEC,
                        "map": {
                            "type": "object",
                            "required": ["name"],
                            "additionalProperties": False,
                            "properties": {"name": {"type": "string"},
                                           "params": {"type": "object"}},
                        },
                    },
                },
            },
        },
        "costs": {
            "type": "object",
            "required": ["stop", "continue"],
            "additionalProperties": False,
            "properties": {"stop": _MAT, "continue": _MAT},
        },
        "risk": {"type": "array", "items": {"type": "string"}, "minItems": 1},
    },
}


def model_to_dict(model: StoppingModel) -> dict:
    if model.dynamics is not None:
        dyn = model.dynamics
        if not dyn.map.serializable:
            raise RiskStopError(f"shock map {dyn.map.name!r} cannot be written to a model file")
        kernel = {"shared_shock": {"atoms": dyn.atoms.tolist(),
                                   "probs": dyn.shock.weights.tolist(),
                                   "map": {"name": dyn.map.name, "params": dyn.map.params}}}
    else:
        kernel = {"tabular": [m.tolist() for m in model.kernel.matrices]}
    risk = [str(r) for r in model.risk]
    if all(r == risk[0] for r in risk):
        risk = risk[:1]
    out = {"horizon": model.horizon,
           "grid": [c.tolist() for c in model.grid.coords],
           "kernel": kernel,
           "costs": {"stop": model.costs.stop.tolist(), "continue": model.costs.cont.tolist()},
           "risk": risk}
    if model.name:
        out = {"name": model.name, **out}
    return out


def dumps(model: StoppingModel) -> str:
    return json.dumps(model_to_dict(model), indent=1)


def save_model(model: StoppingModel, path) -> None:
    Path(path).write_text(dumps(model) + "\n")


def _line_of(text: str, path) -> int | None:
    """Best-effort line of the JSON element at ``path`` (keys and indices)."""
    pos = 0
    found = None
    for key in path:
        if isinstance(key, str):
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
            if m is None:
                break
            pos = m.start()
            found = pos
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def model_from_dict(data: dict, text: str = "", source=None) -> StoppingModel:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelFileError(f"{loc}: {exc.message}", line=_line_of(text, exc.absolute_path),
                             path=source) from None

    def fail(section, exc):
        raise ModelFileError(f"{section}: {exc}", line=_line_of(text, [section]),
                             path=source) from None

    T = data["horizon"]
    try:
        grid = StateGrid(tuple(data["grid"]))
    except RiskStopError as exc:
        fail("grid", exc)
    try:
        risk = tuple(RiskSpec.parse(r) for r in data["risk"])
    except RiskStopError as exc:
        fail("risk", exc)
    dynamics = cert = None
    try:
        spec = data["kernel"]
        if "tabular" in spec:
            kernel = build_tabular_kernel(spec["tabular"])
        else:
            ss = spec["shared_shock"]
            dynamics = SharedShockDynamics(
                np.array(ss["atoms"], dtype=float),
                FiniteDistribution(np.array(ss["probs"], dtype=float)),
                shock_map_from_spec(ss["map"]["name"], ss["map"].get("params", {})))
            kernel, cert = build_shared_shock_kernel(grid, dynamics, T)
    except (RiskStopError, KeyError, TypeError) as exc:
        fail("kernel", exc)
    try:
        costs = CostModel(data["costs"]["stop"], data["costs"]["continue"])
    except (RiskStopError, ValueError) as exc:
        fail("costs", exc)
    try:
        return StoppingModel(T, grid, kernel, costs, risk, dynamics, cert, data.get("name", ""))
    except RiskStopError as exc:
        fail("horizon", exc)


def loads(text: str, source=None) -> StoppingModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(exc.msg, line=exc.lineno, path=source) from None
    return model_from_dict(data, text, source)


def load_model(path) -> StoppingModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror}", path=str(path)) from None
    return loads(text, str(path))
