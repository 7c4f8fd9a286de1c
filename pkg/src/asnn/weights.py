"""Versioned, human-readable weight files.

A weight file is a JSON document::

    {
      "format": "asnn-weights",
      "version": 1,
      "input_shape": [4],
      "layers": [
        {"kind": "dense", "shape": [30, 4], "weights": [...], "bias": [...]},
        {"kind": "conv", "shape": [12, 1, 5, 5], "kernels": [...], "bias": [...]},
        {"kind": "avgpool", "window": 2},
        {"kind": "output", "shape": [3, 30], "weights": [...], "bias": [...]}
      ]
    }

Arrays are flattened row-major and written with the shortest decimal repr
that round-trips (at most 17 significant digits), so save -> load is exact.
"""

from __future__ import annotations

import json
import os
from typing import List

import numpy as np

from .ann import AvgPool, Conv, Dense, NetworkSpec, Output, ShapeError

FORMAT = "asnn-weights"
VERSION = 1

__all__ = ["WeightFileError", "dumps_weights", "loads_weights", "save_weights", "load_weights"]


class WeightFileError(ValueError):
    pass


def _fmt_array(values: np.ndarray, indent: str, per_line: int = 8) -> str:
    flat = [repr(float(v)) for v in np.asarray(values, dtype=float).ravel()]
    if not flat:
        return "[]"
    lines = [", ".join(flat[i : i + per_line]) for i in range(0, len(flat), per_line)]
    inner = (",\n" + indent + "  ").join(lines)
    return "[\n" + indent + "  " + inner + "\n" + indent + "]"


def dumps_weights(net: NetworkSpec) -> str:
    net.validate()
    ind = "      "
    blocks: List[str] = []
    for layer in net.layers:
        if isinstance(layer, AvgPool):
            blocks.append(f'    {{"kind": "avgpool", "window": {int(layer.window)}}}')
            continue
        if isinstance(layer, Conv):
            key, arr = "kernels", layer.kernels
        else:
            key, arr = "weights", layer.weights
        shape = json.dumps(list(arr.shape))
        blocks.append(
            "    {\n"
            f'{ind}"kind": "{layer.kind}",\n'
            f'{ind}"shape": {shape},\n'
            f'{ind}"{key}": {_fmt_array(arr, ind)},\n'
            f'{ind}"bias": {_fmt_array(layer.bias, ind)}\n'
            "    }"
        )
    return (
        "{\n"
        f'  "format": "{FORMAT}",\n'
        f'  "version": {VERSION},\n'
        f'  "input_shape": {json.dumps(list(net.input_shape))},\n'
        '  "layers": [\n' + ",\n".join(blocks) + "\n  ]\n}\n"
    )


def _array(entry: dict, key: str, shape, index: int) -> np.ndarray:
    if key not in entry:
        raise WeightFileError(f"layer {index}: missing field {key!r}")
    arr = np.asarray(entry[key], dtype=float)
    if arr.ndim != 1:
        raise WeightFileError(f"layer {index}: field {key!r} must be a flat list")
    if arr.size != int(np.prod(shape)):
        raise ShapeError(f"{key} has {arr.size} values, declared shape {list(shape)}", index)
    return arr.reshape(shape)


def loads_weights(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightFileError(f"malformed weight file at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise WeightFileError(f"not an {FORMAT} document")
    if doc.get("version") != VERSION:
        raise WeightFileError(f"unsupported weight file version {doc.get('version')!r}")
    try:
        input_shape = tuple(int(n) for n in doc["input_shape"])
        entries = doc["layers"]
    except (KeyError, TypeError) as exc:
        raise WeightFileError(f"missing or invalid top-level field: {exc}") from exc
    layers = []
    for i, entry in enumerate(entries):
        kind = entry.get("kind") if isinstance(entry, dict) else None
        if kind == "avgpool":
            layers.append(AvgPool(int(entry["window"])))
            continue
        if kind not in ("dense", "output", "conv"):
            raise WeightFileError(f"layer {i}: unknown kind {kind!r}")
        shape = tuple(int(n) for n in entry.get("shape", ()))
        expected_ndim = 4 if kind == "conv" else 2
        if len(shape) != expected_ndim:
            raise ShapeError(f"{kind} layer needs a {expected_ndim}-d shape, got {list(shape)}", i)
        arr = _array(entry, "kernels" if kind == "conv" else "weights", shape, i)
        bias = _array(entry, "bias", (shape[0],), i)
        cls = {"dense": Dense, "output": Output, "conv": Conv}[kind]
        layers.append(cls(arr, bias))
    return NetworkSpec(input_shape, layers).validate()


def save_weights(net: NetworkSpec, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as f:
        f.write(dumps_weights(net))


def load_weights(path) -> NetworkSpec:
    with open(os.fspath(path), encoding="utf-8") as f:
        return loads_weights(f.read())
