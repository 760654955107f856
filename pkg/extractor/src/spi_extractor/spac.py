"""Writer for the SPAC activation container format.

This mirrors the published byte layout (little-endian: magic ``SPAC``,
u32 version 1, u64 header length, JSON header, float32 row-major
payload); files written here are consumed by the analysis toolkit through
that format alone.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SPAC"
VERSION = 1
COMPONENTS = ("cross_attn", "self_attn", "ffn")
CONDITIONS = ("clean", "adversarial")


def write_spac(
    path: str | Path,
    model_id: str,
    component: str,
    layer_index: int,
    sample_id: str,
    condition: str,
    matrix: np.ndarray,
) -> None:
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    if layer_index < 0:
        raise ValueError("layer_index must be >= 0")
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValueError(f"matrix must be 2-D and non-empty, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    header = json.dumps(
        {
            "model_id": model_id,
            "component": component,
            "layer_index": layer_index,
            "sample_id": sample_id,
            "condition": condition,
            "rows": matrix.shape[0],
            "cols": matrix.shape[1],
            "dtype": "f32le",
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQ", MAGIC, VERSION, len(header)))
        fh.write(header)
        fh.write(matrix.astype("<f4", copy=False).tobytes(order="C"))


def spac_filename(model_id: str, component: str, layer_index: int,
                  sample_id: str, condition: str) -> str:
    return f"{model_id}_{component}_{layer_index}_{sample_id}_{condition}.spac"
