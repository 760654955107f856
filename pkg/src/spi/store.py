"""Activation container files and their spectra.

Records live in SPAC files, a little-endian binary container:

====================  ========================================================
bytes 0-3             magic ``SPAC``
bytes 4-7             version, u32 (currently 1)
bytes 8-15            header length, u64
next header_len       UTF-8 JSON header with required keys ``model_id``,
                      ``component`` (cross_attn|self_attn|ffn),
                      ``layer_index`` (int >= 0), ``sample_id``,
                      ``condition`` (clean|adversarial), ``rows``, ``cols``,
                      ``dtype`` (f32le)
payload               rows*cols float32 values, row-major
====================  ========================================================

Matrices are stored float32 on disk; every downstream computation upcasts
to float64. Files are immutable once written, so readers never coordinate.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DimensionOverflowError,
    DuplicateRecordError,
    InvalidHeaderError,
    RecordValidationError,
    SpacFormatError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from .metrics import Spectrum

MAGIC = b"SPAC"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
# refuse headers whose declared payload cannot fit in a signed 64-bit size
_MAX_PAYLOAD_BYTES = 2**63 - 1


class Component(enum.Enum):
    CROSS_ATTN = "cross_attn"
    SELF_ATTN = "self_attn"
    FFN = "ffn"


class Condition(enum.Enum):
    CLEAN = "clean"
    ADVERSARIAL = "adversarial"


@dataclass
class ActivationRecord:
    """One stored activation matrix plus its identity metadata.

    Rows are sequence positions, columns feature dimensions. The matrix is
    normalized to a C-contiguous float32 array at construction, matching
    the on-disk precision so write/read round-trips are bitwise.
    """

    model_id: str
    component: Component
    layer_index: int
    sample_id: str
    condition: Condition
    matrix: np.ndarray

    def __post_init__(self):
        if not isinstance(self.component, Component):
            self.component = Component(self.component)
        if not isinstance(self.condition, Condition):
            self.condition = Condition(self.condition)
        if self.layer_index < 0:
            raise RecordValidationError("layer_index must be >= 0")
        m = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise RecordValidationError(f"matrix must be 2-D and non-empty, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise RecordValidationError("matrix entries must be finite")
        self.matrix = m

    @property
    def key(self) -> tuple[str, str, int, str]:
        """Identity without the condition: (model, component, layer, sample)."""
        return (self.model_id, self.component.value, self.layer_index, self.sample_id)


@dataclass
class RecordPair:
    """A clean record matched with its adversarial counterpart."""

    clean: ActivationRecord
    adversarial: ActivationRecord

    def __post_init__(self):
        if self.clean.key != self.adversarial.key:
            raise RecordValidationError(
                f"pair keys differ: {self.clean.key} vs {self.adversarial.key}"
            )
        if self.clean.condition is not Condition.CLEAN:
            raise RecordValidationError("first record must be clean")
        if self.adversarial.condition is not Condition.ADVERSARIAL:
            raise RecordValidationError("second record must be adversarial")

    @property
    def key(self) -> tuple[str, str, int, str]:
        return self.clean.key


def write_record(record: ActivationRecord, path: str | Path) -> None:
    """Serialize one record; validation happens before any byte is written."""
    rows, cols = record.matrix.shape
    header = {
        "model_id": record.model_id,
        "component": record.component.value,
        "layer_index": record.layer_index,
        "sample_id": record.sample_id,
        "condition": record.condition.value,
        "rows": rows,
        "cols": cols,
        "dtype": "f32le",
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = record.matrix.astype("<f4", copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def _require(header: dict, key: str, kind: type):
    if key not in header:
        raise InvalidHeaderError(f"missing header key {key!r}")
    value = header[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise InvalidHeaderError(f"header key {key!r} must be {kind.__name__}")
    return value


def read_record(path: str | Path) -> ActivationRecord:
    """Parse one SPAC file, validating magic, version, header and payload."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise TruncatedPayloadError(f"{path}: file shorter than magic")
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < _PREFIX.size:
        raise TruncatedPayloadError(f"{path}: file shorter than fixed prefix")
    _, version, header_len = _PREFIX.unpack_from(raw)
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} not supported")
    if _PREFIX.size + header_len > len(raw):
        raise TruncatedPayloadError(f"{path}: header extends past end of file")
    try:
        header = json.loads(raw[_PREFIX.size:_PREFIX.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidHeaderError(f"{path}: header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise InvalidHeaderError(f"{path}: header must be a JSON object")

    model_id = _require(header, "model_id", str)
    sample_id = _require(header, "sample_id", str)
    layer_index = _require(header, "layer_index", int)
    rows = _require(header, "rows", int)
    cols = _require(header, "cols", int)
    if layer_index < 0:
        raise InvalidHeaderError(f"{path}: layer_index must be >= 0")
    try:
        component = Component(_require(header, "component", str))
        condition = Condition(_require(header, "condition", str))
    except ValueError as exc:
        raise InvalidHeaderError(f"{path}: {exc}") from exc
    if _require(header, "dtype", str) != "f32le":
        raise InvalidHeaderError(f"{path}: unsupported dtype {header['dtype']!r}")

    if rows < 1 or cols < 1 or rows * cols * 4 > _MAX_PAYLOAD_BYTES:
        raise DimensionOverflowError(f"{path}: bad dimensions {rows}x{cols}")
    expected = rows * cols * 4
    remaining = len(raw) - _PREFIX.size - header_len
    if remaining < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {remaining} bytes, header declares {expected}"
        )
    if remaining > expected:
        raise SpacFormatError(f"{path}: {remaining - expected} trailing bytes after payload")

    matrix = np.frombuffer(
        raw, dtype="<f4", count=rows * cols, offset=_PREFIX.size + header_len
    ).reshape(rows, cols).copy()
    return ActivationRecord(model_id, component, layer_index, sample_id, condition, matrix)


def record_filename(record: ActivationRecord) -> str:
    """Advisory filename; the header is authoritative on read."""
    return (
        f"{record.model_id}_{record.component.value}_{record.layer_index}"
        f"_{record.sample_id}_{record.condition.value}.spac"
    )


def compute_spectrum(record: ActivationRecord) -> Spectrum:
    """All min(rows, cols) singular values of the raw (uncentered) matrix."""
    values = np.linalg.svd(record.matrix.astype(np.float64), compute_uv=False)
    return Spectrum(values, source_rank=min(record.matrix.shape))


@dataclass
class ScanResult:
    """Everything found under a directory: pairs, leftovers, unreadable files."""

    pairs: list[RecordPair]
    unpaired: list[tuple[Path, ActivationRecord]] = field(default_factory=list)
    failures: list[tuple[Path, Exception]] = field(default_factory=list)


def scan_pairs(root_dir: str | Path) -> ScanResult:
    """Discover SPAC files and match clean records with adversarial ones.

    Files that fail to parse are collected, never silently dropped, and
    duplicate (key, condition) combinations raise naming both paths.
    """
    root = Path(root_dir)
    by_key: dict[tuple, dict[Condition, tuple[Path, ActivationRecord]]] = {}
    failures: list[tuple[Path, Exception]] = []
    for path in sorted(root.rglob("*.spac")):
        try:
            record = read_record(path)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            failures.append((path, exc))
            continue
        slot = by_key.setdefault(record.key, {})
        if record.condition in slot:
            raise DuplicateRecordError(
                f"duplicate {record.key} [{record.condition.value}]: "
                f"{slot[record.condition][0]} and {path}"
            )
        slot[record.condition] = (path, record)

    pairs: list[RecordPair] = []
    unpaired: list[tuple[Path, ActivationRecord]] = []
    for key in sorted(by_key):
        slot = by_key[key]
        if Condition.CLEAN in slot and Condition.ADVERSARIAL in slot:
            pairs.append(RecordPair(slot[Condition.CLEAN][1], slot[Condition.ADVERSARIAL][1]))
        else:
            unpaired.extend(slot[c] for c in sorted(slot, key=lambda c: c.value))
    return ScanResult(pairs=pairs, unpaired=unpaired, failures=failures)
