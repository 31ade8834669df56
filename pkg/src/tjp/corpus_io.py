"""Bit-exact persistence: array container, corpus manifests, tiling.

Arrays travel in the single-array NUMPY v1.0 container (little-endian
float32, row-major, rank 2 or 3) so every target ecosystem can read them
without bespoke parsers. Manifests are canonical JSON - sorted keys,
UTF-8, LF, shortest float representation - so identical corpora hash
identically.
"""

from __future__ import annotations

import ast
import json
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError, ManifestError, UnsupportedError
from .grid import Grid, normalize_intensity

MAGIC = b"\x93NUMPY"
VERSION = b"\x01\x00"
HEADER_ALIGN = 64

MANIFEST_VERSION = "tjp-manifest/1"

_SIDECAR_DTYPES = {"<f4": "<f4", "<f8": "<f8", "<u1": "<u1",
                   "<u2": "<u2", "<i2": "<i2", "<i4": "<i4"}


def array_bytes(grid: Grid) -> bytes:
    """Serialize a grid to the container byte grammar."""
    shape_repr = "(" + ", ".join(str(int(e)) for e in grid.shape) + ")"
    header = ("{'descr': '<f4', 'fortran_order': False, 'shape': "
              + shape_repr + ", }")
    total = len(MAGIC) + 2 + 2 + len(header) + 1
    padded = ((total + HEADER_ALIGN - 1) // HEADER_ALIGN) * HEADER_ALIGN
    header = header + " " * (padded - total) + "\n"
    hlen = len(header).to_bytes(2, "little")
    payload = np.ascontiguousarray(grid.values, dtype="<f4").tobytes()
    return MAGIC + VERSION + hlen + header.encode("ascii") + payload


def write_array(grid: Grid, path) -> None:
    Path(path).write_bytes(array_bytes(grid))


def read_array(path) -> Grid:
    """Read one container file back into a Grid (strict, fail-closed)."""
    raw = Path(path).read_bytes()
    return array_from_bytes(raw, name=str(path))


def array_from_bytes(raw: bytes, name: str = "<bytes>") -> Grid:
    if len(raw) < 10 or raw[:6] != MAGIC:
        raise FormatError(f"{name}: bad magic")
    if raw[6:8] != VERSION:
        raise UnsupportedError(f"{name}: unsupported container version {raw[6:8]!r}")
    hlen = int.from_bytes(raw[8:10], "little")
    header_end = 10 + hlen
    if len(raw) < header_end or not raw[header_end - 1:header_end] == b"\n":
        raise FormatError(f"{name}: truncated or unterminated header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(f"{name}: unparseable header") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{name}: header must map exactly descr/fortran_order/shape")
    if header["fortran_order"] is not False:
        raise UnsupportedError(f"{name}: column-major payload not supported")
    if header["descr"] != "<f4":
        raise UnsupportedError(f"{name}: dtype {header['descr']!r} not supported")
    shape = header["shape"]
    if (not isinstance(shape, tuple) or len(shape) not in (2, 3)
            or not all(isinstance(e, int) and e > 0 for e in shape)):
        raise UnsupportedError(f"{name}: unsupported shape {shape!r}")
    expected = int(np.prod(shape)) * 4
    payload = raw[header_end:]
    if len(payload) != expected:
        raise FormatError(f"{name}: payload is {len(payload)} bytes, "
                          f"expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").reshape(shape)
    return Grid(values.copy())


def canonical_json(doc) -> bytes:
    """Sorted keys, UTF-8, compact separators, single trailing LF."""
    return (json.dumps(doc, sort_keys=True, ensure_ascii=False,
                       separators=(",", ":")) + "\n").encode("utf-8")


_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["version", "master_seed", "config", "sources", "patches", "skips"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": MANIFEST_VERSION},
        "master_seed": {"type": "integer", "minimum": 0},
        "config": {"type": "object"},
        "sources": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["uri", "shape", "intensity_range"],
                "additionalProperties": False,
                "properties": {
                    "uri": {"type": "string"},
                    "shape": {"type": "array", "items": {"type": "integer", "minimum": 1},
                              "minItems": 2, "maxItems": 3},
                    "intensity_range": {"type": "array", "items": {"type": "number"},
                                        "minItems": 2, "maxItems": 2},
                },
            },
        },
        "patches": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["patch_id", "source_uri", "scale", "origin",
                             "window", "seed", "files"],
                "additionalProperties": False,
                "properties": {
                    "patch_id": {"type": "integer", "minimum": 0},
                    "source_uri": {"type": "string"},
                    "scale": {"type": "number"},
                    "origin": {"type": "array", "items": {"type": "integer"}},
                    "window": {"type": "array", "items": {"type": "integer"}},
                    "seed": {
                        "type": "object",
                        "required": ["master_seed", "label", "index"],
                        "additionalProperties": False,
                        "properties": {
                            "master_seed": {"type": "integer"},
                            "label": {"type": "string"},
                            "index": {"type": "integer"},
                        },
                    },
                    "task": {"enum": ["mask", "deform", "lowres", "noise"]},
                    "params": {"type": "object"},
                    "files": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "object",
                            "required": ["path", "shape"],
                            "additionalProperties": False,
                            "properties": {
                                "path": {"type": "string"},
                                "shape": {"type": "array",
                                          "items": {"type": "integer", "minimum": 1}},
                            },
                        },
                    },
                },
            },
        },
        "skips": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "scale", "reason"],
                "additionalProperties": False,
                "properties": {
                    "source": {"type": "string"},
                    "scale": {"type": "number"},
                    "reason": {"type": "string"},
                },
            },
        },
    },
}


def manifest_schema() -> dict:
    return json.loads(json.dumps(_MANIFEST_SCHEMA))


def validate_manifest(doc) -> None:
    import jsonschema

    try:
        jsonschema.validate(doc, _MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ManifestError(f"manifest schema violation: {exc.message}") from exc


def write_manifest(doc: dict, path) -> None:
    validate_manifest(doc)
    Path(path).write_bytes(canonical_json(doc))


def read_manifest(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON") from exc
    validate_manifest(doc)
    return doc


def tile_iter(source_shape, tile, stride):
    """Row-major tile origins covering the source.

    Origins advance by ``stride``; the final origin per axis clamps to
    extent - tile so the last tile touches the boundary (overlap allowed,
    never padding).
    """
    source_shape = tuple(int(e) for e in source_shape)
    tile = tuple(int(t) for t in tile)
    stride = tuple(int(s) for s in stride)
    if len(tile) != len(source_shape) or len(stride) != len(source_shape):
        raise DomainError("tile/stride rank mismatch")
    if any(t > e for t, e in zip(tile, source_shape)):
        raise DomainError(f"tile {tile} exceeds source {source_shape}")
    if any(s < 1 for s in stride):
        raise DomainError(f"stride must be >= 1, got {stride}")
    per_axis = []
    for e, t, s in zip(source_shape, tile, stride):
        last = e - t
        starts = sorted(set(range(0, last + 1, s)) | {last})
        per_axis.append(starts)

    def product(axes):
        if not axes:
            yield ()
            return
        for head in axes[0]:
            for rest in product(axes[1:]):
                yield (head,) + rest

    return product(per_axis)


def load_source(path):
    """Ingest a source file, normalizing intensities into [0, 1].

    ``.npy`` containers load directly; any other extension is a raw
    little-endian blob requiring a ``<path>.json`` sidecar with at least
    {"shape": [...], "dtype": "<f4"}. Either kind may fix the
    normalization range via "intensity_range" in the sidecar; otherwise
    the array's own min/max is used. Returns (grid, source_meta).
    """
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    meta = {}
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{sidecar}: not valid JSON") from exc
    if path.suffix == ".npy":
        arr = read_array(path).values
    else:
        if "shape" not in meta or "dtype" not in meta:
            raise FormatError(
                f"raw blob {path} needs a sidecar {sidecar.name} with shape and dtype")
        dtype = _SIDECAR_DTYPES.get(meta["dtype"])
        if dtype is None:
            raise UnsupportedError(f"{sidecar}: dtype {meta['dtype']!r} not supported")
        shape = tuple(int(e) for e in meta["shape"])
        if len(shape) not in (2, 3):
            raise UnsupportedError(f"{sidecar}: rank {len(shape)} not supported")
        arr = np.fromfile(path, dtype=dtype)
        if arr.size != int(np.prod(shape)):
            raise FormatError(f"{path}: payload does not match shape {shape}")
        arr = arr.reshape(shape)
    values, applied = normalize_intensity(arr, meta.get("intensity_range"))
    source_meta = {"uri": path.name, "shape": list(values.shape),
                   "intensity_range": [applied[0], applied[1]]}
    return Grid(values), source_meta
