"""On-disk container for trained models.

Layout: 5-byte magic, u32 little-endian header length, UTF-8 JSON header,
raw little-endian float32 tensor payload in manifest order, and a trailing
8-byte FNV-1a checksum over every preceding byte. Training math runs in
float64; tensors are narrowed to float32 at rest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .hashing import HASH_NAME, fnv1a64_bulk

BASELINE_MAGIC = b"LSBL1"
SEQUENCE_MAGIC = b"LSSQ1"


class ModelFormatError(ValueError):
    pass


def save_model(path: str | Path, magic: bytes, header: dict, tensors: dict[str, np.ndarray]) -> None:
    if len(magic) != 5:
        raise ValueError("magic must be 5 bytes")
    manifest = []
    payload = bytearray()
    for name, arr in tensors.items():
        arr32 = np.ascontiguousarray(arr, dtype="<f4")
        manifest.append({"name": name, "shape": list(arr.shape)})
        payload += arr32.tobytes()
    full_header = dict(header)
    full_header["format"] = magic.decode("ascii")
    full_header["hash"] = HASH_NAME
    full_header["tensors"] = manifest
    raw_header = json.dumps(full_header, sort_keys=True).encode("utf-8")
    body = magic + struct.pack("<I", len(raw_header)) + raw_header + bytes(payload)
    Path(path).write_bytes(body + struct.pack("<Q", fnv1a64_bulk(body)))


def load_model(path: str | Path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if len(blob) < 17 or blob[:5] != magic:
        raise ModelFormatError(f"{path}: not a {magic.decode('ascii')} model file")
    (stored,) = struct.unpack("<Q", blob[-8:])
    if fnv1a64_bulk(blob[:-8]) != stored:
        raise ModelFormatError(f"{path}: checksum mismatch, file is corrupt")
    (header_len,) = struct.unpack("<I", blob[5:9])
    try:
        header = json.loads(blob[9 : 9 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: bad header: {exc}") from None
    if header.get("hash") != HASH_NAME:
        raise ModelFormatError(f"{path}: unsupported hash {header.get('hash')!r}")
    tensors: dict[str, np.ndarray] = {}
    cursor = 9 + header_len
    for entry in header.get("tensors", []):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = cursor + 4 * count
        if end > len(blob) - 8:
            raise ModelFormatError(f"{path}: payload truncated at tensor {entry['name']}")
        arr = np.frombuffer(blob[cursor:end], dtype="<f4").reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float64)
        cursor = end
    if cursor != len(blob) - 8:
        raise ModelFormatError(f"{path}: {len(blob) - 8 - cursor} trailing payload bytes")
    return header, tensors
