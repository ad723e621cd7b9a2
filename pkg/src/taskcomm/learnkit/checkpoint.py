"""Bit-exact checkpoint file format.

Layout: magic ``TCKP`` + version byte 1 + 8-byte little-endian manifest
length + UTF-8 JSON manifest ``[{name, shape, offset, length}]`` + raw
little-endian float32 payload. Offsets are byte offsets into the payload
region; entries are written back to back.
"""

import json
import struct
from math import prod

import numpy as np

from taskcomm.learnkit.params import ParamSet

MAGIC = b"TCKP"
VERSION = 1


class CheckpointError(Exception):
    """Base class for checkpoint read failures."""


class CheckpointFormatError(CheckpointError):
    """Malformed container: bad magic, version, header or manifest JSON."""


class CheckpointTruncationError(CheckpointError):
    """Manifest declares more payload bytes than the file holds."""


class CheckpointManifestError(CheckpointError):
    """Manifest and payload disagree (lengths, overlaps, leftover bytes)."""


def save_checkpoint(params: ParamSet, path) -> None:
    manifest = []
    chunks = []
    offset = 0
    for name, arr in params.items():
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    blob = json.dumps(manifest, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for raw in chunks:
            fh.write(raw)


def load_checkpoint(path) -> ParamSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 13 or data[:4] != MAGIC:
        raise CheckpointFormatError(f"{path}: not a TCKP checkpoint (bad magic or short header)")
    if data[4] != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {data[4]}")
    (manifest_len,) = struct.unpack("<Q", data[5:13])
    if 13 + manifest_len > len(data):
        raise CheckpointFormatError(f"{path}: manifest length {manifest_len} exceeds file size")
    try:
        manifest = json.loads(data[13:13 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: manifest is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(manifest, list):
        raise CheckpointFormatError(f"{path}: manifest must be a JSON list")
    payload = data[13 + manifest_len:]

    params = ParamSet()
    extent = 0
    for entry in manifest:
        try:
            name = entry["name"]
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["offset"])
            length = int(entry["length"])
        except (TypeError, KeyError, ValueError) as exc:
            raise CheckpointFormatError(f"{path}: malformed manifest entry {entry!r}") from exc
        count = prod(shape)
        if length != 4 * count:
            raise CheckpointManifestError(
                f"{path}: entry {name!r} declares {length} bytes for shape {list(shape)} "
                f"(expected {4 * count})"
            )
        if offset != extent:
            raise CheckpointManifestError(
                f"{path}: entry {name!r} offset {offset} is not contiguous (expected {extent})"
            )
        if offset + length > len(payload):
            raise CheckpointTruncationError(
                f"{path}: entry {name!r} needs payload bytes [{offset}, {offset + length}) "
                f"but payload holds {len(payload)}"
            )
        arr = np.frombuffer(payload[offset:offset + length], dtype="<f4").reshape(shape).copy()
        params.add(name, arr)
        extent = offset + length
    if extent != len(payload):
        raise CheckpointManifestError(
            f"{path}: payload holds {len(payload)} bytes but manifest covers {extent}"
        )
    return params
