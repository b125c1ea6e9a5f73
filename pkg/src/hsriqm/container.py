"""Versioned binary container for trained model components.

Layout: 8-byte magic `HSRIQM01`, uint32-LE header length, canonical JSON
header (metadata plus an array directory), then raw C-order array bytes.
The encoding is fully deterministic so identical models serialize to
identical bytes.
"""

import json
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"HSRIQM01"


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_container(path, meta, arrays):
    """Write metadata (JSON-serializable dict) and named float/int arrays."""
    directory = {}
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        blob = arr.tobytes()
        directory[name] = {
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        }
        blobs.append(blob)
        offset += len(blob)
    header = _canonical_json({"meta": meta, "arrays": directory})
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_container(path):
    """Read a container written by save_container -> (meta, arrays)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise FormatError(
                f"{path}: bad magic {magic!r}, expected {MAGIC!r}"
            )
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = fh.read()
    arrays = {}
    for name, entry in header["arrays"].items():
        start = entry["offset"]
        raw = payload[start : start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise FormatError(f"{path}: truncated payload for array '{name}'")
        arrays[name] = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(
            entry["shape"]
        ).copy()
    return header["meta"], arrays
