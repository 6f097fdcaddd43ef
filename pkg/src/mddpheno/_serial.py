"""Binary container for model files.

Layout: one UTF-8 JSON header line (sorted keys), then for each array a
JSON descriptor line {"name", "dtype", "shape"} followed by the raw
little-endian C-order bytes and a trailing newline.  Everything is
byte-deterministic, so identical inputs produce identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError

_MAGIC = b"MDDPHENO/1\n"


def _canon_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_canon_json(header) + b"\n")
        fh.write(_canon_json({"arrays": len(arrays)}) + b"\n")
        for name in arrays:
            arr = np.ascontiguousarray(arrays[name])
            desc = {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)}
            fh.write(_canon_json(desc) + b"\n")
            fh.write(arr.tobytes())
            fh.write(b"\n")


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != _MAGIC:
            raise ValidationError(f"{path}: not a recognized model file")
        header = json.loads(fh.readline().decode("utf-8"))
        count = json.loads(fh.readline().decode("utf-8"))["arrays"]
        arrays = {}
        for _ in range(count):
            desc = json.loads(fh.readline().decode("utf-8"))
            dtype = np.dtype(desc["dtype"])
            shape = tuple(desc["shape"])
            nbytes = dtype.itemsize * int(np.prod(shape)) if shape else dtype.itemsize
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise ValidationError(f"{path}: truncated array {desc['name']!r}")
            fh.read(1)  # trailing newline
            arrays[desc["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return header, arrays
