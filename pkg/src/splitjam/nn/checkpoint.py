"""Self-describing binary parameter container.

Layout (all integers little-endian):

    magic   8 bytes  b"SJCKPT01"
    count   uint32   number of entries
    entry*  uint16 name length, UTF-8 name,
            uint8 ndim, ndim * uint32 dims,
            raw float64 little-endian data (C order)

The byte stream is a pure function of the (name -> array) mapping, so two
identical parameter sets produce identical files.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SJCKPT01"


def save_arrays(arrays: dict[str, np.ndarray], path: str):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            data = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(data.tobytes(order="C"))


def load_arrays(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path} is not a parameter container")
        (count,) = struct.unpack("<I", fh.read(4))
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = tuple(struct.unpack("<I", fh.read(4))[0]
                          for _ in range(ndim))
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
            arrays[name] = data.astype(np.float64)
        return arrays
