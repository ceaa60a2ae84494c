"""Length-checked binary reading helpers for the index file format.

Every helper raises :class:`TruncatedError` when the stream ends before the
requested payload is complete, so loaders can distinguish truncation from
structural corruption.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import CorruptIndexError, TruncatedError


def read_exact(src: BinaryIO, count: int) -> bytes:
    data = src.read(count)
    if len(data) != count:
        raise TruncatedError(f"expected {count} bytes, got {len(data)}")
    return data


def read_struct(src: BinaryIO, fmt: str) -> tuple:
    return struct.unpack(fmt, read_exact(src, struct.calcsize(fmt)))


def read_array(src: BinaryIO, dtype: str, count: int | None = None,
               max_count: int = 1 << 40) -> np.ndarray:
    """Read a (length-prefixed, unless ``count`` is given) array of ``dtype``."""
    if count is None:
        (count,) = read_struct(src, "<Q")
    if count > max_count:
        raise CorruptIndexError(f"array length {count} is implausible")
    item = np.dtype(dtype).itemsize
    data = read_exact(src, count * item)
    return np.frombuffer(data, dtype=dtype).copy()


def write_array(out: BinaryIO, arr: np.ndarray, dtype: str,
                length_prefix: bool = True) -> None:
    if length_prefix:
        out.write(struct.pack("<Q", len(arr)))
    out.write(arr.astype(dtype, copy=False).tobytes())
