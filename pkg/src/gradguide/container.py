"""Self-describing binary container for named little-endian arrays.

Layout (all integers little-endian)::

    magic      4 bytes  b"GGAC"
    version    u32
    meta_len   u64, then meta_len bytes of UTF-8 JSON
    n_arrays   u32
    per array: name_len u16, name, dtype u8 ('f' float64 | 'i' int64),
               ndim u8, ndim x u64 dims, raw little-endian data

Parameter sets, replay buffers and task sequences are all written with it.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GGAC"
FORMAT_VERSION = 1

_DTYPES = {ord("f"): np.dtype("<f8"), ord("i"): np.dtype("<i8")}


class ContainerError(ValueError):
    """Base class for container read failures."""


class MalformedFileError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


def dumps(arrays: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    out = [MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(meta_bytes)), meta_bytes]
    out.append(struct.pack("<I", len(arrays)))
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            code, dt = ord("i"), _DTYPES[ord("i")]
        else:
            code, dt = ord("f"), _DTYPES[ord("f")]
        raw_name = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw_name)))
        out.append(raw_name)
        out.append(struct.pack("<BB", code, arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype=dt).tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise MalformedFileError(
                f"truncated container: wanted {n} bytes at offset {self.pos}, "
                f"file has {len(self.buf)}"
            )
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(buf: bytes) -> tuple[dict[str, np.ndarray], dict]:
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise MalformedFileError("bad magic bytes; not a gradguide container")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"container format version {version} is not supported "
            f"(this build reads version {FORMAT_VERSION})"
        )
    (meta_len,) = r.unpack("<Q")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"corrupt metadata block: {exc}") from exc
    (count,) = r.unpack("<I")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8", errors="strict")
        code, ndim = r.unpack("<BB")
        if code not in _DTYPES:
            raise MalformedFileError(f"unknown dtype code {code!r} for {name!r}")
        shape = r.unpack(f"<{ndim}Q")
        dt = _DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = r.take(size * dt.itemsize)
        arrays[name] = np.frombuffer(data, dtype=dt).reshape(shape).astype(dt.newbyteorder("="))
    if r.pos != len(buf):
        raise MalformedFileError(f"{len(buf) - r.pos} trailing bytes after last array")
    return arrays, meta


def write(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(arrays, meta))
    os.replace(tmp, path)


def read(path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())
