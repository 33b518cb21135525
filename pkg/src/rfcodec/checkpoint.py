"""Named-tensor checkpoint container.

Layout (all integers little-endian):
  magic "RFCK", u16 version=1, u32 tensor count, then per tensor:
  u16 name length, name bytes (utf-8), u8 rank, rank * u32 dims,
  then the float32 payload in C order.

Tensors are written sorted by name so identical parameter sets always
produce identical bytes; the 16-byte blake2b digest of those bytes is
used as the model id embedded in compressed payloads.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"RFCK"
VERSION = 1


def serialize_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    out = [MAGIC, struct.pack("<HI", VERSION, len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        enc = name.encode("utf-8")
        out.append(struct.pack("<H", len(enc)))
        out.append(enc)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"")
        out.append(arr.tobytes())
    return b"".join(out)


def deserialize_tensors(blob: bytes) -> dict[str, np.ndarray]:
    if blob[:4] != MAGIC:
        raise FormatError("not a checkpoint container (bad magic)")
    version, count = struct.unpack_from("<HI", blob, 4)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    off = 4 + struct.calcsize("<HI")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", blob, off)
            off += 2
            name = blob[off:off + name_len].decode("utf-8")
            off += name_len
            rank = blob[off]
            off += 1
            dims = struct.unpack_from(f"<{rank}I", blob, off)
            off += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(dims)
            off += 4 * n
        except (struct.error, ValueError) as exc:
            raise FormatError(f"truncated checkpoint container: {exc}") from None
        tensors[name] = arr.copy()
    if off != len(blob):
        raise FormatError("trailing bytes after last tensor")
    return tensors


def save_tensors(tensors: dict[str, np.ndarray], path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_tensors(tensors))


def load_tensors(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        return deserialize_tensors(f.read())


def digest(blob_or_tensors) -> bytes:
    """16-byte identity of a parameter set."""
    if isinstance(blob_or_tensors, dict):
        blob_or_tensors = serialize_tensors(blob_or_tensors)
    return hashlib.blake2b(blob_or_tensors, digest_size=16).digest()
