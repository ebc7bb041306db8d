"""``.sntt`` tensor blobs.

Layout (little-endian): magic ``SNTT``, u8 version (1), u8 dtype (1 = float32),
u8 ndims, u32 dims[ndims], row-major payload, u32 CRC32 of the payload.
Blobs are concatenated in a file and addressed by byte offset.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import BadMagic, ChecksumMismatch, InvalidTensor, TruncatedBlob

MAGIC = b"SNTT"
VERSION = 1
DTYPES = {1: np.dtype("<f4")}
_CODES = {v: k for k, v in DTYPES.items()}


def encode_tensor(arr) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim == 0 or arr.ndim > 255 or 0 in arr.shape:
        raise InvalidTensor(f"cannot store tensor of shape {arr.shape}")
    payload = np.ascontiguousarray(arr, dtype=DTYPES[1]).tobytes()
    head = MAGIC + struct.pack("<BBB", VERSION, _CODES[DTYPES[1]], arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + payload + struct.pack("<I", zlib.crc32(payload))


def decode_tensor(buf, offset: int = 0) -> tuple:
    """Returns ``(array, next_offset)``."""
    view = memoryview(buf)
    if len(view) - offset < 7:
        raise TruncatedBlob(f"blob header truncated at offset {offset}")
    if bytes(view[offset:offset + 4]) != MAGIC:
        raise BadMagic(f"no SNTT magic at offset {offset}")
    version, code, ndims = struct.unpack_from("<BBB", view, offset + 4)
    if version != VERSION:
        raise BadMagic(f"unsupported SNTT version {version}")
    if code not in DTYPES:
        raise BadMagic(f"unknown SNTT dtype code {code}")
    if ndims == 0:
        raise InvalidTensor("tensor with no dimensions")
    pos = offset + 7
    if len(view) < pos + 4 * ndims:
        raise TruncatedBlob("blob dims truncated")
    dims = struct.unpack_from(f"<{ndims}I", view, pos)
    if 0 in dims:
        raise InvalidTensor(f"tensor with empty dimension {dims}")
    pos += 4 * ndims
    n_bytes = int(np.prod(dims, dtype=np.int64)) * DTYPES[code].itemsize
    if len(view) < pos + n_bytes + 4:
        raise TruncatedBlob(f"payload of {n_bytes} bytes truncated")
    payload = bytes(view[pos:pos + n_bytes])
    (crc,) = struct.unpack_from("<I", view, pos + n_bytes)
    if zlib.crc32(payload) != crc:
        raise ChecksumMismatch(f"CRC32 mismatch for tensor at offset {offset}")
    arr = np.frombuffer(payload, dtype=DTYPES[code]).reshape(dims).astype(np.float32)
    return arr, pos + n_bytes + 4


def write_tensor(fh, arr) -> int:
    """Append ``arr`` to an open binary file; returns its byte offset."""
    offset = fh.tell()
    fh.write(encode_tensor(arr))
    return offset


def read_tensor(path, offset: int = 0) -> np.ndarray:
    with open(path, "rb") as fh:
        fh.seek(offset)
        head = fh.read(7)
        if len(head) < 7:
            raise TruncatedBlob(f"{path}: header truncated at offset {offset}")
        ndims = head[6]
        rest = fh.read(4 * ndims)
        dims = struct.unpack(f"<{len(rest) // 4}I", rest)
        n = int(np.prod(dims, dtype=np.int64)) * 4 if dims else 0
        body = fh.read(n + 4)
    arr, _ = decode_tensor(head + rest + body)
    return arr


def read_all(path) -> list:
    with open(path, "rb") as fh:
        data = fh.read()
    out, pos = [], 0
    while pos < len(data):
        arr, pos = decode_tensor(data, pos)
        out.append(arr)
    return out
