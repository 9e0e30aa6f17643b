# besselab/services/artifacts/field_dump.py
# Binary field dumps: "BLAB", u8 version, u8 n, u8 domain tag, u64 N, f64 L, then
# N^n little-endian complex128 values (re, im interleaved), row-major.

import struct
from pathlib import Path

import numpy as np

from besselab.services.analysis.gridfield import Domain, Field, make_grid
from besselab.services.artifacts.atomic import PathLike, atomic_write_bytes

MAGIC = b"BLAB"
VERSION = 1
HEADER = struct.Struct("<4sBBBQd")
_TAGS = {Domain.PHYSICAL: 0, Domain.SPECTRAL: 1}
_DOMAINS = {v: k for k, v in _TAGS.items()}


def encode_field(field: Field) -> bytes:
    g = field.grid
    head = HEADER.pack(MAGIC, VERSION, g.n, _TAGS[field.domain], g.N, g.L)
    body = np.ascontiguousarray(field.values, dtype="<c16").tobytes(order="C")
    return head + body


def dump_field(field: Field, path: PathLike) -> Path:
    return atomic_write_bytes(path, encode_field(field))


def decode_field(data: bytes) -> Field:
    if len(data) < HEADER.size:
        raise ValueError("truncated field dump header")
    magic, version, n, tag, N, L = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"bad field dump magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    if tag not in _DOMAINS:
        raise ValueError(f"unknown domain tag {tag}")
    grid = make_grid(n, L, N)
    count = N**n
    expected = HEADER.size + 16 * count
    if len(data) != expected:
        raise ValueError(f"field dump has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<c16", count=count, offset=HEADER.size)
    return Field(grid, _DOMAINS[tag], values.reshape(grid.shape))


def load_field(path: PathLike) -> Field:
    return decode_field(Path(path).read_bytes())
