"""Byte-exact readers and writers: PFM disparities, COGFEAT1 feature
containers, binary PGM images and JSON config/report documents."""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .field_core import DisparityField, FeatureMap, Grid2D

FEATC_MAGIC = b"COGFEAT1"
_FEATC_HEADER = struct.Struct("<8sIII")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write to a sibling temp file and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- PFM --------------------------------------------------------------------

def encode_pfm(values: np.ndarray, little_endian: bool = True) -> bytes:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim != 2:
        raise ValueError(f"PFM grayscale payload must be 2-D, got {values.shape}")
    height, width = values.shape
    scale = "-1.0" if little_endian else "1.0"
    header = f"Pf\n{width} {height}\n{scale}\n".encode("ascii")
    dtype = "<f4" if little_endian else ">f4"
    return header + np.ascontiguousarray(values[::-1], dtype=dtype).tobytes()


def _read_header_line(data: bytes, offset: int):
    end = data.find(b"\n", offset)
    if end < 0:
        raise FormatError("unterminated PFM header line", offset)
    return data[offset:end], end + 1


def decode_pfm(data: bytes) -> np.ndarray:
    """Decode a grayscale PFM into a top-to-bottom float32 array."""
    magic, off = _read_header_line(data, 0)
    if magic.strip() != b"Pf":
        raise FormatError(f"bad PFM magic {magic[:8]!r}, expected b'Pf'", 0)
    dims_at = off
    dims, off = _read_header_line(data, off)
    try:
        width, height = (int(tok) for tok in dims.split())
    except ValueError:
        raise FormatError(f"bad PFM dimensions line {dims!r}", dims_at) from None
    if width < 1 or height < 1:
        raise FormatError(f"PFM dimensions must be positive, got {width}x{height}", dims_at)
    scale_at = off
    scale_line, off = _read_header_line(data, off)
    try:
        scale = float(scale_line)
    except ValueError:
        raise FormatError(f"bad PFM scale line {scale_line!r}", scale_at) from None
    if scale == 0 or not np.isfinite(scale):
        raise FormatError("PFM scale must be finite and non-zero", scale_at)
    expected = 4 * width * height
    payload = data[off:]
    if len(payload) < expected:
        raise FormatError(
            f"truncated PFM payload: expected {expected} bytes, found {len(payload)}",
            off + len(payload),
        )
    dtype = "<f4" if scale < 0 else ">f4"
    values = np.frombuffer(payload[:expected], dtype=dtype).reshape(height, width)
    return values[::-1].astype(np.float32)


def write_pfm(d, path, little_endian: bool = True) -> None:
    """Write a DisparityField (invalid pixels as +Inf) or a plain 2-D array."""
    if isinstance(d, DisparityField):
        values = np.where(d.valid, d.values, np.float32(np.inf)).astype(np.float32)
    elif isinstance(d, Grid2D):
        values = d.values
    else:
        values = np.asarray(d, dtype=np.float32)
    atomic_write_bytes(path, encode_pfm(values, little_endian))


def read_pfm_array(path) -> np.ndarray:
    return decode_pfm(Path(path).read_bytes())


def read_pfm(path) -> DisparityField:
    """Read disparities; non-finite samples come back as invalid pixels."""
    values = read_pfm_array(path)
    finite = np.isfinite(values)
    if np.any(values[finite] < 0):
        raise FormatError(f"{path}: negative disparity in PFM payload")
    return DisparityField(Grid2D(np.where(finite, values, np.float32(0))), finite)


# -- COGFEAT1 ---------------------------------------------------------------

def encode_featc(F: FeatureMap) -> bytes:
    h, w, c = F.values.shape
    header = _FEATC_HEADER.pack(FEATC_MAGIC, h, w, c)
    return header + np.ascontiguousarray(F.values, dtype="<f4").tobytes()


def decode_featc(data: bytes) -> FeatureMap:
    if len(data) < _FEATC_HEADER.size:
        raise FormatError(
            f"size mismatch: header needs {_FEATC_HEADER.size} bytes, file has {len(data)}",
            len(data),
        )
    magic, h, w, c = _FEATC_HEADER.unpack_from(data, 0)
    if magic != FEATC_MAGIC:
        raise FormatError(f"bad feature container magic {magic!r}, expected {FEATC_MAGIC!r}", 0)
    expected = _FEATC_HEADER.size + 4 * h * w * c
    if len(data) != expected:
        raise FormatError(
            f"size mismatch: header {h}x{w}x{c} implies {expected} bytes, file has {len(data)}",
            min(len(data), expected),
        )
    values = np.frombuffer(data, dtype="<f4", offset=_FEATC_HEADER.size).reshape(h, w, c)
    return FeatureMap(values.astype(np.float32))


def write_featc(F: FeatureMap, path) -> None:
    atomic_write_bytes(path, encode_featc(F))


def read_featc(path) -> FeatureMap:
    return decode_featc(Path(path).read_bytes())


# -- PGM (read only) --------------------------------------------------------

def read_pgm(path) -> Grid2D:
    """Binary (P5) PGM, 8 or 16 bit, scaled to [0, 1]."""
    data = Path(path).read_bytes()
    tokens = []
    off = 0
    while len(tokens) < 4:
        while off < len(data) and data[off:off + 1].isspace():
            off += 1
        if data[off:off + 1] == b"#":
            off = data.find(b"\n", off) + 1
            if off == 0:
                raise FormatError("unterminated PGM comment", len(data))
            continue
        start = off
        while off < len(data) and not data[off:off + 1].isspace():
            off += 1
        if start == off:
            raise FormatError("truncated PGM header", off)
        tokens.append(data[start:off])
    if tokens[0] != b"P5":
        raise FormatError(f"bad PGM magic {tokens[0]!r}, expected b'P5'", 0)
    width, height, maxval = (int(t) for t in tokens[1:])
    off += 1
    dtype = ">u2" if maxval > 255 else "u1"
    size = width * height * np.dtype(dtype).itemsize
    if len(data) - off < size:
        raise FormatError(f"truncated PGM payload: expected {size} bytes, found {len(data) - off}",
                          len(data))
    pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=off)
    return Grid2D(pixels.reshape(height, width).astype(np.float64) / maxval)


def read_image(path) -> Grid2D:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    return Grid2D(read_pfm_array(path))


# -- JSON -------------------------------------------------------------------

def write_json(obj, path) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def read_json(path):
    return json.loads(Path(path).read_text())
