"""MetaImage (.mhd + .raw) reading and writing, plus headerless raw loading.

Only the uncompressed, little-endian subset of MetaImage is supported.
Header keys honored: NDims (must be 3), DimSize, ElementSpacing, ElementType,
ElementDataFile, BinaryDataByteOrderMSB (False only). Other keys are carried
through on read but ignored. Element types are converted to float32 on load
without rescaling; binary volumes are written as uint8 {0, 1}.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError
from .volume import BinaryVolume, ScalarVolume, Volume

_MET_TO_DTYPE = {
    "MET_UCHAR": np.dtype(np.uint8),
    "MET_SHORT": np.dtype(np.int16),
    "MET_USHORT": np.dtype(np.uint16),
    "MET_FLOAT": np.dtype(np.float32),
}
_DTYPE_TO_MET = {v: k for k, v in _MET_TO_DTYPE.items()}

# CLI names for raw-mode element types.
RAW_DTYPES = {
    "u8": np.dtype(np.uint8),
    "i16": np.dtype(np.int16),
    "u16": np.dtype(np.uint16),
    "f32": np.dtype(np.float32),
}


def _parse_header(path: str) -> dict[str, str]:
    header: dict[str, str] = {}
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}: malformed header line {line!r}")
            key, value = line.split("=", 1)
            header[key.strip()] = value.strip()
    return header


def _volume_from_buffer(buf: np.ndarray, dims, spacing) -> ScalarVolume:
    nx, ny, nz = dims
    if buf.size != nx * ny * nz:
        raise InputError(
            f"raw data holds {buf.size} elements but DimSize {nx} {ny} {nz} "
            f"requires {nx * ny * nz}"
        )
    data = buf.reshape(nz, ny, nx).astype(np.float32)
    return ScalarVolume(data, spacing)


def load_raw(path: str, dims, spacing, dtype: str | np.dtype) -> ScalarVolume:
    """Load a bare little-endian raw file given dims (nx,ny,nz), spacing and dtype."""
    if isinstance(dtype, str):
        try:
            dtype = RAW_DTYPES[dtype]
        except KeyError:
            raise InputError(f"unsupported raw dtype {dtype!r}; pick from {sorted(RAW_DTYPES)}")
    if not os.path.exists(path):
        raise InputError(f"raw file not found: {path}")
    buf = np.fromfile(path, dtype=np.dtype(dtype).newbyteorder("<"))
    return _volume_from_buffer(buf, dims, spacing)


def load_volume(path: str, dims=None, spacing=None, dtype=None) -> ScalarVolume:
    """Load a volume from a MetaImage header, or from a raw file when dims,
    spacing and dtype are supplied explicitly.

    All supported element types are converted to float32 without rescaling.
    """
    if not os.path.exists(path):
        raise InputError(f"file not found: {path}")
    if dims is not None or spacing is not None or dtype is not None:
        if None in (dims, spacing, dtype):
            raise InputError("raw loading needs dims, spacing and dtype together")
        return load_raw(path, dims, spacing, dtype)

    header = _parse_header(path)
    for key in ("DimSize", "ElementType", "ElementDataFile"):
        if key not in header:
            raise InputError(f"{path}: missing required header key {key}")
    if header.get("NDims", "3") != "3":
        raise InputError(f"{path}: only NDims = 3 is supported")
    if header.get("BinaryDataByteOrderMSB", "False").lower() == "true":
        raise InputError(f"{path}: big-endian data is not supported")
    if header.get("CompressedData", "False").lower() == "true":
        raise InputError(f"{path}: compressed MetaImage is not supported")

    try:
        dims = tuple(int(t) for t in header["DimSize"].split())
    except ValueError:
        raise InputError(f"{path}: unparseable DimSize {header['DimSize']!r}")
    if len(dims) != 3 or min(dims) < 1:
        raise InputError(f"{path}: DimSize must be three positive integers, got {dims}")

    spacing = (1.0, 1.0, 1.0)
    if "ElementSpacing" in header:
        try:
            spacing = tuple(float(t) for t in header["ElementSpacing"].split())
        except ValueError:
            raise InputError(f"{path}: unparseable ElementSpacing")

    met_type = header["ElementType"]
    if met_type not in _MET_TO_DTYPE:
        raise InputError(f"{path}: unsupported ElementType {met_type}")
    np_dtype = _MET_TO_DTYPE[met_type].newbyteorder("<")

    data_file = header["ElementDataFile"]
    if data_file in ("LOCAL", "LIST"):
        raise InputError(f"{path}: ElementDataFile = {data_file} is not supported")
    if not os.path.isabs(data_file):
        data_file = os.path.join(os.path.dirname(os.path.abspath(path)), data_file)
    if not os.path.exists(data_file):
        raise InputError(f"{path}: raw data file not found: {data_file}")

    buf = np.fromfile(data_file, dtype=np_dtype)
    return _volume_from_buffer(buf, dims, spacing)


def load_binary_volume(path: str, **kw) -> BinaryVolume:
    """Load a mask: any nonzero voxel becomes true."""
    v = load_volume(path, **kw)
    return BinaryVolume(v.data != 0, v.spacing)


def write_volume(v: Volume, path: str) -> None:
    """Write a .mhd/.raw pair. ``path`` names the header; the raw file sits
    next to it with the same stem.

    Scalar volumes are stored as little-endian float32, binary volumes as
    uint8 {0, 1}.
    """
    if not path.endswith(".mhd"):
        path = path + ".mhd"
    nx, ny, nz = v.dims
    if isinstance(v, BinaryVolume):
        raw = v.data.astype(np.uint8)
    else:
        raw = np.asarray(v.data, dtype="<f4")
    met_type = _DTYPE_TO_MET[np.dtype(raw.dtype.newbyteorder("="))]

    raw_path = path[:-4] + ".raw"
    sx, sy, sz = v.spacing
    lines = [
        "ObjectType = Image",
        "NDims = 3",
        "BinaryData = True",
        "BinaryDataByteOrderMSB = False",
        "CompressedData = False",
        f"DimSize = {nx} {ny} {nz}",
        f"ElementSpacing = {sx:.17g} {sy:.17g} {sz:.17g}",
        f"ElementType = {met_type}",
        f"ElementDataFile = {os.path.basename(raw_path)}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    raw.astype(raw.dtype.newbyteorder("<"), copy=False).tofile(raw_path)


__all__ = ["load_volume", "load_binary_volume", "load_raw", "write_volume", "RAW_DTYPES"]
