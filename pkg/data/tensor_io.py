import os
import struct
from typing import Sequence, Tuple

import numpy as np

from utils.errors import BadMagic, DimMismatch, InvalidTensor, TruncatedFile

# RT4D 容器：magic + u32 版本 + u32 维数 + 各维 u32 + u32 dtype，
# 随后是 64 字节元数据区（网格六元组 f32），最后是行主序载荷
MAGIC = b"R4DT"
VERSION = 1
DTYPE_F32 = 0
META_SIZE = 64
SUPPORTED_NDIMS = (2, 3, 4)

_DTYPES = {DTYPE_F32: np.dtype("<f4")}
_ZERO_GRID = (0.0,) * 6


def write_rt4d(path: str, array: np.ndarray, grid: Sequence[float] = _ZERO_GRID) -> None:
    """写出 RT4D 文件

    Args:
        path: 输出路径
        array: 2~4 维数组，按 32 位小端浮点写出
        grid: 网格六元组 (range_min, range_max, az_min, az_max, dop_min, dop_max)

    Raises:
        DimMismatch: 维数不受支持
    """
    data = np.ascontiguousarray(array, dtype=_DTYPES[DTYPE_F32])
    if data.ndim not in SUPPORTED_NDIMS:
        raise DimMismatch(f"RT4D supports {SUPPORTED_NDIMS} dims, got {data.ndim}", path=path)
    if len(grid) != 6:
        raise InvalidTensor(f"grid metadata needs 6 values, got {len(grid)}", path=path)

    header = MAGIC + struct.pack("<II", VERSION, data.ndim)
    header += struct.pack(f"<{data.ndim}I", *data.shape)
    header += struct.pack("<I", DTYPE_F32)
    meta = struct.pack("<6f", *grid).ljust(META_SIZE, b"\0")

    with open(path, "wb") as f:
        f.write(header)
        f.write(meta)
        data.tofile(f)


def _read_exact(f, size: int, what: str, path: str) -> bytes:
    chunk = f.read(size)
    if len(chunk) < size:
        raise TruncatedFile(f"file ends inside {what}", path=path)
    return chunk


def read_rt4d(path: str) -> Tuple[np.ndarray, Tuple[float, ...]]:
    """读取 RT4D 文件

    Args:
        path: 文件路径

    Returns:
        (数组, 网格六元组)，数组 dtype 为 float32，与写入时逐位一致

    Raises:
        BadMagic: magic 或版本不匹配
        DimMismatch: 维数不受支持、维度为 0 或载荷后有多余字节
        TruncatedFile: 文件在头部、元数据或载荷中途结束
        InvalidTensor: dtype 代码未知
    """
    file_size = os.path.getsize(path)
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            if len(magic) < 4 and MAGIC.startswith(magic):
                raise TruncatedFile("file ends inside magic", path=path)
            raise BadMagic(f"bad magic {magic!r}", path=path)

        version, ndims = struct.unpack("<II", _read_exact(f, 8, "header", path))
        if version != VERSION:
            raise BadMagic(f"unsupported RT4D version {version}", path=path)
        if ndims not in SUPPORTED_NDIMS:
            raise DimMismatch(f"header declares {ndims} dims", path=path)

        dims = struct.unpack(f"<{ndims}I", _read_exact(f, 4 * ndims, "header", path))
        if any(d == 0 for d in dims):
            raise DimMismatch(f"zero-sized dimension in {dims}", path=path)
        (dtype_code,) = struct.unpack("<I", _read_exact(f, 4, "header", path))
        if dtype_code not in _DTYPES:
            raise InvalidTensor(f"unknown dtype code {dtype_code}", path=path)
        dtype = _DTYPES[dtype_code]

        meta = _read_exact(f, META_SIZE, "metadata", path)
        grid = struct.unpack("<6f", meta[:24])

        count = int(np.prod(dims, dtype=np.int64))
        payload_offset = f.tell()
        expected = payload_offset + count * dtype.itemsize
        if file_size < expected:
            raise TruncatedFile(
                f"payload needs {count * dtype.itemsize} bytes, "
                f"found {file_size - payload_offset}", path=path)
        if file_size > expected:
            raise DimMismatch(
                f"{file_size - expected} trailing bytes after payload of {dims}", path=path)

        data = np.fromfile(f, dtype=dtype, count=count)

    return data.reshape(dims).astype(np.float32, copy=False), tuple(float(v) for v in grid)
