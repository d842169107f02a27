"""Binary file formats: IDX images/labels, raw PGM, checkpoints, matrices.

IDX is the big-endian format used by classic digit datasets: a 4-byte magic
(two zero bytes, an element-type byte, a rank byte), rank u32 dimensions,
then the raw elements. Only unsigned-byte elements (type code 0x08) are
supported. PGM is binary P5 with maxval 255.

Checkpoints use a little-endian layout: the 8-byte magic "DMSC0001", a u64
tensor count, then per tensor a u64 name length, the UTF-8 name, a u64 rank,
u64 dims, and the row-major float64 payload. Square-matrix dumps (affinity
or coefficient matrices) are a u64 N followed by N*N row-major float64.
"""

from __future__ import annotations

import struct

import numpy as np

CHECKPOINT_MAGIC = b"DMSC0001"
IDX_UBYTE = 0x08


# -- IDX ------------------------------------------------------------------------


def read_idx(path):
    """Read an IDX file into a uint8 ndarray (rank per the header)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX header at byte {len(raw)}")
    zero0, zero1, dtype, rank = raw[0], raw[1], raw[2], raw[3]
    if zero0 != 0 or zero1 != 0:
        raise ValueError(f"{path}: bad IDX magic at byte 0: {raw[:4]!r}")
    if dtype != IDX_UBYTE:
        raise ValueError(
            f"{path}: unsupported IDX element type 0x{dtype:02x} at byte 2 "
            "(only 0x08 unsigned byte)"
        )
    header_end = 4 + 4 * rank
    if len(raw) < header_end:
        raise ValueError(f"{path}: truncated IDX dimensions at byte {len(raw)}")
    dims = struct.unpack(f">{rank}I", raw[4:header_end])
    count = int(np.prod(dims)) if rank else 1
    if len(raw) != header_end + count:
        raise ValueError(
            f"{path}: IDX payload has {len(raw) - header_end} bytes at byte "
            f"{header_end}, expected {count}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(dims)


def write_idx(path, array):
    """Write a uint8 ndarray in IDX layout (round-trips with `read_idx`)."""
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">BBBB", 0, 0, IDX_UBYTE, arr.ndim))
        fh.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


# -- PGM ------------------------------------------------------------------------


def read_pgm(path):
    """Read a binary (P5) PGM with maxval <= 255 into a uint8 H x W array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {raw[:2]!r})")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: unsupported PGM maxval {maxval}")
    expect = width * height
    data = raw[pos : pos + expect]
    if len(data) != expect:
        raise ValueError(f"{path}: PGM payload has {len(data)} bytes, expected {expect}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)


def write_pgm(path, image):
    """Write a uint8 H x W array as binary PGM, maxval 255."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError(f"PGM image must be 2-D, got shape {img.shape}")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


# -- checkpoints -------------------------------------------------------------------


def save_checkpoint(path, tensors):
    """Save named float64 arrays; insertion order is preserved on load."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(tensors)))
        for name, value in tensors.items():
            # asarray, not ascontiguousarray: the latter would promote rank-0
            # to shape (1,); tobytes() emits C order for any layout
            arr = np.asarray(getattr(value, "data", value), dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<Q", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<Q", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path):
    """Load a checkpoint into an ordered dict of name -> float64 ndarray."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(
            f"{path}: bad checkpoint magic {raw[:len(CHECKPOINT_MAGIC)]!r}"
        )
    pos = len(CHECKPOINT_MAGIC)
    (count,) = struct.unpack_from("<Q", raw, pos)
    pos += 8
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        name = raw[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        dims = struct.unpack_from(f"<{rank}Q", raw, pos)
        pos += 8 * rank
        size = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(raw, dtype="<f8", count=size, offset=pos)
        pos += 8 * size
        out[name] = arr.reshape(dims).copy()
    if pos != len(raw):
        raise ValueError(f"{path}: {len(raw) - pos} trailing bytes at byte {pos}")
    return out


# -- square matrices (affinity / coefficients) ---------------------------------------


def save_matrix(path, matrix):
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix dump expects a square matrix, got {m.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", m.shape[0]))
        fh.write(m.tobytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated matrix header")
    (n,) = struct.unpack_from("<Q", raw, 0)
    if len(raw) != 8 + 8 * n * n:
        raise ValueError(
            f"{path}: matrix payload has {len(raw) - 8} bytes, expected {8 * n * n}"
        )
    return np.frombuffer(raw, dtype="<f8", offset=8).reshape(n, n).copy()


# -- loss history CSV -----------------------------------------------------------------


def write_loss_history(path, history):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch},{loss!r}\n")


def read_loss_history(path):
    history = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "epoch,loss":
            raise ValueError(f"{path}: unexpected loss history header {header!r}")
        for line in fh:
            _, loss = line.strip().split(",")
            history.append(float(loss))
    return history
