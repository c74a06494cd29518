"""Tensor (``.npy`` v1.0) and PPM/PGM file I/O."""

import ast
import struct

import numpy as np

from .errors import TensorFormatError

NPY_MAGIC = b"\x93NUMPY"
NPY_ALIGN = 64


def tensor_file_bytes(tensor):
    """Serialize a C-order uint8 ``(C, H, W)`` tensor as a version 1.0 ``.npy`` container."""
    tensor = np.ascontiguousarray(tensor)
    if tensor.dtype != np.uint8 or tensor.ndim != 3:
        raise TensorFormatError(f"expected a 3-D uint8 tensor, got {tensor.dtype} {tensor.shape}")
    shape = ", ".join(str(d) for d in tensor.shape)
    header = "{'descr': '|u1', 'fortran_order': False, 'shape': (%s), }" % shape
    # magic(6) + version(2) + length(2) + header + '\n' must be 64-aligned
    pad = NPY_ALIGN - (len(NPY_MAGIC) + 4 + len(header) + 1) % NPY_ALIGN
    if pad == NPY_ALIGN:
        pad = 0
    header = header + " " * pad + "\n"
    return NPY_MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header.encode("latin1") + tensor.tobytes()


def write_tensor_file(tensor, path):
    data = tensor_file_bytes(tensor)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def parse_tensor_bytes(data):
    if data[:6] != NPY_MAGIC:
        raise TensorFormatError("bad .npy magic")
    if data[6:8] != b"\x01\x00":
        raise TensorFormatError(f"unsupported .npy version {data[6]}.{data[7]}")
    if len(data) < 10:
        raise TensorFormatError("truncated .npy header")
    (hlen,) = struct.unpack("<H", data[8:10])
    try:
        header = ast.literal_eval(data[10:10 + hlen].decode("latin1"))
    except (SyntaxError, ValueError, UnicodeDecodeError):
        raise TensorFormatError("unparseable .npy header") from None
    if not isinstance(header, dict) or header.get("descr") not in ("|u1", "u1", "<u1"):
        raise TensorFormatError(f"expected an unsigned 8-bit tensor, header {header!r}")
    if header.get("fortran_order"):
        raise TensorFormatError("Fortran-ordered tensors are not supported")
    shape = header.get("shape")
    if not (isinstance(shape, tuple) and len(shape) == 3 and all(isinstance(d, int) and d > 0 for d in shape)):
        raise TensorFormatError(f"expected a (C, H, W) shape, got {shape!r}")
    payload = data[10 + hlen:]
    if len(payload) != shape[0] * shape[1] * shape[2]:
        raise TensorFormatError("payload size does not match the declared shape")
    return np.frombuffer(payload, dtype=np.uint8).reshape(shape).copy()


def read_tensor_file(path):
    with open(path, "rb") as fh:
        return parse_tensor_bytes(fh.read())


def to_channel_first(img):
    return np.ascontiguousarray(np.transpose(img, (2, 0, 1)))


def to_channel_last(tensor):
    return np.ascontiguousarray(np.transpose(tensor, (1, 2, 0)))


def ppm_bytes(img):
    """P6 for 3-channel, P5 for 1-channel images."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    magic = {1: b"P5", 3: b"P6"}[c]
    return magic + b"\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def write_ppm(img, path):
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6") or maxval != 255:
        raise TensorFormatError("only 8-bit binary PPM/PGM is supported")
    c = 3 if magic == b"P6" else 1
    return np.frombuffer(data[pos:pos + w * h * c], dtype=np.uint8).reshape(h, w, c).copy()
