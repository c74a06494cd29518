"""Baseline JPEG encoder using the Annex K quantization and Huffman tables."""

import struct

import numpy as np

from .color import chroma_downsample, rgb_to_ycbcr
from .huffman import BitWriter, HuffmanTable, encode_magnitude, magnitude_category
from .idct import fdct_exact, zigzag_scan
from .tables import (
    AC_CHROMA,
    AC_LUMA,
    CHROMA_QUANT,
    DC_CHROMA,
    DC_LUMA,
    LUMA_QUANT,
    scaled_quant_table,
)

SUBSAMPLING_MODES = ("4:4:4", "4:2:0")

_HUFF = {
    "dc0": HuffmanTable(*DC_LUMA),
    "ac0": HuffmanTable(*AC_LUMA),
    "dc1": HuffmanTable(*DC_CHROMA),
    "ac1": HuffmanTable(*AC_CHROMA),
}


def _marker(code, payload=None):
    out = bytes([0xFF, code])
    if payload is not None:
        out += struct.pack(">H", len(payload) + 2) + payload
    return out


def _blocks(plane):
    """Split an (8m x 8n) plane into (m, n, 64) raster-order blocks."""
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(h // 8, w // 8, 64)


def _pad(plane, height, width):
    ph, pw = height - plane.shape[0], width - plane.shape[1]
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def quantize_plane(plane, qtable):
    """Forward DCT and quantization; returns int32 zigzag-ordered blocks."""
    F = fdct_exact(_blocks(plane - 128.0))
    q = F / qtable.astype(np.float64)
    q = np.sign(q) * np.floor(np.abs(q) + 0.5)
    # standard baseline tables only code AC magnitudes up to 10 bits
    q[..., 1:] = np.clip(q[..., 1:], -1023, 1023)
    return zigzag_scan(q.astype(np.int32))


def _encode_block(writer, zz, pred, dc, ac):
    dc_codes, ac_codes = dc.codes, ac.codes
    diff = int(zz[0]) - pred
    size = magnitude_category(diff)
    code, length = dc_codes[size]
    writer.write(code, length)
    writer.write(encode_magnitude(diff, size), size)
    run = 0
    nz = np.flatnonzero(zz[1:]) + 1
    last = 0
    for k in nz:
        run = k - last - 1
        while run > 15:
            code, length = ac_codes[0xF0]
            writer.write(code, length)
            run -= 16
        v = int(zz[k])
        size = magnitude_category(v)
        code, length = ac_codes[(run << 4) | size]
        writer.write(code, length)
        writer.write(encode_magnitude(v, size), size)
        last = k
    if last != 63:
        code, length = ac_codes[0x00]
        writer.write(code, length)
    return int(zz[0])


def encode(img, quality=75, subsampling="4:2:0", restart_interval=0):
    """Encode an ``(h, w, 1|3)`` uint8 array as baseline sequential JPEG bytes."""
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError("expected an (h, w, 1|3) uint8 image")
    if subsampling not in SUBSAMPLING_MODES:
        raise ValueError(f"subsampling must be one of {SUBSAMPLING_MODES}")
    h, w, nc = img.shape
    if nc == 1:
        subsampling = "4:4:4"
    f = 2 if subsampling == "4:2:0" else 1
    mcu = 8 * f
    ph, pw = -(-h // mcu) * mcu, -(-w // mcu) * mcu

    qy = scaled_quant_table(LUMA_QUANT, quality)
    qc = scaled_quant_table(CHROMA_QUANT, quality)

    if nc == 1:
        planes = [_pad(img[:, :, 0].astype(np.float64), ph, pw)]
    else:
        ycc = rgb_to_ycbcr(img)
        planes = [_pad(ycc[:, :, i], ph, pw) for i in range(3)]
        if f == 2:
            planes[1] = chroma_downsample(planes[1])
            planes[2] = chroma_downsample(planes[2])
    coeffs = [quantize_plane(planes[0], qy)] + [quantize_plane(p, qc) for p in planes[1:]]

    out = bytearray(_marker(0xD8))
    out += _marker(0xE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")
    dqt = bytes([0x00]) + bytes(zigzag_scan(qy).astype(np.uint8))
    if nc == 3:
        dqt += bytes([0x01]) + bytes(zigzag_scan(qc).astype(np.uint8))
    out += _marker(0xDB, dqt)
    sof = struct.pack(">BHHB", 8, h, w, nc)
    if nc == 1:
        sof += bytes([1, 0x11, 0])
    else:
        sof += bytes([1, (f << 4) | f, 0, 2, 0x11, 1, 3, 0x11, 1])
    out += _marker(0xC0, sof)
    dht = b""
    for cls, tid, key in ((0, 0, "dc0"), (1, 0, "ac0"), (0, 1, "dc1"), (1, 1, "ac1")):
        if tid == 1 and nc == 1:
            continue
        t = _HUFF[key]
        dht += bytes([(cls << 4) | tid]) + bytes(t.counts) + bytes(t.symbols)
    out += _marker(0xC4, dht)
    if restart_interval:
        out += _marker(0xDD, struct.pack(">H", restart_interval))
    if nc == 1:
        sos = bytes([1, 1, 0x00])
    else:
        sos = bytes([3, 1, 0x00, 2, 0x11, 3, 0x11])
    out += _marker(0xDA, sos + bytes([0, 63, 0]))

    tables = [(_HUFF["dc0"], _HUFF["ac0"])] + [(_HUFF["dc1"], _HUFF["ac1"])] * (nc - 1)
    layout = [(0, v, u) for v in range(f) for u in range(f)] + [(c, 0, 0) for c in range(1, nc)]
    mcuy, mcux = ph // mcu, pw // mcu
    writer = BitWriter()
    preds = [0] * nc
    n = 0
    rst = 0
    for my in range(mcuy):
        for mx in range(mcux):
            if restart_interval and n and n % restart_interval == 0:
                out += writer.flush()
                out += _marker(0xD0 + rst)
                rst = (rst + 1) % 8
                writer = BitWriter()
                preds = [0] * nc
            for c, v, u in layout:
                scale = f if c == 0 else 1
                zz = coeffs[c][my * scale + v, mx * scale + u]
                dc, ac = tables[c]
                preds[c] = _encode_block(writer, zz, preds[c], dc, ac)
            n += 1
    out += writer.flush()
    out += _marker(0xD9)
    return bytes(out)
