"""Baseline sequential JPEG decoder with configurable divergence sources.

The decode path is marker parse -> Huffman decode -> zigzag -> dequantize ->
iDCT -> level shift and clamp -> chroma upsample -> color conversion. The
iDCT backend, the chroma upsampler and the color-conversion rounding are
chosen by a :class:`DecoderSpec`.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, MalformedStreamError, UnsupportedFeatureError
from .color import ROUNDING_MODES, UPSAMPLE_MODES, chroma_upsample, ycbcr_to_rgb
from .huffman import BitReader, HuffmanTable
from .idct import COEFF_MAX, COEFF_MIN, idct_exact, idct_fast, zigzag_unscan

IDCT_BACKENDS = ("exact", "fast")


@dataclass(frozen=True)
class DecoderSpec:
    idct_backend: str = "exact"
    chroma_upsample: str = "linear"
    ycbcr_rounding: str = "round-half-up"
    preset_name: str = None

    def __post_init__(self):
        if self.idct_backend not in IDCT_BACKENDS:
            raise ConfigError(f"unknown iDCT backend {self.idct_backend!r}")
        if self.chroma_upsample not in UPSAMPLE_MODES:
            raise ConfigError(f"unknown chroma upsampling {self.chroma_upsample!r}")
        if self.ycbcr_rounding not in ROUNDING_MODES:
            raise ConfigError(f"unknown rounding mode {self.ycbcr_rounding!r}")


PRESETS = {
    "preset-pil": DecoderSpec("exact", "linear", "round-half-up", "preset-pil"),
    "preset-opencv": DecoderSpec("fast", "replicate", "round-half-up", "preset-opencv"),
    "preset-ffmpeg": DecoderSpec("fast", "linear", "truncate", "preset-ffmpeg"),
}
DEFAULT_DECODER = "preset-pil"


def canonical_decoder_name(name):
    """Map ``pil`` / ``preset-pil`` style names to the preset key."""
    key = name if name.startswith("preset-") else f"preset-{name}"
    if key not in PRESETS:
        raise ConfigError(f"unknown decoder preset {name!r}; choose from {sorted(PRESETS)}")
    return key


def resolve_decoder(spec):
    """Accept a DecoderSpec or a preset name."""
    if isinstance(spec, DecoderSpec):
        return spec
    return PRESETS[canonical_decoder_name(spec)]


@dataclass
class Component:
    ident: int
    h: int
    v: int
    tq: int
    width: int = 0  # samples, before padding to blocks
    height: int = 0
    coeffs: np.ndarray = None  # (blocks_y, blocks_x, 64), zigzag order, quantized
    qtable: np.ndarray = None  # zigzag order, snapshot at scan time


@dataclass
class Frame:
    width: int
    height: int
    components: list
    hmax: int
    vmax: int
    restart_interval: int = 0
    scans: int = 0
    quant_tables: dict = field(default_factory=dict)

    @property
    def mcux(self):
        return -(-self.width // (8 * self.hmax))

    @property
    def mcuy(self):
        return -(-self.height // (8 * self.vmax))


@dataclass
class DecodeStats:
    saturated: int = 0
    blocks: int = 0
    restarts: int = 0


_UNSUPPORTED_SOF = {
    0xC2: "progressive DCT",
    0xC3: "lossless",
    0xC5: "differential sequential (hierarchical)",
    0xC6: "differential progressive (hierarchical)",
    0xC7: "differential lossless (hierarchical)",
    0xC9: "arithmetic coding",
    0xCA: "arithmetic progressive",
    0xCB: "arithmetic lossless",
    0xCD: "arithmetic differential",
    0xCE: "arithmetic differential progressive",
    0xCF: "arithmetic differential lossless",
}


def _segment(data, pos):
    """Return (payload, next_pos) for the length-prefixed segment starting at ``pos``."""
    if pos + 2 > len(data):
        raise MalformedStreamError("truncated marker segment")
    (length,) = struct.unpack_from(">H", data, pos)
    if length < 2 or pos + length > len(data):
        raise MalformedStreamError("marker segment length runs past end of stream")
    return data[pos + 2:pos + length], pos + length


def _parse_dqt(payload, tables):
    i = 0
    while i < len(payload):
        pq, tq = payload[i] >> 4, payload[i] & 15
        i += 1
        if pq != 0:
            raise UnsupportedFeatureError("16-bit quantization tables")
        if tq > 3:
            raise MalformedStreamError(f"quantization table id {tq} out of range")
        if i + 64 > len(payload):
            raise MalformedStreamError("truncated DQT segment")
        q = np.frombuffer(payload[i:i + 64], dtype=np.uint8).astype(np.int32)
        if not q.all():
            raise MalformedStreamError("quantization table contains a zero entry")
        tables[tq] = q
        i += 64


def _parse_dht(payload, dc_tables, ac_tables):
    i = 0
    while i < len(payload):
        if i + 17 > len(payload):
            raise MalformedStreamError("truncated DHT segment")
        tc, th = payload[i] >> 4, payload[i] & 15
        counts = tuple(payload[i + 1:i + 17])
        n = sum(counts)
        i += 17
        if i + n > len(payload):
            raise MalformedStreamError("truncated DHT segment")
        if tc > 1 or th > 3:
            raise MalformedStreamError(f"bad Huffman table class/id {tc}/{th}")
        table = HuffmanTable(counts, tuple(payload[i:i + n]))
        (dc_tables if tc == 0 else ac_tables)[th] = table
        i += n


def _parse_sof(payload, marker):
    if len(payload) < 6:
        raise MalformedStreamError("truncated SOF segment")
    precision, height, width, nc = struct.unpack_from(">BHHB", payload, 0)
    if precision != 8:
        raise UnsupportedFeatureError(f"{precision}-bit sample precision")
    if height == 0:
        raise UnsupportedFeatureError("DNL-defined image height")
    if width == 0:
        raise MalformedStreamError("zero image width")
    if nc not in (1, 3):
        raise UnsupportedFeatureError(f"{nc} color components")
    if len(payload) < 6 + 3 * nc:
        raise MalformedStreamError("truncated SOF segment")
    comps = []
    for k in range(nc):
        ident, hv, tq = payload[6 + 3 * k:9 + 3 * k]
        h, v = hv >> 4, hv & 15
        if not (1 <= h <= 4 and 1 <= v <= 4) or tq > 3:
            raise MalformedStreamError("bad component sampling factors or table id")
        comps.append(Component(ident, h, v, tq))
    if nc == 1:
        comps[0].h = comps[0].v = 1
    elif all((c.h, c.v) == (comps[0].h, comps[0].v) for c in comps):
        for c in comps:
            c.h = c.v = 1
    elif not ((comps[0].h, comps[0].v) == (2, 2) and all((c.h, c.v) == (1, 1) for c in comps[1:])):
        factors = ", ".join(f"{c.h}x{c.v}" for c in comps)
        raise UnsupportedFeatureError(f"chroma subsampling {factors} (only 4:4:4 and 4:2:0)")
    hmax = max(c.h for c in comps)
    vmax = max(c.v for c in comps)
    frame = Frame(width, height, comps, hmax, vmax)
    for c in comps:
        c.width = -(-width * c.h // hmax)
        c.height = -(-height * c.v // vmax)
        c.coeffs = np.zeros((frame.mcuy * c.v, frame.mcux * c.h, 64), dtype=np.int32)
    return frame


def _entropy_segments(data, pos):
    """Unstuff the entropy-coded data starting at ``pos``.

    Returns (segments split at RST markers, RST numbers, position of the
    marker that ends the scan).
    """
    segments = []
    rst = []
    cur = bytearray()
    n = len(data)
    while True:
        i = data.find(b"\xff", pos)
        if i < 0:
            cur += data[pos:]
            pos = n
            break
        cur += data[pos:i]
        j = i + 1
        while j < n and data[j] == 0xFF:
            j += 1
        if j >= n:
            pos = n
            break
        b = data[j]
        if b == 0x00:
            cur.append(0xFF)
            pos = j + 1
        elif 0xD0 <= b <= 0xD7:
            segments.append(bytes(cur))
            rst.append(b - 0xD0)
            cur = bytearray()
            pos = j + 1
        else:
            pos = j - 1
            break
    segments.append(bytes(cur))
    return segments, rst, pos


def _decode_block(reader, dc, ac, pred, out):
    t = reader.decode(dc)
    if t > 11:
        raise MalformedStreamError(f"DC magnitude category {t} out of range")
    pred += reader.receive_extend(t)
    out[0] = pred
    k = 1
    while k < 64:
        rs = reader.decode(ac)
        r, s = rs >> 4, rs & 15
        if s == 0:
            if r != 15:
                break
            k += 16
            continue
        if s > 10:
            raise MalformedStreamError(f"AC magnitude category {s} out of range")
        k += r
        if k > 63:
            raise MalformedStreamError("AC run past end of block")
        out[k] = reader.receive_extend(s)
        k += 1
    return pred


def _decode_scan(frame, scan_comps, dc_tables, ac_tables, segments, rst, stats):
    for comp, td, ta in scan_comps:
        if td not in dc_tables or ta not in ac_tables:
            raise MalformedStreamError("scan references an undefined Huffman table")

    if len(scan_comps) == 1:
        comp = scan_comps[0][0]
        bx = -(-comp.width // 8)
        by = -(-comp.height // 8)
        units = [[(0, y, x)] for y in range(by) for x in range(bx)]
    else:
        units = []
        for my in range(frame.mcuy):
            for mx in range(frame.mcux):
                mcu = []
                for ci, (comp, _, _) in enumerate(scan_comps):
                    for v in range(comp.v):
                        for h in range(comp.h):
                            mcu.append((ci, my * comp.v + v, mx * comp.h + h))
                units.append(mcu)

    ri = frame.restart_interval
    tables = [(c, dc_tables[td], ac_tables[ta]) for c, td, ta in scan_comps]
    preds = [0] * len(scan_comps)
    seg_index = 0
    reader = BitReader(segments[0])
    block = [0] * 64
    for u, mcu in enumerate(units):
        if ri and u and u % ri == 0:
            seg_index += 1
            if seg_index >= len(segments):
                raise MalformedStreamError("truncated scan: missing restart interval")
            expected = (seg_index - 1) % 8
            if rst[seg_index - 1] != expected:
                raise MalformedStreamError(
                    f"restart marker RST{rst[seg_index - 1]} where RST{expected} was expected"
                )
            reader = BitReader(segments[seg_index])
            preds = [0] * len(scan_comps)
            stats.restarts += 1
        for ci, y, x in mcu:
            comp, dc, ac = tables[ci]
            block[:] = [0] * 64
            preds[ci] = _decode_block(reader, dc, ac, preds[ci], block)
            comp.coeffs[y, x] = block
            stats.blocks += 1


def read_coefficients(data, stats=None):
    """Parse a JPEG stream and entropy-decode it.

    Returns a :class:`Frame` whose components carry quantized, zigzag-ordered
    coefficients and the quantization table each one was coded with.
    """
    data = bytes(data)
    stats = stats if stats is not None else DecodeStats()
    if data[:2] != b"\xff\xd8":
        raise MalformedStreamError("missing SOI marker")
    pos = 2
    frame = None
    quant = {}
    dc_tables = {}
    ac_tables = {}
    restart_interval = 0
    while True:
        if pos >= len(data):
            if frame is not None and frame.scans:
                break  # tolerate a missing EOI after complete scans
            raise MalformedStreamError("stream ended before any scan")
        if data[pos] != 0xFF:
            raise MalformedStreamError(f"expected marker at offset {pos}")
        while pos < len(data) and data[pos] == 0xFF:
            pos += 1
        if pos >= len(data):
            raise MalformedStreamError("stream ends inside a marker")
        marker = data[pos]
        pos += 1
        if marker == 0xD9:
            break
        if marker in _UNSUPPORTED_SOF:
            raise UnsupportedFeatureError(_UNSUPPORTED_SOF[marker])
        if marker == 0xCC:
            raise UnsupportedFeatureError("arithmetic coding conditioning tables")
        if marker == 0xDC:
            raise UnsupportedFeatureError("DNL marker")
        if 0xD0 <= marker <= 0xD8 or marker == 0x01:
            raise MalformedStreamError(f"unexpected marker 0xFF{marker:02X}")
        payload, pos = _segment(data, pos)
        if marker in (0xC0, 0xC1):
            if frame is not None:
                raise MalformedStreamError("multiple SOF markers")
            frame = _parse_sof(payload, marker)
            frame.restart_interval = restart_interval
        elif marker == 0xC4:
            _parse_dht(payload, dc_tables, ac_tables)
        elif marker == 0xDB:
            _parse_dqt(payload, quant)
        elif marker == 0xDD:
            if len(payload) != 2:
                raise MalformedStreamError("bad DRI segment")
            (restart_interval,) = struct.unpack(">H", payload)
            if frame is not None:
                frame.restart_interval = restart_interval
        elif marker == 0xDA:
            if frame is None:
                raise MalformedStreamError("SOS before SOF")
            scan_comps = _parse_sos(payload, frame)
            for comp, _, _ in scan_comps:
                if comp.tq not in quant:
                    raise MalformedStreamError(f"undefined quantization table {comp.tq}")
                comp.qtable = quant[comp.tq].copy()
            segments, rst, pos = _entropy_segments(data, pos)
            _decode_scan(frame, scan_comps, dc_tables, ac_tables, segments, rst, stats)
            frame.scans += 1
        # APPn, COM and anything else length-prefixed are skipped
    if frame is None or not frame.scans:
        raise MalformedStreamError("no image data")
    if any(c.qtable is None for c in frame.components):
        raise MalformedStreamError("component missing from all scans")
    frame.quant_tables = quant
    return frame


def _parse_sos(payload, frame):
    if not payload:
        raise MalformedStreamError("empty SOS segment")
    ns = payload[0]
    if ns < 1 or ns > len(frame.components) or len(payload) != 4 + 2 * ns:
        raise MalformedStreamError("bad SOS segment")
    by_id = {c.ident: c for c in frame.components}
    scan = []
    for k in range(ns):
        cs, t = payload[1 + 2 * k:3 + 2 * k]
        if cs not in by_id:
            raise MalformedStreamError(f"scan names unknown component {cs}")
        scan.append((by_id[cs], t >> 4, t & 15))
    ss, se, a = payload[1 + 2 * ns:4 + 2 * ns]
    if (ss, se, a) != (0, 63, 0):
        raise UnsupportedFeatureError("spectral selection / successive approximation")
    return scan


def _component_plane(comp, backend, stats):
    raster = zigzag_unscan(comp.coeffs).astype(np.int64)
    raw = raster * zigzag_unscan(comp.qtable.astype(np.int64))
    deq = np.clip(raw, COEFF_MIN, COEFF_MAX)
    stats.saturated += int(np.count_nonzero(deq != raw))
    if backend == "exact":
        samples = np.floor(idct_exact(deq) + 128.5)
    else:
        samples = idct_fast(deq) + 128
    samples = np.clip(samples, 0, 255).astype(np.uint8)
    by, bx, _ = samples.shape
    plane = samples.reshape(by, bx, 8, 8).transpose(0, 2, 1, 3).reshape(by * 8, bx * 8)
    return plane[:comp.height, :comp.width]


def decode_with_stats(data, spec=DEFAULT_DECODER):
    """Like :func:`decode` but also returns :class:`DecodeStats`."""
    spec = resolve_decoder(spec)
    stats = DecodeStats()
    frame = read_coefficients(data, stats)
    planes = [_component_plane(c, spec.idct_backend, stats) for c in frame.components]
    w, h = frame.width, frame.height
    if len(planes) == 1:
        return planes[0][:, :, None].copy(), stats
    y, cb, cr = planes
    if frame.hmax == 2:
        cb = chroma_upsample(cb, w, h, spec.chroma_upsample)
        cr = chroma_upsample(cr, w, h, spec.chroma_upsample)
    r, g, b = ycbcr_to_rgb(y, cb, cr, spec.ycbcr_rounding)
    return np.stack([r, g, b], axis=-1), stats


def decode(data, spec=DEFAULT_DECODER):
    """Decode a baseline JPEG into an ``(height, width, channels)`` uint8 array."""
    return decode_with_stats(data, spec)[0]
