"""Coefficient-domain operations: zigzag scan, dequantization and the two iDCT backends.

Blocks are numpy arrays whose last axis holds 64 entries (raster order unless
noted), so every function also accepts stacks of blocks of shape ``(..., 64)``.
"""

import math

import numpy as np

from ..errors import MalformedBlockError
from .tables import RASTER_TO_ZIGZAG, ZIGZAG_TO_RASTER

COEFF_MIN = -2048
COEFF_MAX = 2047

N = 8
_ALPHA = np.array([math.sqrt(1.0 / N)] + [math.sqrt(2.0 / N)] * (N - 1))
#: BASIS[k, m] = alpha(k) * cos((2m + 1) k pi / 2N); orthonormal
BASIS = np.array(
    [[_ALPHA[k] * math.cos((2 * m + 1) * math.pi * k / (2 * N)) for m in range(N)] for k in range(N)]
)


def _check64(values):
    values = np.asarray(values)
    if values.ndim == 0 or values.shape[-1] != 64:
        raise MalformedBlockError(f"expected 64 coefficients, got shape {values.shape}")
    return values


def zigzag_unscan(coeffs_zigzag):
    """Reorder zigzag-ordered coefficients into raster order."""
    coeffs = _check64(coeffs_zigzag)
    return coeffs[..., RASTER_TO_ZIGZAG]


def zigzag_scan(block):
    """Inverse of :func:`zigzag_unscan`."""
    block = _check64(block)
    return block[..., ZIGZAG_TO_RASTER]


def dequantize(block, qtable_zigzag):
    """Multiply a raster-order block by a zigzag-order quantization table.

    Products are saturated to the 12-bit signed coefficient range.
    """
    block = _check64(block).astype(np.int64)
    q = zigzag_unscan(np.asarray(qtable_zigzag, dtype=np.int64))
    return np.clip(block * q, COEFF_MIN, COEFF_MAX)


def idct_exact(block):
    """Separable double-precision 8x8 inverse DCT, no level shift.

    Matches the direct double sum over (k, l) with alpha(0) = sqrt(1/8) and
    alpha(k>0) = sqrt(2/8).
    """
    F = _check64(block).astype(np.float64).reshape(block.shape[:-1] + (8, 8))
    f = BASIS.T @ F @ BASIS
    return f.reshape(block.shape)


def fdct_exact(samples):
    """Forward transform matching :func:`idct_exact` (used by the encoder)."""
    f = _check64(samples).astype(np.float64).reshape(samples.shape[:-1] + (8, 8))
    F = BASIS @ f @ BASIS.T
    return F.reshape(samples.shape)


# Scaled-integer AAN factorization. Constants carry CONST_BITS fractional
# bits; intermediates keep PASS1_BITS of extra precision between passes.
# Coarser settings leave +-1 plane errors that line up across Y and Cr/Cb
# often enough for the color transform to push RGB differences to 3.
CONST_BITS = 14
PASS1_BITS = 8

_AAN = np.array([1.0] + [math.cos(k * math.pi / 16) * math.sqrt(2.0) for k in range(1, 8)])
AAN_PRESCALE = np.round(np.outer(_AAN, _AAN).ravel() * (1 << CONST_BITS)).astype(np.int64)


def _fix(x):
    return int(round(x * (1 << CONST_BITS)))


FIX_1_414213562 = _fix(1.414213562)
FIX_1_847759065 = _fix(1.847759065)
FIX_1_082392200 = _fix(1.082392200)
FIX_2_613125930 = _fix(2.613125930)

_HALF = 1 << (CONST_BITS - 1)


def _mul(x, c):
    return (x * c + _HALF) >> CONST_BITS


def _aan_1d(v):
    """One 8-point AAN pass along axis -1 of int64 array ``v``; returns a new array."""
    tmp0, tmp1, tmp2, tmp3 = v[..., 0], v[..., 2], v[..., 4], v[..., 6]
    tmp10 = tmp0 + tmp2
    tmp11 = tmp0 - tmp2
    tmp13 = tmp1 + tmp3
    tmp12 = _mul(tmp1 - tmp3, FIX_1_414213562) - tmp13
    e0 = tmp10 + tmp13
    e3 = tmp10 - tmp13
    e1 = tmp11 + tmp12
    e2 = tmp11 - tmp12

    tmp4, tmp5, tmp6, tmp7 = v[..., 1], v[..., 3], v[..., 5], v[..., 7]
    z13 = tmp6 + tmp5
    z10 = tmp6 - tmp5
    z11 = tmp4 + tmp7
    z12 = tmp4 - tmp7
    o7 = z11 + z13
    tmp11 = _mul(z11 - z13, FIX_1_414213562)
    z5 = _mul(z10 + z12, FIX_1_847759065)
    tmp10 = _mul(z12, FIX_1_082392200) - z5
    tmp12 = z5 - _mul(z10, FIX_2_613125930)
    o6 = tmp12 - o7
    o5 = tmp11 - o6
    o4 = tmp10 + o5

    return np.stack(
        [e0 + o7, e1 + o6, e2 + o5, e3 - o4, e3 + o4, e2 - o5, e1 - o6, e0 - o7], axis=-1
    )


def idct_fast(block):
    """Fixed-point AAN inverse DCT returning integer samples (no level shift).

    Accuracy contract: against ``round(idct_exact(block))`` at least 99% of
    samples are within 1 and all are within 2 for coefficients in
    [-256, 255].
    """
    coeffs = _check64(block).astype(np.int64)
    shape = coeffs.shape
    # prescale: coef * aan(k) * aan(l), kept at 2**PASS1_BITS
    shift = CONST_BITS - PASS1_BITS
    ws = (coeffs * AAN_PRESCALE + (1 << (shift - 1))) >> shift
    ws = ws.reshape(shape[:-1] + (8, 8))
    # columns first (transform along k for each l), then rows
    ws = _aan_1d(np.swapaxes(ws, -1, -2))
    ws = _aan_1d(np.swapaxes(ws, -1, -2))
    final = PASS1_BITS + 3
    out = (ws + (1 << (final - 1))) >> final
    return out.reshape(shape)
