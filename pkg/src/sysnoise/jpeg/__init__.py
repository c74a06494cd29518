"""Baseline JPEG codec with switchable iDCT, chroma upsampling and color rounding."""

from .decoder import (DEFAULT_DECODER, PRESETS, DecoderSpec, canonical_decoder_name, decode,
                      decode_with_stats, read_coefficients, resolve_decoder)
from .encoder import encode

__all__ = [
    "DEFAULT_DECODER", "PRESETS", "DecoderSpec", "canonical_decoder_name", "decode",
    "decode_with_stats", "read_coefficients", "resolve_decoder", "encode",
]
