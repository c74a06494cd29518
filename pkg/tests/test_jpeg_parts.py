from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sysnoise.errors import MalformedStreamError
from sysnoise.jpeg.color import chroma_downsample, chroma_upsample, rgb_to_ycbcr, ycbcr_to_rgb
from sysnoise.jpeg.huffman import BitReader, BitWriter, HuffmanTable, encode_magnitude, magnitude_category
from sysnoise.jpeg.tables import AC_LUMA, CHROMA_QUANT, DC_LUMA, LUMA_QUANT, scaled_quant_table


class TestQuantTables:
    def test_quality_50_is_base(self):
        assert np.array_equal(scaled_quant_table(LUMA_QUANT, 50), LUMA_QUANT)
        assert LUMA_QUANT.ravel()[0] == 16

    def test_quality_100_all_ones(self):
        assert (scaled_quant_table(CHROMA_QUANT, 100) == 1).all()

    def test_quality_1_clamped(self):
        assert scaled_quant_table(LUMA_QUANT, 1).max() == 255

    def test_quality_25_hand_value(self):
        # scale 5000 // 25 = 200 -> (16 * 200 + 50) // 100 = 32
        assert scaled_quant_table(LUMA_QUANT, 25).ravel()[0] == 32

    def test_base_table_known_entries(self):
        assert LUMA_QUANT.ravel()[[0, 1, 8, 63]].tolist() == [16, 11, 12, 99]
        assert CHROMA_QUANT.ravel()[[0, 1, 63]].tolist() == [17, 18, 99]


class TestHuffman:
    def test_standard_dc_codes(self):
        t = HuffmanTable(*DC_LUMA)
        assert t.codes[0] == (0b00, 2)
        assert t.codes[1] == (0b010, 3)
        assert t.codes[11] == (0b111111110, 9)

    def test_standard_ac_eob_and_zrl(self):
        t = HuffmanTable(*AC_LUMA)
        assert t.codes[0x00] == (0b1010, 4)
        assert t.codes[0xF0] == (0b11111111001, 11)

    def test_overfull_rejected(self):
        with pytest.raises(MalformedStreamError):
            HuffmanTable((3,) + (0,) * 15, (0, 1, 2))

    def test_count_mismatch_rejected(self):
        with pytest.raises(MalformedStreamError):
            HuffmanTable((1,) + (0,) * 15, (0, 1))

    @given(st.lists(st.integers(0, 11), min_size=1, max_size=200))
    def test_writer_reader_round_trip(self, symbols):
        t = HuffmanTable(*DC_LUMA)
        w = BitWriter()
        for s in symbols:
            w.write(*t.codes[s])
        data = w.flush()
        r = BitReader(data.replace(b"\xff\x00", b"\xff"))
        assert [r.decode(t) for s in symbols] == symbols

    def test_stuffing(self):
        w = BitWriter()
        w.write(0xFF, 8)
        assert w.flush() == b"\xff\x00"

    def test_padding_with_ones(self):
        w = BitWriter()
        w.write(0, 3)
        assert w.flush() == bytes([0b00011111])

    def test_truncated(self):
        r = BitReader(b"\x00")
        r.read_bits(8)
        with pytest.raises(MalformedStreamError, match="truncated"):
            r.read_bits(1)

    def test_invalid_code(self):
        r = BitReader(b"\xff\xff\xff")
        with pytest.raises(MalformedStreamError, match="invalid Huffman code"):
            r.decode(HuffmanTable(*DC_LUMA))

    @given(st.integers(-2047, 2047))
    def test_magnitude_round_trip(self, v):
        size = magnitude_category(v)
        w = BitWriter()
        w.write(encode_magnitude(v, size), size)
        w.write(0, 8)  # keep the reader clear of the padding
        r = BitReader(w.flush().replace(b"\xff\x00", b"\xff"))
        assert r.receive_extend(size) == v

    def test_magnitude_category_examples(self):
        assert [magnitude_category(v) for v in (0, 1, -1, 2, -3, 255, -1024)] == [0, 1, 1, 2, 2, 8, 11]


def exact_rgb(y, cb, cr):
    """Fraction arithmetic oracle with round-half-up and clamping."""
    y, cb, cr = Fraction(y), Fraction(cb) - 128, Fraction(cr) - 128
    vals = [y + Fraction("1.402") * cr,
            y - Fraction("0.344136") * cb - Fraction("0.714136") * cr,
            y + Fraction("1.772") * cb]
    out = []
    for v in vals:
        r = (v + Fraction(1, 2)).__floor__()
        out.append(min(255, max(0, r)))
    return tuple(out)


class TestColor:
    def test_neutral(self):
        assert tuple(int(c) for c in ycbcr_to_rgb(128, 128, 128)) == (128, 128, 128)

    def test_white(self):
        assert tuple(int(c) for c in ycbcr_to_rgb(255, 128, 128)) == (255, 255, 255)

    def test_saturated_red_example(self):
        got = tuple(int(c) for c in ycbcr_to_rgb(76, 85, 255, "round-half-up"))
        assert got == exact_rgb(76, 85, 255)
        assert got == (254, 0, 0)

    def test_rounding_modes_differ(self):
        # R = 100 + 1.402 * 1 = 101.402, G = 100 - 0.714136 = 99.28..., B = 100
        t = tuple(int(c) for c in ycbcr_to_rgb(100, 128, 129, "truncate"))
        h = tuple(int(c) for c in ycbcr_to_rgb(100, 128, 129, "round-half-up"))
        assert t == (101, 99, 100) and h == (101, 99, 100)
        t = tuple(int(c) for c in ycbcr_to_rgb(100, 129, 128, "truncate"))
        h = tuple(int(c) for c in ycbcr_to_rgb(100, 129, 128, "round-half-up"))
        assert t[2] == 101 and h[2] == 102  # 101.772

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
    def test_matches_fraction_oracle(self, y, cb, cr):
        assert tuple(int(c) for c in ycbcr_to_rgb(y, cb, cr)) == exact_rgb(y, cb, cr)

    def test_forward_inverse(self, rng):
        rgb = rng.integers(0, 256, (50, 3))
        ycc = rgb_to_ycbcr(rgb)
        back = np.stack(ycbcr_to_rgb(ycc[:, 0], ycc[:, 1], ycc[:, 2]), axis=-1)
        assert np.abs(back.astype(int) - rgb).max() <= 1


class TestChroma:
    def test_replicate_single(self):
        out = chroma_upsample(np.array([[77.0]]), 2, 2, "replicate")
        assert out.shape == (2, 2) and (out == 77).all()

    def test_linear_single_is_constant(self):
        out = chroma_upsample(np.array([[77.0]]), 2, 2, "linear")
        assert (out == 77).all()

    def test_linear_two_samples(self):
        # co-sited: output i sits at source i/2; weights (1 - f, f), edge clamped
        out = chroma_upsample(np.array([[0.0, 100.0]]), 4, 1, "linear")
        assert out.ravel().tolist() == [0.0, 50.0, 100.0, 100.0]

    def test_odd_target(self):
        out = chroma_upsample(np.arange(6.0).reshape(2, 3), 5, 3, "replicate")
        assert out.shape == (3, 5)

    def test_dimension_mismatch(self):
        with pytest.raises(MalformedStreamError):
            chroma_upsample(np.zeros((2, 2)), 6, 6, "linear")

    def test_downsample_mean(self):
        p = np.array([[0, 2, 4, 6], [2, 4, 6, 8]], dtype=float)
        assert chroma_downsample(p).tolist() == [[2.0, 6.0]]

    def test_constant_preserved(self, rng):
        for mode in ("replicate", "linear"):
            out = chroma_upsample(np.full((4, 5), 33.0), 9, 8, mode)
            assert (out == 33).all()
