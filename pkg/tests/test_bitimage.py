import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgvss.bitimage import (
    BinaryImage,
    GrayImage,
    PbmParseError,
    RegionMask,
    binarize,
    canonical_bytes,
    diff_mask,
    load_image,
    load_pbm,
    load_pgm,
    region_fraction_white,
    save_pbm,
)


@st.composite
def images(draw, max_side=40):
    w = draw(st.integers(1, max_side))
    h = draw(st.integers(1, max_side))
    bits = draw(st.lists(st.integers(0, 1), min_size=w * h, max_size=w * h))
    return BinaryImage(np.array(bits, dtype=np.uint8).reshape(h, w))


def checkerboard(w, h):
    y, x = np.indices((h, w))
    return BinaryImage((x + y) % 2)


class TestLoadPbm:
    def test_p1_example(self):
        img = load_pbm(b"P1\n2 2\n0 1\n1 0\n")
        assert img.tolist() == [[0, 1], [1, 0]]

    def test_p4_single_bit(self):
        assert load_pbm(b"P4\n1 1\n" + bytes([0x80])).tolist() == [[1]]

    def test_p1_digits_without_spaces(self):
        assert load_pbm(b"P1 3 1 011").tolist() == [[0, 1, 1]]

    def test_meta_comments(self):
        img = load_pbm(b"P1\n# scheme=2n\n# plain remark\n# index=3\n1 1\n0\n")
        assert img.meta == (("scheme", "2n"), ("index", "3"))

    def test_p4_row_padding(self):
        # 10 pixels wide: 2 bytes per row, low 6 bits of the second byte are padding
        img = load_pbm(b"P4\n10 1\n" + bytes([0b10000000, 0b01111111]))
        assert img.tolist() == [[1, 0, 0, 0, 0, 0, 0, 0, 0, 1]]

    @pytest.mark.parametrize(
        "data, offset",
        [
            (b"P3\n1 1\n0\n", 0),
            (b"", 0),
            (b"P1\n2 2\n0 1 1", 12),
            (b"P4\n8 2\n\xff", 8),
            (b"P1\n65537 1\n", 3),
            (b"P1\n1 x\n", 5),
            (b"P1\n2 1\n0 2\n", 9),
            (b"P4\n1 1", 6),
        ],
    )
    def test_errors_name_offset(self, data, offset):
        with pytest.raises(PbmParseError) as info:
            load_pbm(data)
        assert info.value.offset == offset
        assert f"byte {offset}" in str(info.value)

    def test_zero_dimension_rejected(self):
        with pytest.raises(PbmParseError):
            load_pbm(b"P1\n0 1\n")


class TestSavePbm:
    def test_p1_white_pixel(self):
        assert save_pbm(BinaryImage([[0]]), "P1") == b"P1\n1 1\n0\n"

    def test_p4_black_pixel(self):
        assert save_pbm(BinaryImage([[1]]), "P4") == b"P4\n1 1\n\x80"

    def test_meta_line(self):
        data = save_pbm(BinaryImage([[0]]), "P1", [("scheme", "2n")])
        assert b"\n# scheme=2n\n" in data
        assert data.startswith(b"P1\n# scheme=2n\n")

    def test_meta_roundtrip(self):
        meta = [("scheme", "2n"), ("index", "2"), ("seed", "42")]
        assert load_pbm(save_pbm(BinaryImage([[1, 0]]), "P4", meta)).meta == tuple(meta)

    def test_bad_meta_rejected(self):
        with pytest.raises(ValueError):
            save_pbm(BinaryImage([[0]]), "P1", [("a=b", "c")])
        with pytest.raises(ValueError):
            save_pbm(BinaryImage([[0]]), "P1", [("a", "line\nbreak")])

    def test_p1_lines_stay_short(self):
        data = save_pbm(BinaryImage.ones(100, 2), "P1")
        assert max(len(line) for line in data.splitlines()) <= 70

    def test_canonical_ignores_meta(self):
        img = BinaryImage([[1, 0, 1]], meta=[("index", "1")])
        assert canonical_bytes(img) == save_pbm(BinaryImage([[1, 0, 1]]), "P4")

    @settings(max_examples=60)
    @given(images(), st.sampled_from(["P1", "P4"]))
    def test_roundtrip(self, img, fmt):
        data = save_pbm(img, fmt)
        assert load_pbm(data) == img
        assert save_pbm(load_pbm(data), fmt) == data


class TestBinaryImage:
    def test_immutable(self):
        img = BinaryImage([[0, 1]])
        with pytest.raises(ValueError):
            img.bits[0, 0] = 1

    def test_source_array_not_aliased(self):
        src = np.zeros((2, 2), dtype=np.uint8)
        img = BinaryImage(src)
        src[0, 0] = 1
        assert img.popcount() == 0

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BinaryImage([[0, 2]])

    def test_equality_ignores_meta(self):
        assert BinaryImage([[1]], meta=[("a", "b")]) == BinaryImage([[1]])


class TestBinarize:
    def test_all_white(self):
        assert binarize(GrayImage(np.full((3, 3), 255)), 128).popcount() == 0

    def test_all_black(self):
        assert binarize(GrayImage(np.zeros((3, 3))), 128).popcount() == 9

    def test_boundary(self):
        assert binarize(GrayImage([[127, 128]]), 128).tolist() == [[1, 0]]

    @given(
        st.lists(st.integers(0, 255), min_size=1, max_size=64),
        st.integers(0, 255),
        st.integers(0, 255),
    )
    def test_monotone_in_threshold(self, levels, t1, t2):
        lo, hi = sorted((t1, t2))
        gray = GrayImage(np.array(levels).reshape(1, -1))
        dark_lo = binarize(gray, lo).bits.astype(bool)
        dark_hi = binarize(gray, hi).bits.astype(bool)
        assert not (dark_lo & ~dark_hi).any()


class TestPgm:
    def test_p5(self):
        gray = load_pgm(b"P5\n2 1\n255\n" + bytes([10, 200]))
        assert gray.levels.tolist() == [[10, 200]]

    def test_p2_rescale(self):
        gray = load_pgm(b"P2\n2 1\n15\n0 15\n")
        assert gray.levels.tolist() == [[0, 255]]

    def test_load_image_routes_pgm(self):
        assert load_image(b"P5\n2 1\n255\n" + bytes([127, 128])).tolist() == [[1, 0]]


class TestMasks:
    def test_diff_identity(self):
        a = checkerboard(5, 4)
        assert diff_mask(a, a).count() == 0

    def test_diff_complement(self):
        a = checkerboard(5, 4)
        assert diff_mask(a, a.invert()).count() == 20

    def test_single_flip(self):
        a = BinaryImage.zeros(4, 4)
        bits = a.bits.copy()
        bits[2, 1] = 1
        m = diff_mask(a, BinaryImage(bits))
        assert m.count() == 1 and m.flags[2, 1]

    def test_diff_dimension_mismatch(self):
        with pytest.raises(ValueError):
            diff_mask(BinaryImage.zeros(2, 2), BinaryImage.zeros(3, 2))

    @given(images(max_side=12), images(max_side=12))
    def test_diff_symmetric(self, a, b):
        if a.size == b.size:
            assert diff_mask(a, b) == diff_mask(b, a)

    def test_fraction_white(self):
        full = RegionMask.full(6, 6)
        assert region_fraction_white(BinaryImage.zeros(6, 6), full) == 1.0
        assert region_fraction_white(BinaryImage.ones(6, 6), RegionMask.rect(6, 6, 1, 1, 2, 2)) == 0.0
        assert region_fraction_white(checkerboard(6, 6), full) == 0.5

    def test_fraction_empty_mask(self):
        with pytest.raises(ValueError):
            region_fraction_white(BinaryImage.zeros(2, 2), RegionMask.empty(2, 2))

    @given(images())
    def test_fraction_full_mask_is_one_minus_density(self, img):
        full = RegionMask.full(img.width, img.height)
        expected = 1 - img.popcount() / (img.width * img.height)
        assert region_fraction_white(img, full) == pytest.approx(expected)
