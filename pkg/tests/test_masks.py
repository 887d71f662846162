from __future__ import annotations

import numpy as np
import pytest

from otq import (
    Mask,
    MaskError,
    RleError,
    SizeBin,
    containment,
    dilate,
    erode,
    intersection_area,
    iou,
    rle_decode,
    rle_encode,
    size_bin,
)

from conftest import rect


class TestRle:
    def test_all_zeros(self):
        arr = np.zeros((3, 4), dtype=bool)
        assert rle_encode(arr) == "12"
        assert np.array_equal(rle_decode("12", 4, 3), arr)

    def test_all_ones(self):
        arr = np.ones((3, 4), dtype=bool)
        assert rle_encode(arr) == "0 12"
        assert np.array_equal(rle_decode("0 12", 4, 3), arr)

    def test_column_major_order(self):
        # Only the top-left pixel set: first run of zeros has length 0,
        # then one 1, then the rest of the flattened column-major array.
        arr = np.zeros((3, 4), dtype=bool)
        arr[0, 0] = True
        assert rle_encode(arr) == "0 1 11"
        arr2 = np.zeros((3, 4), dtype=bool)
        arr2[0, 1] = True  # second column -> offset height=3
        assert rle_encode(arr2) == "3 1 8"

    def test_roundtrip_random_patterns(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            h = int(rng.integers(1, 12))
            w = int(rng.integers(1, 12))
            arr = rng.random((h, w)) < rng.random()
            out = rle_decode(rle_encode(arr), w, h)
            assert np.array_equal(out, arr)

    def test_encode_of_decode_is_identity_on_canonical(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            arr = rng.random((7, 9)) < 0.4
            canonical = rle_encode(arr)
            assert rle_encode(rle_decode(canonical, 9, 7)) == canonical

    def test_rejects_wrong_total(self):
        with pytest.raises(RleError):
            rle_decode("5", 4, 3)

    def test_rejects_zero_interior_run(self):
        with pytest.raises(RleError):
            rle_decode("3 0 9", 4, 3)

    def test_rejects_garbage(self):
        with pytest.raises(RleError):
            rle_decode("1 two 3", 4, 3)
        with pytest.raises(RleError):
            rle_decode("", 4, 3)


class TestIou:
    def test_identical_masks(self):
        m = rect(8, 8, 1, 1, 4, 4)
        assert iou(m, m) == 1.0

    def test_disjoint_masks(self):
        a = rect(8, 8, 0, 0, 3, 3)
        b = rect(8, 8, 5, 5, 3, 3)
        assert iou(a, b) == 0.0

    def test_hand_counted_overlap(self):
        # 4x4 canvas: left two columns vs top two rows, 4 shared pixels of 12.
        a = rect(4, 4, 0, 0, 4, 2)
        b = rect(4, 4, 0, 0, 2, 4)
        assert iou(a, b) == pytest.approx(4 / 12, abs=0)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = Mask(rng.random((6, 6)) < 0.5)
            b = Mask(rng.random((6, 6)) < 0.5)
            if a.area == 0 or b.area == 0:
                continue
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0

    def test_both_empty_is_zero(self):
        empty = Mask(np.zeros((4, 4), dtype=bool))
        assert iou(empty, empty) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(MaskError):
            iou(rect(4, 4, 0, 0, 2, 2), rect(5, 4, 0, 0, 2, 2))


class TestContainment:
    def test_subset_is_one(self):
        child = rect(10, 10, 2, 2, 3, 3)
        parent = rect(10, 10, 1, 1, 6, 6)
        assert containment(child, parent) == 1.0

    def test_disjoint_is_zero(self):
        child = rect(10, 10, 0, 0, 2, 2)
        parent = rect(10, 10, 5, 5, 4, 4)
        assert containment(child, parent) == 0.0

    def test_half_inside(self):
        child = rect(10, 10, 0, 0, 2, 5)  # area 10
        parent = rect(10, 10, 0, 0, 1, 10)  # overlaps first row: 5 px
        assert containment(child, parent) == 0.5

    def test_empty_child_rejected(self):
        empty = Mask(np.zeros((4, 4), dtype=bool))
        with pytest.raises(MaskError):
            containment(empty, rect(4, 4, 0, 0, 2, 2))

    def test_containment_one_iff_subset(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            child = Mask(rng.random((6, 6)) < 0.4)
            parent = Mask(rng.random((6, 6)) < 0.6)
            if child.area == 0:
                continue
            subset = bool(np.all(~child.pixels | parent.pixels))
            assert (containment(child, parent) == 1.0) == subset


class TestMorphology:
    def test_erode_keep_one_is_identity(self):
        m = rect(10, 10, 2, 2, 5, 5)
        assert erode(m, 1.0) is m

    def test_erode_square_brackets_half(self):
        # Successive 3x3 erosions of a solid 10x10: 100 -> 64 -> 36.
        m = Mask(np.ones((10, 10), dtype=bool))
        out = erode(m, 0.5)
        assert 36 <= out.area <= 64

    def test_erode_single_pixel_to_empty(self):
        m = rect(5, 5, 2, 2, 1, 1)
        assert erode(m, 0.5).area == 0

    def test_erode_never_adds_pixels(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            m = Mask(rng.random((12, 12)) < 0.6)
            if m.area == 0:
                continue
            out = erode(m, float(rng.uniform(0.1, 0.9)))
            assert not np.any(out.pixels & ~m.pixels)

    def test_dilate_ratio_one_is_identity(self):
        m = rect(10, 10, 4, 4, 2, 2)
        assert dilate(m, 1.0) is m

    def test_dilate_full_canvas_unchanged(self):
        m = Mask(np.ones((6, 6), dtype=bool))
        assert dilate(m, 3.0) == m

    def test_dilate_square_brackets_double(self):
        # 4x4 centered on 20x20: 16 -> 36 after one step, bracketing 32.
        m = rect(20, 20, 8, 8, 4, 4)
        out = dilate(m, 2.0)
        assert 16 <= out.area <= 36

    def test_dilate_never_removes_pixels(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            m = Mask(rng.random((12, 12)) < 0.3)
            if m.area == 0:
                continue
            out = dilate(m, float(rng.uniform(1.0, 3.0)))
            assert not np.any(m.pixels & ~out.pixels)


class TestSizeBin:
    @pytest.mark.parametrize("area,expected", [
        (1, SizeBin.XS),
        (99, SizeBin.XS),
        (100, SizeBin.S_STAR),
        (1023, SizeBin.S_STAR),
        (1024, SizeBin.M),
        (9215, SizeBin.M),
        (9216, SizeBin.L),
        (20000, SizeBin.L),
    ])
    def test_boundaries(self, area, expected):
        pixels = np.zeros((200, 200), dtype=bool)
        pixels.ravel()[:area] = True
        assert size_bin(Mask(pixels)) is expected

    def test_empty_rejected(self):
        with pytest.raises(MaskError):
            size_bin(Mask(np.zeros((4, 4), dtype=bool)))


def test_intersection_area_matches_dense_and():
    rng = np.random.default_rng(9)
    for _ in range(50):
        a = Mask(rng.random((9, 7)) < 0.5)
        b = Mask(rng.random((9, 7)) < 0.5)
        assert intersection_area(a, b) == int(np.count_nonzero(a.pixels & b.pixels))
