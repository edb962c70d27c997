import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from morsp.morph_core import (
    StructuringElement,
    classic_skeleton,
    default_levels,
    dilate,
    erode,
    erode_n,
    make_element,
    opening,
)
from oracles import brute_dilate, brute_erode, brute_skeleton

SQ1 = make_element("square", 1)

images = arrays(
    np.float64,
    st.tuples(st.integers(3, 10), st.integers(3, 10)),
    elements=st.floats(-5, 5, allow_nan=False, width=64),
)
elements = st.builds(make_element, st.sampled_from(["square", "disk"]), st.integers(0, 2))


def test_make_element_identity():
    assert make_element("square", 0).offsets == ((0, 0),)


def test_make_element_square_radius_one():
    assert set(make_element("square", 1).offsets) == {(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)}


def test_make_element_disk_radius_two():
    expected = {(dy, dx) for dy in range(-2, 3) for dx in range(-2, 3) if dy * dy + dx * dx <= 4}
    el = make_element("disk", 2)
    assert len(el) == len(expected) == 13
    assert set(el.offsets) == expected


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_square_count(r):
    assert len(make_element("square", r)) == (2 * r + 1) ** 2


def test_make_element_rejects_bad_input():
    with pytest.raises(ValueError):
        make_element("hexagon", 1)
    with pytest.raises(ValueError):
        make_element("square", -1)
    with pytest.raises(ValueError):
        StructuringElement(((1, 0),), "square", 1)


def test_parse_element():
    assert StructuringElement.parse("disk:2") == make_element("disk", 2)
    with pytest.raises(ValueError):
        StructuringElement.parse("disk")


def test_constant_image_fixed():
    u = np.full((6, 7), 0.3)
    np.testing.assert_array_equal(dilate(u, make_element("disk", 2)), u)
    np.testing.assert_array_equal(erode(u, SQ1), u)


def test_dilate_single_spike():
    u = np.zeros((5, 5))
    u[2, 2] = 1.0
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = 1.0
    np.testing.assert_array_equal(dilate(u, SQ1), expected)


def test_erode_single_hole():
    u = np.ones((5, 5))
    u[2, 2] = 0.0
    expected = np.ones((5, 5))
    expected[1:4, 1:4] = 0.0
    np.testing.assert_array_equal(erode(u, SQ1), expected)


def test_dilate_matches_brute_force(rng):
    u = rng.random((8, 8))
    el = make_element("disk", 2)
    np.testing.assert_array_equal(dilate(u, el), brute_dilate(u, el.offsets))


def test_erode_matches_negated_dilation(rng):
    u = rng.random((8, 8))
    np.testing.assert_array_equal(erode(u, SQ1), brute_erode(u, SQ1.offsets))
    np.testing.assert_allclose(erode(u, SQ1), -dilate(-u, SQ1), atol=1e-12, rtol=0)


def test_erode_n_zero_is_identity(rng):
    u = rng.random((4, 5))
    np.testing.assert_array_equal(erode_n(u, SQ1, 0), u)


def test_erode_n_thin_line_vanishes():
    u = np.zeros((7, 9))
    u[3, :] = 1.0
    assert not np.any(erode_n(u, SQ1, 1))


def test_erode_n_square_shrinks():
    u = np.zeros((11, 11))
    u[2:9, 2:9] = 1.0
    expected = np.zeros((11, 11))
    expected[4:7, 4:7] = 1.0
    np.testing.assert_array_equal(erode_n(u, SQ1, 2), expected)


def test_classic_skeleton_zero():
    assert not np.any(classic_skeleton(np.zeros((6, 6)), SQ1, 3))


def test_classic_skeleton_thin_line_is_itself():
    u = np.zeros((9, 12))
    u[4, 2:10] = 1.0
    np.testing.assert_array_equal(classic_skeleton(u, SQ1, 1), u)


def test_classic_skeleton_solid_square():
    u = np.zeros((11, 11))
    u[2:9, 2:9] = 1.0
    skel = classic_skeleton(u, SQ1, 3)
    np.testing.assert_array_equal(skel, brute_skeleton(u, SQ1.offsets, 3))
    # every level but the last is an open set, so only the centre survives
    expected = np.zeros((11, 11))
    expected[5, 5] = 1.0
    np.testing.assert_array_equal(skel, expected)


def test_classic_skeleton_random_shape_matches_literal(rng):
    u = (rng.random((12, 12)) > 0.4).astype(float)
    el = make_element("disk", 1)
    np.testing.assert_array_equal(classic_skeleton(u, el, 2), brute_skeleton(u, el.offsets, 2))


def test_default_levels():
    line = np.zeros((5, 8))
    line[2, 1:7] = 1
    assert default_levels(line, SQ1) == 0
    sq = np.zeros((11, 11))
    sq[2:9, 2:9] = 1
    assert default_levels(sq, SQ1) == 3
    assert default_levels(np.ones((40, 40)), SQ1) == 10


@given(images, elements)
def test_duality(u, el):
    np.testing.assert_allclose(erode(u, el), -dilate(-u, el), atol=1e-12, rtol=0)


@given(images, elements)
def test_extensivity(u, el):
    assert np.all(dilate(u, el) >= u)
    assert np.all(erode(u, el) <= u)


@given(images, images, elements)
def test_monotone(u, v, el):
    if u.shape != v.shape:
        v = np.resize(v, u.shape)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    assert np.all(dilate(lo, el) <= dilate(hi, el))
    assert np.all(erode(lo, el) <= erode(hi, el))


@given(arrays(np.float64, (12, 12), elements=st.floats(0, 1)))
def test_translation_equivariance_interior(u):
    shifted = np.roll(u, 1, axis=1)
    a = dilate(u, SQ1)
    b = dilate(shifted, SQ1)
    # columns whose windows avoid both the border and the wrapped column
    np.testing.assert_array_equal(b[1:-1, 3:-1], a[1:-1, 2:-2])


@given(arrays(np.float64, (12, 12), elements=st.floats(0, 1)), elements)
def test_opening_idempotent(u, el):
    once = opening(u, el)
    twice = opening(once, el)
    r = 2 * el.reach
    np.testing.assert_array_equal(twice[r:-r, r:-r], once[r:-r, r:-r])


@given(arrays(np.float64, (10, 10), elements=st.floats(0, 1)), st.integers(0, 4))
def test_classic_skeleton_in_unit_range(u, levels):
    s = classic_skeleton(u, SQ1, levels)
    assert s.min() >= 0 and s.max() <= 1
