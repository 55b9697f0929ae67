import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sauna.errors import DegenerateMaskError, InputError
from sauna.grid import BinaryMask, ScalarField
from sauna.transforms import (
    SaunaParams,
    boundary_map,
    brute_force_oracles,
    distance_transform,
    max_fg_distance,
    sauna_components,
    sauna_transform,
    thickness_map,
    thickness_transform,
)

two_class_masks = hnp.arrays(
    np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, max_side=24), elements=st.integers(0, 1)
).filter(lambda a: 0 < a.sum() < a.size)


def block_mask(shape, top, left, size):
    arr = np.zeros(shape, np.uint8)
    arr[top : top + size, left : left + size] = 1
    return BinaryMask(arr)


# distance ----------------------------------------------------------------


def test_distance_row(row_mask):
    assert distance_transform(row_mask).data.tolist() == [[2, 1, 1, 2, 1, 1, 2]]


def test_distance_single_center():
    d = distance_transform(block_mask((3, 3), 1, 1, 1)).data
    assert d[1, 1] == 1
    assert d[0, 1] == d[1, 0] == d[1, 2] == d[2, 1] == 1
    assert d[0, 0] == d[2, 2] == math.sqrt(2)


def test_distance_checkerboard():
    d = distance_transform(BinaryMask(np.array([[0, 1], [1, 0]])))
    assert np.all(d.data == 1)


@pytest.mark.parametrize("fill", [0, 1])
def test_distance_single_class_is_degenerate(fill):
    with pytest.raises(DegenerateMaskError, match="degenerate mask"):
        distance_transform(BinaryMask(np.full((3, 3), fill)))


# m -------------------------------------------------------------------------


def test_max_fg_distance_examples(row_mask):
    assert max_fg_distance(row_mask, distance_transform(row_mask)) == 2
    single = block_mask((5, 5), 2, 2, 1)
    assert max_fg_distance(single, distance_transform(single)) == 1
    block = block_mask((5, 5), 1, 1, 3)
    assert max_fg_distance(block, distance_transform(block)) == 2
    assert brute_force_oracles(block)[0].data.max() >= 2


# thickness ---------------------------------------------------------------


def test_thickness_row(row_mask):
    d = distance_transform(row_mask)
    assert thickness_transform(row_mask, d, 2.0).data.tolist() == [[1, 2, 2, 2, 2, 2, 1]]


def test_thickness_empty_window_is_m():
    arr = np.zeros((12, 12), np.uint8)
    arr[1:4, 1:4] = 1
    mask = BinaryMask(arr)
    d = distance_transform(mask)
    m = max_fg_distance(mask, d)
    t = thickness_transform(mask, d, m)
    assert m == 2
    assert t.data[11, 11] == m
    assert t.data[4, 4] == 2  # window of radius 2 reaches the block centre (2, 2)
    assert t.data[5, 5] == 1  # only the block corner (3, 3) is in reach


def test_thickness_next_to_single_pixel():
    mask = block_mask((5, 5), 2, 2, 1)
    d = distance_transform(mask)
    t = thickness_transform(mask, d, 1.0)
    assert t.data[2, 3] == 1
    assert t.data[1, 1] == 1


def test_thickness_rejects_small_m(row_mask):
    with pytest.raises(InputError):
        thickness_transform(row_mask, distance_transform(row_mask), 0.5)


# signed maps ---------------------------------------------------------------


def test_boundary_row(row_mask):
    d = distance_transform(row_mask)
    assert boundary_map(row_mask, d, 2.0).data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]


def test_thickness_map_row(row_mask):
    t = ScalarField(np.array([[1.0, 2, 2, 2, 2, 2, 1]]), "thickness")
    assert thickness_map(row_mask, t, 2.0).data.tolist() == [[-0.5, 0, 0, 0, 0, 0, -0.5]]


def test_isolated_pixel_thickness_map():
    arr = np.zeros((20, 30), np.uint8)
    arr[2:9, 2:9] = 1  # 7x7 block: centre is 4 from the background
    arr[15, 25] = 1
    mask = BinaryMask(arr)
    c = sauna_components(mask)
    assert c.m == 4
    assert c.thickness.data[15, 25] == 1
    assert c.thickness_map.data[15, 25] == pytest.approx(0.75, abs=0)
    assert c.sauna.data[5, 5] == 1.0  # centre of the thickest structure


def test_saturation():
    mask = block_mask((9, 9), 2, 2, 5)
    c = sauna_components(mask)
    fg_far = (mask.data == 1) & (c.distance.data >= c.m)
    bg_far = (mask.data == 0) & (c.distance.data >= c.m)
    assert np.all(c.boundary.data[fg_far] == 1)
    assert np.all(c.boundary.data[bg_far] == -1)
    assert np.all(c.thickness_map.data[c.thickness.data >= c.m] == 0)


# SAUNA ---------------------------------------------------------------------


def test_sauna_row_clamps_first_column(row_mask):
    c = sauna_components(row_mask)
    raw = c.boundary.data + c.thickness_map.data
    assert raw[0, 0] == -1.5
    assert sauna_transform(row_mask).data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]


def test_sauna_all_background():
    out = sauna_transform(BinaryMask(np.zeros((4, 4))))
    assert out.kind == "sauna"
    assert np.all(out.data == -1)


def test_sauna_all_foreground_errors():
    with pytest.raises(DegenerateMaskError, match="degenerate mask: no background"):
        sauna_transform(BinaryMask(np.ones((4, 4))))


def test_params_need_one_map():
    with pytest.raises(InputError):
        SaunaParams(include_boundary_map=False, include_thickness_map=False)


def test_ablation_variants(row_mask):
    no_t = sauna_transform(row_mask, SaunaParams(include_thickness_map=False))
    no_b = sauna_transform(row_mask, SaunaParams(include_boundary_map=False))
    assert no_t.data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]
    assert no_b.data.tolist() == [[-0.5, 0, 0, 0, 0, 0, -0.5]]


def test_unclamped_output_is_untagged(row_mask):
    raw = sauna_transform(row_mask, SaunaParams(clamp_output=False))
    assert raw.kind is None
    assert raw.data[0, 0] == -1.5


# oracle --------------------------------------------------------------------


def test_oracle_row(row_mask):
    d, t, yb, sauna = brute_force_oracles(row_mask)
    assert d.data.tolist() == [[2, 1, 1, 2, 1, 1, 2]]
    assert t.data.tolist() == [[1, 2, 2, 2, 2, 2, 1]]
    assert yb.data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]
    assert sauna.data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]


def test_oracle_all_background():
    d, t, _, sauna = brute_force_oracles(BinaryMask(np.zeros((4, 4))))
    assert d is None and t is None
    assert np.all(sauna.data == -1)


def test_oracle_size_limit():
    with pytest.raises(InputError):
        brute_force_oracles(BinaryMask(np.zeros((65, 64))))


def test_oracle_matches_fast_8x8():
    rng = np.random.default_rng(8)
    for _ in range(50):
        arr = (rng.random((8, 8)) < 0.4).astype(np.uint8)
        if not 0 < arr.sum() < 64:
            continue
        mask = BinaryMask(arr)
        c = sauna_components(mask)
        d, t, yb, sauna = brute_force_oracles(mask)
        assert np.max(np.abs(c.distance.data - d.data)) < 1e-9
        assert np.array_equal(c.thickness.data, t.data)
        assert np.array_equal(c.sauna.data, sauna.data)


# properties ----------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(two_class_masks)
def test_fast_equals_oracle(arr):
    mask = BinaryMask(arr)
    c = sauna_components(mask)
    d, t, yb, sauna = brute_force_oracles(mask)
    assert np.max(np.abs(c.distance.data - d.data)) < 1e-9
    assert np.max(np.abs(c.thickness.data - t.data)) < 1e-9
    assert np.max(np.abs(c.sauna.data - sauna.data)) < 1e-9


@settings(max_examples=150, deadline=None)
@given(two_class_masks)
def test_structural_properties(arr):
    mask = BinaryMask(arr)
    fg = arr == 1
    c = sauna_components(mask)
    assert c.m >= 1
    # thickness never below own distance on FG
    assert np.all(c.thickness.data[fg] >= c.distance.data[fg])
    raw = c.boundary.data + c.thickness_map.data
    assert np.all((raw[fg] > 0) & (raw[fg] <= 1))
    # clamping only ever bites on background
    clamped = raw != c.sauna.data
    assert not np.any(clamped & fg)
    assert np.all((c.sauna.data >= -1) & (c.sauna.data <= 1))
    # the sign of the label survives
    assert np.all(np.sign(c.sauna.data) == np.where(fg, 1, -1))
    no_t = sauna_transform(mask, SaunaParams(include_thickness_map=False))
    assert np.array_equal(no_t.data, c.boundary.data)


@settings(max_examples=100, deadline=None)
@given(two_class_masks)
def test_far_background_is_certain(arr):
    mask = BinaryMask(arr)
    c = sauna_components(mask)
    r = math.floor(c.m)
    fg_near = np.zeros_like(arr, dtype=bool)
    for i, j in np.argwhere(arr == 1):
        fg_near[max(0, i - r) : i + r + 1, max(0, j - r) : j + r + 1] = True
    far = (arr == 0) & (c.distance.data > c.m) & ~fg_near
    assert np.all(c.sauna.data[far] == -1)


def test_deterministic():
    rng = np.random.default_rng(11)
    mask = BinaryMask(rng.random((40, 40)) < 0.2)
    a, b = sauna_transform(mask), sauna_transform(mask)
    assert a.data.tobytes() == b.data.tobytes()
