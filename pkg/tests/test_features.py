"""HOG descriptor tests: dimensions, gradient behaviour, normalization."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mek.errors import IncompatibleDimensions
from mek.features import HogParams, hog, hog_dim


def test_dim_128_defaults():
    params = HogParams(resize_to=128)
    # 16 cells per side -> 15x15 blocks of 2x2 cells x 9 bins
    assert hog_dim(params, 128, 128) == 15 * 15 * 2 * 2 * 9 == 8100
    assert hog_dim(params, 300, 212) == 8100  # resize wins


def test_dim_single_block():
    params = HogParams(resize_to=0)
    assert hog_dim(params, 16, 16) == 36


def test_dim_native_512():
    params = HogParams(resize_to=0)
    assert hog_dim(params, 512, 512) == 63 * 63 * 36 == 142884


def test_dim_rejects_indivisible():
    with pytest.raises(IncompatibleDimensions):
        hog_dim(HogParams(resize_to=0), 100, 96)
    with pytest.raises(IncompatibleDimensions):
        hog(np.zeros((100, 96)), HogParams(resize_to=0))


def test_dim_rejects_too_few_cells_for_block():
    with pytest.raises(IncompatibleDimensions):
        hog_dim(HogParams(resize_to=0, block_cells=3), 16, 16)


def test_params_validation():
    with pytest.raises(ValueError):
        HogParams(cell_size=1)
    with pytest.raises(ValueError):
        HogParams(clip=0.0)
    with pytest.raises(ValueError):
        HogParams(bins=1)


def test_constant_image_gives_zero_vector():
    params = HogParams(resize_to=0)
    vec = hog(np.full((32, 32), 55.0), params)
    assert vec.shape == (hog_dim(params, 32, 32),)
    np.testing.assert_array_equal(vec, 0.0)


def test_horizontal_step_concentrates_in_vertical_bin():
    # top half dark, bottom half bright: gradients point straight down
    # (90 degrees), which with 9 bins of 20 degrees is bin 4 exactly
    img = np.zeros((16, 16))
    img[8:, :] = 255.0
    params = HogParams(resize_to=0)
    vec = hog(img, params).reshape(2, 2, 9)
    mass_by_bin = np.abs(vec).sum(axis=(0, 1))
    assert mass_by_bin[4] > 0
    np.testing.assert_array_equal(np.delete(mass_by_bin, 4), 0.0)


def test_offset_invariance():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 200, (24, 24)).astype(float)
    a = hog(img, HogParams(resize_to=0))
    b = hog(img + 40.0, HogParams(resize_to=0))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_entries_bounded():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (40, 40)).astype(float)
    vec = hog(img, HogParams(resize_to=0))
    assert vec.min() >= 0.0
    assert vec.max() <= 1.0


param_strategy = st.builds(
    HogParams,
    resize_to=st.just(0),
    cell_size=st.sampled_from([2, 4, 8]),
    block_cells=st.integers(1, 3),
    block_stride=st.integers(1, 2),
    bins=st.integers(2, 9),
)


@settings(max_examples=40, deadline=None)
@given(
    params=param_strategy,
    cells_x=st.integers(1, 5),
    cells_y=st.integers(1, 5),
    seed=st.integers(0, 2**31 - 1),
)
def test_hog_dim_matches_descriptor_length(params, cells_x, cells_y, seed):
    width = cells_x * params.cell_size
    height = cells_y * params.cell_size
    if cells_x < params.block_cells or cells_y < params.block_cells:
        with pytest.raises(IncompatibleDimensions):
            hog_dim(params, width, height)
        return
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (height, width)).astype(float)
    vec = hog(img, params)
    assert vec.shape == (hog_dim(params, width, height),)
    assert vec.min() >= 0.0
    assert vec.max() <= 1.0
