import numpy as np
import pytest

from stereoproxy import DisparityMap


def make_shift_pair(k: int, height: int = 48, width: int = 96, seed: int = 0):
    """Synthetic rectified pair with uniform integer disparity k.

    right(y, x) = left(y, x + k), i.e. left pixel x matches right pixel
    x - k. The rightmost k columns of the right view get fresh random
    texture (they have no counterpart).
    """
    rng = np.random.default_rng(seed)
    left = rng.integers(0, 256, (height, width)).astype(np.uint8)
    right = np.empty_like(left)
    right[:, : width - k] = left[:, k:]
    right[:, width - k:] = rng.integers(0, 256, (height, k))
    return left, right


def interior_slice(k: int, window: int = 5):
    """Region of a shift-by-k fixture where matching is unambiguous."""
    margin = window
    return np.s_[margin:-margin, k + margin:-margin]


def make_random_disparity(rng, height=12, width=16, d_max=192.0, density=0.7):
    values = rng.uniform(0, d_max, (height, width)).astype(np.float32)
    valid = rng.random((height, width)) < density
    values[~valid] = 0.0
    return DisparityMap(values, valid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
