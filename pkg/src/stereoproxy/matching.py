"""Local stereo matching: census cost volume, winner-take-all, confidence.

Conventions (KITTI-style rectified pairs): disparity d means left pixel
(x, y) corresponds to right pixel (x - d, y). Costs are non-negative
float32; cells whose right-image counterpart falls outside the image carry
the volume's penalty cost so they never win spuriously.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster_io import DisparityMap

CENSUS_WINDOW_DEFAULT = 5


@dataclass
class CensusField:
    """Per-pixel census signatures packed into 64-bit words.

    Bit k of a signature is 1 iff the k-th window neighbor (row-major,
    center skipped) is strictly darker than the center pixel. Signatures
    are window*window - 1 bits long, split over ceil(bits / 64) words.
    """

    bits: np.ndarray   # uint64, (H, W, n_words)
    window: int

    @property
    def n_bits(self) -> int:
        return self.window * self.window - 1

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass
class CostVolume:
    """Per-pixel, per-disparity matching cost tensor.

    `penalty` is the cost stored for out-of-range candidates; it also serves
    as the fill value when derived views (see right_disparity) need to
    penalize candidates that leave the image.
    """

    cost: np.ndarray   # float32, (H, W, D)
    penalty: float

    @property
    def height(self) -> int:
        return self.cost.shape[0]

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    @property
    def d_max(self) -> int:
        return self.cost.shape[2]


def census_transform(image: np.ndarray, window: int = CENSUS_WINDOW_DEFAULT) -> CensusField:
    """Census-transform a single-channel image.

    Out-of-image neighbors compare as equal to the center (bit 0), achieved
    by padding with the image maximum so the strict less-than test can
    never fire. Works for any integer dtype, which keeps the transform
    exactly invariant under strictly increasing intensity remaps.
    """
    if window % 2 == 0 or not 3 <= window <= 9:
        raise ValueError(f"census window must be odd and in [3, 9], got {window}")
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("census_transform expects a single-channel image")
    h, w = image.shape
    half = window // 2
    padded = np.pad(image, half, mode="constant", constant_values=image.max())
    n_bits = window * window - 1
    n_words = (n_bits + 63) // 64
    bits = np.zeros((h, w, n_words), dtype=np.uint64)
    k = 0
    for dy in range(window):
        for dx in range(window):
            if dy == half and dx == half:
                continue
            neighbor = padded[dy:dy + h, dx:dx + w]
            less = neighbor < image
            bits[:, :, k // 64] |= less.astype(np.uint64) << np.uint64(k % 64)
            k += 1
    return CensusField(bits, window)


def build_cost_volume(left: CensusField, right: CensusField, d_max: int) -> CostVolume:
    """Hamming-distance cost volume between two census fields.

    cost(x, y, d) = popcount(left(x, y) XOR right(x - d, y)); candidates with
    x - d < 0 get the penalty cost window^2 - 1 (the Hamming maximum).
    """
    if left.bits.shape != right.bits.shape or left.window != right.window:
        raise ValueError("left/right census fields must have identical shape and window")
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")
    h, w, n_words = left.bits.shape
    penalty = float(left.n_bits)
    cost = np.empty((h, w, d_max), dtype=np.float32)
    ham = np.empty((h, w), dtype=np.uint32)
    for d in range(d_max):
        if d >= w:
            cost[:, :, d] = penalty
            continue
        ham[:] = 0
        for word in range(n_words):
            x = left.bits[:, d:, word] ^ right.bits[:, : w - d, word]
            ham[:, d:] += np.bitwise_count(x)
        cost[:, d:, d] = ham[:, d:]
        cost[:, :d, d] = penalty
    return CostVolume(cost, penalty)


def build_cost_volume_sad(
    left: np.ndarray, right: np.ndarray, d_max: int, window: int = CENSUS_WINDOW_DEFAULT
) -> CostVolume:
    """Sum-of-absolute-differences cost volume over a square window.

    Intensity-based alternative to the census cost. Not invariant to
    monotonic intensity remaps; provided as a configuration option.
    """
    if window % 2 == 0 or window < 1:
        raise ValueError(f"SAD window must be odd and positive, got {window}")
    left = np.asarray(left, dtype=np.float32)
    right = np.asarray(right, dtype=np.float32)
    if left.shape != right.shape or left.ndim != 2:
        raise ValueError("left/right must be single-channel images of equal shape")
    h, w = left.shape
    half = window // 2
    penalty = float(window * window * 255)
    cost = np.empty((h, w, d_max), dtype=np.float32)
    for d in range(d_max):
        if d >= w:
            cost[:, :, d] = penalty
            continue
        diff = np.full((h, w), 255.0, dtype=np.float32)
        diff[:, d:] = np.abs(left[:, d:] - right[:, : w - d])
        padded = np.pad(diff, half, mode="edge")
        # box sum via integral image
        integral = np.zeros((h + window, w + window), dtype=np.float64)
        np.cumsum(padded, axis=0, out=integral[1:, 1:])
        np.cumsum(integral[1:, 1:], axis=1, out=integral[1:, 1:])
        box = (
            integral[window:, window:]
            - integral[:-window, window:]
            - integral[window:, :-window]
            + integral[:-window, :-window]
        )
        cost[:, :, d] = box.astype(np.float32)
        cost[:, :d, d] = penalty
    return CostVolume(cost, penalty)


def _select_disparity(cost: np.ndarray, subpixel: bool) -> np.ndarray:
    """argmin over the disparity axis, ties toward the smallest disparity.

    With subpixel on, interior minima are refined by fitting a parabola to
    the three costs around the minimum:
        d* + (c[d*-1] - c[d*+1]) / (2 * (c[d*-1] + c[d*+1] - 2 * c[d*]))
    A zero denominator leaves the integer estimate unchanged. The offset is
    always within [-0.5, 0.5].
    """
    d_star = np.argmin(cost, axis=2)
    values = d_star.astype(np.float32)
    if not subpixel or cost.shape[2] < 3:
        return values
    interior = (d_star > 0) & (d_star < cost.shape[2] - 1)
    d_safe = np.where(interior, d_star, 1)[..., None]
    c0 = np.take_along_axis(cost, d_safe, axis=2)[..., 0].astype(np.float64)
    cm = np.take_along_axis(cost, d_safe - 1, axis=2)[..., 0].astype(np.float64)
    cp = np.take_along_axis(cost, d_safe + 1, axis=2)[..., 0].astype(np.float64)
    denom = cm + cp - 2.0 * c0
    offset = np.where(denom > 0, (cm - cp) / np.where(denom > 0, 2.0 * denom, 1.0), 0.0)
    return np.where(interior, values + offset.astype(np.float32), values).astype(np.float32)


def wta(volume: CostVolume, subpixel: bool = True) -> DisparityMap:
    """Winner-take-all disparity selection; every pixel valid."""
    return DisparityMap.full(_select_disparity(volume.cost, subpixel))


def right_disparity(volume: CostVolume, subpixel: bool = True) -> DisparityMap:
    """Right-view disparity from the same volume: argmin_d cost(x + d, y, d).

    Candidates with x + d beyond the right image edge are penalized with a
    value above every stored cost, then the wta tie/subpixel rules apply.
    """
    cost = volume.cost
    h, w, d_max = cost.shape
    pad = np.float32(max(volume.penalty, float(cost.max()))) + np.float32(1.0)
    shifted = np.full_like(cost, pad)
    for d in range(min(d_max, w)):
        shifted[:, : w - d, d] = cost[:, d:, d]
    return DisparityMap.full(_select_disparity(shifted, subpixel))


def confidence_pkr(volume: CostVolume, wta_map: DisparityMap) -> np.ndarray:
    """Peak-ratio confidence, higher = more distinctive minimum.

    PKR = c2m / max(c1, 1) with c1 the cost at the integer minimum d* and
    c2m the smallest cost outside the window |d - d*| <= 1. Where no such
    candidate exists (d_max < 4 at the edges of the range), c2m falls back
    to c1 so the score degrades to "no distinctiveness".
    """
    if wta_map.values.shape != volume.cost.shape[:2]:
        raise ValueError("wta_map does not match the volume dimensions")
    cost = volume.cost
    h, w, d_max = cost.shape
    d_star = np.argmin(cost, axis=2)[..., None]
    c1 = np.take_along_axis(cost, d_star, axis=2)[..., 0]

    inf = np.float32(np.inf)
    prefix = np.concatenate(
        [np.full((h, w, 2), inf), np.minimum.accumulate(cost, axis=2)], axis=2
    )
    suffix = np.concatenate(
        [np.minimum.accumulate(cost[:, :, ::-1], axis=2)[:, :, ::-1],
         np.full((h, w, 2), inf)], axis=2
    )
    # smallest cost at d <= d*-2 and at d >= d*+2
    below = np.take_along_axis(prefix, d_star, axis=2)[..., 0]
    above = np.take_along_axis(suffix, d_star + 2, axis=2)[..., 0]
    c2m = np.minimum(below, above)
    c2m = np.where(np.isfinite(c2m), c2m, c1)
    return (c2m / np.maximum(c1, 1.0)).astype(np.float32)
