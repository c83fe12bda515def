"""Semi-global matching: multi-path scanline DP over a cost volume.

Each path direction r sweeps the image accumulating

    L_r(p, d) = C(p, d) + min(L_r(p-r, d),
                              L_r(p-r, d+-1) + p1,
                              min_k L_r(p-r, k) + p2)
                        - min_k L_r(p-r, k)

with L_r = C at path starts. The aggregated volume is the sum over paths,
always taken in the fixed order E, W, S, N, SE, NW, SW, NE so results are
bit-identical between runs regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matching import CostVolume
from .raster_io import DisparityMap

# (dx, dy) per direction; the first four make up the 4-path configuration
PATH_DIRECTIONS = {
    "E": (1, 0),
    "W": (-1, 0),
    "S": (0, 1),
    "N": (0, -1),
    "SE": (1, 1),
    "NW": (-1, -1),
    "SW": (-1, 1),
    "NE": (1, -1),
}
PATH_ORDER = ("E", "W", "S", "N", "SE", "NW", "SW", "NE")


@dataclass
class SgmParams:
    p1: float = 10.0       # penalty for |d - d'| == 1 along a path
    p2: float = 120.0      # penalty for |d - d'| > 1
    paths: int = 8
    tau_lrc: float = 1.0   # left-right consistency tolerance, disparities

    def __post_init__(self):
        if not 0 <= self.p1 <= self.p2:
            raise ValueError(f"need 0 <= p1 <= p2, got p1={self.p1} p2={self.p2}")
        if self.paths not in (4, 8):
            raise ValueError(f"paths must be 4 or 8, got {self.paths}")
        if self.tau_lrc < 0:
            raise ValueError(f"tau_lrc must be >= 0, got {self.tau_lrc}")


def _dp_step(prev, cur_cost, p1, p2, out, bufs):
    """One DP transition for a batch of scanlines, state shape (M, D)."""
    m, cand, t1 = bufs
    prev.min(axis=1, keepdims=True, out=m)
    np.copyto(cand, prev)
    np.add(prev[:, 1:], p1, out=t1[:, 1:])
    np.minimum(cand[:, :-1], t1[:, 1:], out=cand[:, :-1])
    np.add(prev[:, :-1], p1, out=t1[:, :-1])
    np.minimum(cand[:, 1:], t1[:, :-1], out=cand[:, 1:])
    np.add(m, p2, out=m)
    np.minimum(cand, m, out=cand)
    np.subtract(m, p2, out=m)
    np.subtract(cand, m, out=cand)
    np.add(cand, cur_cost, out=out)


def _sweep_rows(cost, dx, dy, p1, p2, out_sum):
    """Accumulate one path with a vertical component into out_sum.

    Rows are processed top-down (dy=1) or bottom-up (dy=-1); the DP state is
    the whole previous row, shifted by dx columns. Columns whose predecessor
    leaves the image restart at the raw cost.
    """
    h, w, d = cost.shape
    ys = range(h) if dy == 1 else range(h - 1, -1, -1)
    bufs = (
        np.empty((w, 1), dtype=cost.dtype),
        np.empty((w, d), dtype=cost.dtype),
        np.empty((w, d), dtype=cost.dtype),
    )
    shift = np.empty((w, d), dtype=cost.dtype)
    l_prev = np.empty((w, d), dtype=cost.dtype)
    l_cur = np.empty((w, d), dtype=cost.dtype)
    first = True
    for y in ys:
        if first:
            np.copyto(l_cur, cost[y])
            first = False
        else:
            if dx == 0:
                prev = l_prev
            else:
                prev = shift
                if dx == 1:
                    prev[1:] = l_prev[:-1]
                    prev[0] = l_prev[0]   # overwritten by the restart below
                else:
                    prev[:-1] = l_prev[1:]
                    prev[-1] = l_prev[-1]
            _dp_step(prev, cost[y], p1, p2, l_cur, bufs)
            if dx == 1:
                l_cur[0] = cost[y, 0]
            elif dx == -1:
                l_cur[-1] = cost[y, -1]
        out_sum[y] += l_cur
        l_prev, l_cur = l_cur, l_prev


def aggregate_path(cost: np.ndarray, direction: tuple[int, int], p1: float, p2: float) -> np.ndarray:
    """Single-path aggregation, mainly a building block and test surface."""
    dx, dy = direction
    p1 = np.float32(p1)
    p2 = np.float32(p2)
    out = np.zeros_like(cost)
    if dy == 0:
        # horizontal sweep: run the row machinery on the transposed volume
        cost_t = np.ascontiguousarray(cost.transpose(1, 0, 2))
        out_t = np.zeros_like(cost_t)
        _sweep_rows(cost_t, 0, 1 if dx == 1 else -1, p1, p2, out_t)
        out += out_t.transpose(1, 0, 2)
    else:
        _sweep_rows(cost, dx, dy, p1, p2, out)
    return out


def aggregate(volume: CostVolume, params: SgmParams) -> CostVolume:
    """Sum the scanline DP over the configured 4 or 8 path directions."""
    cost = volume.cost
    p1 = np.float32(params.p1)
    p2 = np.float32(params.p2)
    total = np.zeros_like(cost)

    # E and W share one transposed copy so their scanlines are contiguous
    cost_t = np.ascontiguousarray(cost.transpose(1, 0, 2))
    total_t = np.zeros_like(cost_t)
    _sweep_rows(cost_t, 0, 1, p1, p2, total_t)    # E
    _sweep_rows(cost_t, 0, -1, p1, p2, total_t)   # W
    total += total_t.transpose(1, 0, 2)
    del cost_t, total_t

    names = PATH_ORDER[2:4] if params.paths == 4 else PATH_ORDER[2:]
    for name in names:
        dx, dy = PATH_DIRECTIONS[name]
        _sweep_rows(cost, dx, dy, p1, p2, total)
    return CostVolume(total, volume.penalty * params.paths)


def lrc_filter(d_left: DisparityMap, d_right: DisparityMap, tau: float = 1.0) -> DisparityMap:
    """Left-right consistency check.

    Pixel (x, y) survives iff d_left is valid there, x - round(d_left) lands
    inside the image, d_right is valid at that spot, and the two disparities
    agree within tau. Everything else becomes invalid.
    """
    if d_left.values.shape != d_right.values.shape:
        raise ValueError("left/right disparity maps must have equal dimensions")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    h, w = d_left.values.shape
    xs = np.arange(w)[None, :]
    target = xs - np.rint(d_left.values).astype(np.int64)
    in_range = (target >= 0) & (target < w)
    target_safe = np.clip(target, 0, w - 1)
    ys = np.arange(h)[:, None]
    right_vals = d_right.values[ys, target_safe]
    right_ok = d_right.valid[ys, target_safe]
    consistent = np.abs(d_left.values - right_vals) <= tau
    keep = d_left.valid & in_range & right_ok & consistent
    values = np.where(keep, d_left.values, 0.0).astype(np.float32)
    return DisparityMap(values, keep)


def hole_fill(disparity: DisparityMap) -> DisparityMap:
    """Fill every invalid pixel; originally valid pixels are untouched.

    Each invalid run on a scanline takes min(left valid neighbor, right
    valid neighbor), the background-propagation rule; runs touching the
    border take the single available neighbor. Rows without any valid pixel
    copy the nearest filled row (ties resolved upward).
    """
    valid = disparity.valid
    if not valid.any():
        raise ValueError("hole_fill needs at least one valid pixel")
    h, w = valid.shape
    values = disparity.values

    col = np.arange(w)[None, :]
    # nearest valid column index to the left (and right) of every pixel
    left_idx = np.where(valid, col, -1)
    left_idx = np.maximum.accumulate(left_idx, axis=1)
    right_idx = np.where(valid, col, w)
    right_idx = np.minimum.accumulate(right_idx[:, ::-1], axis=1)[:, ::-1]

    rows = np.arange(h)[:, None]
    has_left = left_idx >= 0
    has_right = right_idx < w
    left_val = values[rows, np.clip(left_idx, 0, w - 1)]
    right_val = values[rows, np.clip(right_idx, 0, w - 1)]
    filled = np.where(
        has_left & has_right,
        np.minimum(left_val, right_val),
        np.where(has_left, left_val, right_val),
    )
    filled = np.where(valid, values, filled).astype(np.float32)

    row_has_valid = valid.any(axis=1)
    if not row_has_valid.all():
        valid_rows = np.flatnonzero(row_has_valid)
        for y in np.flatnonzero(~row_has_valid):
            dist = np.abs(valid_rows - y)
            # ties prefer the smaller row index (upward)
            src = valid_rows[np.argmin(dist)]
            filled[y] = filled[src]
    return DisparityMap(filled, np.ones_like(valid))
