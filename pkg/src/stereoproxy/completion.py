"""Dense disparity completion from an image plus sparse seeds.

Two modes:

* reference: deterministic image-guided scattered-data interpolation. Each
  pixel takes the weighted mean of its k nearest seeds (exact k-NN, ties by
  seed index) with joint spatial + photometric Gaussian weights. Output is
  a convex combination of seed disparities; seed pixels reproduce their
  seed value exactly.

* external: hand the frame to another process. The adapter writes
  image.png (8-bit) and seeds.txt into a work directory, invokes the
  configured command with that directory as its single argument, and reads
  back dense.png (16-bit disparity PNG, fully dense). This lets any trained
  completer plug in with no linkage.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster_io import (
    DisparityMap,
    load_disparity_png,
    save_image,
    to_grayscale,
)
from .seeds import SeedSet, save_seeds


class ExternalCompleterError(RuntimeError):
    """The external completer process failed or broke the file contract."""


@dataclass
class CompleterConfig:
    sigma_spatial: float = 14.0   # pixels
    sigma_color: float = 10.0     # intensity units
    k_neighbors: int = 32
    mode: str = "reference"       # "reference" or "external"
    command: str | None = None    # external mode: command line, gets workdir appended
    workdir: str | None = None

    def __post_init__(self):
        if self.sigma_spatial <= 0 or self.sigma_color <= 0:
            raise ValueError("sigmas must be > 0")
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.mode not in ("reference", "external"):
            raise ValueError(f"unknown completer mode {self.mode!r}")
        if self.mode == "external" and not self.command:
            raise ValueError("external mode needs a command")


def _grid_knn(sx, sy, width, height, k, cell):
    """Exact k nearest seeds for every pixel of a (height, width) grid.

    Selection key is (squared distance, seed index), so ties always resolve
    to the smaller original index and the result does not depend on the
    bucket layout. Returns (indices, squared distances), both (H, W, k).
    """
    n = len(sx)
    k = min(k, n)
    gx = -(-width // cell)
    gy = -(-height // cell)
    cell_id = (sy.astype(np.int64) // cell) * gx + sx.astype(np.int64) // cell
    order = np.argsort(cell_id, kind="stable")
    sx_s = sx[order].astype(np.int64)
    sy_s = sy[order].astype(np.int64)
    orig = order.astype(np.int64)
    cell_sorted = cell_id[order]
    cells = np.arange(gx * gy)
    starts = np.searchsorted(cell_sorted, cells)
    ends = np.searchsorted(cell_sorted, cells, side="right")

    idx_bits = max(int(n).bit_length(), 1)
    idx_mask = (1 << idx_bits) - 1

    nn_idx = np.empty((height, width, k), dtype=np.int64)
    nn_d2 = np.empty((height, width, k), dtype=np.int64)
    far = np.int64(1) << np.int64(30)   # beyond any in-image distance, square fits int64

    for cy in range(gy):
        ty0, ty1 = cy * cell, min((cy + 1) * cell, height)
        for cx in range(gx):
            tx0, tx1 = cx * cell, min((cx + 1) * cell, width)
            py, px = np.mgrid[ty0:ty1, tx0:tx1]
            py = py.ravel()
            px = px.ravel()
            r = 1
            while True:
                ca, cb = max(cx - r, 0), min(cx + r, gx - 1)
                cya, cyb = max(cy - r, 0), min(cy + r, gy - 1)
                spans = [
                    (starts[row * gx + ca], ends[row * gx + cb])
                    for row in range(cya, cyb + 1)
                ]
                cand = np.concatenate(
                    [np.arange(s, e) for s, e in spans if e > s] or
                    [np.empty(0, dtype=np.int64)]
                )
                if len(cand) < k:
                    r += 1
                    continue
                ddx = px[:, None] - sx_s[cand][None, :]
                ddy = py[:, None] - sy_s[cand][None, :]
                key = (ddx * ddx + ddy * ddy) << idx_bits
                key += orig[cand][None, :]
                if key.shape[1] > k:
                    part = np.argpartition(key, k - 1, axis=1)[:, :k]
                    kk = np.take_along_axis(key, part, axis=1)
                else:
                    kk = key
                kk = np.sort(kk, axis=1)
                dk2 = kk >> idx_bits

                whole_grid = ca == 0 and cb == gx - 1 and cya == 0 and cyb == gy - 1
                # a seed outside the searched cell block is at least this far
                guard = np.full(len(px), far)
                if ca > 0:
                    guard = np.minimum(guard, px - ca * cell + 1)
                if cb < gx - 1:
                    guard = np.minimum(guard, (cb + 1) * cell - px)
                if cya > 0:
                    guard = np.minimum(guard, py - cya * cell + 1)
                if cyb < gy - 1:
                    guard = np.minimum(guard, (cyb + 1) * cell - py)
                if whole_grid or np.all(dk2[:, -1] < guard * guard):
                    shape = (ty1 - ty0, tx1 - tx0, k)
                    nn_idx[ty0:ty1, tx0:tx1] = (kk & idx_mask).reshape(shape)
                    nn_d2[ty0:ty1, tx0:tx1] = dk2.reshape(shape)
                    break
                r += 1
    return nn_idx, nn_d2


def _complete_reference(image: np.ndarray, seeds: SeedSet, cfg: CompleterConfig) -> DisparityMap:
    gray = to_grayscale(image).astype(np.float32)
    h, w = gray.shape
    cell = max(1, int(round(cfg.sigma_spatial)))
    nn_idx, nn_d2 = _grid_knn(seeds.x, seeds.y, w, h, cfg.k_neighbors, cell)

    seed_gray = gray[seeds.y, seeds.x]
    di = gray[:, :, None] - seed_gray[nn_idx]
    log_w = (
        -nn_d2.astype(np.float64) / (2.0 * cfg.sigma_spatial ** 2)
        - (di.astype(np.float64) ** 2) / (2.0 * cfg.sigma_color ** 2)
    )
    weights = np.exp(log_w)
    seed_d = seeds.d.astype(np.float64)[nn_idx]
    den = weights.sum(axis=2)
    num = (weights * seed_d).sum(axis=2)
    nearest = seed_d[..., 0]
    values = np.where(den > 0, num / np.where(den > 0, den, 1.0), nearest)
    values = values.astype(np.float32)
    values[seeds.y, seeds.x] = seeds.d
    return DisparityMap.full(values)


def _complete_external(image: np.ndarray, seeds: SeedSet, cfg: CompleterConfig) -> DisparityMap:
    if cfg.workdir is None:
        raise ValueError("external mode needs a workdir")
    workdir = Path(cfg.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    save_image(image, workdir / "image.png")
    save_seeds(seeds, workdir / "seeds.txt")
    cmd = shlex.split(cfg.command) + [str(workdir)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExternalCompleterError(
            f"completer command exited {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    out_path = workdir / "dense.png"
    if not out_path.exists():
        raise ExternalCompleterError(f"completer produced no {out_path}")
    dense = load_disparity_png(out_path)
    if dense.values.shape != image.shape[:2]:
        raise ExternalCompleterError("completer output dimensions differ from the input image")
    if not dense.valid.all():
        raise ExternalCompleterError(
            f"completer output not fully dense ({dense.density() * 100:.2f}%)"
        )
    return dense


def complete(image: np.ndarray, seeds: SeedSet, cfg: CompleterConfig) -> DisparityMap:
    """Densify a SeedSet over the image; output is 100% dense.

    Reference mode: per pixel q, the k nearest seeds s_i contribute
    w_i = exp(-|q - s_i|^2 / (2 sigma_s^2) - (I(q) - I(s_i))^2 / (2 sigma_c^2))
    on the intensity image and the output is sum(w d) / sum(w). If the
    weight sum underflows to zero the nearest seed's value is used.
    """
    if len(seeds) == 0:
        raise ValueError("complete needs a non-empty seed set")
    if seeds.width != image.shape[1] or seeds.height != image.shape[0]:
        raise ValueError("seed set dimensions differ from the image")
    if cfg.mode == "external":
        return _complete_external(image, seeds, cfg)
    return _complete_reference(image, seeds, cfg)
