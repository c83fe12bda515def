"""Sparse reliable disparity seeds: filtering, sampling, serialization.

A SeedSet is a row-major list of (x, y, d) triples plus the image
dimensions. Sampling uses numpy's PCG64 generator (a documented,
platform-stable 64-bit stream) and consumes exactly one uniform draw per
seed in storage order, so samples are reproducible no matter how the seeds
were produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster_io import DisparityMap
from .sgm import lrc_filter


@dataclass
class SeedSet:
    x: np.ndarray          # int32
    y: np.ndarray          # int32
    d: np.ndarray          # float32
    width: int
    height: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int32)
        self.y = np.asarray(self.y, dtype=np.int32)
        self.d = np.asarray(self.d, dtype=np.float32)
        if not (self.x.shape == self.y.shape == self.d.shape) or self.x.ndim != 1:
            raise ValueError("seed coordinate arrays must be equal-length 1-D")
        if len(self.x) and (
            self.x.min() < 0 or self.x.max() >= self.width
            or self.y.min() < 0 or self.y.max() >= self.height
        ):
            raise ValueError("seed coordinates outside the image")

    def __len__(self) -> int:
        return len(self.x)

    def validate(self, d_max: float | None = None) -> None:
        """Check uniqueness of (x, y) and the disparity range."""
        flat = self.y.astype(np.int64) * self.width + self.x
        if len(np.unique(flat)) != len(flat):
            raise ValueError("duplicate (x, y) seed coordinates")
        if len(self.d) and self.d.min() < 0:
            raise ValueError("negative seed disparity")
        if d_max is not None and len(self.d) and self.d.max() > d_max:
            raise ValueError(f"seed disparity exceeds {d_max}")

    def subset(self, mask: np.ndarray) -> "SeedSet":
        return SeedSet(self.x[mask], self.y[mask], self.d[mask], self.width, self.height)

    def to_disparity_map(self) -> DisparityMap:
        values = np.zeros((self.height, self.width), dtype=np.float32)
        valid = np.zeros((self.height, self.width), dtype=bool)
        values[self.y, self.x] = self.d
        valid[self.y, self.x] = True
        return DisparityMap(values, valid)

    @classmethod
    def from_disparity_map(cls, disparity: DisparityMap) -> "SeedSet":
        """One seed per valid pixel, row-major order."""
        ys, xs = np.nonzero(disparity.valid)
        return cls(
            xs.astype(np.int32),
            ys.astype(np.int32),
            disparity.values[ys, xs],
            disparity.width,
            disparity.height,
        )


@dataclass
class FilterConfig:
    mode: str = "lrc"                     # "lrc" or "confidence"
    pkr_min: float = 1.0                  # peak-ratio acceptance threshold
    lrc_tau: float = 1.0
    target_density: float | None = None   # cap on kept fraction of pixels

    def __post_init__(self):
        if self.mode not in ("lrc", "confidence"):
            raise ValueError(f"unknown filter mode {self.mode!r}")
        if self.pkr_min < 1:
            raise ValueError(f"pkr_min must be >= 1, got {self.pkr_min}")
        if self.target_density is not None and not 0 < self.target_density <= 1:
            raise ValueError(f"target_density must be in (0, 1], got {self.target_density}")


def filter_lrc(d_map: DisparityMap) -> SeedSet:
    """Seeds from an already consistency-checked map, one per valid pixel."""
    return SeedSet.from_disparity_map(d_map)


def filter_confidence(
    d_map: DisparityMap,
    confidence: np.ndarray,
    d_right: DisparityMap,
    cfg: FilterConfig,
) -> SeedSet:
    """Keep pixels passing both the confidence threshold and the LRC check.

    With target_density set, only the floor(W*H*density) most confident
    survivors are kept, ties broken toward smaller (y, x).
    """
    if confidence.shape != d_map.values.shape:
        raise ValueError("confidence map does not match the disparity map")
    consistent = lrc_filter(d_map, d_right, cfg.lrc_tau)
    keep = consistent.valid & (confidence >= cfg.pkr_min)
    if cfg.target_density is not None:
        budget = int(d_map.width * d_map.height * cfg.target_density)
        ys, xs = np.nonzero(keep)
        if len(ys) > budget:
            conf = confidence[ys, xs]
            # primary key: confidence descending; ties: smaller (y, x) first.
            # nonzero already yields ascending (y, x), and stable sort keeps it.
            order = np.argsort(-conf, kind="stable")[:budget]
            keep = np.zeros_like(keep)
            keep[ys[order], xs[order]] = True
    return SeedSet.from_disparity_map(
        DisparityMap(np.where(keep, d_map.values, 0.0), keep)
    )


def sample_seeds(seeds: SeedSet, p: float, rng_seed: int) -> SeedSet:
    """Keep each seed independently with probability p (Bernoulli).

    Consumes one PCG64 uniform per seed in storage order; identical
    (seeds, p, rng_seed) always produce the identical subset.
    """
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    keep = rng.random(len(seeds)) < p
    return seeds.subset(keep)


def save_seeds(seeds: SeedSet, path) -> None:
    """Plain text: header "width height", then one "x y d" triple per line."""
    with open(path, "w", encoding="ascii") as f:
        f.write(f"{seeds.width} {seeds.height}\n")
        # 9 significant digits round-trip any float32 exactly
        for x, y, d in zip(seeds.x, seeds.y, seeds.d):
            f.write(f"{x} {y} {float(d):.9g}\n")


def load_seeds(path) -> SeedSet:
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: seed file needs a 'width height' header")
        width, height = int(header[0]), int(header[1])
        xs, ys, ds = [], [], []
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}: malformed seed line {line.strip()!r}")
            xs.append(int(parts[0]))
            ys.append(int(parts[1]))
            ds.append(float(parts[2]))
    seeds = SeedSet(
        np.array(xs, dtype=np.int32),
        np.array(ys, dtype=np.int32),
        np.array(ds, dtype=np.float32),
        width,
        height,
    )
    seeds.validate()
    return seeds
