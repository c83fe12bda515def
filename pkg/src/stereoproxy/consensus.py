"""Consensus distillation: agree across repeated randomized completions.

Runs N completions of the same frame under input randomness (random seed
subsets, color jitter, horizontal flips), accumulates per-pixel streaming
mean/variance, and keeps a pixel only where the variance of the N estimates
stays below a threshold. Memory stays at three image planes regardless
of N.

Randomness comes from one PCG64 stream with a fixed draw order per
iteration (seed subsample, gain, shift, flip), so a run is fully replayable
from its seed and independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .raster_io import DisparityMap
from .seeds import SeedSet

Completer = Callable[[np.ndarray, SeedSet], DisparityMap]


class DistillationError(RuntimeError):
    """A completion iteration failed; the message names the iteration."""


@dataclass
class AugDraw:
    """One iteration's augmentation parameters, sampled upstream."""

    gain: float = 1.0
    shift: float = 0.0    # fraction of full scale, applied as shift * 255
    flip: bool = False


@dataclass
class ConsensusConfig:
    n: int = 50
    gamma: float = 3.0                  # variance gate, disparity^2
    p_sample: float = 1.0 / 20.0        # per-seed keep probability
    flip_prob: float = 0.5
    gain_range: tuple = (0.8, 1.2)
    shift_range: tuple = (-0.1, 0.1)
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for p in (self.p_sample, self.flip_prob):
            if not 0 <= p <= 1:
                raise ValueError(f"probabilities must be in [0, 1], got {p}")


def augment(image: np.ndarray, draw: AugDraw) -> tuple[np.ndarray, bool]:
    """Color jitter then optional horizontal mirror.

    Per channel: v' = clamp(round(v * gain + shift * 255), 0, 255), with
    round-half-to-even. Returns the flip flag so callers can mirror seeds
    and un-mirror outputs.
    """
    v = image.astype(np.float64) * draw.gain + draw.shift * 255.0
    out = np.clip(np.rint(v), 0, 255).astype(np.uint8)
    if draw.flip:
        out = out[:, ::-1].copy()
    return out, draw.flip


class ConsensusAccumulator:
    """Per-pixel streaming count/mean/M2 (Welford), float64 accumulation."""

    def __init__(self, height: int, width: int):
        self.count = np.zeros((height, width), dtype=np.int32)
        self.mean = np.zeros((height, width), dtype=np.float64)
        self.m2 = np.zeros((height, width), dtype=np.float64)

    def push(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        self.count += 1
        delta = values - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (values - self.mean)

    def variance(self) -> np.ndarray:
        """Population variance M2 / count (0 where count is 0)."""
        return self.m2 / np.maximum(self.count, 1)

    def result(self, gamma: float) -> DisparityMap:
        """Mean where variance < gamma (strict), invalid elsewhere."""
        keep = (self.variance() < gamma) & (self.count > 0)
        values = np.where(keep, self.mean, 0.0).astype(np.float32)
        return DisparityMap(values, keep)


def _mirror_seeds(seeds: SeedSet) -> SeedSet:
    return SeedSet(seeds.width - 1 - seeds.x, seeds.y, seeds.d, seeds.width, seeds.height)


def distill(
    image: np.ndarray,
    seeds: SeedSet,
    completer: Completer,
    cfg: ConsensusConfig,
) -> DisparityMap:
    """Produce proxy labels by variance-gated consensus over n completions.

    Each iteration draws a Bernoulli(p_sample) seed subset and an
    augmentation; under a flip, the image and the seed x coordinates are
    mirrored together and the completed map is mirrored back before
    accumulation, keeping the completer's inputs geometrically consistent.
    A pixel of the result is valid iff the population variance of its n
    estimates is strictly below gamma; its value is their mean.
    """
    if len(seeds) == 0:
        raise ValueError("distill needs a non-empty seed set")
    h, w = image.shape[:2]
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    acc = ConsensusAccumulator(h, w)
    for i in range(cfg.n):
        keep = rng.random(len(seeds)) < cfg.p_sample
        draw = AugDraw(
            gain=float(rng.uniform(cfg.gain_range[0], cfg.gain_range[1])),
            shift=float(rng.uniform(cfg.shift_range[0], cfg.shift_range[1])),
            flip=bool(rng.random() < cfg.flip_prob),
        )
        try:
            subset = seeds.subset(keep)
            if len(subset) == 0:
                raise ValueError("sampled seed subset is empty; raise p_sample")
            img_i, flipped = augment(image, draw)
            seeds_i = _mirror_seeds(subset) if flipped else subset
            completed = completer(img_i, seeds_i)
            if not completed.valid.all():
                raise ValueError("completer output is not fully dense")
            values = completed.values[:, ::-1] if flipped else completed.values
        except Exception as exc:
            raise DistillationError(f"completion failed at iteration {i}: {exc}") from exc
        acc.push(values)
    return acc.result(cfg.gamma)
