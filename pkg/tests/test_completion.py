import sys

import numpy as np
import pytest

from stereoproxy import (
    CompleterConfig,
    ExternalCompleterError,
    SeedSet,
    complete,
)
from stereoproxy.completion import _grid_knn


def _seed_set(xs, ys, ds, width, height):
    return SeedSet(
        np.asarray(xs, np.int32), np.asarray(ys, np.int32),
        np.asarray(ds, np.float32), width, height,
    )


def _random_seeds(rng, width, height, count):
    idx = rng.choice(width * height, size=count, replace=False)
    ys, xs = np.divmod(idx, width)
    return _seed_set(xs, ys, rng.uniform(1, 60, count), width, height)


def nadaraya_watson_oracle(gray, seeds, sigma_s, sigma_c):
    """All-seed weighted mean, straight from the weight formula."""
    h, w = gray.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            d2 = (seeds.x.astype(float) - x) ** 2 + (seeds.y.astype(float) - y) ** 2
            di = float(gray[y, x]) - gray[seeds.y, seeds.x].astype(float)
            weights = np.exp(-d2 / (2 * sigma_s**2) - di**2 / (2 * sigma_c**2))
            out[y, x] = (weights * seeds.d).sum() / weights.sum()
    out[seeds.y, seeds.x] = seeds.d
    return out


class TestGridKnn:
    def test_matches_bruteforce_with_tie_rule(self, rng):
        w, h, k = 23, 17, 5
        seeds = _random_seeds(rng, w, h, 40)
        idx, d2 = _grid_knn(seeds.x, seeds.y, w, h, k, cell=4)
        sx = seeds.x.astype(np.int64)
        sy = seeds.y.astype(np.int64)
        for y in range(h):
            for x in range(w):
                brute = sorted(
                    range(len(seeds)),
                    key=lambda i: ((sx[i] - x) ** 2 + (sy[i] - y) ** 2, i),
                )[:k]
                np.testing.assert_array_equal(idx[y, x], brute)

    def test_ties_prefer_smaller_seed_index(self):
        # two seeds equidistant from the probe pixel between them
        seeds = _seed_set([0, 4], [0, 0], [1.0, 2.0], 5, 1)
        idx, d2 = _grid_knn(seeds.x, seeds.y, 5, 1, 2, cell=2)
        np.testing.assert_array_equal(idx[0, 2], [0, 1])
        assert d2[0, 2, 0] == d2[0, 2, 1] == 4

    def test_k_larger_than_seed_count(self):
        seeds = _seed_set([1], [0], [7.0], 4, 2)
        idx, d2 = _grid_knn(seeds.x, seeds.y, 4, 2, 32, cell=3)
        assert idx.shape == (2, 4, 1)


class TestReferenceCompleter:
    def test_seeds_everywhere_reproduced_exactly(self, rng):
        h, w = 6, 7
        img = rng.integers(0, 256, (h, w)).astype(np.uint8)
        ys, xs = np.mgrid[0:h, 0:w]
        values = rng.uniform(0, 90, (h, w)).astype(np.float32)
        seeds = _seed_set(xs.ravel(), ys.ravel(), values.ravel(), w, h)
        out = complete(img, seeds, CompleterConfig())
        np.testing.assert_array_equal(out.values, values)

    def test_single_seed_gives_constant_map(self, rng):
        img = rng.integers(0, 256, (9, 12)).astype(np.uint8)
        seeds = _seed_set([5], [3], [7.0], 12, 9)
        out = complete(img, seeds, CompleterConfig())
        assert out.valid.all()
        np.testing.assert_array_equal(out.values, np.full((9, 12), 7.0, np.float32))

    def test_matches_weight_formula_oracle(self, rng):
        h, w = 10, 14
        img = rng.integers(0, 256, (h, w)).astype(np.uint8)
        seeds = _random_seeds(rng, w, h, 12)
        cfg = CompleterConfig(k_neighbors=32)   # covers every seed
        out = complete(img, seeds, cfg)
        expected = nadaraya_watson_oracle(
            img.astype(np.float64), seeds, cfg.sigma_spatial, cfg.sigma_color
        )
        np.testing.assert_allclose(out.values, expected, rtol=1e-5, atol=1e-5)

    def test_two_region_image_keeps_sides_apart(self):
        h, w = 40, 64
        img = np.zeros((h, w), dtype=np.uint8)
        img[:, w // 2:] = 255
        seeds = _seed_set([16, 48], [20, 20], [10.0, 40.0], w, h)
        cfg = CompleterConfig(sigma_spatial=6.0, sigma_color=10.0)
        out = complete(img, seeds, cfg)
        margin = int(3 * cfg.sigma_spatial)
        left_side = out.values[:, : w // 2 - 1]
        right_side = out.values[:, w // 2 + 1:]
        assert np.all(np.abs(left_side - 10.0) <= 0.5)
        assert np.all(np.abs(right_side - 40.0) <= 0.5)
        assert margin < w // 2   # fixture sanity: the regions extend past 3 sigma

    def test_output_dense_and_inside_seed_range(self, rng):
        img = rng.integers(0, 256, (15, 21)).astype(np.uint8)
        seeds = _random_seeds(rng, 21, 15, 9)
        out = complete(img, seeds, CompleterConfig(k_neighbors=4))
        assert out.valid.all()
        assert out.values.min() >= seeds.d.min() - 1e-5
        assert out.values.max() <= seeds.d.max() + 1e-5

    def test_seed_fidelity(self, rng):
        img = rng.integers(0, 256, (12, 12)).astype(np.uint8)
        seeds = _random_seeds(rng, 12, 12, 20)
        out = complete(img, seeds, CompleterConfig(k_neighbors=6))
        np.testing.assert_array_equal(out.values[seeds.y, seeds.x], seeds.d)

    def test_translation_equivariance(self, rng):
        h, w, dy, dx = 14, 18, 2, 3
        img = rng.integers(0, 256, (h, w)).astype(np.uint8)
        seeds = _random_seeds(rng, w, h, 10)
        big = rng.integers(0, 256, (h + dy, w + dx)).astype(np.uint8)
        big[dy:, dx:] = img
        moved = _seed_set(seeds.x + dx, seeds.y + dy, seeds.d, w + dx, h + dy)
        cfg = CompleterConfig(k_neighbors=4)
        base = complete(img, seeds, cfg)
        shifted = complete(big, moved, cfg)
        np.testing.assert_array_equal(shifted.values[dy:, dx:], base.values)

    def test_weight_underflow_falls_back_to_nearest(self):
        img = np.full((1, 200), 128, dtype=np.uint8)
        seeds = _seed_set([0, 199], [0, 0], [5.0, 9.0], 200, 1)
        cfg = CompleterConfig(sigma_spatial=1.0, sigma_color=10.0, k_neighbors=2)
        out = complete(img, seeds, cfg)
        assert out.values[0, 100] == 9.0   # 99^2 < 100^2, nearest is the right seed
        assert out.values[0, 99] == 5.0

    def test_empty_seeds_rejected(self, rng):
        img = rng.integers(0, 256, (5, 5)).astype(np.uint8)
        empty = _seed_set([], [], [], 5, 5)
        with pytest.raises(ValueError):
            complete(img, empty, CompleterConfig())

    def test_rgb_image_uses_intensity(self, rng):
        rgb = rng.integers(0, 256, (8, 9, 3)).astype(np.uint8)
        seeds = _random_seeds(rng, 9, 8, 6)
        out = complete(rgb, seeds, CompleterConfig())
        assert out.valid.all()


NEAREST_FILL_STUB = """\
import sys
from pathlib import Path
import numpy as np
from PIL import Image

work = Path(sys.argv[1])
lines = (work / "seeds.txt").read_text().splitlines()
w, h = map(int, lines[0].split())
triples = [line.split() for line in lines[1:] if line.strip()]
sx = np.array([int(t[0]) for t in triples])
sy = np.array([int(t[1]) for t in triples])
sd = np.array([float(t[2]) for t in triples])
ys, xs = np.mgrid[0:h, 0:w]
d2 = (xs[..., None] - sx) ** 2 + (ys[..., None] - sy) ** 2
values = sd[np.argmin(d2, axis=-1)]
stored = np.clip(np.rint(values * 256), 1, 65535).astype(np.uint16)
Image.fromarray(stored).save(work / "dense.png")
"""


class TestExternalAdapter:
    def _config(self, tmp_path, script_body):
        script = tmp_path / "stub.py"
        script.write_text(script_body)
        return CompleterConfig(
            mode="external",
            command=f"{sys.executable} {script}",
            workdir=str(tmp_path / "work"),
        )

    def test_conformance_of_nearest_fill_stub(self, tmp_path, rng):
        img = rng.integers(0, 256, (10, 12)).astype(np.uint8)
        seeds = _random_seeds(rng, 12, 10, 7)
        out = complete(img, seeds, self._config(tmp_path, NEAREST_FILL_STUB))
        assert out.valid.all()   # density 100%
        # seed fidelity within the 16-bit format's half quantum
        got = out.values[seeds.y, seeds.x]
        assert np.all(np.abs(got - seeds.d) <= 1 / 512)

    def test_nonzero_exit_raises(self, tmp_path, rng):
        img = rng.integers(0, 256, (4, 4)).astype(np.uint8)
        seeds = _random_seeds(rng, 4, 4, 3)
        cfg = self._config(tmp_path, "import sys; sys.exit(3)\n")
        with pytest.raises(ExternalCompleterError, match="exited 3"):
            complete(img, seeds, cfg)

    def test_missing_output_raises(self, tmp_path, rng):
        img = rng.integers(0, 256, (4, 4)).astype(np.uint8)
        seeds = _random_seeds(rng, 4, 4, 3)
        cfg = self._config(tmp_path, "pass\n")
        with pytest.raises(ExternalCompleterError, match="no"):
            complete(img, seeds, cfg)

    def test_sparse_output_rejected(self, tmp_path, rng):
        body = NEAREST_FILL_STUB.replace(
            "stored = np.clip", "values[0, 0] = 0\nstored = np.clip"
        ).replace("np.rint(values * 256), 1,", "np.rint(values * 256), 0,")
        img = rng.integers(0, 256, (6, 6)).astype(np.uint8)
        seeds = _random_seeds(rng, 6, 6, 4)
        cfg = self._config(tmp_path, body)
        with pytest.raises(ExternalCompleterError, match="dense"):
            complete(img, seeds, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        CompleterConfig(sigma_spatial=0.0)
    with pytest.raises(ValueError):
        CompleterConfig(k_neighbors=0)
    with pytest.raises(ValueError):
        CompleterConfig(mode="external")   # no command
    with pytest.raises(ValueError):
        CompleterConfig(mode="neural")
