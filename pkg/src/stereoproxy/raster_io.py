"""Image and disparity map I/O.

Images are 8-bit numpy arrays, shape (H, W) for grayscale or (H, W, 3) for
RGB. Disparity maps carry an explicit per-pixel validity mask so that 0.0
stays a legal disparity in memory; the on-disk zero sentinel of the 16-bit
PNG format is purely a serialization concern.

Supported disparity formats:
  * 16-bit PNG, disparity = stored / 256, stored 0 = invalid
  * PFM ("Pf" header, bottom-up rows, scale sign encodes endianness,
    non-finite values = invalid)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

DEFAULT_MAX_DISPARITY = 192

# stored = round(256 * disparity) in the 16-bit PNG encoding
PNG_DISPARITY_SCALE = 256.0

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class FormatError(ValueError):
    """A file does not match the format an operation expects."""


@dataclass
class Calibration:
    """Stereo rig constants used for disparity-to-depth triangulation."""

    focal: float      # pixels
    baseline: float   # meters

    def __post_init__(self):
        if not self.focal > 0:
            raise ValueError(f"focal must be > 0, got {self.focal}")
        if not self.baseline > 0:
            raise ValueError(f"baseline must be > 0, got {self.baseline}")


@dataclass
class DisparityMap:
    """Dense disparity grid with an explicit validity mask.

    `values` at invalid pixels carry no meaning and must never be compared.
    """

    values: np.ndarray   # float32, (H, W)
    valid: np.ndarray    # bool, (H, W)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2:
            raise ValueError(f"disparity values must be 2-D, got shape {self.values.shape}")
        if self.valid.shape != self.values.shape:
            raise ValueError("validity mask shape differs from values shape")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def density(self) -> float:
        """Fraction of valid pixels in [0, 1]."""
        return float(self.valid.mean()) if self.valid.size else 0.0

    def copy(self) -> "DisparityMap":
        return DisparityMap(self.values.copy(), self.valid.copy())

    @classmethod
    def full(cls, values: np.ndarray) -> "DisparityMap":
        """Wrap a dense array; every pixel valid."""
        values = np.asarray(values, dtype=np.float32)
        return cls(values, np.ones(values.shape, dtype=bool))


def _open_image(path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
    return img


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG as uint8 array, (H, W) or (H, W, 3).

    16-bit files are rejected: they are disparity maps, not images.
    """
    img = _open_image(path)
    if img.mode in ("I", "I;16", "I;16B", "I;16L"):
        raise FormatError(f"{path}: 16-bit PNG is a disparity file, not an 8-bit image")
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    if img.mode == "RGB":
        return np.asarray(img, dtype=np.uint8)
    raise FormatError(f"{path}: unsupported PNG mode {img.mode!r}; need 8-bit L or RGB")


def save_image(image: np.ndarray, path) -> None:
    """Write a uint8 grayscale or RGB array as PNG (lossless)."""
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim not in (2, 3):
        raise ValueError("save_image expects uint8 (H, W) or (H, W, 3)")
    Image.fromarray(image).save(path, format="PNG")


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """RGB to intensity with fixed 0.299/0.587/0.114 weights, round to nearest."""
    if image.ndim == 2:
        return image
    r, g, b = GRAY_WEIGHTS
    gray = r * image[..., 0] + g * image[..., 1] + b * image[..., 2]
    return np.rint(gray).astype(np.uint8)


def load_disparity_png(path) -> DisparityMap:
    """Read a 16-bit disparity PNG: disparity = stored / 256, stored 0 invalid."""
    img = _open_image(path)
    if img.mode not in ("I", "I;16", "I;16B", "I;16L"):
        raise FormatError(
            f"{path}: expected 16-bit single-channel PNG, got mode {img.mode!r}"
            " (an 8-bit file is likely an image, not a disparity map)"
        )
    stored = np.asarray(img, dtype=np.int64)
    if stored.ndim != 2:
        raise FormatError(f"{path}: disparity PNG must be single-channel")
    if stored.min() < 0 or stored.max() > 65535:
        raise FormatError(f"{path}: stored values outside the 16-bit range")
    valid = stored > 0
    values = (stored / PNG_DISPARITY_SCALE).astype(np.float32)
    values[~valid] = 0.0
    return DisparityMap(values, valid)


def save_disparity_png(disparity: DisparityMap, path) -> None:
    """Write a disparity map as 16-bit PNG, stored = round(256 * d).

    Valid values that round to stored 0 collide with the invalid sentinel and
    are written invalid. Oversized values clamp to 65535.
    """
    stored = np.rint(disparity.values * PNG_DISPARITY_SCALE)
    stored = np.where(disparity.valid, stored, 0.0)
    stored = np.clip(stored, 0, 65535).astype(np.uint16)
    Image.fromarray(stored).save(path, format="PNG")


def load_pfm(path) -> DisparityMap:
    """Read a grayscale PFM disparity map; non-finite pixels become invalid.

    Rows are stored bottom-up on disk and returned top-down in memory.
    """
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"PF":
            raise FormatError(f"{path}: color PFM ('PF') rejected, disparity needs 'Pf'")
        if header != b"Pf":
            raise FormatError(f"{path}: bad PFM header {header!r}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise FormatError(f"{path}: malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        if width < 1 or height < 1:
            raise FormatError(f"{path}: bad PFM dimensions {width}x{height}")
        try:
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise FormatError(f"{path}: malformed PFM scale line") from exc
        endian = "<" if scale < 0 else ">"
        data = np.fromfile(f, dtype=np.dtype(endian + "f4"), count=width * height)
    if data.size != width * height:
        raise FormatError(f"{path}: truncated PFM payload")
    values = np.flipud(data.reshape(height, width)).astype(np.float32)
    valid = np.isfinite(values)
    values = np.where(valid, values, np.float32(0.0))
    return DisparityMap(values, valid)


def save_pfm(disparity: DisparityMap, path) -> None:
    """Write a grayscale PFM, little-endian (negative scale), bottom-up rows.

    Finite values round-trip bit exactly; invalid pixels are written as +inf.
    """
    values = np.where(disparity.valid, disparity.values, np.float32(np.inf))
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{disparity.width} {disparity.height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        np.flipud(values).astype("<f4").tofile(f)


# 5th-order polynomial fit of the turbo colormap (normalized t in [0, 1]).
_TURBO_COEFFS = (
    (34.61, 1172.33, -10793.56, 33300.12, -38394.49, 14825.05),
    (23.31, 557.33, 1225.33, -3574.96, 1073.77, 707.56),
    (27.2, 3211.1, -15327.97, 27814.0, -22569.18, 6838.66),
)


def colorize(disparity: DisparityMap, d_max: float) -> np.ndarray:
    """Render a disparity map as an RGB raster for figures.

    Valid pixels map d/d_max (clamped to [0, 1]) through a fixed perceptual
    colormap; invalid pixels are black. Deterministic byte-for-byte.
    """
    if not d_max > 0:
        raise ValueError(f"d_max must be > 0, got {d_max}")
    t = np.clip(disparity.values / np.float64(d_max), 0.0, 1.0)
    out = np.zeros(disparity.values.shape + (3,), dtype=np.uint8)
    for ch, coeffs in enumerate(_TURBO_COEFFS):
        poly = np.zeros_like(t)
        for c in reversed(coeffs):
            poly = poly * t + c
        out[..., ch] = np.clip(np.rint(poly), 0, 255).astype(np.uint8)
    out[~disparity.valid] = 0
    return out


def disparity_to_depth(disparity: DisparityMap, calib: Calibration) -> np.ndarray:
    """depth = focal * baseline / disparity; non-positive disparities give inf."""
    d = disparity.values.astype(np.float64)
    with np.errstate(divide="ignore"):
        z = np.where(d > 0, calib.focal * calib.baseline / np.where(d > 0, d, 1.0), np.inf)
    return z
