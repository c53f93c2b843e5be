"""Rasterized interference patterns, camera noise, and binary PGM I/O.

Pixel (i, j) is row i, column j; its center sits at Cartesian
``x = j - center_x``, ``y = center_y - i`` (y up), so azimuths are
counter-clockwise on the displayed image.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PGMFormatError
from .oam_state import ScalarPattern


@dataclass(frozen=True)
class ImageGeometry:
    width: int = 512
    height: int = 512
    center_x: float = 255.5
    center_y: float = 255.5
    pixels_per_waist: float = 64.0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("image must be at least 16x16")
        if not self.pixels_per_waist > 0:
            raise ValueError("pixels_per_waist must be positive")
        if not (0 <= self.center_x <= self.width - 1 and 0 <= self.center_y <= self.height - 1):
            raise ValueError("center must lie inside the image")

    @classmethod
    def centered(cls, width: int, height: int, pixels_per_waist: float = 64.0) -> "ImageGeometry":
        return cls(width, height, (width - 1) / 2, (height - 1) / 2, pixels_per_waist)

    def polar(self):
        """Per-pixel (r in waists, alpha in radians) arrays."""
        i, j = np.indices((self.height, self.width), dtype=float)
        x = j - self.center_x
        y = self.center_y - i
        return np.hypot(x, y) / self.pixels_per_waist, np.arctan2(y, x)

    def annulus(self, r_min: float, r_max: float) -> np.ndarray:
        r, _ = self.polar()
        return (r >= r_min) & (r <= r_max)


@dataclass(frozen=True, eq=False)
class PatternImage:
    """Intensity image; ``valid`` marks pixels with defined values (None = all)."""
    geometry: ImageGeometry
    pixels: np.ndarray
    bit_depth: int = 16
    valid: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        g = self.geometry
        if px.shape != (g.height, g.width):
            raise ValueError(f"pixel array shape {px.shape} != ({g.height}, {g.width})")
        if not np.all(np.isfinite(px)) or np.any(px < 0):
            raise ValueError("pixels must be finite and non-negative")
        if self.bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")
        object.__setattr__(self, "pixels", px)

    @property
    def max_pixel(self) -> float:
        return float(self.pixels.max())


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    sigma: float = 0.0
    peak_counts: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "poisson"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.peak_counts > 0:
            raise ValueError("peak_counts must be positive")


def render(pattern: ScalarPattern, geometry: ImageGeometry = ImageGeometry(),
           supersample: bool = False, bit_depth: int = 16) -> PatternImage:
    """Sample ``cos^2(l(theta+alpha)) E(r)^2`` at pixel centers (or a 2x2 sub-grid)."""
    i, j = np.indices((geometry.height, geometry.width), dtype=float)
    offsets = [(-0.25, -0.25), (-0.25, 0.25), (0.25, -0.25), (0.25, 0.25)] if supersample else [(0.0, 0.0)]
    acc = np.zeros((geometry.height, geometry.width))
    for di, dj in offsets:
        x = j + dj - geometry.center_x
        y = geometry.center_y - (i + di)
        r = np.hypot(x, y) / geometry.pixels_per_waist
        alpha = np.arctan2(y, x)
        c = np.cos(pattern.l * (pattern.theta + alpha))
        E = pattern.radial(r)
        acc += c * c * E * E
    return PatternImage(geometry, acc / len(offsets), bit_depth)


def add_noise(image: PatternImage, spec: NoiseSpec) -> PatternImage:
    """Gaussian (clamped at 0) or Poisson noise; bit-identical for a given seed.

    The stream comes from a Philox counter-based generator keyed by the seed,
    drawn in row-major pixel order.
    """
    if spec.kind == "none":
        return image
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    peak = image.max_pixel
    if spec.kind == "gaussian":
        px = image.pixels + rng.normal(0.0, spec.sigma * peak, size=image.pixels.shape)
        px = np.maximum(px, 0.0)
    else:
        lam = image.pixels * (spec.peak_counts / peak) if peak > 0 else image.pixels
        px = rng.poisson(lam).astype(float)
    return replace(image, pixels=px)


def azimuthal_profile(image: PatternImage, r_min: float, r_max: float, n_bins: int = 360):
    """Mean intensity per azimuth bin over an annulus (waist units).

    Returns ``(bin_centers, means)``; bins span [0, 2 pi) counter-clockwise.
    """
    if not 0 <= r_min < r_max:
        raise ValueError("need 0 <= r_min < r_max")
    if n_bins < 8:
        raise ValueError("n_bins must be >= 8")
    r, alpha = image.geometry.polar()
    sel = (r >= r_min) & (r <= r_max)
    if image.valid is not None:
        sel &= image.valid
    if not sel.any():
        raise ValueError("annulus contains no pixels")
    a = np.mod(alpha[sel], 2 * np.pi)
    idx = np.minimum((a / (2 * np.pi) * n_bins).astype(int), n_bins - 1)
    sums = np.bincount(idx, weights=image.pixels[sel], minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    if np.any(counts == 0):
        raise ValueError("some azimuth bins are empty; widen the annulus or use fewer bins")
    centers = (np.arange(n_bins) + 0.5) * (2 * np.pi / n_bins)
    return centers, sums / counts


def count_local_minima(values) -> int:
    """Strict local minima of a circular sequence."""
    v = np.asarray(values, dtype=float)
    return int(np.sum((v < np.roll(v, 1)) & (v < np.roll(v, -1))))


# -- PGM (P5) ---------------------------------------------------------------

def write_image(image: PatternImage, path) -> None:
    """Write binary PGM, scaling [0, max_pixel] onto [0, maxval] (round half up)."""
    maxval = 255 if image.bit_depth == 8 else 65535
    peak = image.max_pixel
    scaled = image.pixels / peak if peak > 0 else image.pixels
    q = np.floor(scaled * maxval + 0.5).astype(np.int64)
    q = np.clip(q, 0, maxval)
    dtype = ">u1" if maxval < 256 else ">u2"
    header = f"P5\n{image.geometry.width} {image.geometry.height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(q.astype(dtype).tobytes())


def _header_tokens(data: bytes):
    """Yield (token, end_offset) for the first four whitespace-separated header fields."""
    pos, n = 0, len(data)
    found = 0
    while found < 4:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PGMFormatError("truncated header")
        found += 1
        yield data[start:pos], pos


def read_image(path, bit_depth: int | None = None, geometry: ImageGeometry | None = None,
               pixels_per_waist: float = 64.0) -> PatternImage:
    """Read a binary PGM into intensities in [0, 1].

    ``bit_depth`` (8 or 16), if given, is an expectation the file's maxval must
    satisfy.  Geometry is not stored in the file: pass one, or get a centered
    geometry at ``pixels_per_waist``.
    """
    with open(path, "rb") as f:
        data = f.read()
    toks = []
    end = 0
    for tok, end in _header_tokens(data):
        toks.append(tok)
    if toks[0] != b"P5":
        raise PGMFormatError(f"bad magic {toks[0]!r}, expected b'P5'")
    try:
        width, height, maxval = (int(t) for t in toks[1:])
    except ValueError:
        raise PGMFormatError("non-integer width/height/maxval") from None
    if end >= len(data) or not data[end:end + 1].isspace():
        raise PGMFormatError("missing whitespace after maxval")
    if width <= 0 or height <= 0:
        raise PGMFormatError("non-positive image size")
    if not 0 < maxval < 65536:
        raise PGMFormatError(f"unsupported maxval {maxval}")
    if bit_depth is not None:
        if bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")
        if maxval > (1 << bit_depth) - 1:
            raise PGMFormatError(f"maxval {maxval} exceeds {bit_depth}-bit range")
    nbytes = 1 if maxval < 256 else 2
    payload = data[end + 1:]
    need = width * height * nbytes
    if len(payload) < need:
        raise PGMFormatError(f"truncated payload: {len(payload)} of {need} bytes")
    q = np.frombuffer(payload[:need], dtype=">u1" if nbytes == 1 else ">u2").reshape(height, width)
    if geometry is None:
        geometry = ImageGeometry.centered(width, height, pixels_per_waist)
    elif (geometry.width, geometry.height) != (width, height):
        raise ValueError("geometry does not match file dimensions")
    depth = bit_depth if bit_depth is not None else (8 if nbytes == 1 else 16)
    return PatternImage(geometry, q.astype(float) / maxval, depth)


def energy_fraction(image: PatternImage, r_max: float) -> float:
    r, _ = image.geometry.polar()
    total = image.pixels.sum()
    return float(image.pixels[r < r_max].sum() / total) if total > 0 else math.nan


__all__ = [
    "ImageGeometry", "PatternImage", "NoiseSpec", "render", "add_noise",
    "azimuthal_profile", "count_local_minima", "write_image", "read_image",
    "energy_fraction",
]
