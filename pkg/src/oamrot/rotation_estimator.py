"""Rotation angle between two pattern images by correlation scanning.

The reference image is rotated through a grid of candidate angles and the
Pearson correlation with the target is recorded; the argmax is the rotation.
A ladder of ever finer steps (4.5, 0.45, 0.045, 0.0045 degrees by default)
re-centers a narrow scan window on the running best.

Angles here are in degrees and in the *pattern* sense: rotating by ``a`` maps
a pattern rendered at ``theta`` onto the one rendered at ``theta + a``, i.e.
``out(r, alpha) = in(r, alpha + a)``.  Because the bright lobes sit at
``alpha = -theta``, a positive angle turns features clockwise on screen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import AmbiguousPeak, DegenerateMask
from .pattern_image import PatternImage


@dataclass(frozen=True)
class CorrelationCurve:
    angles: np.ndarray
    scores: np.ndarray
    step: float

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        s = np.asarray(self.scores, dtype=float)
        if a.shape != s.shape:
            raise ValueError("angles and scores differ in length")
        if a.size > 1 and not np.allclose(np.diff(a), self.step, rtol=1e-9, atol=1e-9 * max(1.0, abs(a).max())):
            raise ValueError("angles must be a uniform grid with spacing = step")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "scores", s)

    @property
    def best_index(self) -> int:
        # np.argmax returns the first maximum: lowest-angle tie-break
        return int(np.argmax(self.scores))

    @property
    def best_angle(self) -> float:
        return float(self.angles[self.best_index])

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("angle_deg,score\n")
            for a, s in zip(self.angles, self.scores):
                f.write(f"{a:.10g},{s:.17g}\n")


@dataclass(frozen=True)
class EstimatorConfig:
    ladder: tuple = (4.5, 0.45, 0.045, 0.0045)
    window_halfwidth: float = 2.0
    mask_r_min: float = 0.25
    mask_r_max: float = 2.5
    refine: bool = False

    def __post_init__(self):
        lad = tuple(float(x) for x in self.ladder)
        if not lad or any(x <= 0 for x in lad) or any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("ladder must be non-empty, positive and strictly decreasing")
        if not self.mask_r_min < self.mask_r_max:
            raise ValueError("mask_r_min must be < mask_r_max")
        if self.window_halfwidth <= 0:
            raise ValueError("window_halfwidth must be positive")
        object.__setattr__(self, "ladder", lad)


@dataclass(frozen=True)
class RotationEstimate:
    angle: float
    peak_score: float
    curve_finest: CorrelationCurve
    stages: list = field(default_factory=list, repr=False)


def symmetry_period(l: int) -> float:
    return 180.0 / abs(l)


def principal_value(angle: float, l: int) -> float:
    """Reduce to the half-open period (-90/|l|, 90/|l|]."""
    P = symmetry_period(l)
    return P / 2 - math.fmod(math.fmod(P / 2 - angle, P) + P, P)


def annulus_mask(image: PatternImage, r_min: float, r_max: float) -> np.ndarray:
    return image.geometry.annulus(r_min, r_max)


def _source_coords(image: PatternImage, rows, cols, angle: float):
    g = image.geometry
    a = math.radians(angle)
    c, s = math.cos(a), math.sin(a)
    x = cols - g.center_x
    y = g.center_y - rows
    xs = x * c - y * s
    ys = x * s + y * c
    src_col = g.center_x + xs
    src_row = g.center_y - ys
    inside = (src_row >= 0) & (src_row <= g.height - 1) & (src_col >= 0) & (src_col <= g.width - 1)
    return src_row, src_col, inside


def _sample(image: PatternImage, rows, cols, angle: float):
    """Bilinear samples of ``rotate_image(image, angle)`` at the given pixels."""
    src_row, src_col, inside = _source_coords(image, rows, cols, angle)
    vals = ndimage.map_coordinates(image.pixels, [src_row, src_col], order=1, mode="nearest")
    if image.valid is not None:
        # a sample is valid only if its nearest source pixel is
        nr = np.clip(np.rint(src_row).astype(int), 0, image.geometry.height - 1)
        nc = np.clip(np.rint(src_col).astype(int), 0, image.geometry.width - 1)
        inside &= image.valid[nr, nc]
    return np.where(inside, vals, 0.0), inside


def rotate_image(image: PatternImage, angle: float) -> PatternImage:
    """Rotate about the optic axis by ``angle`` degrees (pattern sense).

    Pixels whose source falls outside the frame are set to 0 and flagged
    invalid.
    """
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    if angle == 0:
        return image
    rows, cols = np.indices(image.pixels.shape, dtype=float)
    vals, inside = _sample(image, rows.ravel(), cols.ravel(), angle)
    shape = image.pixels.shape
    valid = inside.reshape(shape)
    if image.valid is None and valid.all():
        valid = None
    return replace(image, pixels=np.maximum(vals.reshape(shape), 0.0), valid=valid)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2:
        raise DegenerateMask("fewer than two valid pixels in mask")
    # interpolation leaves ulp-level ripple on constant inputs
    for v in (x, y):
        if np.ptp(v) <= 1e-12 * np.abs(v).max():
            raise DegenerateMask("image is constant over the mask")
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = np.dot(xm, xm)
    syy = np.dot(ym, ym)
    return float(np.dot(xm, ym) / math.sqrt(sxx * syy))


def _combined_mask(a: PatternImage, b: PatternImage, mask) -> np.ndarray:
    m = np.ones(a.pixels.shape, bool) if mask is None else np.asarray(mask, bool)
    if m.shape != a.pixels.shape:
        raise ValueError("mask shape does not match images")
    if a.valid is not None:
        m = m & a.valid
    if b.valid is not None:
        m = m & b.valid
    return m


def correlation(a: PatternImage, b: PatternImage, mask=None) -> float:
    """Pearson correlation of two images over the valid part of ``mask``."""
    if a.geometry != b.geometry:
        raise ValueError("images have different geometry")
    m = _combined_mask(a, b, mask)
    return _pearson(a.pixels[m], b.pixels[m])


class _Scanner:
    """Holds the target's masked pixels so each candidate only resamples the mask."""

    def __init__(self, reference: PatternImage, target: PatternImage, mask):
        if reference.geometry != target.geometry:
            raise ValueError("images have different geometry")
        m = np.ones(target.pixels.shape, bool) if mask is None else np.asarray(mask, bool)
        if target.valid is not None:
            m = m & target.valid
        rows, cols = np.nonzero(m)
        self.reference = reference
        self.rows = rows.astype(float)
        self.cols = cols.astype(float)
        self.target_vals = target.pixels[rows, cols]
        if self.target_vals.size == 0:
            raise DegenerateMask("mask is empty")

    def score(self, angle: float) -> float:
        vals, inside = _sample(self.reference, self.rows, self.cols, angle)
        return _pearson(vals[inside], self.target_vals[inside])

    def curve(self, angles, step: float) -> CorrelationCurve:
        angles = np.asarray(angles, dtype=float)
        return CorrelationCurve(angles, np.array([self.score(a) for a in angles]), step)


def correlation_curve(reference: PatternImage, target: PatternImage, angles, mask=None) -> CorrelationCurve:
    """Correlation of the rotated reference against the target for each angle."""
    angles = np.asarray(angles, dtype=float)
    step = float(angles[1] - angles[0]) if angles.size > 1 else 0.0
    return _Scanner(reference, target, mask).curve(angles, step)


def _check_ambiguous(curve: CorrelationCurve, tol: float = 1e-6) -> None:
    s = curve.scores
    if s.size < 3:
        return
    peaks = np.sort(s[(s >= np.roll(s, 1)) & (s > np.roll(s, -1))])[::-1]
    if peaks.size >= 2 and peaks[0] - peaks[1] < tol:
        raise AmbiguousPeak(f"two correlation peaks within {tol:g} ({peaks[0]:.9f}, {peaks[1]:.9f})")


def estimate_rotation(reference: PatternImage, target: PatternImage,
                      config: EstimatorConfig = EstimatorConfig(), l: int = 2) -> RotationEstimate:
    """Coarse-to-fine correlation scan; angle returned as a principal value in degrees."""
    if l == 0:
        raise ValueError("l must be nonzero")
    mask = annulus_mask(target, config.mask_r_min, config.mask_r_max)
    scanner = _Scanner(reference, target, mask)
    P = symmetry_period(l)

    step = config.ladder[0]
    n = int(math.ceil(P / step - 1e-9))
    curve = scanner.curve(-P / 2 + step * np.arange(1, n + 1), step)
    _check_ambiguous(curve)
    stages = [curve]
    best = curve.best_angle

    for prev, step in zip(config.ladder, config.ladder[1:]):
        k = int(round(config.window_halfwidth * prev / step))
        curve = scanner.curve(best + step * np.arange(-k, k + 1), step)
        stages.append(curve)
        best = curve.best_angle

    peak = float(curve.scores.max())
    angle = best
    if config.refine:
        i = curve.best_index
        if 0 < i < curve.scores.size - 1:
            sm, s0, sp = curve.scores[i - 1:i + 2]
            denom = sm - 2 * s0 + sp
            if denom < 0:
                angle = best + 0.5 * (sm - sp) / denom * curve.step
                peak = max(peak, scanner.score(angle))
    return RotationEstimate(principal_value(angle, l), peak, curve, stages)


def unwrap_sequence(angles, l: int) -> list[float]:
    """Shift each angle by whole symmetry periods to keep steps below half a period.

    Assumes true consecutive rotations differ by less than 90/|l| degrees;
    otherwise the output is wrong but deterministic.
    """
    P = symmetry_period(l)
    out: list[float] = []
    for a in angles:
        a = float(a)
        if out:
            a -= P * round((a - out[-1]) / P)
        out.append(a)
    return out
