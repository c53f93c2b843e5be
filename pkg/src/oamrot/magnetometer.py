"""From measured pattern rotation to magnetic field.

Inversion is restricted to the monotone weak-field branch of the dispersion
curve, ``(-B_mono, B_mono)`` with ``B_mono`` the first positive extremum.
Uncertainties are first-order propagation of a fixed angular accuracy.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import InsensitiveOperatingPoint, OutsideMonotoneBranch
from .nmor_model import DEFAULT_MEDIUM, MediumParams, monotone_limit, rotation_angle, weak_field_slope

DEFAULT_ANGLE_ACCURACY = 0.045  # degrees
FD_STEP = 1e-4  # Gauss


@dataclass(frozen=True)
class CalibrationResult:
    B_background: float
    uncertainty: float
    method: str
    residual: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if not self.uncertainty >= 0:
            raise ValueError("uncertainty must be non-negative")

    def to_text(self) -> str:
        """Flat ``key = value`` report."""
        lines = [
            f"method = {self.method}",
            f"B_background_gauss = {self.B_background:.10g}",
            f"uncertainty_gauss = {self.uncertainty:.10g}",
        ]
        if self.residual is not None:
            lines.append(f"residual_rms_deg = {self.residual:.10g}")
        if self.scale is not None:
            lines.append(f"scale = {self.scale:.10g}")
        return "\n".join(lines) + "\n"


@dataclass
class FieldSweepRecord:
    coil_gauss: np.ndarray
    theta_deg: np.ndarray

    def __post_init__(self):
        self.coil_gauss = np.asarray(self.coil_gauss, dtype=float)
        self.theta_deg = np.asarray(self.theta_deg, dtype=float)
        if self.coil_gauss.shape != self.theta_deg.shape or self.coil_gauss.ndim != 1:
            raise ValueError("coil and theta columns must be 1-D and the same length")

    def __len__(self):
        return self.coil_gauss.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["coil_gauss", "theta_deg"])
            for b, t in zip(self.coil_gauss, self.theta_deg):
                w.writerow([repr(float(b)), repr(float(t))])

    @classmethod
    def from_csv(cls, path) -> "FieldSweepRecord":
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        if rows and set(rows[0]) != {"coil_gauss", "theta_deg"}:
            raise ValueError("sweep CSV must have header 'coil_gauss,theta_deg'")
        return cls([float(r["coil_gauss"]) for r in rows], [float(r["theta_deg"]) for r in rows])


def _slope_deg(params: MediumParams, B: float, h: float = FD_STEP) -> float:
    return math.degrees((rotation_angle(B + h, params) - rotation_angle(B - h, params)) / (2 * h))


def invert_theta(theta: float, params: MediumParams = DEFAULT_MEDIUM, b_mono: float | None = None) -> float:
    """Field (Gauss) on the monotone branch whose rotation is ``theta`` radians."""
    if b_mono is None:
        b_mono = monotone_limit(params)
    th_edge = rotation_angle(b_mono, params)
    if not abs(theta) < abs(th_edge):
        raise OutsideMonotoneBranch(
            f"|theta| = {abs(theta):.6g} rad >= branch limit {abs(th_edge):.6g} rad at B = {b_mono:.6g} G")
    if theta == 0:
        return 0.0
    return optimize.brentq(lambda b: rotation_angle(b, params) - theta, -b_mono, b_mono,
                           xtol=1e-10, rtol=4 * np.finfo(float).eps)


def precision(angle_accuracy: float, params: MediumParams = DEFAULT_MEDIUM, at_B: float = 0.0,
              b_mono: float | None = None) -> float:
    """Field resolution (Gauss) for a given angular accuracy (degrees) at ``at_B``."""
    if b_mono is None:
        b_mono = monotone_limit(params)
    if not abs(at_B) < b_mono:
        raise InsensitiveOperatingPoint(f"B = {at_B} G is not inside the monotone branch (|B| < {b_mono:.6g} G)")
    slope = abs(_slope_deg(params, at_B))
    if slope < 1e-12:
        raise InsensitiveOperatingPoint(f"d(theta)/dB = {slope:.3g} deg/G at B = {at_B} G")
    return angle_accuracy / slope


def calibrate_offset(theta_at_zero_current: float, params: MediumParams = DEFAULT_MEDIUM,
                     method: str = "offset_slope", slope_override: float | None = None,
                     angle_accuracy: float = DEFAULT_ANGLE_ACCURACY) -> CalibrationResult:
    """Background field from the pattern angle (degrees) seen at zero coil current.

    The sign follows the offset angle: a positive offset gives a positive
    field whatever the sign of the model slope.
    """
    if method == "offset_slope":
        slope = abs(slope_override) if slope_override is not None else abs(weak_field_slope(params))
        B = theta_at_zero_current / slope
        if slope_override is not None:
            unc = angle_accuracy / slope
        else:
            unc = precision(angle_accuracy, params, B)
    elif method == "full_inversion":
        if slope_override is not None:
            raise ValueError("slope_override only applies to the offset_slope method")
        orient = math.copysign(1.0, weak_field_slope(params))
        b_mono = monotone_limit(params)
        B = invert_theta(orient * math.radians(theta_at_zero_current), params, b_mono)
        unc = precision(angle_accuracy, params, B, b_mono)
    else:
        raise ValueError(f"unknown calibration method {method!r}")
    return CalibrationResult(B, unc, method)


def _profile_fit(coil, meas, B0, params):
    """Best scale and sum of squared residuals for one trial center."""
    model = np.degrees(rotation_angle(coil - B0, params))
    mm = np.dot(model, model)
    s = float(np.dot(model, meas) / mm) if mm > 0 else 0.0
    r = meas - s * model
    return s, float(np.dot(r, r))


def fit_symmetry_center(data: FieldSweepRecord, params: MediumParams = DEFAULT_MEDIUM,
                        n_grid: int = 401) -> CalibrationResult:
    """Least-squares center ``B0`` of a measured dispersion curve.

    Fits ``theta_i ~ s * theta_model(coil_i - B0)`` with the scale ``s``
    solved in closed form per trial ``B0``; ``B0`` comes from a grid scan over
    the coil range followed by golden-section refinement.  The uncertainty is
    taken from the curvature of the profiled loss.
    """
    coil, meas = data.coil_gauss, data.theta_deg
    if len(data) < 5:
        raise ValueError("symmetry fit needs at least 5 points")
    if np.ptp(meas) == 0:
        raise ValueError("degenerate sweep: all angles equal")

    def loss(b0):
        return _profile_fit(coil, meas, b0, params)[1]

    lo, hi = coil.min(), coil.max()
    grid = np.linspace(lo, hi, n_grid)
    L = np.array([loss(b) for b in grid])
    i = int(np.argmin(L))
    if 0 < i < n_grid - 1:
        res = optimize.minimize_scalar(loss, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                       method="golden", options={"xtol": 1e-12})
        B0 = float(res.x)
    else:
        B0 = float(grid[i])
    s, sse = _profile_fit(coil, meas, B0, params)
    n = coil.size
    rms = math.sqrt(sse / n)

    # var(B0) ~ 2 sigma^2 / L''(B0), sigma^2 from residuals with 2 fitted params
    h = max(1e-4, 1e-3 * (hi - lo))
    curv = (loss(B0 + h) - 2 * loss(B0) + loss(B0 - h)) / (h * h)
    sigma2 = sse / (n - 2)
    unc = math.sqrt(2 * sigma2 / curv) if curv > 0 else math.inf
    return CalibrationResult(B0, unc, "symmetry_fit", residual=rms, scale=s)
