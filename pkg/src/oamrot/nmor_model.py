"""Nonlinear magneto-optical rotation of the pattern versus longitudinal field.

The rotation angle is a rational function of the Larmor frequency::

    theta = 6 Gamma W d / (l D d0) * { 8W^2 [8W^2 + Gamma^2(k+2) - 8 Delta^2]
                                      + gamma [4 gamma (Gamma^2 - 4 Delta^2)
                                               - Gamma^3 k (k+2)] }

    D = 8W^2 [32 Gamma^2 (k+3)(W^2 + Delta^2) + 192 (Delta^2 - W^2)^2
              + Gamma^4 (k+2)(k+6)]
        + 2 gamma^2 [Gamma^2 (k+2)^2 + 16 Delta^2][Gamma^2 (k+3) + 12 Delta^2]

with W the Larmor frequency and k the optical-pumping saturation parameter.
All rates are in MHz, lengths in cm, fields in Gauss.  The expression is
evaluated literally (no sign flip), so with the default parameters the
weak-field slope is negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import NoCrossing

DEFAULT_B_MAX = 1000.0  # Gauss


@dataclass(frozen=True)
class MediumParams:
    Gamma: float = 266.0        # MHz, absorption line width
    gamma: float = 0.004 * 266.0  # MHz, transit relaxation rate
    kappa2: float = 3.3
    Delta: float = 0.0          # MHz, detuning
    d: float = 5.0              # cm, cell length
    d0: float = 0.5             # cm, unsaturated absorption length
    l: int = 2
    larmor_coeff: float = 0.7   # MHz / Gauss

    def __post_init__(self):
        for name in ("Gamma", "gamma", "d", "d0", "larmor_coeff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not self.kappa2 >= 0:
            raise ValueError("kappa2 must be non-negative")
        if not math.isfinite(self.Delta):
            raise ValueError("Delta must be finite")
        if int(self.l) != self.l or self.l == 0:
            raise ValueError(f"l must be a nonzero integer, got {self.l!r}")

    @classmethod
    def with_gamma_ratio(cls, ratio: float = 0.004, **kw) -> "MediumParams":
        """Build params with gamma given as a fraction of Gamma."""
        Gamma = kw.pop("Gamma", cls.Gamma)
        return cls(Gamma=Gamma, gamma=ratio * Gamma, **kw)

    @property
    def rabi_frequency(self) -> float:
        """Optical Rabi frequency implied by kappa2 = Omega_R^2 / (Gamma gamma)."""
        return math.sqrt(self.kappa2 * self.Gamma * self.gamma)

    def replace(self, **kw) -> "MediumParams":
        return replace(self, **kw)


DEFAULT_MEDIUM = MediumParams()


@dataclass(frozen=True)
class DispersionSample:
    B: float
    theta: float

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


def larmor_frequency(B, params: MediumParams = DEFAULT_MEDIUM):
    """Signed Larmor frequency in MHz."""
    if np.ndim(B):
        return params.larmor_coeff * np.asarray(B, dtype=float)
    return params.larmor_coeff * B


def _scaled_terms(w, p: MediumParams):
    # Everything in units of Gamma; the Gamma^4 / Gamma^6 factors cancel.
    g = p.gamma / p.Gamma
    dl = p.Delta / p.Gamma
    k = p.kappa2
    w2 = w * w
    num = 8 * w2 * (8 * w2 + (k + 2) - 8 * dl * dl) + g * (4 * g * (1 - 4 * dl * dl) - k * (k + 2))
    den = (8 * w2 * (32 * (k + 3) * (w2 + dl * dl) + 192 * (dl * dl - w2) ** 2 + (k + 2) * (k + 6))
           + 2 * g * g * ((k + 2) ** 2 + 16 * dl * dl) * ((k + 3) + 12 * dl * dl))
    return num, den


def rotation_angle(B, params: MediumParams = DEFAULT_MEDIUM):
    """Pattern rotation angle in radians; accepts scalars or arrays of Gauss."""
    w = params.larmor_coeff * np.asarray(B, dtype=float) / params.Gamma
    num, den = _scaled_terms(w, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = 6 * w * params.d * num / (params.l * params.d0 * den)
    if not np.all(np.isfinite(theta)):
        raise FloatingPointError("rotation angle is not finite for these parameters")
    return float(theta) if theta.ndim == 0 else theta


def weak_field_slope(params: MediumParams = DEFAULT_MEDIUM) -> float:
    """Limit of d(theta)/dB at B = 0, in degrees per Gauss (signed)."""
    num0, den0 = _scaled_terms(0.0, params)
    rad_per_gauss = 6 * params.d * params.larmor_coeff * num0 / (params.l * params.d0 * den0 * params.Gamma)
    return math.degrees(rad_per_gauss)


def _quadratic_crossing(p: MediumParams) -> float | None:
    # numerator = 0 at Delta = 0 is 64 x^2 + 8 G^2 (k+2) x - (g G^3 k(k+2) - 4 g^2 G^2) = 0, x = W^2
    G, g, k = p.Gamma, p.gamma, p.kappa2
    a = 64.0
    b = 8 * G * G * (k + 2)
    c = -(g * G**3 * k * (k + 2) - 4 * g * g * G * G)
    if c >= 0:
        return None
    # stable form of the positive root
    x = 2 * c / (-b - math.sqrt(b * b - 4 * a * c))
    return math.sqrt(x) / p.larmor_coeff


def _log_grid(b_max: float, n: int) -> np.ndarray:
    return np.geomspace(b_max * 1e-7, b_max, n)


def find_zero_crossing(params: MediumParams = DEFAULT_MEDIUM, b_max: float = DEFAULT_B_MAX,
                       method: str = "auto") -> float:
    """Smallest positive field where the rotation changes sign.

    ``method`` is ``"quadratic"`` (closed form, zero detuning only),
    ``"bracket"`` (grid scan + Brent) or ``"auto"``.
    """
    if method not in ("auto", "quadratic", "bracket"):
        raise ValueError(f"unknown method {method!r}")
    if method == "quadratic" or (method == "auto" and params.Delta == 0):
        if params.Delta != 0:
            raise ValueError("closed-form crossing requires Delta = 0")
        B = _quadratic_crossing(params)
        if B is None or B > b_max:
            raise NoCrossing(f"no crossing in (0, {b_max}] G")
        return B

    grid = _log_grid(b_max, 4000)
    th = rotation_angle(grid, params)
    s = np.sign(th)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        raise NoCrossing(f"no crossing in (0, {b_max}] G")
    i = idx[0]
    return optimize.brentq(lambda b: rotation_angle(b, params), grid[i], grid[i + 1],
                           xtol=1e-10, rtol=4 * np.finfo(float).eps)


def find_extrema(params: MediumParams = DEFAULT_MEDIUM, b_max: float = DEFAULT_B_MAX,
                 n_grid: int = 4000) -> list[tuple[float, float]]:
    """Stationary points of theta(B) on (0, b_max], ascending in B.

    Candidates come from sign changes of a finite-difference derivative on a
    log-spaced grid and are then refined by golden-section search.  Negative
    field extrema are the mirror images (theta is odd).
    """
    grid = _log_grid(b_max, n_grid)
    th = rotation_angle(grid, params)
    dth = np.diff(th)
    s = np.sign(dth)
    out = []
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        # grid[i+1] is the sampled extremum; flip sign so it's a minimum
        sgn = -1.0 if dth[i] > 0 else 1.0
        res = optimize.minimize_scalar(lambda b: sgn * rotation_angle(b, params),
                                       bracket=(grid[i], grid[i + 1], grid[i + 2]),
                                       method="golden", options={"xtol": 1e-12})
        b = float(res.x)
        out.append((b, rotation_angle(b, params)))
    return out


def monotone_limit(params: MediumParams = DEFAULT_MEDIUM, b_max: float = DEFAULT_B_MAX) -> float:
    """Location of the first positive extremum (edge of the invertible branch)."""
    ext = find_extrema(params, b_max)
    if not ext:
        return b_max
    return ext[0][0]


def sweep(params: MediumParams, B_values) -> list[DispersionSample]:
    B = np.asarray(list(B_values), dtype=float)
    th = rotation_angle(B, params) if B.size else np.empty(0)
    return [DispersionSample(float(b), float(t)) for b, t in zip(B, np.atleast_1d(th))]
