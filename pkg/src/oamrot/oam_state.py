"""Light state through the optical pipeline.

The beam is tracked as a two-term superposition of (polarization, OAM)
product states::

    a_L e^{i phi_L} |L>|l>  +  a_R e^{i phi_R} |R>|-l>

Circular birefringence in the vapor cell splits the two phases, and projecting
onto horizontal polarization leaves the scalar interference pattern
``cos(l (theta + alpha)) E(r)`` whose dark lines rotate by ``theta``.

Angles follow one convention everywhere: alpha is measured counter-clockwise
from +x with x to the right and y up.  Phases are kept unwrapped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

DEFAULT_WAVELENGTH_NM = 795.0

# Fraction of the normalized state transmitted by the horizontal polarizer.
# Only the pattern shape is modeled; detection throughput is not.
POST_SELECTION_EFFICIENCY = 0.5


@dataclass(frozen=True)
class HybridState:
    l: int
    phase_L: float = 0.0
    phase_R: float = 0.0
    amplitude_L: float = 1 / math.sqrt(2)
    amplitude_R: float = 1 / math.sqrt(2)

    def __post_init__(self):
        if int(self.l) != self.l or self.l == 0:
            raise ValueError(f"OAM number must be a nonzero integer, got {self.l!r}")
        if self.amplitude_L < 0 or self.amplitude_R < 0:
            raise ValueError("amplitudes must be non-negative")
        norm = self.amplitude_L**2 + self.amplitude_R**2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalized (|a|^2 sum = {norm})")

    @property
    def norm(self) -> float:
        return self.amplitude_L**2 + self.amplitude_R**2

    def coefficients(self) -> tuple[complex, complex]:
        """Complex coefficients on |L>|l> and |R>|-l>."""
        return (self.amplitude_L * np.exp(1j * self.phase_L),
                self.amplitude_R * np.exp(1j * self.phase_R))


@dataclass(frozen=True)
class BirefringenceSetting:
    n_L: float
    n_R: float
    d: float  # cm
    wavelength: float = DEFAULT_WAVELENGTH_NM  # nm

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("propagation length d must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")


def annular_profile(waist: float = 1.0) -> Callable[[int], Callable]:
    """Lowest radial-order ring amplitude ``(r/w)^|l| exp(-r^2/w^2)``.

    Returns a factory taking ``l`` so the ring radius follows the charge.
    """
    if waist <= 0:
        raise ValueError("waist must be positive")

    def for_charge(l):
        m = abs(int(l))

        def E(r):
            x = np.asarray(r, dtype=float) / waist
            return x**m * np.exp(-x * x)
        return E
    return for_charge


_DEFAULT_PROFILE = annular_profile(1.0)


@dataclass(frozen=True)
class ScalarPattern:
    """Horizontal-polarization field ``cos(l(theta + alpha)) E(r)``.

    ``profile`` maps radius (waist units) to the radial amplitude; when left
    as None the default single-ring mode for ``l`` is used.
    """
    l: int
    theta: float
    profile: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.l) != self.l or self.l == 0:
            raise ValueError(f"OAM number must be a nonzero integer, got {self.l!r}")

    def radial(self, r):
        E = self.profile if self.profile is not None else _DEFAULT_PROFILE(self.l)
        return E(r)


def initial_state(l: int) -> HybridState:
    """Balanced vector-beam state with zero relative phase."""
    return HybridState(l=l)


def phase_shift(setting: BirefringenceSetting) -> float:
    """Relative phase ``(2 pi / lambda)(n_L - n_R) d`` in radians."""
    d_m = setting.d * 1e-2
    lam_m = setting.wavelength * 1e-9
    return 2 * math.pi * (setting.n_L - setting.n_R) * d_m / lam_m


def apply_birefringence(state: HybridState, delta_phi: float) -> HybridState:
    return replace(state,
                   phase_L=state.phase_L + delta_phi / 2,
                   phase_R=state.phase_R - delta_phi / 2)


def project_horizontal(state: HybridState, profile: Callable | None = None) -> ScalarPattern:
    """Pattern left after the horizontal polarizer; rotation is dphi / 2l."""
    theta = (state.phase_L - state.phase_R) / (2 * state.l)
    return ScalarPattern(l=state.l, theta=theta, profile=profile)


def intensity_at(pattern: ScalarPattern, r, alpha):
    """``cos^2(l (theta + alpha)) |E(r)|^2``; broadcasts over arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    c = np.cos(pattern.l * (pattern.theta + np.asarray(alpha, dtype=float)))
    E = pattern.radial(r)
    out = c * c * E * E
    return float(out) if np.ndim(out) == 0 else out


def dark_line_angles(pattern: ScalarPattern) -> np.ndarray:
    """Azimuths in [0, 2 pi) of the 2|l| zeros of the pattern."""
    m = abs(pattern.l)
    k = np.arange(2 * m)
    # l(theta + alpha) = pi/2 + k pi
    alpha = (np.pi / 2 + k * np.pi) / pattern.l - pattern.theta
    return np.sort(np.mod(alpha, 2 * np.pi))
