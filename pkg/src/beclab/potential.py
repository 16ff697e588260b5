"""Interaction profiles and their (N, omega, beta) rescaling.

The scaled potential is
    V_{N,omega}(x, z) = N^{3 beta} omega^{(3 beta - 1)/2}
                        V((N sqrt(omega))^beta x, (N sqrt(omega))^beta z / sqrt(omega))
with x in R^2, z in R.  Its integral over R^3 equals int V for every
admissible (N, omega, beta); the x-width shrinks like (N sqrt(omega))^{-beta}
while the z-width grows like sqrt(omega) (N sqrt(omega))^{-beta}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import HermiteBasis, quartic_norm

__all__ = [
    "GaussianProfile",
    "SampledProfile",
    "ScaledPotential",
    "evaluate_scaled",
    "b0",
    "coupling_constant",
]

BETA_MAX = 0.4


@dataclass(frozen=True)
class GaussianProfile:
    """Isotropic Gaussian g exp(-|r|^2 / (2 sigma^2)); Schwartz and nonnegative."""

    g: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.sigma <= 0:
            raise ValueError("width must be positive")

    def __call__(self, x1, x2, z):
        r2 = np.asarray(x1) ** 2 + np.asarray(x2) ** 2 + np.asarray(z) ** 2
        return self.g * np.exp(-r2 / (2 * self.sigma**2))

    def integral(self) -> float:
        return self.g * (2 * np.pi) ** 1.5 * self.sigma**3

    def width(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class SampledProfile:
    """Profile sampled on a uniform cubic grid; integrated by the trapezoid rule.

    ``axis`` holds the (shared) 1D grid; ``values`` the samples with index
    order (x1, x2, z).  Values must be finite and nonnegative.
    """

    axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (axis.size,) * 3:
            raise ValueError("values must be cubic over the given axis")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled profile is not integrable: non-finite values")
        if np.any(values < 0):
            raise ValueError("sampled profile must be nonnegative")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)

    def __call__(self, x1, x2, z):
        # trilinear interpolation, zero outside the sampled box
        x1, x2, z = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float), np.asarray(z, float))
        a = self.axis
        h = a[1] - a[0]
        out = np.zeros(x1.shape)
        inside = (
            (x1 >= a[0]) & (x1 <= a[-1]) & (x2 >= a[0]) & (x2 <= a[-1]) & (z >= a[0]) & (z <= a[-1])
        )
        if not np.any(inside):
            return out
        coords = []
        for q in (x1, x2, z):
            t = np.clip((q[inside] - a[0]) / h, 0, a.size - 1 - 1e-12)
            i = t.astype(int)
            coords.append((i, t - i))
        acc = np.zeros(coords[0][0].shape)
        for b0_ in (0, 1):
            for b1 in (0, 1):
                for b2 in (0, 1):
                    w = (
                        (coords[0][1] if b0_ else 1 - coords[0][1])
                        * (coords[1][1] if b1 else 1 - coords[1][1])
                        * (coords[2][1] if b2 else 1 - coords[2][1])
                    )
                    acc += w * self.values[coords[0][0] + b0_, coords[1][0] + b1, coords[2][0] + b2]
        out[inside] = acc
        return out

    def integral(self) -> float:
        h = self.axis[1] - self.axis[0]
        v = self.values
        for _ in range(3):
            v = np.trapezoid(v, dx=h, axis=0)
        return float(v)

    def width(self) -> float:
        return float(self.axis[-1] - self.axis[0]) / 4


@dataclass(frozen=True)
class ScaledPotential:
    """A nonnegative profile together with the (N, omega, beta) scaling."""

    profile: GaussianProfile | SampledProfile
    beta: float
    N: int
    omega: float

    def __post_init__(self):
        if not 0 < self.beta < BETA_MAX:
            raise ValueError(f"beta must lie in (0, {BETA_MAX}), got {self.beta}")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.omega < 1:
            raise ValueError("omega must be >= 1")

    @property
    def x_scale(self) -> float:
        """Argument scale (N sqrt(omega))^beta applied to x."""
        return (self.N * np.sqrt(self.omega)) ** self.beta

    @property
    def z_scale(self) -> float:
        """Argument scale applied to z: (N sqrt(omega))^beta / sqrt(omega)."""
        return self.x_scale / np.sqrt(self.omega)

    @property
    def amplitude(self) -> float:
        return self.N ** (3 * self.beta) * self.omega ** ((3 * self.beta - 1) / 2)


def evaluate_scaled(p: ScaledPotential, r) -> np.ndarray:
    """V_{N,omega} at r = (x1, x2, z); broadcasts over array arguments."""
    x1, x2, z = r
    return p.amplitude * p.profile(p.x_scale * np.asarray(x1), p.x_scale * np.asarray(x2), p.z_scale * np.asarray(z))


def b0(p: ScaledPotential) -> float:
    """Total interaction mass int V(r) dr (scaling-invariant)."""
    return p.profile.integral()


def scaled_mass_quadrature(p: ScaledPotential, points_per_axis: int = 160, half_widths: float = 8.0) -> float:
    """int V_{N,omega} dr by a trapezoid rule adapted to the scaled widths.

    Independent of the closed form; used to check mass invariance.
    """
    w = p.profile.width() * half_widths
    ax_x = np.linspace(-w / p.x_scale, w / p.x_scale, points_per_axis)
    ax_z = np.linspace(-w / p.z_scale, w / p.z_scale, points_per_axis)
    X1, X2, Z = np.meshgrid(ax_x, ax_x, ax_z, indexing="ij")
    vals = evaluate_scaled(p, (X1, X2, Z))
    for dx in (ax_x[1] - ax_x[0], ax_x[1] - ax_x[0], ax_z[1] - ax_z[0]):
        vals = np.trapezoid(vals, dx=dx, axis=0)
    return float(vals)


def second_moments(p: ScaledPotential, points_per_axis: int = 160, half_widths: float = 8.0):
    """(int V_{N,omega} |x|^2 dr, int V_{N,omega} z^2 dr) by quadrature."""
    w = p.profile.width() * half_widths
    ax_x = np.linspace(-w / p.x_scale, w / p.x_scale, points_per_axis)
    ax_z = np.linspace(-w / p.z_scale, w / p.z_scale, points_per_axis)
    X1, X2, Z = np.meshgrid(ax_x, ax_x, ax_z, indexing="ij")
    vals = evaluate_scaled(p, (X1, X2, Z))
    out = []
    for moment in (X1**2 + X2**2, Z**2):
        v = vals * moment
        for dx in (ax_x[1] - ax_x[0], ax_x[1] - ax_x[0], ax_z[1] - ax_z[0]):
            v = np.trapezoid(v, dx=dx, axis=0)
        out.append(float(v))
    return tuple(out)


def coupling_constant(p: ScaledPotential, basis: HermiteBasis) -> float:
    """Limiting 2D coupling b0 * int |h_1|^4 dz (= 2 pi for the unit Gaussian)."""
    return b0(p) * quartic_norm(basis)
