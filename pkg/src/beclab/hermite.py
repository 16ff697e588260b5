"""Hermite spectral machinery for the transverse (z) direction.

Everything here lives in the frame of the unit-frequency oscillator
-d^2/dz^2 + z^2, whose orthonormal eigenfunctions phi_m satisfy
(-d^2/dz^2 + z^2) phi_m = (2m+1) phi_m.  The confined ground state at
frequency omega is obtained by the exact rescaling
h_omega(z) = omega^(1/4) h(omega^(1/2) z).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HermiteBasis",
    "ground_state",
    "hermite_function_table",
    "quartic_norm",
    "project",
    "project_tensor",
]


def ground_state(omega: float, z):
    """Ground state h_omega(z) = omega^(1/4) pi^(-1/4) exp(-omega z^2 / 2).

    Unit L^2 norm for every omega > 0.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return omega**0.25 * np.pi**-0.25 * np.exp(-0.5 * omega * np.asarray(z) ** 2)


def hermite_function_table(mode_count: int, z: np.ndarray) -> np.ndarray:
    """Values phi_m(z_q) of the orthonormal Hermite functions, shape (M, Q).

    Uses the stable three-term recurrence
    phi_{m+1} = sqrt(2/(m+1)) z phi_m - sqrt(m/(m+1)) phi_{m-1}.
    """
    z = np.asarray(z, dtype=float)
    table = np.zeros((mode_count, z.size))
    table[0] = np.pi**-0.25 * np.exp(-0.5 * z**2)
    if mode_count > 1:
        table[1] = np.sqrt(2.0) * z * table[0]
    for m in range(1, mode_count - 1):
        table[m + 1] = np.sqrt(2.0 / (m + 1)) * z * table[m] - np.sqrt(m / (m + 1)) * table[m - 1]
    return table


def _ladder_lower(coeffs: np.ndarray) -> np.ndarray:
    """a: coefficient action of the lowering operator (z + d/dz)/sqrt(2)."""
    out = np.zeros_like(coeffs)
    m = np.arange(1, coeffs.shape[0])
    out[:-1] = np.sqrt(m) * coeffs[1:]
    return out


def _ladder_raise(coeffs: np.ndarray) -> np.ndarray:
    """a^dagger: coefficient action of (z - d/dz)/sqrt(2)."""
    out = np.zeros_like(coeffs)
    m = np.arange(1, coeffs.shape[0])
    out[1:] = np.sqrt(m) * coeffs[:-1]
    return out


@dataclass(frozen=True)
class HermiteBasis:
    """Truncated eigenbasis of -d^2/dz^2 + z^2 with Gauss-Hermite quadrature.

    ``quadrature_nodes``/``quadrature_weights`` integrate plain dz-integrals:
    int f(z) dz ~= sum_q w_q f(z_q), exact when f(z) e^{z^2} is a polynomial
    of degree <= 2*len(nodes) - 1.  ``eigenfunction_table[m, q]`` holds
    phi_m(z_q).

    A second, square rule (``collocation_*``) with exactly M nodes backs the
    unitary coefficient <-> point-value transform used by the solvers;
    ``collocation_map`` is orthogonal, so diagonal point-space operations
    preserve the L^2 norm exactly.

    Immutable after construction; safe to share across threads.
    """

    mode_count: int = 12
    node_count: int | None = None
    quadrature_nodes: np.ndarray = field(init=False, repr=False)
    quadrature_weights: np.ndarray = field(init=False, repr=False)
    eigenfunction_table: np.ndarray = field(init=False, repr=False)
    collocation_nodes: np.ndarray = field(init=False, repr=False)
    collocation_weights: np.ndarray = field(init=False, repr=False)
    collocation_map: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("mode_count must be >= 1")
        nq = 2 * self.mode_count if self.node_count is None else self.node_count
        if nq < 1:
            raise ValueError("node_count must be >= 1")
        object.__setattr__(self, "node_count", nq)
        nodes, raw = np.polynomial.hermite.hermgauss(nq)
        object.__setattr__(self, "quadrature_nodes", nodes)
        object.__setattr__(self, "quadrature_weights", raw * np.exp(nodes**2))
        object.__setattr__(
            self, "eigenfunction_table", hermite_function_table(self.mode_count, nodes)
        )
        cn, craw = np.polynomial.hermite.hermgauss(self.mode_count)
        cw = craw * np.exp(cn**2)
        object.__setattr__(self, "collocation_nodes", cn)
        object.__setattr__(self, "collocation_weights", cw)
        # rows: nodes, cols: modes; orthogonal because the M-point rule is
        # exact on products of basis functions
        cmap = np.sqrt(cw)[:, None] * hermite_function_table(self.mode_count, cn).T
        object.__setattr__(self, "collocation_map", cmap)

    @property
    def eigenvalues(self) -> np.ndarray:
        return 2.0 * np.arange(self.mode_count) + 1.0

    def integrate(self, values_at_nodes) -> complex:
        """Quadrature for int f(z) dz given f sampled at ``quadrature_nodes``."""
        return np.tensordot(self.quadrature_weights, np.asarray(values_at_nodes), axes=(0, 0))

    def to_values(self, coeffs: np.ndarray, axis: int = 0) -> np.ndarray:
        """Coefficients -> weighted point values at the M collocation nodes."""
        return np.tensordot(self.collocation_map, np.moveaxis(coeffs, axis, 0), axes=(1, 0))

    def to_coeffs(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Inverse of :meth:`to_values`; exact for states in the truncated span."""
        return np.tensordot(self.collocation_map.T, np.moveaxis(values, axis, 0), axes=(1, 0))

    def point_amplitudes(self, coeffs: np.ndarray, axis: int = 0) -> np.ndarray:
        """Physical function values at the collocation nodes."""
        vals = self.to_values(coeffs, axis=axis)
        shape = [1] * vals.ndim
        shape[0] = -1
        return vals / np.sqrt(self.collocation_weights).reshape(shape)

    def second_derivative_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Exact d^2/dz^2 in coefficient space via ladder algebra.

        d/dz = (a - a^dagger)/sqrt(2), applied twice; no finite differences.
        """
        d = (_ladder_lower(coeffs) - _ladder_raise(coeffs)) / np.sqrt(2.0)
        return (_ladder_lower(d) - _ladder_raise(d)) / np.sqrt(2.0)

    def z_squared_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Exact multiplication by z^2 in coefficient space."""
        z1 = (_ladder_lower(coeffs) + _ladder_raise(coeffs)) / np.sqrt(2.0)
        return (_ladder_lower(z1) + _ladder_raise(z1)) / np.sqrt(2.0)

    def oscillator_residuals(self) -> np.ndarray:
        """Max-norm residual of (-d^2/dz^2 + z^2) phi_m = (2m+1) phi_m per mode.

        Evaluated at the quadrature nodes; the ladder algebra needs two guard
        modes above the truncation, handled with an extended table.
        """
        m_ext = self.mode_count + 2
        table = hermite_function_table(m_ext, self.quadrature_nodes)
        res = np.zeros(self.mode_count)
        for m in range(self.mode_count):
            c = np.zeros(m_ext)
            c[m] = 1.0
            d2 = (_ladder_lower(c) - _ladder_raise(c)) / np.sqrt(2.0)
            d2 = (_ladder_lower(d2) - _ladder_raise(d2)) / np.sqrt(2.0)
            z2 = (_ladder_lower(c) + _ladder_raise(c)) / np.sqrt(2.0)
            z2 = (_ladder_lower(z2) + _ladder_raise(z2)) / np.sqrt(2.0)
            applied = (-d2 + z2) @ table
            res[m] = np.max(np.abs(applied - (2 * m + 1) * table[m]))
        return res

    def gram_matrix(self) -> np.ndarray:
        """Discrete inner products <phi_m, phi_m'> under the quadrature rule."""
        wT = self.quadrature_weights * self.eigenfunction_table
        return wT @ self.eigenfunction_table.T


def quartic_norm(basis: HermiteBasis) -> float:
    """int |h_1(z)|^4 dz by Gauss-Hermite quadrature; closed form (2 pi)^(-1/2).

    Warns when the basis rule disagrees with a doubled-node rule by more
    than 1e-3 (under-resolved quadrature).
    """
    h = basis.eigenfunction_table[0]
    value = float(basis.integrate(h**4))
    fine_nodes, fine_raw = np.polynomial.hermite.hermgauss(2 * basis.node_count)
    fine = float(
        np.sum(fine_raw * np.exp(fine_nodes**2) * hermite_function_table(1, fine_nodes)[0] ** 4)
    )
    if abs(value - fine) > 1e-3:
        warnings.warn(
            f"quartic norm under-resolved: {basis.node_count} nodes give {value!r}, "
            f"doubled rule gives {fine!r}",
            stacklevel=2,
        )
    return value


def project(coeffs: np.ndarray, mode_class: int, axis: int = 0) -> np.ndarray:
    """P_0 (mode_class=0) keeps only the ground mode; P_1 removes it.

    Exact coefficient-level projections: P_0 + P_1 = identity,
    P_0 P_1 = 0, P_alpha^2 = P_alpha.
    """
    if mode_class not in (0, 1):
        raise ValueError(f"mode_class must be 0 or 1, got {mode_class}")
    out = np.array(coeffs, copy=True)
    sl = [slice(None)] * out.ndim
    if mode_class == 0:
        sl[axis] = slice(1, None)
    else:
        sl[axis] = slice(0, 1)
    out[tuple(sl)] = 0
    return out


def project_tensor(coeffs: np.ndarray, alpha, axes) -> np.ndarray:
    """Apply P_alpha = prod_j P^j_{alpha_j} to a multi-particle tensor.

    ``alpha`` is a 0/1 multi-index, ``axes`` the Hermite axis of each slot.
    Slot projections commute, so application order is irrelevant.
    """
    alpha = tuple(alpha)
    axes = tuple(axes)
    if len(alpha) != len(axes):
        raise ValueError("alpha and axes must have equal length")
    out = coeffs
    for a, ax in zip(alpha, axes):
        out = project(out, a, axis=ax)
    return out
