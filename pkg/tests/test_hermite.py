import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beclab.hermite import (
    HermiteBasis,
    ground_state,
    hermite_function_table,
    project,
    project_tensor,
    quartic_norm,
)

PI = np.pi


def test_ground_state_closed_forms():
    # pi^(-1/2) exp(-z^2) integrates to one, so h(0) = pi^(-1/4)
    assert ground_state(1.0, 0.0) == pytest.approx(PI**-0.25, abs=1e-12)
    # scaling rule omega^(1/4) h(sqrt(omega) z) at omega = 4
    assert ground_state(4.0, 0.0) == pytest.approx(np.sqrt(2) * PI**-0.25, abs=1e-12)
    z = np.linspace(-1, 1, 5)
    assert np.allclose(ground_state(4.0, z), 4**0.25 * ground_state(1.0, 2 * z))


def test_ground_state_unit_mass(basis12):
    for omega in (1.0, 4.0, 9.0):
        vals = ground_state(omega, basis12.quadrature_nodes / np.sqrt(omega))
        # substitute u = sqrt(omega) z to keep the integrand resolved
        mass = basis12.integrate(np.abs(vals) ** 2) / np.sqrt(omega)
        assert mass == pytest.approx(1.0, abs=1e-10)


def test_ground_state_rejects_bad_omega():
    with pytest.raises(ValueError):
        ground_state(0.0, 0.0)
    with pytest.raises(ValueError):
        ground_state(-2.0, 1.0)


def test_quartic_norm_closed_form(basis12):
    assert quartic_norm(basis12) == pytest.approx((2 * PI) ** -0.5, abs=1e-10)


def test_quartic_norm_under_resolved_flag():
    coarse = HermiteBasis(mode_count=1, node_count=2)
    with pytest.warns(UserWarning, match="under-resolved"):
        val = quartic_norm(coarse)
    assert abs(val - (2 * PI) ** -0.5) > 1e-3


def test_quartic_norm_rescaled(basis12):
    # int |h_omega|^4 dz = sqrt(omega) (2 pi)^(-1/2), checked on a plain grid
    omega = 4.0
    z = np.linspace(-8, 8, 4001)
    val = np.trapezoid(ground_state(omega, z) ** 4, z)
    assert val == pytest.approx(np.sqrt(omega) * (2 * PI) ** -0.5, abs=1e-8)


def test_discrete_orthonormality(basis12):
    gram = basis12.gram_matrix()
    assert np.max(np.abs(gram - np.eye(basis12.mode_count))) <= 1e-12


def test_eigen_relation_residual(basis12):
    assert basis12.oscillator_residuals().max() <= 1e-8


def test_virial_identity(basis12):
    # <phi_m, z^2 phi_m> = (2m+1)/2, exact under the quadrature rule
    table = basis12.eigenfunction_table
    w = basis12.quadrature_weights
    for m in range(basis12.mode_count // 2):
        val = np.sum(w * basis12.quadrature_nodes**2 * table[m] ** 2)
        assert abs(val - (2 * m + 1) / 2) <= 1e-10


def test_project_examples():
    e0 = np.array([1, 0, 0, 0], dtype=complex)
    assert np.array_equal(project(e0, 0), e0)
    assert np.array_equal(project(e0, 1), np.zeros(4))
    with pytest.raises(ValueError):
        project(e0, 2)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False), min_size=1, max_size=16))
def test_projections_resolve_identity(coeffs):
    c = np.array(coeffs)
    assert np.allclose(project(c, 0) + project(c, 1), c)
    for a in (0, 1):
        assert np.array_equal(project(project(c, a), a), project(c, a))
    assert not project(project(c, 0), 1).any()


@settings(deadline=None)
@given(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1), st.randoms())
def test_tensor_projections_commute(a1, a2, a3, pyrandom):
    rng = np.random.default_rng(pyrandom.randint(0, 2**32))
    t = rng.standard_normal((3, 3, 3)) + 1j * rng.standard_normal((3, 3, 3))
    alpha = (a1, a2, a3)
    axes = (0, 1, 2)
    order = [0, 1, 2]
    pyrandom.shuffle(order)
    direct = project_tensor(t, alpha, axes)
    shuffled = project_tensor(t, [alpha[i] for i in order], [axes[i] for i in order])
    assert np.max(np.abs(direct - shuffled)) <= 1e-14


def test_collocation_round_trip(basis12, rng):
    c = rng.standard_normal(basis12.mode_count) + 1j * rng.standard_normal(basis12.mode_count)
    back = basis12.to_coeffs(basis12.to_values(c))
    assert np.max(np.abs(back - c)) <= 1e-12


def test_ladder_second_derivative_matches_eigenvalue(basis12):
    # (-d^2/dz^2 + z^2) phi_m = (2m+1) phi_m in coefficient space
    M = basis12.mode_count
    for m in range(M - 2):
        c = np.zeros(M)
        c[m] = 1.0
        applied = -basis12.second_derivative_coeffs(c) + basis12.z_squared_coeffs(c)
        expected = (2 * m + 1) * c
        assert np.max(np.abs(applied - expected)) <= 1e-12


def test_table_against_explicit_low_modes():
    z = np.linspace(-2, 2, 9)
    table = hermite_function_table(3, z)
    phi0 = PI**-0.25 * np.exp(-(z**2) / 2)
    phi1 = np.sqrt(2) * z * phi0
    phi2 = (2 * z**2 - 1) / np.sqrt(2) * phi0
    assert np.allclose(table[0], phi0)
    assert np.allclose(table[1], phi1)
    assert np.allclose(table[2], phi2)
