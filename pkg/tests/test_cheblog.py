import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C
from scipy import integrate

from narrowescape import cheblog
from narrowescape.cheblog import ChebyshevDensity, SmoothBoundaryData
from narrowescape.errors import SingularKernel


def log_potential_oracle(n, x):
    """int ln|x - y| T_n(y)/sqrt(1-y^2) dy with y = cos(theta).

    Tanh-sinh quadrature on both sides of the log singularity at acos(x).
    """
    with mpmath.workdps(30):
        th0 = mpmath.acos(x)
        f = lambda th: mpmath.log(abs(x - mpmath.cos(th))) * mpmath.cos(n * th)
        return float(mpmath.quad(f, [0, th0, mpmath.pi]))


def cheb_u(k, y):
    """Second-kind U_k as T_{k+1}' / (k+1)."""
    return float(np.polynomial.Chebyshev.basis(k + 1).deriv()(y) / (k + 1))


def hilbert_oracle(g, x):
    """PV int sqrt(1-y^2) g(y)/(x - y) dy through the Cauchy-weight rule."""
    val, _ = integrate.quad(lambda y: math.sqrt(1.0 - y * y) * g(y), -1.0, 1.0,
                            weight="cauchy", wvar=x, epsabs=1e-13, limit=200)
    return -val


XS = [-0.83, -0.2, 0.0, 0.41, 0.77]


@pytest.mark.parametrize("x", XS)
def test_log_operator_on_basis_modes(x):
    assert log_potential_oracle(0, x) == pytest.approx(-math.pi * math.log(2.0), abs=1e-12)
    assert log_potential_oracle(1, x) == pytest.approx(-math.pi * x, abs=1e-12)
    assert log_potential_oracle(2, x) == pytest.approx(-0.5 * math.pi * (2 * x * x - 1), abs=1e-12)
    for n in range(5):
        phi = ChebyshevDensity(np.eye(5)[n])
        assert cheblog.apply_L(phi)(x) == pytest.approx(log_potential_oracle(n, x), abs=1e-11)


def test_inverse_of_constant():
    phi = cheblog.invert_L(SmoothBoundaryData.constant(1.0, 8))
    expected = np.zeros(9)
    expected[0] = -1.0 / (math.pi * math.log(2.0))
    np.testing.assert_allclose(phi.coeffs, expected, atol=1e-12)
    assert phi.mass == pytest.approx(-1.0 / math.log(2.0), abs=1e-12)
    x = np.array([-0.5, 0.1, 0.9])
    np.testing.assert_allclose(phi(x), -1.0 / (math.pi * math.log(2.0) * np.sqrt(1 - x * x)), rtol=1e-12)


def test_inverse_of_linear_data():
    psi = SmoothBoundaryData(np.array([0.0, 1.0]))
    x = np.array([-0.7, 0.3, 0.6])
    phi = cheblog.invert_L(psi)
    np.testing.assert_allclose(phi(x), -x / (math.pi * np.sqrt(1 - x * x)), rtol=1e-12)
    assert cheblog.carleman_constant(psi) == 0.0
    np.testing.assert_allclose(cheblog.carleman_constant(psi, x), 0.0, atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=33))
def test_apply_invert_identity(c):
    psi = SmoothBoundaryData(np.array(c))
    back = cheblog.apply_L(cheblog.invert_L(psi))
    np.testing.assert_allclose(back.coeffs, psi.coeffs, atol=1e-10)
    phi = ChebyshevDensity(np.array(c))
    np.testing.assert_allclose(cheblog.invert_L(cheblog.apply_L(phi)).coeffs, phi.coeffs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=12), st.floats(-0.95, 0.95))
def test_carleman_constant_is_pointwise_constant(c, x):
    psi = SmoothBoundaryData(np.array(c))
    assert cheblog.carleman_constant(psi, np.array([x])) == pytest.approx(c[0], abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=12), st.floats(-0.95, 0.95))
def test_pointwise_carleman_matches_spectral_inverse(c, x):
    psi = SmoothBoundaryData(np.array(c))
    assert cheblog.carleman_inverse(psi, x) == pytest.approx(cheblog.invert_L(psi)(x), abs=1e-9)


@pytest.mark.parametrize("x", XS)
def test_finite_hilbert(x):
    assert cheblog.finite_hilbert([1.0], x) == pytest.approx(math.pi * x, abs=1e-12)
    assert cheblog.finite_hilbert([0.0, 1.0], x) == pytest.approx(math.pi * (2 * x * x - 1), abs=1e-12)
    assert hilbert_oracle(lambda y: 1.0, x) == pytest.approx(math.pi * x, abs=1e-10)
    assert hilbert_oracle(lambda y: 2 * y, x) == pytest.approx(math.pi * (2 * x * x - 1), abs=1e-10)
    g = [0.3, -1.2, 0.5]
    u = lambda y: sum(gk * cheb_u(k, y) for k, gk in enumerate(g))
    assert cheblog.finite_hilbert(g, x) == pytest.approx(hilbert_oracle(u, x), abs=1e-9)


def test_mass_pairing_and_norm():
    phi = ChebyshevDensity(np.array([0.7, -0.2, 0.4]))
    psi = SmoothBoundaryData(np.array([1.5, 0.3, -0.8, 2.0]))
    assert cheblog.mass(phi) == pytest.approx(math.pi * 0.7)
    f = lambda th: phi(math.cos(th)) * math.sin(th) * psi(math.cos(th))
    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-13)
    assert cheblog.pairing(phi, psi) == pytest.approx(val, abs=1e-11)
    g = lambda th: (phi(math.cos(th)) * math.sin(th)) ** 2
    nrm, _ = integrate.quad(g, 0.0, math.pi, epsabs=1e-13)
    assert phi.norm() == pytest.approx(math.sqrt(nrm), rel=1e-11)


def test_density_serialization_and_algebra():
    phi = ChebyshevDensity(np.array([1.0, 2.0, 3.0]))
    assert ChebyshevDensity.from_json(phi.to_json()) == phi
    np.testing.assert_allclose((phi + phi * 2.0).coeffs, [3.0, 6.0, 9.0])
    r = phi.reversed()
    assert r(0.3) * math.sqrt(1 - 0.09) == pytest.approx(phi(-0.3) * math.sqrt(1 - 0.09))


def test_scaled_operator_inverse():
    eps = 0.01
    psi = SmoothBoundaryData(np.array([1.0, 0.2, -0.1]))
    phi = cheblog.invert_scaled_L(psi, eps)
    np.testing.assert_allclose(cheblog.apply_scaled_L(phi, eps).coeffs, psi.coeffs, atol=1e-12)
    unit = cheblog.invert_scaled_L(SmoothBoundaryData.constant(1.0), eps)
    assert unit.coeffs[0] == pytest.approx(1.0 / (math.pi * math.log(eps / 2.0)), rel=1e-12)


def test_shifted_kernel_against_quadrature():
    d = 4.0
    s = np.array([-0.9, 0.0, 0.6])
    k = cheblog.shifted_kernel_matrix(d, s, 3)
    for row, sk in zip(k, s):
        for n in range(4):
            f = lambda th: math.log(d + sk - math.cos(th)) * math.cos(n * th)
            val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-13, epsrel=1e-13)
            assert row[n] == pytest.approx(val, abs=1e-10)


def test_shifted_kernel_far_field():
    d = 1e6
    phi = ChebyshevDensity.constant_mode(1.0)
    val = cheblog.apply_shifted_L(d, phi)(0.3)
    assert val == pytest.approx(math.log(d) * phi.mass, abs=2e-6)


def test_shifted_kernel_rejects_overlap():
    with pytest.raises(SingularKernel):
        cheblog.shifted_kernel_matrix(1.5, np.array([-0.9]), 4)


def test_condition_number_grows_linearly():
    # extreme eigenvalues pi (mode 1) and pi/N (mode N)
    assert cheblog.condition_number(64) == pytest.approx(64.0, rel=1e-12)


def test_smooth_data_from_function():
    psi = SmoothBoundaryData.from_function(np.exp, 20)
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(psi(x), np.exp(x), atol=1e-14)
