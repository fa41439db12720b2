import math

import numpy as np
import pytest
import scipy.integrate as integrate
from hypothesis import given, settings, strategies as st

from fracpoisson import special
from fracpoisson.errors import DomainError


def test_gamma_half_integer_values():
    assert special.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert special.gamma(2.0) == pytest.approx(1.0, rel=1e-13)
    # recurrence: Gamma(2.5) = 1.5 * 0.5 * Gamma(0.5)
    assert special.gamma(2.5) == pytest.approx(1.5 * 0.5 * math.sqrt(math.pi), rel=1e-13)
    assert special.gamma(2.5) == pytest.approx(1.3293403881791370, rel=1e-12)


def test_gamma_domain_errors():
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(DomainError):
            special.gamma(bad)


def test_bessel_j_closed_forms():
    assert special.bessel_j(0, 0.0) == pytest.approx(1.0, abs=1e-15)
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x at x = pi/2
    assert special.bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, rel=1e-12)
    # J_1 at the first zero of J_0
    assert special.bessel_j(1, 2.4048255576957728) == pytest.approx(0.5191474972894669, rel=1e-10)


def test_bessel_j_domain_errors():
    with pytest.raises(DomainError):
        special.bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        special.bessel_j(11.0, 1.0)
    with pytest.raises(DomainError):
        special.bessel_j(1.0, -0.5)
    with pytest.raises(DomainError):
        special.bessel_j(1.0, 2e5)


@given(nu=st.floats(0.5, 8.4), x=st.floats(0.1, 80.0))
@settings(max_examples=200, deadline=None)
def test_bessel_j_recurrence(nu, x):
    # J_{nu-1}(x) + J_{nu+1}(x) = (2 nu / x) J_nu(x)
    lhs = special.bessel_j(nu - 0.5, x) + special.bessel_j(nu + 1.5, x)
    rhs = 2.0 * (nu + 0.5) / x * special.bessel_j(nu + 0.5, x)
    scale = max(abs(lhs), abs(rhs), 1e-3)
    assert abs(lhs - rhs) <= 1e-9 * scale


def test_bessel_k_half_order_closed_form():
    # K_{1/2}(x) = sqrt(pi/(2x)) exp(-x)
    assert special.bessel_k(0.5, 1.0) == pytest.approx(
        math.sqrt(math.pi / 2.0) * math.exp(-1.0), rel=1e-12)


def test_bessel_k_integral_representation():
    # K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt
    def oracle(nu, x):
        val, _ = integrate.quad(lambda t: math.exp(-x * math.cosh(t)) * math.cosh(nu * t),
                                0.0, 40.0, limit=300, epsabs=1e-14, epsrel=1e-13)
        return val

    assert special.bessel_k(0.25, 2.0) == pytest.approx(oracle(0.25, 2.0), rel=1e-10)
    assert special.bessel_k(0.75, 0.5) == pytest.approx(oracle(0.75, 0.5), rel=1e-10)


@given(nu=st.floats(0.05, 0.95), x=st.floats(0.05, 20.0), factor=st.floats(1.05, 3.0))
@settings(max_examples=150, deadline=None)
def test_bessel_k_positive_and_decreasing(nu, x, factor):
    a = special.bessel_k(nu, x)
    b = special.bessel_k(nu, x * factor)
    assert a > 0.0
    assert b < a


def test_bessel_k_domain_errors():
    with pytest.raises(DomainError):
        special.bessel_k(0.5, 0.0)
    with pytest.raises(DomainError):
        special.bessel_k(1.5, 1.0)


def test_j0_zeros_first_and_spacing():
    table = special.bessel_j0_zeros(1000)
    assert table.count == 1000
    assert table.zeros[0] == pytest.approx(2.4048255576957728, abs=1e-10)
    # spacing approaches pi
    assert table.zeros[999] - table.zeros[998] == pytest.approx(math.pi, abs=1e-6)
    assert np.all(np.diff(table.zeros) > 0)


def test_j0_zeros_are_zeros():
    table = special.bessel_j0_zeros(200)
    import scipy.special as sp
    assert np.max(np.abs(sp.j0(table.zeros))) < 1e-12


def test_j0_zeros_against_scipy():
    import scipy.special as sp
    table = special.bessel_j0_zeros(50)
    assert np.allclose(table.zeros, sp.jn_zeros(0, 50), rtol=0, atol=5e-12)


def test_j0_zeros_domain_error():
    with pytest.raises(DomainError):
        special.bessel_j0_zeros(0)
