import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scipy import integrate

import oracles
from bridgelab.analytic import (ALPHA_MIN, avoidance_probability, bridge_density_U,
                                conditioned_avoidance, halfplane_poisson_kernel,
                                halfplane_poisson_kernel_from_infinity, integrated_strip_kernel,
                                one_point_phi_asymptotic, restriction_params, strip_kernel_asymptotic,
                                strip_kernel_exact, strip_map, strip_map_derivative,
                                two_point_phi_scale)
from bridgelab.types import GapLine


def test_halfplane_kernel():
    assert halfplane_poisson_kernel(1j, 0.0) == pytest.approx(1 / math.pi)
    # integrates to one over the boundary
    total, _ = integrate.quad(lambda x: halfplane_poisson_kernel(0.3 + 0.7j, x), -np.inf, np.inf)
    assert total == pytest.approx(1.0, rel=1e-8)
    y = 1e6
    assert y * halfplane_poisson_kernel(1j * y, 3.0) == pytest.approx(halfplane_poisson_kernel_from_infinity(3.0))
    with pytest.raises(ValueError):
        halfplane_poisson_kernel(1.0 + 0j, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.005, 0.5), st.floats(-6, 6), st.floats(0.01, 1.99))
def test_strip_map_lands_in_upper_half_plane(eps, x, y):
    if abs(y - 1) < 1e-9 and abs(x) >= eps:
        return
    assert strip_map(eps, complex(x, y)).imag > 0


def test_strip_map_boundary_and_special_points():
    eps = 0.1
    # sqrt(-w) near w = 0 turns rounding in w into ~1e-8
    assert abs(strip_map(eps, eps + 1j)) < 1e-7
    with pytest.raises(ZeroDivisionError):
        strip_map(eps, -eps + 1j)
    xs = np.linspace(-5, 5, 21)
    bottom = strip_map(eps, xs + 0j)
    top = strip_map(eps, xs + 2j)
    assert np.all(bottom.real < 0) and np.allclose(bottom.imag, 0)
    assert np.all(top.real > 0) and np.allclose(top.imag, 0)
    # real axis: one end to -1, the other grows; monotone
    assert strip_map(eps, 40 + 0j) == pytest.approx(-1.0)
    assert np.all(np.diff(bottom.real) > 0) or np.all(np.diff(bottom.real) < 0)
    with pytest.raises(ValueError):
        strip_map(0.0, 1j)


def test_strip_map_is_finite_far_out():
    vals = strip_map(0.05, np.array([-400 + 0j, 400 + 0j, -400 + 2j, 400 + 2j, 300 + 1.5j]))
    assert np.all(np.isfinite(vals))


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3])
@pytest.mark.parametrize("x", [-3.0, -0.4, 0.0, 0.7, 2.5])
def test_strip_derivative_matches_finite_difference(eps, x):
    fd = oracles.derivative_fd(lambda t: strip_map(eps, complex(t, 0.0)).real, x)
    assert strip_map_derivative(eps, x) == pytest.approx(abs(fd), rel=1e-4)


def test_strip_kernel_pointwise_asymptotics():
    eps = 0.01
    worst = 0.0
    for x in np.linspace(-2, 2, 17):
        for lam in np.linspace(-0.9, 0.9, 13):
            r = strip_kernel_exact(eps, lam, x) / strip_kernel_asymptotic(eps, lam, x)
            worst = max(worst, abs(r - 1))
    assert worst < 0.02
    with pytest.raises(ValueError):
        strip_kernel_exact(eps, 1.0, 0.0)
    with pytest.raises(ValueError):
        strip_kernel_asymptotic(eps, 1.5, 0.0)


def test_strip_kernel_mass_on_bottom_line():
    # the real axis maps onto [-e^{pi eps}, -1]; its harmonic measure seen from
    # f(z) is the angle it subtends divided by pi
    eps, lam = 0.2, 0.3
    f0 = strip_map(eps, complex(lam * eps, 1.0))
    expected = (np.angle(f0 + 1) - np.angle(f0 + math.exp(math.pi * eps))) / math.pi
    total, _ = integrate.quad(lambda x: strip_kernel_exact(eps, lam, x), -np.inf, np.inf,
                              epsrel=1e-10, limit=200)
    assert total == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("x", [-2.0, -1.0, 0.0, 0.5, 2.0])
def test_integrated_kernel_reproduces_density(x):
    eps = 0.01
    got = integrated_strip_kernel(eps, x)
    assert got / (bridge_density_U(complex(x, 1.0)) * eps ** 2) == pytest.approx(1.0, abs=0.03)
    asym = integrated_strip_kernel(eps, x, exact=False)
    assert asym == pytest.approx(bridge_density_U(complex(x, 1.0)) * eps ** 2, rel=1e-8)


def test_density_formula_and_scaling():
    assert bridge_density_U(1j) == pytest.approx(math.pi / 16)
    z = 0.3 + 1.7j
    for r in (0.5, 2.0, 7.0):
        assert bridge_density_U(r * z) == pytest.approx(bridge_density_U(z) / r ** 2)
    assert bridge_density_U(2 + 1j) < bridge_density_U(1j)
    with pytest.raises(ValueError):
        bridge_density_U(-1j)


def test_one_point_and_two_point_scales():
    g = GapLine(1j, 0.1)
    assert one_point_phi_asymptotic(g) == pytest.approx(math.pi / 16 * 0.01)
    with pytest.warns(UserWarning):
        one_point_phi_asymptotic(GapLine(1j, 0.5))
    v = two_point_phi_scale(2j, 1j, 0.1, 0.1)
    assert v == pytest.approx((math.pi / 16) ** 2 * 1e-4)
    with pytest.raises(ValueError):
        two_point_phi_scale(1j, 2j, 0.1, 0.1)


def test_restriction_params():
    p = restriction_params(5 / 8)
    assert p.kappa == pytest.approx(8 / 3)
    assert p.loop_intensity == pytest.approx(0.0)
    assert restriction_params(1.0).kappa == pytest.approx(2.0)
    with pytest.raises(ValueError):
        restriction_params(0.5)


def test_avoidance_probability():
    assert avoidance_probability(0.5, 1.0) == 0.5
    assert avoidance_probability(0.5, ALPHA_MIN) == pytest.approx(0.5 ** 0.625)
    with pytest.raises(ValueError):
        avoidance_probability(1.2, 1.0)
    with pytest.raises(ValueError):
        avoidance_probability(0.5, 0.4)


def test_conditioned_avoidance():
    v = conditioned_avoidance(0.8, 0.5, 0.6, 1.0)
    assert v == pytest.approx(0.3 / 0.4)
    with pytest.raises(ZeroDivisionError):
        conditioned_avoidance(0.8, 0.5, 1.0, 1.0)
    with pytest.warns(UserWarning):
        assert conditioned_avoidance(0.5, 0.8, 0.6, 1.0) == 0.0
    with pytest.raises(ValueError):
        conditioned_avoidance(1.5, 0.5, 0.5, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        conditioned_avoidance(0.9, 0.2, 0.1, 0.625)
