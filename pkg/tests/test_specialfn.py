import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonate import specialfn
from resonate.errors import DomainError

# scipy.special.ellipk(k^2) / ellipj(u, k^2), frozen
K_ORACLE = {0.1: 1.5747455615173558, 0.5: 1.685750354812596, 0.9: 2.2805491384227703,
            0.99: 3.3566005233611915}
JACOBI_ORACLE = {
    (0.7, 0.8): (0.6187556489525453, 0.7855835072666142, 0.8688903993077385),
    (2.3, 0.5): (0.8577670130602737, -0.5140386671308455, 0.9033598052970992),
    (-1.1, 0.95): (-0.8102898213541442, 0.586029355416492, 0.6383149229670312),
}
# 2 pi / T(r) with T from quadrature of the Duffing period integral (theta = 1/4), frozen
OMEGA_ORACLE = {0.5: 0.9754270912944653, 1.0: 0.8818998834812424, 1.3: 0.727417856349356}


def test_K_at_zero():
    assert abs(specialfn.complete_elliptic_K(0.0) - math.pi / 2) < 1e-12


@pytest.mark.parametrize("k,ref", sorted(K_ORACLE.items()))
def test_K_matches_oracle(k, ref):
    assert abs(specialfn.complete_elliptic_K(k) - ref) < 1e-12 * ref


@pytest.mark.parametrize("args,ref", sorted(JACOBI_ORACLE.items()))
def test_jacobi_matches_oracle(args, ref):
    got = specialfn.jacobi(*args)
    assert np.allclose(got, ref, atol=1e-12, rtol=0)


def test_jacobi_limits():
    u = np.linspace(-3, 3, 31)
    sn, cn, dn = specialfn.jacobi(u, 0.0)
    assert np.allclose(sn, np.sin(u), atol=1e-14) and np.allclose(dn, 1.0)
    sn, cn, dn = specialfn.jacobi(0.0, 0.7)
    assert (sn, cn, dn) == (0.0, 1.0, 1.0)


def test_bad_modulus():
    with pytest.raises(DomainError):
        specialfn.complete_elliptic_K(1.0)
    with pytest.raises(DomainError):
        specialfn.jacobi(0.3, -0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(0.0, 0.999))
def test_jacobi_identities(u, k):
    sn, cn, dn = specialfn.jacobi(u, k)
    assert abs(sn * sn + cn * cn - 1) < 1e-10
    assert abs(dn * dn + k * k * sn * sn - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.99))
def test_jacobi_quarter_period(k):
    K = specialfn.complete_elliptic_K(k)
    sn, cn, dn = specialfn.jacobi(K, k)
    assert abs(sn - 1) < 1e-10 and abs(cn) < 1e-7 and abs(dn - math.sqrt(1 - k * k)) < 1e-9


@pytest.mark.parametrize("r,ref", sorted(OMEGA_ORACLE.items()))
def test_duffing_omega_matches_quadrature(r, ref):
    assert abs(specialfn.duffing_omega(r, 0.25) - ref) < 1e-12


def test_omega_small_theta_series():
    th = 0.01
    for r in (0.2, 0.5, 0.8):
        series = 1 - 3 * th * r * r / 8 - 35 * th * th * r**4 / 256
        assert abs(specialfn.duffing_omega(r, th) - series) < 1e-5


def test_omega_derivatives_consistent():
    r, th, h = 1.0, 0.25, 1e-3
    w, wp, wpp = specialfn.duffing_omega_derivs(r, th)
    wm, wpm, _ = specialfn.duffing_omega_derivs(r - h, th)
    wq, wpq, _ = specialfn.duffing_omega_derivs(r + h, th)
    assert abs(wp - (wq - wm) / (2 * h)) < 1e-6
    assert abs(wpp - (wpq - wpm) / (2 * h)) < 1e-5
    assert wp < 0  # softening well


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.38), st.floats(0, 2 * math.pi))
def test_chart_energy_identity(r, phi):
    th = 0.25
    X, Y, _ = specialfn.duffing_angle_chart(phi, r, th)
    assert abs(specialfn.duffing_potential(X, th) + Y * Y / 2 - r * r / 2) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.38), st.floats(0, 2 * math.pi - 1e-9))
def test_chart_inverse_round_trip(r, phi):
    th = 0.25
    X, Y, _ = specialfn.duffing_angle_chart(phi, r, th)
    r2, phi2 = specialfn.duffing_chart_inverse(float(X), float(Y), th)
    assert abs(r2 - r) < 1e-10
    d = (phi2 - phi) % (2 * math.pi)
    assert min(d, 2 * math.pi - d) < 1e-9


def test_chart_periodic_and_jacobian():
    th, r = 0.25, 1.1
    phi = np.linspace(0, 2 * np.pi, 64)
    X0, Y0, _ = specialfn.duffing_angle_chart(phi, r, th)
    X1, Y1, _ = specialfn.duffing_angle_chart(phi + 2 * np.pi, r, th)
    assert np.allclose(X0, X1, atol=1e-12) and np.allclose(Y0, Y1, atol=1e-12)
    # det d(X, Y)/d(phi, r) = r / omega(r), up to orientation
    h = 1e-5
    Xp, Yp, _ = specialfn.duffing_angle_chart(phi + h, r, th)
    Xm, Ym, _ = specialfn.duffing_angle_chart(phi - h, r, th)
    Xr, Yr, _ = specialfn.duffing_angle_chart(phi, r + h, th)
    Xl, Yl, _ = specialfn.duffing_angle_chart(phi, r - h, th)
    det = ((Xp - Xm) * (Yr - Yl) - (Yp - Ym) * (Xr - Xl)) / (2 * h) ** 2
    assert np.allclose(np.abs(det), r / specialfn.duffing_omega(r, th), rtol=1e-6)


def test_radius_domain():
    with pytest.raises(DomainError):
        specialfn.duffing_angle_chart(0.0, 1.5, 0.25)
    with pytest.raises(DomainError):
        specialfn.duffing_chart_inverse(0.0, 0.0, 0.25)
