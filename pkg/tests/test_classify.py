import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonate import reference
from resonate.averaging import AveragedExpansion, AveragedTerm, psi_grid
from resonate.classify import (Verdict, analyze_expansion, detect_orders,
                               find_equilibrium_phases, limiting_eigenvalues, lyapunov_L1_bounds,
                               lyapunov_L1_diagnostic, lyapunov_chi1)
from resonate.errors import Inconclusive

from conftest import EX1_BASE, build


def ex1_case1(beta0, mu1=1.0):
    _, _, res, e = build("ex1", dict(EX1_BASE, beta0=beta0, mu1=mu1), (0.5, 1.0, 0.0), 1, 1)
    return analyze_expansion(e, res)


def ex2(alpha1, beta0, beta1):
    p = dict(theta=0.25, alpha0=0.1, alpha1=alpha1, beta0=beta0, beta1=beta1)
    m, sc, res, e = build("ex2", p, (1.0, 1.0, 0.0), 1, 2)
    e = reference.register_orders(e, reference.closed_forms_for(m, sc, 1, 2), (3, 4))
    return analyze_expansion(e, res)


def test_stable_root_at_three_quarter_pi():
    c = ex1_case1(-0.5)
    assert (c.n, c.m) == (1, 2)
    (st_root,) = c.stable_roots()
    assert abs(st_root.psi0 - 3 * math.pi / 4) < 1e-9
    assert st_root.verdict == Verdict.StableLockingViaDh and st_root.h == 2
    assert abs(st_root.d_h + 0.5) < 1e-9
    assert st_root.verdict.theorem == "Theorem 23"


@pytest.mark.parametrize("mu1", [1.0, -1.0])
@pytest.mark.parametrize("beta0", [-0.6, -0.25, -0.05])
def test_ex1_stable_region(beta0, mu1):
    c = ex1_case1(beta0, mu1)
    (r,) = c.stable_roots()
    assert abs(r.d_h - beta0) < 1e-9
    # the stable root is the one where mu1 sin psi0 > 0
    assert mu1 * math.sin(r.psi0) > 0
    others = [x for x in c.roots if x is not r]
    assert all(x.verdict == Verdict.SaddleUnstable for x in others)


@pytest.mark.parametrize("beta0", [0.05, 0.25, 0.6])
def test_ex1_unstable_region(beta0):
    c = ex1_case1(beta0)
    assert not c.stable_roots()
    assert Verdict.UnstableLockingViaDh in c.verdicts
    assert {v.theorem for v in c.verdicts} <= {"Theorem 24", "Lemma 01"}


@pytest.mark.parametrize("beta0,mu1", [(-1.0, 1.0), (0.8, 1.0), (0.3, 0.0), (0.75, -1.0)])
def test_ex1_no_locking(beta0, mu1):
    c = ex1_case1(beta0, mu1)
    assert c.verdicts == [Verdict.NoLocking] and c.min_abs_lambda_n > 1e-9


def test_ex1_case3_no_locking():
    _, _, res, e = build("ex1", dict(theta=0.25, beta0=0.3), (0.25, 0.0, 0.0), 2, 1)
    c = analyze_expansion(e, res)
    assert c.verdicts == [Verdict.NoLocking]
    assert abs(c.min_abs_lambda_n - math.sqrt(2) * 0.3 / 2) < 1e-9


@pytest.mark.parametrize("alpha1,beta0,beta1", [(0.15, -0.8, 0.3), (-0.15, -0.8, -0.3),
                                                (0.15, -0.2, 0.3), (-0.2, -0.5, 0.4)])
def test_ex2_table(alpha1, beta0, beta1):
    c = ex2(alpha1, beta0, beta1)
    assert len(c.roots) == 4
    for r in c.roots:
        k = int(round((r.psi0 - math.pi / 4) / (math.pi / 2))) % 4
        sign = (-1) ** k
        if sign * alpha1 <= 0:
            assert r.verdict == Verdict.SaddleUnstable
            continue
        # d_2 and d_3 vanish at psi0; the first nonzero divergence is d_4
        assert r.h == 4
        assert abs(r.d_h - (1 + 2 * beta0 + (-1) ** (k + 1) * beta1) / 4) < 1e-9
        stable = sign * beta1 > 1 + 2 * beta0
        assert r.verdict == (Verdict.StableLockingViaDh if stable else Verdict.Inconclusive)


def test_ex2_without_closed_forms_is_inconclusive():
    p = dict(theta=0.25, alpha0=0.1, alpha1=0.15, beta0=-0.8, beta1=0.3)
    _, _, res, e = build("ex2", p, (1.0, 1.0, 0.0), 1, 2)
    c = analyze_expansion(e, res)
    assert all(r.verdict in (Verdict.Inconclusive, Verdict.SaddleUnstable) for r in c.roots)
    assert any("order 3" in r.reason for r in c.roots)


def _hand_expansion(lam1, om1, lam2=None, om2=None, eta=-1.0):
    n = 64
    psi = psi_grid(n)

    def term(fn_list):
        return AveragedTerm(np.array([f(psi) for f in fn_list]))

    L = {1: term(lam1)}
    O = {1: term(om1)}
    if lam2:
        L[2], O[2] = term(lam2), term(om2)
    return AveragedExpansion(q=2, eta=eta, kappa=1, varkappa=1, n_psi=n, Lambda=L, Omega=O,
                             provenance={k: "closed_form" for k in L})


def test_detect_orders_needs_nonzero_terms():
    zero = lambda p: 0 * p
    e = _hand_expansion([zero], [zero, lambda p: 0 * p - 1.0], [zero, zero],
                        [zero, zero, zero])
    with pytest.raises(Inconclusive):
        detect_orders(e)


def test_direct_d_nm_paths():
    # n = 1, m = 2, lambda_1 != 0 (hand-built, outside the degree bound)
    zero = lambda p: 0 * p
    sinp = lambda p: np.sin(p)
    e = _hand_expansion([sinp, lambda p: 0 * p - 0.4], [zero, lambda p: 0 * p - 1.0],
                        [zero, zero], [lambda p: 0 * p + 0.3, zero, zero], eta=-1.0)
    c = analyze_expansion(e)
    roots = {round(r.psi0, 6): r for r in c.roots}
    r0 = roots[0.0]  # nu = cos 0 = 1 > 0, eta < 0 -> not a saddle; d = lambda = -0.4
    assert r0.verdict == Verdict.StableLocking and abs(r0.d_nm + 0.4) < 1e-12
    assert roots[round(math.pi, 6)].verdict == Verdict.SaddleUnstable
    e2 = _hand_expansion([sinp, lambda p: 0 * p + 0.4], [zero, lambda p: 0 * p - 1.0],
                         [zero, zero], [lambda p: 0 * p + 0.3, zero, zero], eta=-1.0)
    r0 = [r for r in analyze_expansion(e2).roots if abs(r.psi0) < 1e-9][0]
    assert r0.verdict == Verdict.UnstableLocking and r0.verdict.theorem == "Theorem 21"


def test_find_equilibrium_phases_simple_zeros():
    e = _hand_expansion([lambda p: np.cos(2 * p)], [lambda p: 0 * p, lambda p: 0 * p - 1.0])
    roots = find_equilibrium_phases(e, 1)
    assert np.allclose([r.psi0 for r in roots], [math.pi / 4 + k * math.pi / 2 for k in range(4)],
                       atol=1e-10)
    assert np.allclose([r.nu for r in roots], [-2, 2, -2, 2], atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-3, 3), st.floats(1.0, 1e4))
def test_eigenvalue_identities(n, q, eta, nu, lam, t):
    mp, mm = limiting_eigenvalues(n, q, eta, nu, lam, t)
    scale = max(1.0, abs(lam), abs(nu * eta))
    assert abs((mp + mm) - lam * t ** (-n / (2 * q))) <= 1e-12 * scale
    assert abs(mp * mm + nu * eta * t ** (-(n + 1) / (2 * q))) <= 1e-12 * scale


def test_eigenvalues_against_matrix():
    n, q, eta, nu, lam, t = 1, 2, -0.7, 0.4, -0.3, 50.0
    A = np.array([[lam * t ** (-n / 4), nu * t ** (-n / 4)], [eta * t ** (-1 / 4), 0.0]])
    ev = sorted(np.linalg.eigvals(A), key=lambda z: (z.real, z.imag))
    got = sorted(limiting_eigenvalues(n, q, eta, nu, lam, t), key=lambda z: (z.real, z.imag))
    assert np.allclose(ev, got, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3),
       st.floats(-1, 1), st.floats(-1, 1))
def test_L1_bounds(eta_abs, nu_abs, lam, u, v):
    eta, nu = -eta_abs, nu_abs
    chi = lyapunov_chi1(eta, nu, lam)
    assert math.copysign(1, chi) == math.copysign(1, nu * lam)
    lo, hi = lyapunov_L1_bounds(eta, nu, lam)
    L = lyapunov_L1_diagnostic(eta, nu, lam, u, v)
    D2 = u * u + v * v
    assert lo > 0
    assert lo * D2 - 1e-12 <= L <= hi * D2 + 1e-12


def test_L1_needs_lambda():
    with pytest.raises(ValueError):
        lyapunov_L1_diagnostic(-1.0, 1.0, 0.0, 0.1, 0.1)
