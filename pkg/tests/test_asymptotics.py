import math

import numpy as np
import pytest

from resonate.asymptotics import (eval_partial_sum, eval_partial_sum_rate, expected_slopes,
                                  residual_slopes, residuals, solve_coefficients)
from resonate.classify import analyze_expansion
from resonate.errors import DegenerateResonance, UnsupportedOrder

# Hand-derived from the closed forms at psi0 = 3 pi/4 (s1 = 1, mu1 = 1, theta = 1/4):
# rho_1 = -Omega_2(0, psi0)/eta = -1/(2 sqrt 2); phi_1 = -Lambda_2(0, psi0)/nu = 0;
# rho_2 = 0; phi_2 = -(rho_1 d_rho Lambda_2 + rho_1^2/2 * 0 ...)/nu = -1/4
RHO1 = -1 / (2 * math.sqrt(2))
PHI2 = -0.25


@pytest.fixture(scope="module")
def stable(ex1_stable):
    *_, res, e = ex1_stable
    c = analyze_expansion(e, res)
    root = c.stable_roots()[0]
    return e, res, c, solve_coefficients(e, res, c.n, c.m, root.psi0)


def test_coefficients(stable):
    *_, sol = stable
    (r1, p1), (r2, p2) = sol.coefficients
    assert abs(r1 - RHO1) < 1e-9 and abs(p1) < 1e-9
    assert abs(r2) < 1e-9 and abs(p2 - PHI2) < 1e-8
    assert sol.partial and "Lambda_3" in sol.notes[0]


def test_first_order_solves_linear_system(stable):
    e, res, c, sol = stable
    r1, p1 = sol.coefficients[0]
    psi0 = sol.psi0
    # eta rho_1 = -Omega_2(0, psi0), lambda rho_1 + nu phi_1 = -Lambda_2(0, psi0)
    assert abs(res.eta * r1 + e.Omega[2](0.0, psi0)) < 1e-10
    assert abs(sol.lam * r1 + sol.nu * p1 + e.Lambda[2](0.0, psi0)) < 1e-10


def test_partial_sum_and_rate(stable):
    *_, sol = stable
    t = np.array([10.0, 100.0, 1000.0])
    rho, phi = eval_partial_sum(sol, 0, t)
    assert np.allclose(rho, RHO1 * t ** (-1 / 4) + 0.0)
    assert np.allclose(phi, sol.psi0 + PHI2 * t ** (-1 / 2), atol=1e-8)
    h = 1e-4
    drho, dphi = eval_partial_sum_rate(sol, 0, t)
    rp, pp = eval_partial_sum(sol, 0, t * (1 + h))
    rm, pm = eval_partial_sum(sol, 0, t * (1 - h))
    assert np.allclose(drho, (rp - rm) / (2 * h * t), rtol=1e-6)
    assert np.allclose(dphi, (pp - pm) / (2 * h * t), rtol=1e-6)


def test_residual_slope(stable):
    e, _, c, sol = stable
    sr, sp = residual_slopes(e, sol, M=0)
    assert sr <= -(2 * c.n + 2) / (2 * c.q) + 0.3
    er, ep = expected_slopes(sol, 0)
    assert er == -1.0 and ep == -1.0
    assert sp <= ep + 0.3


def test_residuals_shrink(stable):
    e, _, _, sol = stable
    Zr, Zp = residuals(e, sol, 0, np.array([1e3, 1e5]))
    assert abs(Zr[1]) < abs(Zr[0]) and abs(Zp[1]) < abs(Zp[0])


def test_errors(stable):
    e, res, c, _ = stable
    with pytest.raises(UnsupportedOrder):
        solve_coefficients(e, res, c.n, c.m, 3 * math.pi / 4, K_max=3)
    with pytest.raises(DegenerateResonance):
        # nu vanishes where cos psi0... Lambda_1 = (beta0/w - mu1 cos psi)/2 has d_psi = 0 at 0
        solve_coefficients(e, res, c.n, c.m, 0.0)
