"""Power-series coefficients of the phase-locked solution of the truncated system.

    rho_*(t) ~ sum_k t^(-(k+m-2)/2q) rho_k,   psi_*(t) ~ psi0 + sum_k t^(-k/2q) phi_k

Each pair (rho_k, phi_k) solves the lower-triangular system
[[eta, 0], [lambda_n, nu_n]] (rho_k, phi_k) = (F_k, G_k).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .classify import NU_DEGENERATE
from .errors import DegenerateResonance, UnsupportedOrder


@dataclass(frozen=True)
class AsymptoticSolution:
    n: int
    m: int
    q: int
    psi0: float
    eta: float
    nu: float
    lam: float
    coefficients: tuple  # ((rho_1, phi_1), (rho_2, phi_2), ...)
    partial: bool = False
    notes: tuple = field(default=())

    @property
    def K(self):
        return len(self.coefficients)


class _Probe:
    """Values and derivatives of Lambda_k / Omega_k at (0, psi0); missing orders read as zero."""

    def __init__(self, terms, psi0):
        self.terms = terms
        self.psi0 = psi0
        self.missing = set()

    def __call__(self, k, dr=0, dp=0):
        if k not in self.terms:
            self.missing.add(k)
            return 0.0
        term = self.terms[k]
        for _ in range(dr):
            term = term.d_rho()
        for _ in range(dp):
            term = term.d_psi()
        return term.scalar(0.0, self.psi0)


def solve_coefficients(exp, res, n, m, psi0, K_max=2):
    """(rho_k, phi_k) for k = 1..K_max (K_max <= 2)."""
    if K_max not in (1, 2):
        raise UnsupportedOrder(f"K_max must be 1 or 2, got {K_max}")
    eta = exp.eta if res is None else res.eta
    L = _Probe(exp.Lambda, psi0)
    W = _Probe(exp.Omega, psi0)
    nu, lam = L(n, dp=1), L(n, dr=1)
    if abs(nu) < NU_DEGENERATE:
        raise DegenerateResonance(f"nu_n = {nu:.3g} at psi0 = {psi0:.12g}")

    F1 = -W(m)
    G1 = -L(n + 1)
    r1 = F1 / eta
    p1 = (G1 - lam * r1) / nu
    coeffs = [(r1, p1)]
    if K_max >= 2:
        F2 = -W(m + 1) - (r1 * W(m, dr=1) + p1 * W(m, dp=1))
        G2 = (-L(n + 2) - (r1 * L(n + 1, dr=1) + p1 * L(n + 1, dp=1))
              - 0.5 * (r1 * r1 * L(n, dr=2) + 2 * r1 * p1 * L(n, dr=1, dp=1)
                       + p1 * p1 * L(n, dp=2)))
        r2 = F2 / eta
        coeffs.append((r2, (G2 - lam * r2) / nu))
    notes = []
    if L.missing or W.missing:
        miss = sorted({f"Lambda_{k}" for k in L.missing} | {f"Omega_{k}" for k in W.missing})
        notes.append("treated as zero: " + ", ".join(miss))
    if m != 2 and K_max >= 2:
        notes.append("second-order chain assumes m = 2 power bookkeeping")
    return AsymptoticSolution(n, m, exp.q, float(psi0), float(eta), float(nu), float(lam),
                              tuple((float(a), float(b)) for a, b in coeffs),
                              partial=bool(L.missing or W.missing), notes=tuple(notes))


def _terms(sol, M):
    return sol.coefficients[:min(sol.n + M + 1, sol.K)]


def eval_partial_sum(sol, M, t):
    """(rho_{*,M}(t), psi_{*,M}(t)) using k = 1..n+M+1 (capped by what is available)."""
    t = np.asarray(t, dtype=float)
    rho = np.zeros_like(t)
    phi = np.full_like(t, sol.psi0)
    for k, (rk, pk) in enumerate(_terms(sol, M), start=1):
        rho = rho + t ** (-(k + sol.m - 2) / (2 * sol.q)) * rk
        phi = phi + t ** (-k / (2 * sol.q)) * pk
    if rho.ndim == 0:
        return float(rho), float(phi)
    return rho, phi


def eval_partial_sum_rate(sol, M, t):
    """Time derivatives of the partial sums."""
    t = np.asarray(t, dtype=float)
    drho = np.zeros_like(t)
    dphi = np.zeros_like(t)
    tq = 2 * sol.q
    for k, (rk, pk) in enumerate(_terms(sol, M), start=1):
        e = (k + sol.m - 2) / tq
        drho = drho - e * t ** (-e - 1) * rk
        dphi = dphi - (k / tq) * t ** (-k / tq - 1) * pk
    return drho, dphi


def residuals(exp, sol, M, t):
    """Z_rho, Z_phi: defect of the partial sums in the truncated system."""
    t = np.asarray(t, dtype=float)
    rho, phi = eval_partial_sum(sol, M, t)
    drho, dphi = eval_partial_sum_rate(sol, M, t)
    Lam = np.array([exp.Lambda_hat(r, p, s) for r, p, s in zip(np.atleast_1d(rho),
                                                               np.atleast_1d(phi), np.atleast_1d(t))])
    Om = np.array([exp.Omega_hat(r, p, s) for r, p, s in zip(np.atleast_1d(rho),
                                                             np.atleast_1d(phi), np.atleast_1d(t))])
    return drho - Lam, dphi - Om


def residual_slopes(exp, sol, M=0, t_grid=None):
    """Least-squares slopes of log|Z_rho| and log|Z_phi| against log t."""
    t = np.logspace(3, 6, 13) if t_grid is None else np.asarray(t_grid, dtype=float)
    Zr, Zp = residuals(exp, sol, M, t)
    lt = np.log(t)
    tiny = np.finfo(float).tiny

    def slope(z):
        return float(np.polyfit(lt, np.log(np.abs(z) + tiny), 1)[0])

    return slope(Zr), slope(Zp)


def expected_slopes(sol, M=0):
    """Decay exponents predicted for (Z_rho, Z_phi)."""
    q2 = 2 * sol.q
    return -(2 * sol.n + M + 2) / q2, -(sol.n + sol.m + M + 1) / q2
