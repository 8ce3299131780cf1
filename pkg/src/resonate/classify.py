"""Leading orders, equilibrium phases and the phase-locking verdict."""
import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import Inconclusive

TOL_ZERO = 1e-9
NU_DEGENERATE = 1e-8
SCAN_POINTS = 720


class Verdict(str, Enum):
    SaddleUnstable = "SaddleUnstable"
    StableLocking = "StableLocking"
    UnstableLocking = "UnstableLocking"
    StableLockingViaDh = "StableLockingViaDh"
    UnstableLockingViaDh = "UnstableLockingViaDh"
    NoLocking = "NoLocking"
    Inconclusive = "Inconclusive"

    @property
    def stable(self):
        return self in (Verdict.StableLocking, Verdict.StableLockingViaDh)

    @property
    def theorem(self):
        """Result that licenses this verdict (report label)."""
        return _THEOREM[self]


_THEOREM = {
    Verdict.SaddleUnstable: "Lemma 01",
    Verdict.StableLocking: "Theorem 2",
    Verdict.UnstableLocking: "Theorem 21",
    Verdict.StableLockingViaDh: "Theorem 23",
    Verdict.UnstableLockingViaDh: "Theorem 24",
    Verdict.NoLocking: "Theorem 3",
    Verdict.Inconclusive: "none",
}


@dataclass(frozen=True)
class EquilibriumPhase:
    psi0: float
    nu: float
    lam: float

    @property
    def degenerate(self):
        return abs(self.nu) < NU_DEGENERATE


@dataclass(frozen=True)
class RootVerdict:
    psi0: float
    nu: float
    lam: float
    omega_m: float
    d_nm: float
    verdict: Verdict
    h: int = None
    d_h: float = None
    reason: str = ""


@dataclass(frozen=True)
class RegimeClassification:
    n: int
    m: int
    q: int
    eta: float
    roots: tuple = ()
    no_locking: bool = False
    min_abs_lambda_n: float = float("nan")
    notes: tuple = field(default=())

    @property
    def ell(self):
        return min(self.n, self.m)

    @property
    def psi0_list(self):
        return [(r.psi0, r.nu, r.lam) for r in self.roots]

    @property
    def verdicts(self):
        if self.no_locking:
            return [Verdict.NoLocking]
        return [r.verdict for r in self.roots] or [Verdict.Inconclusive]

    def stable_roots(self):
        return [r for r in self.roots if r.verdict.stable]


def detect_orders(exp, tol_zero=TOL_ZERO):
    """(n, m): first non-vanishing Lambda order and first non-vanishing Omega order >= 2."""
    N = exp.order
    n = next((k for k in range(1, N + 1) if exp.Lambda[k].sup_norm() > tol_zero), None)
    if n is None:
        raise Inconclusive(f"Lambda_k vanish for all k <= {N}; higher-order closed forms are needed")
    m = next((k for k in range(2, N + 1) if exp.Omega[k].sup_norm() > tol_zero), None)
    if m is None:
        raise Inconclusive(f"Omega_k vanish for 2 <= k <= {N}; higher-order closed forms are needed")
    return n, m


def find_equilibrium_phases(exp, n):
    """Zeros psi0 in [0, 2 pi) of Lambda_n(0, .) with nu_n and lambda_n at each."""
    L = exp.Lambda[n]
    dpsi, drho = L.d_psi(), L.d_rho()
    c0 = lambda p: L.scalar(0.0, p)
    grid = 2 * np.pi * np.arange(SCAN_POINTS + 1) / SCAN_POINTS
    vals = L.coefficient(0, grid)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if scale < TOL_ZERO:
        return []
    roots = []
    for i in range(SCAN_POINTS):
        if abs(vals[i]) <= 1e-14 * scale:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0 and abs(vals[i + 1]) > 1e-14 * scale:
            roots.append(brentq(c0, grid[i], grid[i + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps))
    out = []
    for r in sorted(roots):
        r = r % (2 * math.pi)
        if out and (abs(r - out[-1].psi0) < 1e-9 or abs(r - out[0].psi0 - 2 * math.pi) < 1e-9):
            continue
        out.append(EquilibriumPhase(r, dpsi.scalar(0.0, r), drho.scalar(0.0, r)))
    return out


def _divergence(exp, k, psi0):
    return exp.Lambda[k].d_rho().scalar(0.0, psi0) + exp.Omega[k].d_psi().scalar(0.0, psi0)


def _classify_root(exp, n, m, root, tol):
    q, eta = exp.q, exp.eta
    ell = min(n, m)
    psi0, nu, lam = root.psi0, root.nu, root.lam
    om = exp.Omega[m].d_psi().scalar(0.0, psi0)
    d = lam if n < m else (lam + om if n == m else om)
    base = dict(psi0=psi0, nu=nu, lam=lam, omega_m=om, d_nm=d)
    if root.degenerate:
        return RootVerdict(verdict=Verdict.Inconclusive, reason="nu_n vanishes", **base)
    if nu * eta > 0:
        return RootVerdict(verdict=Verdict.SaddleUnstable, reason="nu_n*eta > 0", **base)
    if d < -tol:
        return RootVerdict(verdict=Verdict.StableLocking, reason="d_nm < 0", **base)
    if d > tol:
        if ell + n - 1 < 2 * q:
            return RootVerdict(verdict=Verdict.UnstableLocking, reason="d_nm > 0", **base)
        return RootVerdict(verdict=Verdict.Inconclusive,
                           reason="d_nm > 0 but ell+n-1 >= 2q", **base)
    for k in range(ell + 1, 2 * q + 1):
        if not exp.has(k):
            return RootVerdict(verdict=Verdict.Inconclusive,
                               reason=f"d_nm = 0 and order {k} is not available", **base)
        dh = _divergence(exp, k, psi0)
        if abs(dh) <= tol:
            continue
        if dh < 0:
            return RootVerdict(verdict=Verdict.StableLockingViaDh, h=k, d_h=dh,
                               reason="d_h < 0", **base)
        if k + n - 1 < 2 * q:
            return RootVerdict(verdict=Verdict.UnstableLockingViaDh, h=k, d_h=dh,
                               reason="d_h > 0", **base)
        return RootVerdict(verdict=Verdict.Inconclusive, h=k, d_h=dh,
                           reason="d_h > 0 but h+n-1 >= 2q", **base)
    return RootVerdict(verdict=Verdict.Inconclusive,
                       reason="divergence vanishes through order 2q", **base)


def min_abs_on_box(term, rho_box=(-1.0, 1.0), n_rho=41):
    rhos = np.linspace(rho_box[0], rho_box[1], n_rho)
    return float(np.min(np.abs([term.grid_values(r) for r in rhos])))


def classify_regime(exp, res, n, m, roots, tol=TOL_ZERO):
    """Per-root verdicts, or NoLocking when Lambda_n stays away from zero."""
    notes = []
    if res is not None and abs(res.eta - exp.eta) > 1e-12 * max(1.0, abs(exp.eta)):
        notes.append("expansion eta differs from resonance eta")
    min_abs = min_abs_on_box(exp.Lambda[n])
    if not roots:
        return RegimeClassification(n, m, exp.q, exp.eta, (), no_locking=min_abs > tol,
                                    min_abs_lambda_n=min_abs, notes=tuple(notes))
    verdicts = tuple(_classify_root(exp, n, m, r, tol) for r in roots)
    return RegimeClassification(n, m, exp.q, exp.eta, verdicts, False, min_abs, tuple(notes))


def analyze_expansion(exp, res=None):
    """detect_orders -> find_equilibrium_phases -> classify_regime."""
    n, m = detect_orders(exp)
    return classify_regime(exp, res, n, m, find_equilibrium_phases(exp, n))


def limiting_eigenvalues(n, q, eta, nu_n, lambda_n, t):
    """Eigenvalues of the linearised limiting system at (0, psi0)."""
    disc = cmath.sqrt(4 * nu_n * eta * t ** ((n - 1) / (2 * q)) + lambda_n**2)
    pre = t ** (-n / (2 * q)) / 2
    return pre * (lambda_n + disc), pre * (lambda_n - disc)


def lyapunov_chi1(eta, nu1, lambda1):
    if lambda1 == 0:
        raise ValueError("L1 diagnostic needs lambda_1 != 0")
    mag = 0.5 * min(abs(eta), abs(nu1),
                    2 * abs(lambda1 * eta * nu1) / (lambda1**2 + 2 * abs(eta * nu1)))
    return math.copysign(mag, nu1 * lambda1)


def lyapunov_L1_bounds(eta, nu1, lambda1):
    """(L_minus, L_plus) with L_minus*D^2 <= L1 <= L_plus*D^2 near the origin."""
    chi = abs(lyapunov_chi1(eta, nu1, lambda1))
    return (min(abs(eta) - chi, abs(nu1) - chi) / 4,
            max(abs(eta) + chi, abs(nu1) + chi))


def lyapunov_L1_diagnostic(eta, nu1, lambda1, u, v):
    """Quadratic Lyapunov candidate 0.5(|eta| u^2 + |nu1| v^2) + chi1 u v."""
    chi = lyapunov_chi1(eta, nu1, lambda1)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = 0.5 * (abs(eta) * u * u + abs(nu1) * v * v) + chi * u * v
    return float(out) if out.ndim == 0 else out
