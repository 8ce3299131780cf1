"""Near-identity averaging over the fast phase S.

In the slow variables R = t^(1/2q) (r - a), Psi = phi - (kappa/varkappa) S the
right-hand side expands as sum_k t^(-k/2q) (F_k, G_k)(R, Psi, S). The
transformation coefficients (u_k, v_k) solve

    s0 d_S (u_k, v_k) = (Lambda_k - F_k + tF_k, Omega_k - G_k + tG_k)

and the averaged coefficients are the S-means that make these solvable.
Fields live on a uniform (psi, S) grid over [0, 2pi) x [0, 2pi varkappa);
the R-dependence is carried by sampling at Chebyshev nodes and fitting the
polynomial whose degree the construction guarantees.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import ConfigError, ResolutionError, UnsupportedOrder, ValidationError

DEFAULT_GRID = 256
FIT_TOL = 1e-8
RESOLUTION_TOL = 1e-8
FD_STEP = 1e-6
FD_STEP_2ND = 1e-4
MODE_CUTOFF = 1e-14


def chebyshev_nodes(n):
    return np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))


def psi_grid(n_psi):
    return 2 * np.pi * np.arange(n_psi) / n_psi


def s_grid(n_s, varkappa):
    return 2 * np.pi * varkappa * np.arange(n_s) / n_s


@dataclass(frozen=True)
class SpectralField:
    """Samples on the (psi, S) grid; trailing axes are (n_psi, n_s)."""

    values: np.ndarray
    varkappa: int = 1

    @property
    def n_psi(self):
        return self.values.shape[-2]

    @property
    def n_s(self):
        return self.values.shape[-1]


def _tail_amplitude(values, axis):
    n = values.shape[axis]
    hat = np.abs(np.fft.rfft(values, axis=axis)) / n
    hat = np.moveaxis(hat, axis, 0)
    return float(np.max(hat[n // 3 + 1:])) if hat.shape[0] > n // 3 + 1 else 0.0


def check_resolution(fld, tol=RESOLUTION_TOL):
    scale = max(1.0, float(np.max(np.abs(fld.values))))
    tail = max(_tail_amplitude(fld.values, -1), _tail_amplitude(fld.values, -2))
    if tail > tol * scale:
        raise ResolutionError(f"spectral tail {tail:.3g} exceeds {tol:g} on a "
                              f"{fld.n_psi}x{fld.n_s} grid")
    return tail


def average_over_S(fld):
    """<F>_{varkappa S}: the mean over one full S period, per psi."""
    return fld.values.mean(axis=-1)


def spectral_d_psi(values, axis=-1):
    """d/dpsi of 2 pi periodic samples along ``axis``."""
    n = values.shape[axis]
    hat = np.fft.rfft(values, axis=axis)
    k = np.arange(hat.shape[axis], dtype=float)
    if n % 2 == 0:
        k[-1] = 0.0
    shape = [1] * values.ndim
    shape[axis] = -1
    return np.fft.irfft(hat * (1j * k).reshape(shape), n=n, axis=axis)


def spectral_d_S(fld):
    """d/dS of a 2 pi varkappa periodic field."""
    n = fld.n_s
    hat = np.fft.rfft(fld.values, axis=-1)
    k = np.arange(hat.shape[-1], dtype=float) / fld.varkappa
    if n % 2 == 0:
        k[-1] = 0.0
    return SpectralField(np.fft.irfft(hat * 1j * k, n=n, axis=-1), fld.varkappa)


def solve_homological(rhs, s0):
    """Zero-mean solution u of s0 d_S u = rhs (the S-mean of rhs is removed first)."""
    vals = rhs.values - average_over_S(rhs)[..., None]
    hat = np.fft.rfft(vals, axis=-1)
    assert np.max(np.abs(hat[..., 0])) / rhs.n_s < 1e-8, "rhs keeps a non-zero S-mean"
    wav = np.arange(hat.shape[-1], dtype=float) / rhs.varkappa
    hat[..., 0] = 0.0
    hat[..., 1:] /= 1j * wav[1:] * s0
    if rhs.n_s % 2 == 0:
        hat[..., -1] = 0.0
    return SpectralField(np.fft.irfft(hat, n=rhs.n_s, axis=-1), rhs.varkappa)


# polynomial-in-rho helpers ---------------------------------------------------

def _fit(values, nodes, deg):
    V = np.vander(nodes, deg + 1, increasing=True)
    flat = values.reshape(len(nodes), -1)
    coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
    resid = float(np.max(np.abs(V @ coef - flat)))
    return coef.reshape((deg + 1,) + values.shape[1:]), resid


def _peval(coef, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + coef.shape[1:])
    xs = x.reshape(x.shape + (1,) * (coef.ndim - 1))
    for j in range(coef.shape[0] - 1, -1, -1):
        out = out * xs + coef[j]
    return out


def _pderiv(coef):
    if coef.shape[0] == 1:
        return np.zeros_like(coef)
    j = np.arange(1, coef.shape[0], dtype=float).reshape((-1,) + (1,) * (coef.ndim - 1))
    return coef[1:] * j


class AveragedTerm:
    """sum_j rho^j c_j(psi), each c_j a trigonometric polynomial sampled on the psi grid."""

    def __init__(self, coeffs):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.coeffs = coeffs
        n = coeffs.shape[-1]
        hat = np.fft.rfft(coeffs, axis=-1) / n
        hat[:, 1:] *= 2.0
        if n % 2 == 0:
            hat[:, -1] = 0.0
        self._hat = hat
        self._modes = []
        for row in hat:
            keep = np.nonzero(np.abs(row) > MODE_CUTOFF)[0]
            self._modes.append([(int(h), float(row[h].real), float(row[h].imag)) for h in keep])

    @property
    def n_psi(self):
        return self.coeffs.shape[-1]

    @property
    def degree(self):
        """Highest rho power with a non-negligible coefficient (0 for the zero term)."""
        big = np.nonzero(np.max(np.abs(self.coeffs), axis=-1) > 1e-12)[0]
        return int(big[-1]) if big.size else 0

    def coefficient(self, j, psi):
        """c_j(psi) for array or scalar psi."""
        if j >= len(self._modes):
            return np.zeros_like(np.asarray(psi, dtype=float))
        psi = np.asarray(psi, dtype=float)
        out = np.zeros_like(psi)
        for h, re, im in self._modes[j]:
            out = out + re * np.cos(h * psi) - im * np.sin(h * psi)
        return out

    def __call__(self, rho, psi):
        rho = np.asarray(rho, dtype=float)
        psi = np.asarray(psi, dtype=float)
        out = np.zeros(np.broadcast(rho, psi).shape)
        for j in range(len(self._modes) - 1, -1, -1):
            out = out * rho + self.coefficient(j, psi)
        return out if out.ndim else float(out)

    def scalar(self, rho, psi):
        """Fast float evaluation used inside the integrators."""
        total = 0.0
        for modes in reversed(self._modes):
            c = 0.0
            for h, re, im in modes:
                if h == 0:
                    c += re
                else:
                    c += re * math.cos(h * psi) - im * math.sin(h * psi)
            total = total * rho + c
        return total

    def grid_values(self, rho):
        """Values on the psi grid for a scalar rho."""
        return _peval(self.coeffs, rho)

    def d_rho(self):
        return AveragedTerm(_pderiv(self.coeffs))

    def d_psi(self):
        return AveragedTerm(spectral_d_psi(self.coeffs, axis=-1))

    def sup_norm(self, rho_box=(-1.0, 1.0), n_rho=21):
        rhos = np.linspace(rho_box[0], rho_box[1], n_rho)
        return float(np.max(np.abs(_peval(self.coeffs, rhos))))

    @classmethod
    def zero(cls, n_psi):
        return cls(np.zeros((1, n_psi)))


class PeriodicField2D:
    """sum_j R^j c_j(psi, S) from grid samples; evaluates at arbitrary (R, psi, S)."""

    def __init__(self, coeffs, varkappa, rel_cutoff=1e-12):
        coeffs = np.asarray(coeffs, dtype=float)
        self.varkappa = varkappa
        n_psi, n_s = coeffs.shape[-2:]
        hat = np.fft.fft2(coeffs, axes=(-2, -1)) / (n_psi * n_s)
        h = np.fft.fftfreq(n_psi, 1.0 / n_psi)
        m = np.fft.fftfreq(n_s, 1.0 / n_s) / varkappa
        cut = rel_cutoff * max(1.0, float(np.max(np.abs(hat))))
        self._modes = []
        for row in hat:
            ih, im = np.nonzero(np.abs(row) > cut)
            self._modes.append((h[ih], m[im], row[ih, im]))

    def __call__(self, R, psi, S):
        R, psi, S = (np.asarray(x, dtype=float) for x in (R, psi, S))
        out = np.zeros(np.broadcast(R, psi, S).shape)
        for hh, mm, cc in reversed(self._modes):
            if cc.size:
                arg = np.multiply.outer(psi, hh) + np.multiply.outer(S, mm)
                c = np.sum(cc.real * np.cos(arg) - cc.imag * np.sin(arg), axis=-1)
            else:
                c = 0.0
            out = out * R + c
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class AveragedExpansion:
    q: int
    eta: float
    kappa: int
    varkappa: int
    n_psi: int
    Lambda: Mapping = field(default_factory=dict)
    Omega: Mapping = field(default_factory=dict)
    provenance: Mapping = field(default_factory=dict)
    # k -> (u_k, v_k) as polynomial-in-R coefficient arrays on the (psi, S) grid
    transforms: Mapping = field(default_factory=dict)
    fit_residual: float = 0.0

    @property
    def order(self):
        """Largest N such that every order 1..N is available."""
        k = 0
        while (k + 1) in self.Lambda and (k + 1) in self.Omega:
            k += 1
        return k

    def has(self, k):
        return k in self.Lambda and k in self.Omega

    def transform_fields(self):
        """{k: (u_k, v_k)} as PeriodicField2D, built lazily and cached."""
        cache = self.__dict__.get("_fields")
        if cache is None:
            cache = {k: (PeriodicField2D(u, self.varkappa), PeriodicField2D(v, self.varkappa))
                     for k, (u, v) in self.transforms.items()}
            object.__setattr__(self, "_fields", cache)
        return cache

    def near_identity(self, R, Psi, S, t):
        """Forward change of variables (R, Psi) -> (rho, psi) using the retained u_k, v_k."""
        rho = np.asarray(R, dtype=float)
        psi = np.asarray(Psi, dtype=float)
        for k, (u, v) in self.transform_fields().items():
            w = np.asarray(t, dtype=float) ** (-k / (2 * self.q))
            rho = rho + w * u(R, Psi, S)
            psi = psi + w * v(R, Psi, S)
        return rho, psi

    def Lambda_hat(self, rho, psi, t, upto=None):
        upto = self.order if upto is None else upto
        return sum(t ** (-k / (2 * self.q)) * self.Lambda[k](rho, psi)
                   for k in range(1, upto + 1))

    def Omega_hat(self, rho, psi, t, upto=None):
        upto = self.order if upto is None else upto
        return sum(t ** (-k / (2 * self.q)) * self.Omega[k](rho, psi)
                   for k in range(1, upto + 1))


def _fd(fn, a, i, phi, S):
    if i == 0:
        return fn(a, phi, S)
    if i == 1:
        h = FD_STEP * max(1.0, abs(a))
        return (fn(a + h, phi, S) - fn(a - h, phi, S)) / (2 * h)
    if i == 2:
        h = FD_STEP_2ND * max(1.0, abs(a))
        return (fn(a + h, phi, S) - 2 * fn(a, phi, S) + fn(a - h, phi, S)) / h**2
    raise UnsupportedOrder(f"r-derivative of order {i} not supported")


def lift_FG(model, sched, res, k, rho_samples, n_psi=DEFAULT_GRID, n_s=DEFAULT_GRID):
    """Coefficients F_k, G_k sampled at R = rho_samples on the (psi, S) grid.

    Returns two SpectralFields with values shaped (len(rho_samples), n_psi, n_s).
    """
    if k not in (1, 2):
        raise UnsupportedOrder(f"generic lift supports k in {{1, 2}}, got {k}; "
                               "use register_closed_form for higher orders")
    q = model.q
    psi = psi_grid(n_psi)[:, None]
    S = s_grid(n_s, res.varkappa)[None, :]
    phi = res.kappa * S / res.varkappa + psi
    R = np.asarray(rho_samples, dtype=float)[:, None, None]
    shape = (R.shape[0], n_psi, n_s)
    F = np.zeros(shape)
    G = np.zeros(shape)
    for p in model.terms:
        i = k + 1 - 2 * p.j
        if i >= 0:
            F = F + np.broadcast_to(_fd(p.f, res.a, i, phi, S), (n_psi, n_s)) * R**i / math.factorial(i)
        i = k - 2 * p.j
        if i >= 0:
            G = G + np.broadcast_to(_fd(p.g, res.a, i, phi, S), (n_psi, n_s)) * R**i / math.factorial(i)
    if k == 2 * q:
        F = F + R / (2 * q)
    G = G + (res.eta * R if k == 1 else 0.5 * res.omega_pp * R**2)
    if k % 2 == 0:
        delta = 1.0 if k == 2 * q else 0.0
        G = G - res.ratio * sched.coeff(k // 2) * (1.0 - k / (2 * q) + delta)
    return SpectralField(F, res.varkappa), SpectralField(G, res.varkappa)


def _build(model, sched, res, N, n_grid):
    nodes = chebyshev_nodes(N + 2)
    vk = res.varkappa
    s0 = sched.s0
    Lam, Om, trans = {}, {}, {}
    worst = 0.0

    def fit(values, deg, what):
        nonlocal worst
        coef, resid = _fit(values, nodes, deg)
        worst = max(worst, resid)
        if resid >= FIT_TOL:
            raise ResolutionError(f"{what}: polynomial fit residual {resid:.3g}")
        return coef

    F1, G1 = lift_FG(model, sched, res, 1, nodes, n_grid, n_grid)
    check_resolution(F1)
    lam1 = average_over_S(F1)
    om1 = average_over_S(G1)
    Lam[1] = fit(lam1, 0, "Lambda_1")
    om1_c = fit(om1, 1, "Omega_1")
    if np.max(np.abs(om1_c - np.array([0.0, res.eta])[:, None])) > 1e-10:
        raise ResolutionError("Omega_1 does not reduce to eta*rho")
    Om[1] = np.array([np.zeros(n_grid), np.full(n_grid, res.eta)])
    u1 = solve_homological(SpectralField(lam1[..., None] - F1.values, vk), s0).values
    v1 = solve_homological(SpectralField(om1[..., None] - G1.values, vk), s0).values
    assert np.max(np.abs(v1)) < 1e-12, "v_1 must vanish"
    u1_c = fit(u1, 0, "u_1")
    v1_c = fit(v1, 1, "v_1")
    trans[1] = (u1_c, v1_c)

    if N >= 2:
        F2, G2 = lift_FG(model, sched, res, 2, nodes, n_grid, n_grid)
        check_resolution(F2)
        check_resolution(G2)
        du1 = _peval(_pderiv(u1_c), nodes)
        dv1 = _peval(_pderiv(v1_c), nodes)
        dR_lam1 = _peval(_pderiv(Lam[1]), nodes)[..., None]
        dR_om1 = _peval(_pderiv(Om[1]), nodes)[..., None]
        dP_lam1 = spectral_d_psi(lam1, axis=-1)[..., None]
        dP_om1 = spectral_d_psi(om1, axis=-1)[..., None]
        dP_u1 = spectral_d_psi(u1, axis=-2)
        dP_v1 = spectral_d_psi(v1, axis=-2)
        tF2 = u1 * dR_lam1 + v1 * dP_lam1 - F1.values * du1 - G1.values * dP_u1
        tG2 = u1 * dR_om1 + v1 * dP_om1 - F1.values * dv1 - G1.values * dP_v1
        lam2 = (F2.values - tF2).mean(axis=-1)
        om2 = (G2.values - tG2).mean(axis=-1)
        Lam[2] = fit(lam2, 1, "Lambda_2")
        Om[2] = fit(om2, 2, "Omega_2")
        u2 = solve_homological(SpectralField(lam2[..., None] - F2.values + tF2, vk), s0).values
        v2 = solve_homological(SpectralField(om2[..., None] - G2.values + tG2, vk), s0).values
        trans[2] = (fit(u2, 1, "u_2"), fit(v2, 2, "v_2"))

    return AveragedExpansion(
        q=model.q, eta=res.eta, kappa=res.kappa, varkappa=res.varkappa, n_psi=n_grid,
        Lambda={k: AveragedTerm(c) for k, c in Lam.items()},
        Omega={k: AveragedTerm(c) for k, c in Om.items()},
        provenance={k: "generic" for k in Lam},
        transforms=trans, fit_residual=worst)


def compute_expansion(model, sched, res, N=2, n_grid=DEFAULT_GRID):
    """Averaged coefficients Lambda_k, Omega_k for k = 1..N (N <= 2).

    The grid is doubled once if the spectral tail or a rho-fit is too large.
    """
    if N not in (1, 2):
        raise UnsupportedOrder(f"generic averaging is limited to N <= 2, got {N}")
    if model.q != sched.q:
        raise ConfigError(f"model q={model.q} and schedule q={sched.q} differ")
    try:
        return _build(model, sched, res, N, n_grid)
    except ResolutionError:
        return _build(model, sched, res, N, 2 * n_grid)


def _sample_closed_form(fn, bound, n_psi, what):
    nodes = chebyshev_nodes(bound + 3)
    psi = psi_grid(n_psi)
    vals = np.asarray(fn(nodes[:, None], psi[None, :]), dtype=float)
    vals = np.broadcast_to(vals, (len(nodes), n_psi))
    coef, resid = _fit(vals, nodes, bound)
    if resid >= FIT_TOL:
        raise ValidationError(f"{what} is not a polynomial in rho of degree <= {bound} "
                              f"(fit residual {resid:.3g})")
    check_resolution(SpectralField(vals[:, :, None]))
    return AveragedTerm(coef)


def register_closed_form(exp, k, Lambda_k, Omega_k):
    """Return a copy of ``exp`` with order k given by closed forms (callables of rho, psi).

    Lambda_k must be a polynomial in rho of degree <= k-1, Omega_k of degree <= k.
    """
    if k < 1:
        raise ValidationError("order must be >= 1")
    Lam, Om, prov = dict(exp.Lambda), dict(exp.Omega), dict(exp.provenance)
    if Lambda_k is not None:
        Lam[k] = _sample_closed_form(Lambda_k, k - 1, exp.n_psi, f"Lambda_{k}")
    elif k not in Lam:
        Lam[k] = AveragedTerm.zero(exp.n_psi)
    if Omega_k is not None:
        Om[k] = _sample_closed_form(Omega_k, k, exp.n_psi, f"Omega_{k}")
    elif k not in Om:
        Om[k] = AveragedTerm.zero(exp.n_psi)
    prov[k] = "closed_form"
    return replace(exp, Lambda=Lam, Omega=Om, provenance=prov)
