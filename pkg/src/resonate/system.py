"""Perturbed planar oscillators in amplitude-phase form.

    dr/dt   = sum_j t^(-j/q) f_j(r, phi, S(t))
    dphi/dt = omega(r) + sum_j t^(-j/q) g_j(r, phi, S(t))

plus the Duffing chart that carries the Cartesian equation into this form.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import specialfn
from .errors import ConfigError, DomainError, DomainExit


@dataclass(frozen=True)
class PerturbationTerm:
    """Coefficient pair of t^(-j/q); f and g take (r, phi, S), numpy-broadcast."""

    j: int
    f: Callable
    g: Callable


@dataclass(frozen=True)
class OscillatorModel:
    omega: Callable  # r -> (omega, omega', omega'')
    q: int
    R_max: float
    terms: tuple
    label: str = ""
    name: str = "custom"
    params: Mapping = field(default_factory=dict)
    frequency: Callable = None  # fast r -> omega, optional
    scalar_terms: tuple = None  # math-only (j, f, g) for float arguments, optional

    def __post_init__(self):
        if self.frequency is None:
            object.__setattr__(self, "frequency", lambda r: self.omega(r)[0])
        object.__setattr__(self, "terms", tuple(sorted(self.terms, key=lambda p: p.j)))
        if self.scalar_terms is not None:
            object.__setattr__(self, "scalar_terms",
                               tuple(sorted(self.scalar_terms, key=lambda p: p.j)))

    def term(self, j):
        for p in self.terms:
            if p.j == j:
                return p
        return None

    @property
    def is_duffing(self):
        return self.name == "duffing"


@dataclass(frozen=True)
class PolarState:
    r: float
    phi: float
    t: float


@dataclass(frozen=True)
class CartesianState:
    x: float
    y: float
    t: float


def eval_rhs_polar(model, sched, state):
    """(dr/dt, dphi/dt) of the full system at ``state``.

    Raises DomainExit when r is outside (0, R_max).
    """
    r, phi, t = state.r, state.phi, state.t
    if not (0.0 < r < model.R_max):
        raise DomainExit(f"r={r!r} left (0, {model.R_max!r}) at t={t!r}")
    S = sched.phase(t)
    dr = 0.0
    dphi = model.frequency(r)
    for p in model.terms:
        w = t ** (-p.j / model.q)
        dr += w * p.f(r, phi, S)
        dphi += w * p.g(r, phi, S)
    return float(dr), float(dphi)


def polar_rhs(model, sched):
    """Fast closure ``f(t, (r, phi)) -> (dr, dphi)`` for the integrator."""
    src = model.scalar_terms or model.terms
    terms = [(p.j / model.q, p.f, p.g) for p in src]
    freq = model.frequency
    rmax = model.R_max
    phase = sched.phase

    def rhs(t, y):
        r, phi = y
        if not (0.0 < r < rmax):
            raise DomainExit(f"r={r!r} at t={t!r}")
        S = phase(t)
        dr = 0.0
        dphi = freq(r)
        for e, f, g in terms:
            w = t ** -e
            dr += w * f(r, phi, S)
            dphi += w * g(r, phi, S)
        return (float(dr), float(dphi))

    return rhs


def eval_rhs_cartesian_duffing(theta, alpha0, alpha1, beta0, beta1, sched, state):
    """dx = y, dy = -x + theta x^3 + t^(-1/2) (alpha(S) x + beta(S) y)."""
    x, y, t = state.x, state.y, state.t
    S = sched.phase(t)
    sS = math.sin(S)
    z = (alpha0 + alpha1 * sS) * x + (beta0 + beta1 * sS) * y
    return y, -x + theta * x**3 + z / math.sqrt(t)


def cartesian_rhs_duffing(model, sched):
    p = model.params
    theta, a0, a1, b0, b1 = (p["theta"], p["alpha0"], p["alpha1"], p["beta0"], p["beta1"])
    phase = sched.phase

    def rhs(t, y):
        x, v = y
        sS = math.sin(phase(t))
        z = (a0 + a1 * sS) * x + (b0 + b1 * sS) * v
        return (v, -x + theta * x * x * x + z / math.sqrt(t))

    return rhs


def to_polar_duffing(state, theta):
    r, phi = specialfn.duffing_chart_inverse(state.x, state.y, theta)
    return PolarState(r, phi, state.t)


def from_polar_duffing(state, theta):
    X, Y, _ = specialfn.duffing_angle_chart(state.phi, state.r, theta)
    return CartesianState(float(X), float(Y), state.t)


# built-in systems -----------------------------------------------------------

_PARAM_NAMES = ("theta", "alpha0", "alpha1", "beta0", "beta1", "mu0", "mu1")


def _params(params):
    unknown = set(params) - set(_PARAM_NAMES)
    if unknown:
        raise ConfigError(f"unknown system parameters: {sorted(unknown)}")
    out = {k: 0.0 for k in _PARAM_NAMES}
    out["theta"] = 0.25
    out.update({k: float(v) for k, v in params.items()})
    if out["theta"] <= 0:
        raise ConfigError("theta must be positive")
    return out


def _quadratic_omega(theta):
    def omega(r):
        return 1.0 - theta * r * r, -2.0 * theta * r, -2.0 * theta

    return omega, (lambda r: 1.0 - theta * r * r)


def _ex1(p):
    th, b0, b1, m0, m1 = p["theta"], p["beta0"], p["beta1"], p["mu0"], p["mu1"]

    def f1(r, phi, S):
        sS, sp = np.sin(S), np.sin(phi)
        return (b0 + b1 * sS) * r * sp * sp - (m0 + m1 * sS) * sp

    def g1(r, phi, S):
        sS, sp, cp = np.sin(S), np.sin(phi), np.cos(phi)
        return (b0 + b1 * sS) * sp * cp - (m0 + m1 * sS) * cp / r

    def f1s(r, phi, S):
        sS, sp = math.sin(S), math.sin(phi)
        return (b0 + b1 * sS) * r * sp * sp - (m0 + m1 * sS) * sp

    def g1s(r, phi, S):
        sS, sp, cp = math.sin(S), math.sin(phi), math.cos(phi)
        return (b0 + b1 * sS) * sp * cp - (m0 + m1 * sS) * cp / r

    omega, freq = _quadratic_omega(th)
    return OscillatorModel(omega, 2, 1.0 / math.sqrt(th), (PerturbationTerm(1, f1, g1),),
                           label="ex1", name="ex1", params=p, frequency=freq,
                           scalar_terms=(PerturbationTerm(1, f1s, g1s),))


def _ex2(p):
    th, a0, a1, b0, b1 = p["theta"], p["alpha0"], p["alpha1"], p["beta0"], p["beta1"]

    def f1(r, phi, S):
        c = np.cos(phi)
        return -(a0 + a1 * np.sin(S)) * r**3 * np.sin(phi) * c**3

    def g1(r, phi, S):
        return -(a0 + a1 * np.sin(S)) * r * r * np.cos(phi) ** 4

    def f2(r, phi, S):
        return (b0 + b1 * np.sin(S)) * r * np.sin(phi) ** 2

    def g2(r, phi, S):
        return 0.5 * (b0 + b1 * np.sin(S)) * np.sin(2 * phi)

    def f1s(r, phi, S):
        c = math.cos(phi)
        return -(a0 + a1 * math.sin(S)) * r**3 * math.sin(phi) * c**3

    def g1s(r, phi, S):
        return -(a0 + a1 * math.sin(S)) * r * r * math.cos(phi) ** 4

    def f2s(r, phi, S):
        return (b0 + b1 * math.sin(S)) * r * math.sin(phi) ** 2

    def g2s(r, phi, S):
        return 0.5 * (b0 + b1 * math.sin(S)) * math.sin(2 * phi)

    omega, freq = _quadratic_omega(th)
    terms = (PerturbationTerm(1, f1, g1), PerturbationTerm(2, f2, g2))
    fast = (PerturbationTerm(1, f1s, g1s), PerturbationTerm(2, f2s, g2s))
    return OscillatorModel(omega, 2, 1.0 / math.sqrt(th), terms,
                           label="ex2", name="ex2", params=p, frequency=freq, scalar_terms=fast)


def _duffing(p):
    th, a0, a1, b0, b1 = p["theta"], p["alpha0"], p["alpha1"], p["beta0"], p["beta1"]

    def Z(X, Y, S):
        sS = np.sin(S)
        return (a0 + a1 * sS) * X + (b0 + b1 * sS) * Y

    def f1(r, phi, S):
        X, Y, _ = specialfn.duffing_angle_chart(phi, r, th)
        return Y * Z(X, Y, S) / r

    def g1(r, phi, S):
        X, Y, dX = specialfn.duffing_angle_chart(phi, r, th)
        return -specialfn.duffing_omega(r, th) * dX * Z(X, Y, S) / r

    return OscillatorModel(lambda r: specialfn.duffing_omega_derivs(r, th), 2,
                           1.0 / math.sqrt(2.0 * th), (PerturbationTerm(1, f1, g1),),
                           label="duffing", name="duffing", params=p,
                           frequency=lambda r: specialfn.duffing_omega(r, th))


_BUILTINS = {"ex1": _ex1, "ex2": _ex2, "duffing": _duffing}


def builtin(name, params=None):
    """Wire one of the shipped systems: ``duffing``, ``ex1`` or ``ex2``."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown system {name!r}; choose from {sorted(_BUILTINS)}") from None
    return factory(_params(dict(params or {})))


def check_periodicity(model, r, n=16, tol=1e-9):
    """Max deviation of f_j, g_j under phi -> phi + 2 pi and S -> S + 2 pi."""
    phi, S = np.meshgrid(np.linspace(0, 2 * np.pi, n, endpoint=False),
                         np.linspace(0, 2 * np.pi, n, endpoint=False))
    worst = 0.0
    for p in model.terms:
        for fn in (p.f, p.g):
            base = fn(r, phi, S)
            worst = max(worst,
                        np.max(np.abs(fn(r, phi + 2 * np.pi, S) - base)),
                        np.max(np.abs(fn(r, phi, S + 2 * np.pi) - base)))
    if worst > tol:
        raise DomainError(f"perturbation not 2pi-periodic (deviation {worst:.3g})")
    return worst
