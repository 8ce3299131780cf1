"""Closed-form averaged coefficients for the built-in examples.

These serve two purposes: as oracles for the generic averaging engine and as
user-supplied higher orders (Ex2 needs orders 3 and 4, beyond the generic
engine's reach). Every function takes (rho, psi) and broadcasts.
"""
import math

import numpy as np

from .averaging import register_closed_form


def ex1_case1(theta, beta0, mu1, s1):
    """kappa = varkappa = 1, s0 = 1/2."""
    w = math.sqrt(2 * theta)
    return {
        "Lambda1": lambda rho, psi: 0.5 * (beta0 / w - mu1 * np.cos(psi)) + 0 * rho,
        "Lambda2": lambda rho, psi: 0.5 * beta0 * rho + 0 * psi,
        "Omega1": lambda rho, psi: -w * rho + 0 * psi,
        "Omega2": lambda rho, psi: 0.5 * (-2 * theta * rho**2 - s1 + mu1 * w * np.sin(psi)),
    }


def ex1_case2(theta, beta0, beta1, s1):
    """kappa = 1, varkappa = 2, s0 = 1."""
    w = math.sqrt(2 * theta)
    return {
        "Lambda1": lambda rho, psi: (beta0 + 0.5 * beta1 * np.sin(2 * psi)) / math.sqrt(8 * theta) + 0 * rho,
        "Lambda2": lambda rho, psi: 0.5 * rho * (beta0 + 0.5 * beta1 * np.sin(2 * psi)),
        "Omega1": lambda rho, psi: -w * rho + 0 * psi,
        "Omega2": lambda rho, psi: 0.25 * (-4 * theta * rho**2 - s1 + beta1 * np.cos(2 * psi)),
    }


def ex1_case3(theta, beta0):
    """kappa = 2, varkappa = 1, s0 = 1/4."""
    a = 1 / math.sqrt(2 * theta)
    return {
        "Lambda1": lambda rho, psi: a * beta0 / 2 + 0 * rho + 0 * psi,
        "Omega1": lambda rho, psi: -math.sqrt(2 * theta) * rho + 0 * psi,
    }


def ex2(theta, alpha0, alpha1, beta0, beta1, s1, s2):
    """kappa = 1, varkappa = 2, s0 = 1 (so that a = (2 theta)^(-1/2)); orders 1 through 4."""
    a = 1 / math.sqrt(2 * theta)
    th, a0, a1, b0, b1 = theta, alpha0, alpha1, beta0, beta1
    c2 = lambda psi: np.cos(2 * psi)
    s2p = lambda psi: np.sin(2 * psi)
    s4 = lambda psi: np.sin(4 * psi)

    def L1(rho, psi):
        return -a**3 * a1 / 8 * c2(psi) + 0 * rho

    def L2(rho, psi):
        return -3 * a**2 * a1 * rho / 8 * c2(psi)

    def L3(rho, psi):
        return a / 32 * (16 * b0
                         - a1 * (12 * a**4 * a0 + 12 * rho**2 + 5 * a**6 * a0 * th) * c2(psi)
                         + 8 * b1 * s2p(psi) + 3 * a**4 * a1**2 * s4(psi))

    def L4(rho, psi):
        return -rho / 64 * (
            a1 * (111 * a**4 * a0 + 8 * rho**2 + 336 * a**6 * a0 * th
                  + 432 * a**8 * a0 * th**2) * c2(psi)
            - 2 * (8 + 16 * b0 + 8 * b1 * s2p(psi)
                   + 3 * a**4 * a1**2 * (5 + 16 * a**2 * th) * s4(psi)))

    def O1(rho, psi):
        return -math.sqrt(2 * th) * rho + 0 * psi

    def O2(rho, psi):
        return (-3 * a**2 * a0 - 2 * s1 - 8 * rho**2 * th
                + 4 * a**2 * a1 * np.cos(psi) * np.sin(psi)) / 8

    def O3(rho, psi):
        return a * rho / 4 * (-3 * a0 + 2 * a1 * s2p(psi))

    def O4(rho, psi):
        return (-54 * (a**4 * (57 * a0**2 + 8 * a1**2) + 24 * a0 * rho**2 + 32 * s2)
                - 3 * a**6 * (3537 * a0**2 + 437 * a1**2) * th
                - 16 * a**8 * (918 * a0**2 + 139 * a1**2) * th**2
                + 864 * b1 * c2(psi)
                + 54 * a1 * (3 * a**4 * a1 * (3 + 8 * a**2 * th) * np.cos(4 * psi)
                             + (16 * rho**2 + a**4 * a0 * (67 + a**2 * th * (173 + 216 * a**2 * th)))
                             * s2p(psi))) / 3456

    return {"Lambda1": L1, "Lambda2": L2, "Lambda3": L3, "Lambda4": L4,
            "Omega1": O1, "Omega2": O2, "Omega3": O3, "Omega4": O4}


def closed_forms_for(model, sched, kappa, varkappa):
    """Closed forms matching a built-in configuration, or None if none is known."""
    p = model.params
    s = list(sched.s) + [0.0] * 3
    key = (model.name, kappa, varkappa, sched.s0)
    if key == ("ex1", 1, 1, 0.5):
        return ex1_case1(p["theta"], p["beta0"], p["mu1"], s[1])
    if key == ("ex1", 1, 2, 1.0):
        return ex1_case2(p["theta"], p["beta0"], p["beta1"], s[1])
    if key == ("ex1", 2, 1, 0.25):
        return ex1_case3(p["theta"], p["beta0"])
    if key == ("ex2", 1, 2, 1.0):
        return ex2(p["theta"], p["alpha0"], p["alpha1"], p["beta0"], p["beta1"], s[1], s[2])
    return None


def register_orders(exp, forms, orders):
    """Register the closed forms of the given orders onto ``exp``."""
    for k in orders:
        exp = register_closed_form(exp, k, forms.get(f"Lambda{k}"), forms.get(f"Omega{k}"))
    return exp
