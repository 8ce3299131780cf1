"""Resonant amplitude: kappa s0 = varkappa omega(a) with eta = omega'(a) != 0."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import ConfigError, DegenerateResonance, NoResonance

SCAN_POINTS = 400
EDGE = 1e-3


@dataclass(frozen=True)
class ResonanceData:
    kappa: int
    varkappa: int
    a: float
    eta: float
    omega_pp: float = 0.0
    all_roots: tuple = field(default=())

    @property
    def ratio(self):
        return self.kappa / self.varkappa


def find_resonant_amplitude(model, sched, kappa, varkappa):
    if kappa < 1 or varkappa < 1 or math.gcd(int(kappa), int(varkappa)) != 1:
        raise ConfigError(f"kappa={kappa}, varkappa={varkappa} must be coprime positive integers")
    target = kappa * sched.s0 / varkappa
    grid = np.linspace(EDGE, model.R_max - EDGE, SCAN_POINTS)
    vals = np.array([model.frequency(r) - target for r in grid])

    def resid(r):
        return model.frequency(r) - target

    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(bisect(resid, grid[i], grid[i + 1], xtol=1e-12, maxiter=200))
    if not roots:
        raise NoResonance(f"omega(r) never equals kappa*s0/varkappa = {target:.6g} on "
                          f"({EDGE}, {model.R_max - EDGE:.6g})")
    a = min(roots)
    _, eta, wpp = model.omega(a)
    if abs(eta) < 1e-8:
        raise DegenerateResonance(f"omega'(a) = {eta:.3g} at a = {a:.12g}")
    return ResonanceData(int(kappa), int(varkappa), float(a), float(eta), float(wpp), tuple(roots))
