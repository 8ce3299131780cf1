"""Forcing phase S(t) = s0 t + sum_{j<q} s_j t^(1-j/q) + s_q log t."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PhaseSchedule:
    q: int
    s: tuple

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ConfigError(f"q must be a positive integer, got {self.q!r}")
        s = tuple(float(v) for v in self.s)
        if len(s) != self.q + 1:
            raise ConfigError(f"need exactly q+1={self.q + 1} coefficients, got {len(s)}")
        if s[0] <= 0:
            raise ConfigError("s0 must be positive")
        object.__setattr__(self, "s", s)

    @property
    def s0(self):
        return self.s[0]

    def coeff(self, j):
        """s_j with the conventions s_j = 0 for j > q."""
        return self.s[j] if 0 <= j <= self.q else 0.0

    def phase(self, t):
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            if np.any(t < 1):
                raise DomainError("S(t) is only evaluated for t >= 1")
            out = self.s[0] * t + self.s[-1] * np.log(t)
            for j in range(1, self.q):
                out = out + self.s[j] * t ** (1.0 - j / self.q)
            return out
        if t < 1:
            raise DomainError("S(t) is only evaluated for t >= 1")
        out = self.s[0] * t + self.s[-1] * math.log(t)
        for j in range(1, self.q):
            out += self.s[j] * t ** (1.0 - j / self.q)
        return out

    def rate(self, t):
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            if np.any(t < 1):
                raise DomainError("S'(t) is only evaluated for t >= 1")
        elif t < 1:
            raise DomainError("S'(t) is only evaluated for t >= 1")
        out = self.s[0] + self.s[-1] / t
        for j in range(1, self.q):
            out = out + self.s[j] * (1.0 - j / self.q) * t ** (-j / self.q)
        return out


def eval_S(sched, t):
    return sched.phase(t)


def eval_S_rate(sched, t):
    return sched.rate(t)
