"""Complete elliptic integral K, Jacobi elliptic functions, and the
action-angle chart of the Duffing well U(x) = x^2/2 - theta x^4/4.

Everything here is computed from the arithmetic-geometric mean, so no
special-function library is needed at runtime.
"""
import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

AGM_TOL = 1e-15
MAX_LANDEN_DEPTH = 32
FD_STEP = 1e-6
# second differences lose ~eps/h^2; this step keeps omega'' good to ~1e-8
FD_STEP_2ND = 1e-4


class JacobiTriple(NamedTuple):
    sn: np.ndarray
    cn: np.ndarray
    dn: np.ndarray


def _check_modulus(k):
    if not (0.0 <= k < 1.0):
        raise DomainError(f"elliptic modulus must lie in [0, 1), got {k!r}")


def _agm_sequence(k):
    """Descending Landen sequences (a_n, c_n) for modulus k."""
    a, b, c = 1.0, math.sqrt(1.0 - k * k), k
    aa, cc = [a], [c]
    for _ in range(MAX_LANDEN_DEPTH):
        if abs(a - b) < AGM_TOL:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        aa.append(a)
        cc.append(c)
    return aa, cc


def complete_elliptic_K(k):
    """K(k) = pi / (2 AGM(1, sqrt(1-k^2))) for 0 <= k < 1."""
    k = float(k)
    _check_modulus(k)
    aa, _ = _agm_sequence(k)
    return math.pi / (2.0 * aa[-1])


def jacobi_am(u, k):
    """Jacobi amplitude am(u, k); sn = sin(am), cn = cos(am)."""
    phis = _landen_phases(u, k)
    return phis[0]


def _landen_phases(u, k, seq=None):
    k = float(k)
    _check_modulus(k)
    aa, cc = _agm_sequence(k) if seq is None else seq
    if isinstance(u, (float, int)):
        return _landen_phases_scalar(float(u), aa, cc)
    u = np.asarray(u, dtype=float)
    depth = len(aa) - 1
    phi = (2.0 ** depth) * aa[-1] * u
    phases = [phi]
    for n in range(depth, 0, -1):
        phi = 0.5 * (phi + np.arcsin(cc[n] * np.sin(phi) / aa[n]))
        phases.append(phi)
    phases.reverse()
    return phases


def _landen_phases_scalar(u, aa, cc):
    depth = len(aa) - 1
    phi = (2.0 ** depth) * aa[-1] * u
    phases = [phi]
    for n in range(depth, 0, -1):
        phi = 0.5 * (phi + math.asin(cc[n] * math.sin(phi) / aa[n]))
        phases.append(phi)
    phases.reverse()
    return phases


def jacobi(u, k):
    """(sn, cn, dn)(u, k) by the descending Landen / AGM recursion.

    ``u`` may be a scalar or an array; ``k`` is a scalar modulus.
    """
    phases = _landen_phases(u, k)
    phi0 = phases[0]
    sn, cn = np.sin(phi0), np.cos(phi0)
    # dn > 0 for real u; the Landen ratio cn / cos(phi1 - phi0) is 0/0 at cn = 0
    dn = np.sqrt(1.0 - k * k * sn * sn)
    if np.ndim(u) == 0:
        return JacobiTriple(float(sn), float(cn), float(dn))
    return JacobiTriple(sn, cn, dn)


def _duffing_rmax(theta):
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    return 1.0 / math.sqrt(2.0 * theta)


def _check_radius(r, theta):
    rmax = _duffing_rmax(theta)
    if not (0.0 < r < rmax):
        raise DomainError(f"r={r!r} outside (0, {rmax!r}) for theta={theta!r}")
    return rmax


def _modulus_bisect(r, theta, tol=1e-13):
    target = theta * r * r / 2.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * mid / (1.0 + mid * mid) ** 2 < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def duffing_modulus(r, theta):
    """Root k_r in (0, 1) of (k + 1/k)^(-2) = theta r^2 / 2."""
    _check_radius(r, theta)
    disc = 1.0 - 2.0 * theta * r * r
    if disc < 1e-10:
        return min(_modulus_bisect(r, theta), math.nextafter(1.0, 0.0))
    s = math.sqrt(disc)
    return math.sqrt((1.0 - s) / (1.0 + s))


def duffing_omega(r, theta):
    """Natural frequency 2 pi / T(r) with T(r) = 4 K(k_r) sqrt(1 + k_r^2)."""
    k = duffing_modulus(r, theta)
    return math.pi / (2.0 * complete_elliptic_K(k) * math.sqrt(1.0 + k * k))


def duffing_omega_derivs(r, theta):
    """(omega, omega', omega'') at r; derivatives by central differences."""
    rmax = _check_radius(r, theta)
    w = duffing_omega(r, theta)
    room = 0.5 * min(r, rmax - r)
    h1 = min(FD_STEP * max(1.0, r), room)
    h2 = min(FD_STEP_2ND * max(1.0, r), room)
    wp = (duffing_omega(r + h1, theta) - duffing_omega(r - h1, theta)) / (2 * h1)
    wpp = (duffing_omega(r + h2, theta) - 2 * w + duffing_omega(r - h2, theta)) / h2**2
    return w, wp, wpp


def _chart_xy(phi, r, theta):
    k = duffing_modulus(r, theta)
    K = complete_elliptic_K(k)
    sn, cn, dn = jacobi(2.0 * K * np.asarray(phi, dtype=float) / math.pi, k)
    return r * math.sqrt(1.0 + k * k) * sn, r * cn * dn


def duffing_angle_chart(phi, r, theta):
    """Action-angle chart of the Duffing well.

    Returns ``(X, Y, dX/dr)`` at angle ``phi`` (scalar or array) on the level
    curve U(X) + Y^2/2 = r^2/2. Both X and Y are 2 pi periodic in ``phi``.
    """
    rmax = _check_radius(r, theta)
    X, Y = _chart_xy(phi, r, theta)
    h = min(FD_STEP, 0.5 * min(r, rmax - r))
    Xp, _ = _chart_xy(phi, r + h, theta)
    Xm, _ = _chart_xy(phi, r - h, theta)
    return X, Y, (Xp - Xm) / (2 * h)


def duffing_potential(x, theta):
    return 0.5 * x * x - 0.25 * theta * x**4


def duffing_chart_inverse(x, y, theta, tol=1e-12, max_iter=50):
    """Invert the chart: (x, y) -> (r, phi) with phi in [0, 2 pi).

    The amplitude am(u) is monotone in u, so phi is found by Newton on
    am(u) = target with bisection fallback.
    """
    r2 = 2.0 * duffing_potential(x, theta) + y * y
    if r2 <= 0.0:
        raise DomainError("the origin has no angle")
    r = math.sqrt(r2)
    _check_radius(r, theta)
    k = duffing_modulus(r, theta)
    K = complete_elliptic_K(k)
    sn = max(-1.0, min(1.0, x / (r * math.sqrt(1.0 + k * k))))
    dn = math.sqrt(1.0 - k * k * sn * sn)
    cn = y / (r * dn)
    target = math.atan2(sn, cn) % (2.0 * math.pi)

    seq = _agm_sequence(k)

    def g(u):
        return _landen_phases(float(u), k, seq)[0] - target

    u = 2.0 * K * target / math.pi
    for _ in range(max_iter):
        am = _landen_phases(u, k, seq)[0]
        step = (am - target) / math.sqrt(1.0 - k * k * math.sin(am) ** 2)
        u -= step
        if abs(step) < tol:
            break
    else:
        lo, hi = 0.0, 4.0 * K
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if g(mid) < 0:
                lo = mid
            else:
                hi = mid
        u = 0.5 * (lo + hi)
    return r, (math.pi * u / (2.0 * K)) % (2.0 * math.pi)
