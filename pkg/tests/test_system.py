import math

import numpy as np
import pytest

from resonate import specialfn
from resonate.errors import ConfigError, DomainExit
from resonate.schedule import PhaseSchedule
from resonate.system import (CartesianState, PolarState, builtin, check_periodicity,
                             eval_rhs_cartesian_duffing, eval_rhs_polar, from_polar_duffing,
                             polar_rhs, to_polar_duffing)


@pytest.mark.parametrize("name", ["ex1", "ex2", "duffing"])
def test_builtins_periodic(name):
    m = builtin(name, dict(beta0=0.3, beta1=0.2, alpha0=0.1, alpha1=0.2, mu0=0.1, mu1=0.4)
                if name != "ex1" else dict(beta0=0.3, beta1=0.2, mu0=0.1, mu1=0.4))
    assert check_periodicity(m, 0.9) < 1e-9


def test_unknown_system_and_param():
    with pytest.raises(ConfigError):
        builtin("vanderpol")
    with pytest.raises(ConfigError):
        builtin("ex1", {"gamma": 1.0})


def test_scalar_and_array_terms_agree():
    m = builtin("ex2", dict(alpha0=0.1, alpha1=0.2, beta0=-0.3, beta1=0.4))
    sc = PhaseSchedule(2, (1.0, 1.0, 0.0))
    fast = polar_rhs(m, sc)
    for t, r, phi in ((3.0, 1.1, 0.4), (50.0, 0.7, 2.9)):
        assert np.allclose(fast(t, (r, phi)), eval_rhs_polar(m, sc, PolarState(r, phi, t)),
                           atol=1e-14)


def test_polar_domain_exit():
    m = builtin("ex1")
    with pytest.raises(DomainExit):
        eval_rhs_polar(m, PhaseSchedule(2, (0.5, 0, 0)), PolarState(2.5, 0.0, 1.0))


def test_ex1_frequency():
    m = builtin("ex1", {"theta": 0.25})
    w, wp, wpp = m.omega(math.sqrt(2))
    assert abs(w - 0.5) < 1e-15 and abs(wp + math.sqrt(2) / 2) < 1e-15 and wpp == -0.5


def test_duffing_polar_matches_cartesian():
    """The polar rhs is the Cartesian vector field pulled back by the chart."""
    p = dict(theta=0.25, alpha0=0.5, alpha1=0.6, beta0=-0.1, beta1=0.2)
    m = builtin("duffing", p)
    sc = PhaseSchedule(2, (1.5, 0.0, 0.0))
    r, phi, t, h = 1.0, 0.8, 4.0, 1e-7
    dr, dphi = eval_rhs_polar(m, sc, PolarState(r, phi, t))
    c = from_polar_duffing(PolarState(r, phi, t), 0.25)
    dx, dy = eval_rhs_cartesian_duffing(0.25, 0.5, 0.6, -0.1, 0.2, sc, c)
    # push (dr, dphi) forward through the chart by finite differences
    X1, Y1, _ = specialfn.duffing_angle_chart(phi + h * dphi, r + h * dr, 0.25)
    X0, Y0, _ = specialfn.duffing_angle_chart(phi - h * dphi, r - h * dr, 0.25)
    assert abs((X1 - X0) / (2 * h) - dx) < 1e-6 and abs((Y1 - Y0) / (2 * h) - dy) < 1e-6


def test_duffing_state_round_trip():
    c = CartesianState(0.7, -0.4, 2.0)
    p = to_polar_duffing(c, 0.25)
    back = from_polar_duffing(p, 0.25)
    assert abs(back.x - c.x) < 1e-12 and abs(back.y - c.y) < 1e-12 and p.t == 2.0
