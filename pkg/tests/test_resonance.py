import math

import pytest

from resonate.errors import ConfigError, NoResonance
from resonate.resonance import find_resonant_amplitude
from resonate.schedule import PhaseSchedule
from resonate.system import builtin

# root of 2 pi / T(r) = 3/4 with T by quadrature (theta = 1/4), frozen
DUFFING_A = 1.2738633570932896


def test_duffing_resonant_amplitude():
    res = find_resonant_amplitude(builtin("duffing", {"theta": 0.25}),
                                  PhaseSchedule(2, (1.5, 0.0, 0.0)), 1, 2)
    assert abs(res.a - 1.27) < 0.01
    assert abs(res.a - DUFFING_A) < 1e-10
    assert res.eta < 0 and res.ratio == 0.5


@pytest.mark.parametrize("s0,kappa,varkappa,a", [(0.5, 1, 1, math.sqrt(2)), (1.0, 1, 2, math.sqrt(2)),
                                                 (0.25, 2, 1, math.sqrt(2))])
def test_ex1_amplitude(s0, kappa, varkappa, a):
    res = find_resonant_amplitude(builtin("ex1", {"theta": 0.25}),
                                  PhaseSchedule(2, (s0, 0.0, 0.0)), kappa, varkappa)
    assert abs(res.a - a) < 1e-11
    assert abs(res.eta + 2 * 0.25 * a) < 1e-12  # omega'(a) = -2 theta a


def test_no_resonance():
    with pytest.raises(NoResonance):
        find_resonant_amplitude(builtin("ex1"), PhaseSchedule(2, (3.0, 0, 0)), 1, 1)


def test_kappa_validation():
    with pytest.raises(ConfigError):
        find_resonant_amplitude(builtin("ex1"), PhaseSchedule(2, (0.5, 0, 0)), 2, 2)
