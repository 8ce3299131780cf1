import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonate.errors import ConfigError, DomainError
from resonate.schedule import PhaseSchedule, eval_S, eval_S_rate


def test_phase_formula():
    sc = PhaseSchedule(2, (0.5, 1.0, 0.3))
    t = 7.0
    assert abs(sc.phase(t) - (0.5 * t + math.sqrt(t) + 0.3 * math.log(t))) < 1e-12
    assert eval_S(sc, t) == sc.phase(t)
    assert np.allclose(sc.phase(np.array([t, 2 * t])), [sc.phase(t), sc.phase(2 * t)])


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 1e5), st.floats(0.1, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_rate_is_derivative(t, s0, s1, s2):
    sc = PhaseSchedule(2, (s0, s1, s2))
    h = 1e-6 * t
    fd = (sc.phase(t + h) - sc.phase(t - h)) / (2 * h) if t - h >= 1 else None
    if fd is not None:
        assert abs(eval_S_rate(sc, t) - fd) < 1e-5 * max(1.0, abs(fd))


def test_coeff_convention():
    sc = PhaseSchedule(2, (1.0, 0.2, 0.1))
    assert sc.s0 == 1.0 and sc.coeff(1) == 0.2 and sc.coeff(3) == 0.0


def test_validation():
    with pytest.raises(ConfigError):
        PhaseSchedule(2, (1.0, 0.0))
    with pytest.raises(ConfigError):
        PhaseSchedule(2, (0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        PhaseSchedule(1, (1.0, 0.0)).phase(0.5)
