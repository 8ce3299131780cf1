import pytest

from resonate.averaging import compute_expansion
from resonate.resonance import find_resonant_amplitude
from resonate.schedule import PhaseSchedule
from resonate.system import builtin

EX1_BASE = dict(theta=0.25, beta1=0.5, mu0=-0.5, mu1=1.0)


def build(name, params, s, kappa, varkappa, N=2):
    model, sched = builtin(name, params), PhaseSchedule(len(s) - 1, s)
    res = find_resonant_amplitude(model, sched, kappa, varkappa)
    return model, sched, res, compute_expansion(model, sched, res, N)


@pytest.fixture(scope="session")
def ex1_stable():
    """Ex1, s0 = 1/2, beta0 = -1/2: stable root at 3 pi / 4."""
    return build("ex1", dict(EX1_BASE, beta0=-0.5), (0.5, 1.0, 0.0), 1, 1)
