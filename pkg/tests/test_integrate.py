import csv
import math

import numpy as np
import pytest

from resonate.asymptotics import eval_partial_sum, solve_coefficients
from resonate.classify import analyze_expansion
from resonate.errors import ConfigError
from resonate.integrate import (ESCAPED_TUBE, LEFT_DOMAIN, LOCKED, EventFunction,
                                IntegratorConfig, TubeMonitor, detect_phase_locking, dopri5,
                                integrate_full, integrate_limiting, integrate_truncated)
from resonate.schedule import PhaseSchedule
from resonate.system import CartesianState, PolarState, builtin

from conftest import EX1_BASE

# Frozen from scipy solve_ivp(DOP853, rtol=1e-13, atol=1e-14) on the same right-hand sides
EX1_R200, EX1_PHI200 = 1.3901855555151703, 110.24037185068102
DUF_X100, DUF_Y100 = -1.2816616915619818, 0.5888904545075883


def test_harmonic_oscillator():
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13, t_start=1.0, t_end=1.0 + 20.0)
    t, y, _, status = dopri5(lambda t, y: (y[1], -y[0]), (1.0, 0.0), cfg)
    assert status == "completed"
    assert np.max(np.abs(y[:, 0] - np.cos(t - 1.0))) < 1e-8
    assert abs(t[-1] - 21.0) < 1e-12


def test_event_localisation():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_start=1.0, t_end=5.0)
    ev = EventFunction(lambda t, y: y[0] - 0.5, "half", terminal=True)
    t, y, hits, status = dopri5(lambda t, y: (y[1], -y[0]), (1.0, 0.0), cfg, [ev])
    assert status == "event" and len(hits) == 1
    te, ye, kind = hits[0]
    assert kind == "half" and abs(te - (1.0 + math.pi / 3)) < 1e-7
    assert abs(ye[0] - 0.5) < 1e-7 and t[-1] <= te


def test_non_terminal_event_records_all_crossings():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_start=1.0, t_end=1.0 + 4 * math.pi)
    ev = EventFunction(lambda t, y: y[0], "zero", terminal=False, direction=0)
    _, _, hits, status = dopri5(lambda t, y: (y[1], -y[0]), (1.0, 0.0), cfg, [ev])
    assert status == "completed"
    want = 1.0 + math.pi / 2 + math.pi * np.arange(4)
    assert np.allclose([h[0] for h in hits], want, atol=1e-7)


def test_ex1_polar_matches_frozen_oracle():
    model = builtin("ex1", dict(EX1_BASE, beta0=-0.5))
    sched = PhaseSchedule(2, (0.5, 1.0, 0.0))
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13, t_start=1.0, t_end=200.0)
    traj = integrate_full(model, sched, cfg, PolarState(1.2, 0.3, 1.0))
    assert traj.status == "completed"
    assert abs(traj.r[-1] - EX1_R200) < 1e-7
    assert abs(traj.phi[-1] - EX1_PHI200) < 1e-6


def test_duffing_cartesian_matches_frozen_oracle():
    model = builtin("duffing", dict(theta=0.25, alpha0=0.5, alpha1=0.6, beta0=-0.1, beta1=0.0))
    sched = PhaseSchedule(2, (1.5, 0.0, 0.0))
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13, t_start=1.0, t_end=100.0, n_output=50)
    traj = integrate_full(model, sched, cfg, CartesianState(0.8, 0.1, 1.0))
    assert traj.kind == "full-cartesian"
    x, y, _ = __import__("resonate.specialfn", fromlist=["x"]).duffing_angle_chart(
        traj.phi[-1], traj.r[-1], 0.25)
    assert abs(x - DUF_X100) < 1e-6 and abs(y - DUF_Y100) < 1e-6


def test_unperturbed_radius_is_constant():
    model = builtin("ex1", dict(theta=0.25))
    sched = PhaseSchedule(2, (0.5, 1.0, 0.0))
    cfg = IntegratorConfig(t_start=1.0, t_end=500.0)
    traj = integrate_full(model, sched, cfg, (1.1, 0.0))
    assert np.max(np.abs(traj.r - 1.1)) < 1e-10
    # phi' = omega(r) = 1 - theta r^2
    assert abs(traj.phi[-1] - (1 - 0.25 * 1.21) * 499.0) < 1e-6


def test_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(t_start=0.5)
    with pytest.raises(ConfigError):
        IntegratorConfig(t_start=10.0, t_end=5.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(n_output=1)


@pytest.fixture(scope="module")
def locked_setup(ex1_stable):
    model, sched, res, exp = ex1_stable
    c = analyze_expansion(exp, res)
    root = c.stable_roots()[0]
    sol = solve_coefficients(exp, res, c.n, c.m, root.psi0)
    return model, sched, res, exp, c, sol


def test_truncated_escape_case3():
    from conftest import build
    _, sched, res, exp = build("ex1", dict(theta=0.25, beta0=0.3), (0.25, 0.0, 0.0), 2, 1)
    cfg = IntegratorConfig(t_start=1.0, t_end=1e5)
    traj = integrate_truncated(exp, cfg, (0.0, 0.0), res, sched, rho_bound=2.0)
    assert traj.has_event(LEFT_DOMAIN) and traj.first_event(LEFT_DOMAIN) < 1e5
    assert abs(abs(traj.rho_chan[-1]) - 2.0) < 1e-6


def test_tube_monitor_locked_and_csv(locked_setup, tmp_path):
    model, sched, res, exp, c, sol = locked_setup
    t0 = 10.0
    rho_s, phi_s = eval_partial_sum(sol, 0, t0)
    r0 = res.a + t0 ** -0.25 * rho_s
    phi = res.ratio * sched.phase(t0) + phi_s
    cfg = IntegratorConfig(t_start=t0, t_end=2000.0)
    # the first few periods after t0 = 10 leave the tube transiently; monitor from 100
    mon = TubeMonitor(sol, res, sched, eps=0.3, t_star=100.0, exp=exp)
    traj = integrate_full(model, sched, cfg, PolarState(r0, phi, t0), res, [mon])
    rep = detect_phase_locking(traj, mon, horizon=2000.0)
    assert rep.status == LOCKED and rep.max_functional < 0.3
    assert abs(traj.theta[-1] - 3 * math.pi / 4) < 0.1
    path = tmp_path / "run.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "r", "phi", "theta", "rho_chan", "psi_chan", "event"]
    assert rows[-1][-1] == LOCKED


def test_tube_monitor_escape_flagged(locked_setup):
    model, sched, res, exp, c, sol = locked_setup
    t0 = 10.0
    phi = res.ratio * sched.phase(t0) + sol.psi0 + 1.0  # far outside eps
    cfg = IntegratorConfig(t_start=t0, t_end=100.0)
    mon = TubeMonitor(sol, res, sched, eps=0.3, t_star=t0, exp=exp, terminal=True)
    traj = integrate_full(model, sched, cfg, PolarState(res.a, phi, t0), res, [mon])
    rep = detect_phase_locking(traj, mon, horizon=100.0)
    assert rep.status == ESCAPED_TUBE


def test_limiting_system_matches_scipy(locked_setup):
    from scipy.integrate import solve_ivp
    _, _, res, exp, c, sol = locked_setup
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13, t_start=10.0, t_end=1e4, n_output=20)
    traj = integrate_limiting(exp, res, c.n, cfg, (0.05, 0.05), sol.psi0)
    assert traj.kind == "limiting" and traj.status == "completed"
    L = exp.Lambda[c.n]

    def rhs(t, y):
        return [t ** -0.25 * L.scalar(y[0], sol.psi0 + y[1]), t ** -0.25 * res.eta * y[0]]

    ref = solve_ivp(rhs, (10.0, 1e4), [0.05, 0.05], method="DOP853", rtol=1e-12, atol=1e-14)
    assert abs(traj.rho_chan[-1] - ref.y[0, -1]) < 1e-7
    assert abs(traj.psi_chan[-1] - ref.y[1, -1]) < 1e-7
