"""Named verification suites: each check prints its value, tolerance and margin."""
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .. import reference, specialfn
from ..asymptotics import residual_slopes, solve_coefficients
from ..averaging import compute_expansion
from ..classify import Verdict, analyze_expansion, limiting_eigenvalues
from ..integrate import (ESCAPED_TUBE, EventFunction, IntegratorConfig, LEFT_DOMAIN, dopri5,
                         integrate_full, integrate_truncated)
from ..resonance import find_resonant_amplitude
from ..schedule import PhaseSchedule
from ..system import builtin
from .config import from_dict
from .scenarios import run_simulate

SUITES = ("specialfn", "averaging", "classify", "asymptotics", "integrate", "figures")


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float
    passed: bool
    seconds: float = 0.0

    @property
    def margin(self):
        return self.tol - self.value

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  {self.suite}.{self.name}  value={self.value:.3e}  tol={self.tol:.3e}  "
                f"margin={self.margin:.3e}  ({self.seconds:.1f}s)")


def _upper(suite, name, value, tol, t0):
    value = float(value)
    return Check(suite, name, value, tol, bool(value <= tol), time.time() - t0)


def _flag(suite, name, ok, t0):
    return Check(suite, name, 0.0 if ok else 1.0, 0.0, bool(ok), time.time() - t0)


# specialfn -----------------------------------------------------------------

def suite_specialfn():
    from scipy.special import ellipj, ellipk
    out = []
    t0 = time.time()
    out.append(_upper("specialfn", "K(0)", abs(specialfn.complete_elliptic_K(0.0) - math.pi / 2),
                      1e-12, t0))
    t0 = time.time()
    ks = np.linspace(0.0, 0.99, 34)
    errK = max(abs(specialfn.complete_elliptic_K(k) - ellipk(k * k)) / ellipk(k * k) for k in ks)
    out.append(_upper("specialfn", "K_vs_oracle_rel", errK, 1e-12, t0))
    t0 = time.time()
    u = np.linspace(-10, 10, 401)
    worst = worst_dn = worst_or = 0.0
    for k in ks:
        sn, cn, dn = specialfn.jacobi(u, k)
        worst = max(worst, np.max(np.abs(sn**2 + cn**2 - 1)))
        worst_dn = max(worst_dn, np.max(np.abs(dn**2 + k * k * sn**2 - 1)))
        ref = ellipj(u, k * k)
        worst_or = max(worst_or, np.max(np.abs(np.array([sn, cn, dn]) - np.array(ref[:3]))))
    out.append(_upper("specialfn", "sn2+cn2-1", worst, 1e-10, t0))
    out.append(_upper("specialfn", "dn2+k2sn2-1", worst_dn, 1e-10, t0))
    out.append(_upper("specialfn", "jacobi_vs_oracle", worst_or, 1e-10, t0))
    t0 = time.time()
    th = 0.25
    phi = np.linspace(0, 2 * np.pi, 257)
    worst = 0.0
    for r in np.linspace(0.05, 1.35, 27):
        X, Y, _ = specialfn.duffing_angle_chart(phi, r, th)
        worst = max(worst, np.max(np.abs(specialfn.duffing_potential(X, th) + Y**2 / 2 - r * r / 2)))
    out.append(_upper("specialfn", "chart_energy", worst, 1e-8, t0))
    t0 = time.time()
    th = 0.01
    err = max(abs(specialfn.duffing_omega(r, th) - (1 - 3 * th * r * r / 8
                                                     - 35 * th * th * r**4 / 256))
              for r in (0.2, 0.5, 0.8))
    out.append(_upper("specialfn", "omega_series", err, 1e-5, t0))
    t0 = time.time()
    m = builtin("duffing", {"theta": 0.25})
    a = find_resonant_amplitude(m, PhaseSchedule(2, (1.5, 0, 0)), 1, 2).a
    out.append(_upper("specialfn", "duffing_a_1.27", abs(a - 1.27), 0.01, t0))
    return out


# averaging -----------------------------------------------------------------

def _max_delta(term, fn, rhos=(-1.0, 0.0, 1.0)):
    psi = np.linspace(0, 2 * np.pi, 97)
    return max(float(np.max(np.abs(term(r, psi) - fn(r, psi)))) for r in rhos)


def _expansion(name, params, s, kappa, varkappa):
    m, sc = builtin(name, params), PhaseSchedule(2, s)
    res = find_resonant_amplitude(m, sc, kappa, varkappa)
    return m, sc, res, compute_expansion(m, sc, res, 2)


def suite_averaging():
    out = []
    t0 = time.time()
    p = dict(theta=0.25, beta0=-0.3, beta1=0.5, mu0=-0.5, mu1=1.0)
    _, _, _, e = _expansion("ex1", p, (0.5, 1.0, 0.0), 1, 1)
    cf = reference.ex1_case1(0.25, -0.3, 1.0, 1.0)
    for k in ("Lambda1", "Lambda2", "Omega2"):
        term = (e.Lambda if k[0] == "L" else e.Omega)[int(k[-1])]
        out.append(_upper("averaging", f"case1_{k}", _max_delta(term, cf[k]), 1e-7, t0))
    t0 = time.time()
    _, _, _, e = _expansion("ex1", p, (1.0, 1.0, 0.0), 1, 2)
    cf = reference.ex1_case2(0.25, -0.3, 0.5, 1.0)
    out.append(_upper("averaging", "case2_Lambda1", _max_delta(e.Lambda[1], cf["Lambda1"]),
                      1e-7, t0))
    t0 = time.time()
    _, _, _, e = _expansion("ex1", dict(theta=0.25, beta0=0.3), (0.25, 0.0, 0.0), 2, 1)
    cf = reference.ex1_case3(0.25, 0.3)
    out.append(_upper("averaging", "case3_Lambda1", _max_delta(e.Lambda[1], cf["Lambda1"]),
                      1e-7, t0))
    t0 = time.time()
    p2 = dict(theta=0.25, alpha0=0.1, alpha1=0.15, beta0=-0.8, beta1=0.3)
    _, _, _, e = _expansion("ex2", p2, (1.0, 1.0, 0.0), 1, 2)
    cf = reference.ex2(0.25, 0.1, 0.15, -0.8, 0.3, 1.0, 0.0)
    worst = max(_max_delta((e.Lambda if k[0] == "L" else e.Omega)[int(k[-1])], cf[k])
                for k in ("Lambda1", "Lambda2", "Omega1", "Omega2"))
    out.append(_upper("averaging", "ex2_orders_1_2", worst, 1e-7, t0))
    return out


# classify ------------------------------------------------------------------

EX1_BASE = dict(theta=0.25, beta1=0.5, mu0=-0.5, mu1=1.0)


def ex1_case1_verdicts(beta0, mu1=1.0):
    p = dict(EX1_BASE, beta0=beta0, mu1=mu1)
    _, _, res, e = _expansion("ex1", p, (0.5, 1.0, 0.0), 1, 1)
    return analyze_expansion(e, res)


def ex2_classification(alpha1, beta0, beta1, alpha0=0.1):
    p = dict(theta=0.25, alpha0=alpha0, alpha1=alpha1, beta0=beta0, beta1=beta1)
    m, sc, res, e = _expansion("ex2", p, (1.0, 1.0, 0.0), 1, 2)
    e = reference.register_orders(e, reference.closed_forms_for(m, sc, 1, 2), (3, 4))
    return analyze_expansion(e, res)


def suite_classify():
    out = []
    t0 = time.time()
    ok = True
    for b0 in (-0.6, -0.5, -0.25, -0.05):
        c = ex1_case1_verdicts(b0)
        st = c.stable_roots()
        ok &= len(st) == 1 and st[0].verdict == Verdict.StableLockingViaDh and st[0].h == 2 \
            and abs(st[0].d_h - b0) < 1e-9
        ok &= all(r.verdict in (Verdict.StableLockingViaDh, Verdict.SaddleUnstable) for r in c.roots)
    out.append(_flag("classify", "ex1_case1_stable_region", ok, t0))
    t0 = time.time()
    ok = True
    for b0 in (0.05, 0.25, 0.6):
        c = ex1_case1_verdicts(b0)
        ok &= not c.stable_roots() and Verdict.UnstableLockingViaDh in c.verdicts
    out.append(_flag("classify", "ex1_case1_unstable_region", ok, t0))
    t0 = time.time()
    ok = all(ex1_case1_verdicts(b0).verdicts == [Verdict.NoLocking] for b0 in (-1.0, -0.75, 0.8))
    ok &= ex1_case1_verdicts(0.3, mu1=0.0).verdicts == [Verdict.NoLocking]
    out.append(_flag("classify", "ex1_case1_no_locking", ok, t0))
    t0 = time.time()
    ok = True
    for b0 in (-0.4, 0.3):
        _, _, res, e = _expansion("ex1", dict(theta=0.25, beta0=b0), (0.25, 0.0, 0.0), 2, 1)
        ok &= analyze_expansion(e, res).verdicts == [Verdict.NoLocking]
    out.append(_flag("classify", "ex1_case3_no_locking", ok, t0))
    t0 = time.time()
    worst, ok = 0.0, True
    for a1, b0, b1 in ((0.15, -0.8, 0.3), (-0.15, -0.8, -0.3), (0.15, -0.2, 0.3)):
        c = ex2_classification(a1, b0, b1)
        for r in c.roots:
            if r.verdict == Verdict.SaddleUnstable:
                continue
            kk = _ex2_k(r.psi0)
            sign = (-1) ** kk
            d_expected = (1 + 2 * b0 + (-1) ** (kk + 1) * b1) / 4
            worst = max(worst, abs(r.d_h - d_expected))
            stable_expected = sign * a1 > 0 and sign * b1 > 1 + 2 * b0
            ok &= r.verdict.stable == stable_expected
    out.append(_flag("classify", "ex2_stability_table", ok, t0))
    out.append(_upper("classify", "ex2_d_h_formula", worst, 1e-9, t0))
    return out


def _ex2_k(psi0):
    """k in psi0 = pi/4 + k pi/2 (mod 2 pi)."""
    return int(round((psi0 - math.pi / 4) / (math.pi / 2))) % 4


# asymptotics ---------------------------------------------------------------

def suite_asymptotics():
    out = []
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n, q = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        eta, nu, lam = rng.uniform(-2, 2, 3)
        t = float(10 ** rng.uniform(0, 4))
        mp, mm = limiting_eigenvalues(n, q, eta, nu, lam, t)
        s_err = abs((mp + mm) - lam * t ** (-n / (2 * q)))
        p_err = abs(mp * mm + nu * eta * t ** (-(n + 1) / (2 * q)))
        scale = max(1.0, abs(lam), abs(nu * eta))
        worst = max(worst, s_err / scale, p_err / scale)
    out.append(_upper("asymptotics", "eigenvalue_identities", worst, 1e-12, t0))
    t0 = time.time()
    p = dict(EX1_BASE, beta0=-0.5)
    _, _, res, e = _expansion("ex1", p, (0.5, 1.0, 0.0), 1, 1)
    c = analyze_expansion(e, res)
    root = c.stable_roots()[0]
    sol = solve_coefficients(e, res, c.n, c.m, root.psi0)
    sr, _ = residual_slopes(e, sol, M=0)
    bound = -(2 * c.n + 2) / (2 * c.q) + 0.3
    out.append(Check("asymptotics", "residual_slope_rho", sr, bound, sr <= bound,
                     time.time() - t0))
    return out


# integrate -----------------------------------------------------------------

def suite_integrate():
    out = []
    t0 = time.time()
    cfg = IntegratorConfig(t_start=1.0, t_end=50.0, n_output=200)
    t, y, _, _ = dopri5(lambda t, y: (y[1], -y[0]), (math.cos(1.0), -math.sin(1.0)), cfg)
    err = float(np.max(np.abs(y[:, 0] - np.cos(t))))
    out.append(_upper("integrate", "dp5_harmonic", err, 1e-7, t0))
    t0 = time.time()
    ev = EventFunction(lambda t, y: y[0] - 0.5, "Hit", terminal=True)
    _, _, hits, status = dopri5(lambda t, y: (y[1], -y[0]), (math.cos(1.0), -math.sin(1.0)),
                                cfg, [ev])
    # cos t falls through 0.5 at t = pi/3, just after the start at t = 1
    err = abs(hits[0][0] - math.pi / 3) if hits else 1.0
    out.append(_upper("integrate", "event_localization", err, 1e-6, t0))
    t0 = time.time()
    m = builtin("ex1", {"theta": 0.25})
    sc = PhaseSchedule(2, (0.5, 1.0, 0.0))
    tr = integrate_full(m, sc, IntegratorConfig(t_start=1.0, t_end=1e3), (0.8, 0.3))
    out.append(_upper("integrate", "unperturbed_flat_r", float(np.ptp(tr.r)), 1e-12, t0))
    t0 = time.time()
    out.append(_flag("integrate", "escape_case3", escape_case3()[0], t0))
    return out


def escape_case3(beta0=0.3, t_end=1e5, bound=2.0):
    """Truncated Ex1 case 3 from rho(1) = 0: does |rho| reach ``bound`` before ``t_end``?"""
    _, _, res, e = _expansion("ex1", dict(theta=0.25, beta0=beta0), (0.25, 0.0, 0.0), 2, 1)
    tr = integrate_truncated(e, IntegratorConfig(t_start=1.0, t_end=t_end), (0.0, 0.0),
                             rho_bound=bound)
    return tr.has_event(LEFT_DOMAIN), tr.first_event(LEFT_DOMAIN)


# figures -------------------------------------------------------------------

def ex1_fig2_config(beta0, samples=10, delta=0.05, t_star=10.0, t_end=1e4, seed=1,
                    stop_on_escape=False, monitor_from=100.0, out_dir="out"):
    """The criterion scenario on Ex1 case 1 (a = sqrt 2).

    Tube checks start at ``monitor_from``: from t_star = 10 even the stable
    set leaves the tube for a few periods before it locks.
    """
    return from_dict({
        "name": f"ex1_beta0_{beta0:g}",
        "system": {"name": "ex1", "params": dict(EX1_BASE, beta0=beta0)},
        "schedule": {"q": 2, "s": [0.5, 1.0, 0.0]},
        "resonance": {"kappa": 1, "varkappa": 1},
        "initial": {"mode": "tube", "t_star": t_star, "delta": delta, "samples": samples,
                    "seed": seed},
        "integrator": {"t_end": t_end},
        "simulate": {"kinds": ["full"], "eps_tube": 0.3, "stop_on_escape": stop_on_escape,
                     "monitor_from": monitor_from},
        "output": {"dir": out_dir},
    })


def duffing_fig1_config(beta0=-0.1, t_star=10.0, t_end=1e4, out_dir="out"):
    return from_dict({
        "name": f"duffing_beta0_{beta0:g}",
        "system": {"name": "duffing", "params": dict(theta=0.25, alpha0=0.5, alpha1=0.6,
                                                     beta0=beta0, beta1=0.0)},
        "schedule": {"q": 2, "s": [1.5, 0.0, 0.0]},
        "resonance": {"kappa": 1, "varkappa": 2},
        "initial": {"mode": "tube", "t_star": t_star, "delta": 0.0, "samples": 1},
        "integrator": {"t_end": t_end},
        "simulate": {"kinds": ["full"], "eps_tube": 0.3},
        "output": {"dir": out_dir},
    })


def suite_figures(out_dir=None):
    import tempfile
    out_dir = out_dir or tempfile.mkdtemp(prefix="resonate-verify-")
    out = []
    t0 = time.time()
    res = run_simulate(ex1_fig2_config(-0.5, out_dir=out_dir), stream=False)
    worst = 0.0
    for r in res.runs:
        if r.status == "error":
            worst = math.inf
            continue
        worst = max(worst, abs(r.final["r"] - math.sqrt(2)) / 0.05,
                    abs(r.final["theta"] - 3 * math.pi / 4) / 0.1)
    out.append(_upper("figures", "ex1_stable_final_state_ratio", worst, 1.0, t0))
    escaped = sum(r.has_event(ESCAPED_TUBE) for r in res.runs)
    out.append(_upper("figures", "ex1_stable_runs_escaped", escaped, 0, t0))
    t0 = time.time()
    res = run_simulate(ex1_fig2_config(0.25, stop_on_escape=True, out_dir=out_dir), stream=False)
    stayed = sum(not r.has_event(ESCAPED_TUBE) for r in res.runs)
    out.append(_upper("figures", "ex1_unstable_runs_not_escaped", stayed, 1, t0))
    t0 = time.time()
    hit, _ = escape_case3()
    out.append(_flag("figures", "ex1_case3_escape", hit, t0))
    t0 = time.time()
    res = run_simulate(duffing_fig1_config(out_dir=out_dir), stream=False)
    r = res.runs[0]
    a = res.reports["base"].res.a
    err = abs(r.final["r"] - a) if r.final else math.inf
    out.append(_upper("figures", "duffing_final_r", err, 0.05, t0))
    return out


_SUITE_FN = {"specialfn": suite_specialfn, "averaging": suite_averaging,
             "classify": suite_classify, "asymptotics": suite_asymptotics,
             "integrate": suite_integrate, "figures": suite_figures}


def run_verify(suite, stream=None):
    """Run a suite (or "all"); returns (all_passed, checks)."""
    out = sys.stdout if stream is None else stream
    names = SUITES if suite == "all" else (suite,)
    if any(n not in _SUITE_FN for n in names):
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    checks = []
    for n in names:
        for c in _SUITE_FN[n]():
            checks.append(c)
            if out is not False:
                out.write(c.line() + "\n")
                out.flush()
    ok = all(c.passed for c in checks)
    if out is not False:
        out.write(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed\n")
    return ok, checks
