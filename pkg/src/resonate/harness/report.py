"""Analysis pipeline (resonance -> averaging -> classify -> asymptotics) and its
line-oriented ``key = value`` report."""
import math
from dataclasses import dataclass, field

from ..asymptotics import solve_coefficients
from ..averaging import compute_expansion
from ..classify import Verdict, analyze_expansion
from ..errors import ConfigError, DegenerateResonance, Inconclusive, NoResonance, ResonateError
from ..reference import closed_forms_for, register_orders
from ..resonance import find_resonant_amplitude
from .config import format_float as ff

GUIDANCE = {
    "NoResonance": "pick s0 (or kappa/varkappa) so that kappa*s0/varkappa lies in the range "
                   "of omega(r) on the model domain",
    "DegenerateResonance": "omega'(a) vanishes; the amplitude cannot be captured at this "
                           "resonance, choose another s0",
    "Inconclusive": "the available orders do not decide; register higher-order closed forms "
                    "under [expansion] closed_forms",
}


@dataclass
class AnalysisReport:
    config: object
    cell: str = "base"
    status: str = "ok"  # ok, or the name of the error that stopped the pipeline
    error: str = ""
    guidance: str = ""
    res: object = None
    exp: object = None
    classification: object = None
    solutions: dict = field(default_factory=dict)  # root index -> AsymptoticSolution | str

    @property
    def verdicts(self):
        if self.classification is None:
            return [Verdict.Inconclusive]
        return self.classification.verdicts

    def root_solution(self, idx):
        sol = self.solutions.get(idx)
        return None if isinstance(sol, str) or sol is None else sol

    def format(self):
        return format_report(self)


def _fail(report, exc):
    name = type(exc).__name__
    report.status = name
    report.error = str(exc)
    report.guidance = GUIDANCE.get(name, "")
    return report


def build_expansion(cfg, model, sched, res):
    exp = compute_expansion(model, sched, res, N=cfg.N)
    if cfg.closed_forms:
        forms = closed_forms_for(model, sched, cfg.kappa, cfg.varkappa)
        if forms is None:
            raise ConfigError(f"no closed forms are known for system {cfg.system!r} with "
                              f"kappa={cfg.kappa}, varkappa={cfg.varkappa}, s0={sched.s0:g}")
        exp = register_orders(exp, forms, cfg.closed_forms)
    return exp


def analyze(cfg, cell="base"):
    """Run the pipeline on one (non-sweep) config; errors are recorded, not raised."""
    report = AnalysisReport(cfg, cell)
    model, sched = cfg.model(), cfg.schedule()
    try:
        report.res = find_resonant_amplitude(model, sched, cfg.kappa, cfg.varkappa)
    except (NoResonance, DegenerateResonance) as exc:
        return _fail(report, exc)
    report.exp = build_expansion(cfg, model, sched, report.res)
    try:
        report.classification = analyze_expansion(report.exp, report.res)
    except Inconclusive as exc:
        return _fail(report, exc)
    cls = report.classification
    K = 2 if report.exp.order >= 2 else 1
    for i, root in enumerate(cls.roots):
        try:
            report.solutions[i] = solve_coefficients(report.exp, report.res, cls.n, cls.m,
                                                     root.psi0, K_max=K)
        except ResonateError as exc:
            report.solutions[i] = f"{type(exc).__name__}: {exc}"
    return report


def _circ(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def select_root(report, choice="stable", near=None):
    """Index of the root a tube-relative run is built on.

    ``choice`` is "stable" (stable roots first, then unstable-locking ones),
    "any", or a number: the classified root nearest to that phase.
    """
    cls = report.classification
    usable = [i for i, _ in enumerate(cls.roots if cls else ()) if report.root_solution(i)]
    if not usable:
        raise ConfigError("tube-relative initial data needs a classified root with an "
                          f"asymptotic solution (analysis status: {report.status}, "
                          f"verdicts: {[v.value for v in report.verdicts]})")
    roots = cls.roots
    if not isinstance(choice, str):
        return min(usable, key=lambda i: _circ(roots[i].psi0, float(choice)))
    if choice == "stable":
        ranked = [i for i in usable if roots[i].verdict.stable]
        ranked = ranked or [i for i in usable if roots[i].verdict in (
            Verdict.UnstableLocking, Verdict.UnstableLockingViaDh)]
        usable = ranked or usable
    elif choice != "any":
        raise ConfigError(f"initial.root must be 'stable', 'any' or a phase, got {choice!r}")
    if near is not None:
        return min(usable, key=lambda i: _circ(roots[i].psi0, near))
    return usable[0]


def _lines_config(cfg):
    out = ["[scenario]", f"name = {cfg.name}", f"system = {cfg.system}"]
    out += [f"params.{k} = {ff(v)}" for k, v in sorted(cfg.params.items())]
    out += [f"schedule.q = {cfg.q}", "schedule.s = " + ", ".join(ff(v) for v in cfg.s),
            f"resonance.kappa = {cfg.kappa}", f"resonance.varkappa = {cfg.varkappa}",
            f"expansion.N = {cfg.N}",
            "expansion.closed_forms = " + (", ".join(map(str, cfg.closed_forms)) or "none")]
    return out


def format_report(report):
    """Deterministic text: fixed float format, sorted keys, no timestamps."""
    out = _lines_config(report.config)
    out += [f"cell = {report.cell}", "", "[status]", f"status = {report.status}"]
    if report.error:
        out += [f"error = {report.error}", f"guidance = {report.guidance}"]
    res = report.res
    if res is not None:
        out += ["", "[resonance]", f"a = {ff(res.a)}", f"eta = {ff(res.eta)}",
                f"omega_pp = {ff(res.omega_pp)}",
                "roots = " + ", ".join(ff(r) for r in res.all_roots)]
    exp = report.exp
    if exp is not None:
        out += ["", "[expansion]", f"order = {exp.order}", f"q = {exp.q}",
                f"fit_residual = {ff(exp.fit_residual)}"]
        for k in sorted(exp.Lambda):
            out += [f"provenance.{k} = {exp.provenance.get(k, 'generic')}",
                    f"sup.Lambda_{k} = {ff(exp.Lambda[k].sup_norm())}",
                    f"sup.Omega_{k} = {ff(exp.Omega[k].sup_norm())}"]
    cls = report.classification
    if cls is not None:
        out += ["", "[classification]", f"n = {cls.n}", f"m = {cls.m}", f"ell = {cls.ell}",
                f"no_locking = {str(cls.no_locking).lower()}",
                f"min_abs_lambda_n = {ff(cls.min_abs_lambda_n)}",
                f"root_count = {len(cls.roots)}"]
        if cls.no_locking:
            out += [f"verdict = {Verdict.NoLocking.value}",
                    f"theorem = {Verdict.NoLocking.theorem}"]
        elif not cls.roots:
            out += [f"verdict = {Verdict.Inconclusive.value}",
                    "reason = Lambda_n has no simple zero but touches zero on the box"]
        out += [f"note = {n}" for n in cls.notes]
        for i, r in enumerate(cls.roots):
            out += ["", f"[root.{i}]", f"psi0 = {ff(r.psi0)}", f"nu = {ff(r.nu)}",
                    f"lambda = {ff(r.lam)}", f"omega_m = {ff(r.omega_m)}",
                    f"d_nm = {ff(r.d_nm)}", f"verdict = {r.verdict.value}",
                    f"theorem = {r.verdict.theorem}",
                    f"h = {'none' if r.h is None else r.h}", f"d_h = {ff(r.d_h)}",
                    f"reason = {r.reason}"]
            sol = report.solutions.get(i)
            if isinstance(sol, str):
                out.append(f"asymptotics.error = {sol}")
            elif sol is not None:
                out += [f"asymptotics.K = {sol.K}",
                        f"asymptotics.partial = {str(sol.partial).lower()}"]
                for k, (rk, pk) in enumerate(sol.coefficients, start=1):
                    out += [f"asymptotics.rho_{k} = {ff(rk)}", f"asymptotics.phi_{k} = {ff(pk)}"]
                out += [f"asymptotics.note = {n}" for n in sol.notes]
    return "\n".join(out) + "\n"
