"""analyze / average / simulate entry points over a scenario config and its sweep."""
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..asymptotics import eval_partial_sum
from ..averaging import psi_grid
from ..errors import ConfigError
from ..integrate import (ESCAPED_TUBE, LEFT_DOMAIN, TubeMonitor, detect_phase_locking,
                         integrate_full, integrate_limiting, integrate_truncated, _wrap)
from ..specialfn import duffing_chart_inverse
from ..system import CartesianState, PolarState
from .config import expand_sweep, format_float as ff
from .report import analyze, select_root


def _stream(stream):
    return sys.stdout if stream is None else stream


def _cell_dir(cfg, cell):
    path = os.path.join(cfg.out_dir, cfg.name, cell)
    os.makedirs(path, exist_ok=True)
    return path


def run_analyze(cfg, write=True, stream=None):
    """Analyze every sweep cell.

    Prints the report(s) and writes ``<out>/<name>/<cell>/analysis.txt``.
    Returns the AnalysisReport, or a list of them when the config sweeps.
    """
    reports = [analyze(c, label) for label, c in expand_sweep(cfg)]
    out = _stream(stream)
    for rep in reports:
        text = rep.format()
        if out is not False:
            out.write(text + "\n")
        if write:
            with open(os.path.join(_cell_dir(cfg, rep.cell), "analysis.txt"), "w") as fh:
                fh.write(text)
    return reports if cfg.sweep else reports[0]


def run_average(cfg, write=True, stream=None):
    """Coefficient tables of Lambda_k, Omega_k: one row per (field, k, psi, rho_degree)."""
    paths = []
    for label, c in expand_sweep(cfg):
        rep = analyze(c, label)
        if rep.exp is None:
            raise ConfigError(f"cell {label}: {rep.status}: {rep.error}")
        path = os.path.join(_cell_dir(cfg, label), "average.csv")
        psi = psi_grid(rep.exp.n_psi)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["field", "k", "psi", "rho_degree", "value"])
            for fname, terms in (("Lambda", rep.exp.Lambda), ("Omega", rep.exp.Omega)):
                for k in sorted(terms):
                    term = terms[k]
                    for j in range(term.degree + 1):
                        vals = term.coefficient(j, psi)
                        for p, v in zip(psi, vals):
                            w.writerow([fname, k, ff(p), j, ff(v)])
        paths.append(path)
        if stream is not False:
            _stream(stream).write(f"{label}: wrote {path}\n")
    return paths


# simulate -------------------------------------------------------------------

@dataclass
class RunRecord:
    cell: str
    kind: str
    sample: int
    status: str = "completed"  # integrator status, or "error"
    events: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    locking: str = "n/a"  # Locked / EscapedTube / Incomplete / n/a
    t_escape: float = float("nan")
    max_functional: float = float("nan")
    error: str = ""
    csv: str = ""
    verdict: str = ""
    theorem: str = ""
    psi0: float = float("nan")

    def has_event(self, kind):
        return any(k == kind for _, k in self.events)


@dataclass
class SimulationResult:
    runs: list
    reports: dict  # cell -> AnalysisReport
    summary_path: str = ""

    def cell_runs(self, cell, kind=None):
        return [r for r in self.runs if r.cell == cell and (kind is None or r.kind == kind)]


def _tube_samples(init):
    """Seeded offsets uniformly distributed in the delta-disk of the (r, phi) plane."""
    rng = np.random.default_rng(init.seed)
    rad = init.delta * np.sqrt(rng.random(init.samples))
    ang = 2 * np.pi * rng.random(init.samples)
    return list(zip(rad * np.cos(ang), rad * np.sin(ang)))


def initial_states(cfg, report, root_idx):
    """Tagged initial states at t_star: ('polar', r, phi), ('cart', x, y) or ('slow', rho, psi).

    Tube mode samples the delta-ball around the chosen root; a cell without a
    root falls back to the absolute fields when they are given.
    """
    init, res = cfg.initial, report.res
    sched = cfg.schedule()
    ts = init.t_star
    if init.mode == "tube" and root_idx is not None:
        sol = report.root_solution(root_idx)
        rho_s, phi_s = eval_partial_sum(sol, cfg.simulate.M, ts)
        r_c = res.a + ts ** (-1 / (2 * cfg.q)) * rho_s
        phi_c = res.ratio * sched.phase(ts) + phi_s
        return [("polar", r_c + dr, phi_c + dp) for dr, dp in _tube_samples(init)]
    if init.r is not None and init.phi is not None:
        return [("polar", init.r, init.phi)]
    if init.x is not None and init.y is not None:
        return [("cart", init.x, init.y)]
    return [("slow", init.rho, init.psi)]


def _to_polar(state, cfg, res, sched, ts):
    tag, u, v = state
    if tag == "polar":
        return u, v
    if tag == "cart":
        return duffing_chart_inverse(u, v, cfg.params.get("theta", 0.25))
    return res.a + ts ** (-1 / (2 * cfg.q)) * u, res.ratio * sched.phase(ts) + v


def _to_slow(state, cfg, res, sched, ts):
    if state[0] == "slow":
        return state[1], state[2]
    r, phi = _to_polar(state, cfg, res, sched, ts)
    return ts ** (1 / (2 * cfg.q)) * (r - res.a), float(_wrap(phi - res.ratio * sched.phase(ts)))


def _has_absolute(init):
    return any(getattr(init, a) is not None and getattr(init, b) is not None
               for a, b in (("r", "phi"), ("x", "y"), ("rho", "psi")))


@dataclass
class _Job:
    cell: str
    cfg: object
    kind: str
    sample: int
    state: tuple
    res: object
    exp: object
    sol: object
    root: object
    out_csv: str


def _run_job(job):
    cfg, kind = job.cfg, job.kind
    rec = RunRecord(job.cell, kind, job.sample, csv=job.out_csv)
    if job.root is not None:
        rec.verdict, rec.theorem, rec.psi0 = (job.root.verdict.value, job.root.verdict.theorem,
                                              job.root.psi0)
    try:
        sched, ts, res = cfg.schedule(), cfg.initial.t_star, job.res
        icfg = cfg.integrator
        monitor = None
        if job.sol is not None and kind != "limiting":
            monitor = TubeMonitor(job.sol, res, sched, cfg.simulate.eps_tube, cfg.monitor_from,
                                  cfg.simulate.M, cfg.simulate.stop_on_escape, exp=job.exp)
        mons = () if monitor is None else (monitor,)
        if kind == "full":
            model = cfg.model()
            if job.state[0] == "cart":
                initial = CartesianState(job.state[1], job.state[2], ts)
            else:
                initial = PolarState(*_to_polar(job.state, cfg, res, sched, ts), ts)
            traj = integrate_full(model, sched, icfg, initial, res, monitors=mons)
        elif kind == "truncated":
            traj = integrate_truncated(job.exp, icfg, _to_slow(job.state, cfg, res, sched, ts),
                                       res, sched, rho_bound=cfg.simulate.rho_bound,
                                       monitors=mons)
        else:
            if job.root is None:
                raise ConfigError("the limiting system needs a classified root")
            rho0, psi = _to_slow(job.state, cfg, res, sched, ts)
            v0 = float(_wrap(psi - job.root.psi0))
            traj = integrate_limiting(job.exp, res, job.sol.n, icfg, (rho0, v0), job.root.psi0)
        if monitor is not None:
            lock = detect_phase_locking(traj, monitor, horizon=icfg.t_end)
            rec.locking, rec.t_escape, rec.max_functional = (lock.status, lock.t_escape,
                                                             lock.max_functional)
        rec.status, rec.events, rec.final = traj.status, list(traj.events), traj.final()
        traj.to_csv(job.out_csv)
    except Exception as exc:  # recorded per run; the batch continues
        rec.status, rec.error = "error", f"{type(exc).__name__}: {exc}"
    return rec


def _workers(n_jobs):
    env = os.environ.get("RESONATE_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def _gnuplot(path, csvs, a, psi0, title):
    lines = [f"# r(t) and theta(t) for {title}; dashed lines mark a and psi0",
             "set datafile separator ','", "set key autotitle columnhead", "set logscale x",
             "set multiplot layout 2,1", "set ylabel 'r'"]
    if a is not None:
        lines.append(f"set arrow from graph 0, first {ff(a)} to graph 1, first {ff(a)} "
                     "nohead dashtype 2")
    lines.append("plot " + ", ".join(f"'{os.path.basename(c)}' using 1:2 with lines "
                                     f"title '{os.path.basename(c)}'" for c in csvs))
    lines += ["unset arrow", "set ylabel 'theta'", "set xlabel 't'"]
    if psi0 is not None and math.isfinite(psi0):
        w = float(_wrap(psi0))
        lines.append(f"set arrow from graph 0, first {ff(w)} to graph 1, first {ff(w)} "
                     "nohead dashtype 2")
    lines.append("plot " + ", ".join(f"'{os.path.basename(c)}' using 1:4 with lines "
                                     f"title '{os.path.basename(c)}'" for c in csvs))
    lines.append("unset multiplot")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary_lines(result, cfg):
    out = [f"name = {cfg.name}", f"t_end = {ff(cfg.integrator.t_end)}",
           f"eps_tube = {ff(cfg.simulate.eps_tube)}", f"monitor_from = {ff(cfg.monitor_from)}",
           f"seed = {cfg.initial.seed}"]
    for cell, rep in result.reports.items():
        runs = result.cell_runs(cell)
        out += ["", f"[cell.{cell}]", f"analyze.status = {rep.status}",
                "analyze.verdicts = " + ", ".join(v.value for v in rep.verdicts),
                "analyze.theorems = " + ", ".join(v.theorem for v in rep.verdicts)]
        if rep.res is not None:
            out.append(f"a = {ff(rep.res.a)}")
        if runs and runs[0].verdict:
            out += [f"tested.psi0 = {ff(runs[0].psi0)}", f"tested.verdict = {runs[0].verdict}",
                    f"tested.theorem = {runs[0].theorem}"]
        for kind in sorted({r.kind for r in runs}):
            rk = [r for r in runs if r.kind == kind]
            out += [f"{kind}.runs = {len(rk)}",
                    f"{kind}.locked = {sum(r.locking == 'Locked' for r in rk)}",
                    f"{kind}.escaped = {sum(r.has_event(ESCAPED_TUBE) for r in rk)}",
                    f"{kind}.left_domain = {sum(r.has_event(LEFT_DOMAIN) for r in rk)}",
                    f"{kind}.errors = {sum(r.status == 'error' for r in rk)}"]
        for r in runs:
            p = f"run.{r.kind}.{r.sample}"
            out += [f"{p}.status = {r.status}", f"{p}.locking = {r.locking}",
                    f"{p}.max_functional = {ff(r.max_functional)}",
                    f"{p}.t_escape = {ff(r.t_escape)}",
                    f"{p}.events = " + (", ".join(f"{k}@{ff(t)}" for t, k in r.events) or "none")]
            if r.final:
                out += [f"{p}.final_t = {ff(r.final['t'])}", f"{p}.final_r = {ff(r.final['r'])}",
                        f"{p}.final_theta = {ff(r.final['theta'])}"]
            if r.error:
                out.append(f"{p}.error = {r.error}")
            out.append(f"{p}.csv = {os.path.basename(r.csv)}")
    return out


def run_simulate(cfg, write_summary=True, stream=None):
    """Run every requested integration over every sweep cell.

    Writes one CSV per run, a gnuplot script per cell and a summary that
    records, per cell, the analyze verdict being tested.
    """
    jobs, reports, roots = [], {}, {}
    for label, c in expand_sweep(cfg):
        rep = analyze(c, label)
        reports[label] = rep
        if rep.res is None:
            continue
        root_idx, sol, root = None, None, None
        if rep.classification is not None and rep.classification.roots:
            try:
                near = None
                if c.initial.mode == "absolute":
                    st = initial_states(c, rep, None)[0]
                    near = _to_slow(st, c, rep.res, c.schedule(), c.initial.t_star)[1]
                root_idx = select_root(rep, c.initial.root, near)
                sol, root = rep.root_solution(root_idx), rep.classification.roots[root_idx]
            except ConfigError:
                if c.initial.mode == "tube":
                    raise
        if c.initial.mode == "tube" and sol is None and not _has_absolute(c.initial):
            raise ConfigError(f"cell {label}: tube-relative initial data needs a classified "
                              f"root; verdicts: {[v.value for v in rep.verdicts]}")
        roots[label] = root
        states = initial_states(c, rep, root_idx)
        d = _cell_dir(c, label)
        for kind in c.simulate.kinds:
            for i, st in enumerate(states):
                jobs.append(_Job(label, c, kind, i, st, rep.res, rep.exp, sol, root,
                                 os.path.join(d, f"{kind}_{i:02d}.csv")))
    n = _workers(len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            runs = list(pool.map(_run_job, jobs))
    else:
        runs = [_run_job(j) for j in jobs]
    result = SimulationResult(runs, reports)
    for label, rep in reports.items():
        csvs = [r.csv for r in result.cell_runs(label) if r.status != "error"]
        if csvs:
            root = roots.get(label)
            _gnuplot(os.path.join(_cell_dir(cfg, label), "plot.gp"), csvs,
                     rep.res.a if rep.res else None, root.psi0 if root else None,
                     f"{cfg.name}/{label}")
    if write_summary:
        path = os.path.join(cfg.out_dir, cfg.name, "summary.txt")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        text = "\n".join(_summary_lines(result, cfg)) + "\n"
        with open(path, "w") as fh:
            fh.write(text)
        result.summary_path = path
        if stream is not False:
            _stream(stream).write(text)
    return result
