"""Scenario configuration: TOML files, CLI overrides and sweep expansion.

A config has these sections (all but [system], [schedule] and [resonance]
are optional)::

    name = "fig2"
    [system]      name = "ex1", params = {theta = 0.25, ...}
    [schedule]    q = 2, s = [0.5, 1.0, 0.0]
    [resonance]   kappa = 1, varkappa = 1
    [expansion]   N = 2, closed_forms = [3, 4]
    [initial]     mode = "tube" | "absolute", t_star, delta, samples, seed,
                  root = "stable" | "any" | <psi0>, r/phi, x/y or rho/psi
    [integrator]  rel_tol, abs_tol, max_step, t_end, n_output
    [simulate]    kinds = ["full", "truncated", "limiting"], eps_tube,
                  monitor_from, stop_on_escape, rho_bound
    [sweep]       <param> = [values...]   (cartesian product over params)
    [output]      dir = "out"
"""
import copy
import itertools
import math
from dataclasses import dataclass, field, replace

import tomli

from ..errors import ConfigError
from ..integrate import IntegratorConfig
from ..schedule import PhaseSchedule
from ..system import builtin

KINDS = ("full", "truncated", "limiting")
_TOP = {"name", "system", "schedule", "resonance", "expansion", "initial", "integrator",
        "simulate", "sweep", "output"}


@dataclass(frozen=True)
class InitialSpec:
    mode: str = "tube"  # tube: delta-ball around the asymptotic centre; absolute: given state
    t_star: float = 10.0
    delta: float = 0.05
    samples: int = 1
    seed: int = 0
    root: object = "stable"  # "stable", "any" or a numeric psi0 to pick the nearest root
    r: float = None
    phi: float = None
    x: float = None
    y: float = None
    rho: float = None
    psi: float = None


@dataclass(frozen=True)
class SimulateSpec:
    kinds: tuple = ("full",)
    eps_tube: float = 0.3
    monitor_from: float = None  # defaults to initial.t_star
    stop_on_escape: bool = False
    rho_bound: float = None  # LeftDomain threshold for truncated runs
    M: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    system: str
    params: dict
    q: int
    s: tuple
    kappa: int
    varkappa: int
    N: int = 2
    closed_forms: tuple = ()
    initial: InitialSpec = field(default_factory=InitialSpec)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    simulate: SimulateSpec = field(default_factory=SimulateSpec)
    sweep: tuple = ()  # ((param, (v1, v2, ...)), ...)
    out_dir: str = "out"

    def model(self):
        return builtin(self.system, self.params)

    def schedule(self):
        return PhaseSchedule(self.q, self.s)

    @property
    def monitor_from(self):
        m = self.simulate.monitor_from
        return self.initial.t_star if m is None else m


def _section(raw, key, cls):
    data = dict(raw.get(key, {}))
    names = set(cls.__dataclass_fields__)
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
    return data


def _float_or_none(v):
    return None if v is None else float(v)


def from_dict(raw, source="<dict>"):
    """Build a ScenarioConfig from parsed TOML data."""
    unknown = set(raw) - _TOP
    if unknown:
        raise ConfigError(f"{source}: unknown sections {sorted(unknown)}")
    for key in ("system", "schedule", "resonance"):
        if key not in raw:
            raise ConfigError(f"{source}: missing [{key}]")
    sysd, sch, reso = raw["system"], raw["schedule"], raw["resonance"]
    if "name" not in sysd:
        raise ConfigError(f"{source}: [system] needs a name")
    try:
        q, s = int(sch["q"]), tuple(float(v) for v in sch["s"])
        kappa, varkappa = int(reso["kappa"]), int(reso["varkappa"])
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc}") from None
    exp = raw.get("expansion", {})
    init = _section(raw, "initial", InitialSpec)
    if init.get("mode", "tube") not in ("tube", "absolute"):
        raise ConfigError(f"{source}: initial.mode must be 'tube' or 'absolute'")
    for k in ("t_star", "delta", "r", "phi", "x", "y", "rho", "psi"):
        if k in init:
            init[k] = _float_or_none(init[k])
    sim = _section(raw, "simulate", SimulateSpec)
    if "kinds" in sim:
        sim["kinds"] = tuple(sim["kinds"])
        bad = set(sim["kinds"]) - set(KINDS)
        if bad:
            raise ConfigError(f"{source}: unknown run kinds {sorted(bad)}")
    integ = dict(raw.get("integrator", {}))
    unknown = set(integ) - set(IntegratorConfig.__dataclass_fields__) - {"t_start"}
    if unknown:
        raise ConfigError(f"{source}: unknown keys in [integrator]: {sorted(unknown)}")
    initial = InitialSpec(**init)
    integ.setdefault("t_start", initial.t_star)
    for k in ("rel_tol", "abs_tol", "max_step", "t_start", "t_end"):
        if k in integ:
            integ[k] = float(integ[k])
    sweep = tuple((k, tuple(float(x) for x in v)) for k, v in raw.get("sweep", {}).items())
    cfg = ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        system=str(sysd["name"]),
        params={k: float(v) for k, v in sysd.get("params", {}).items()},
        q=q, s=s, kappa=kappa, varkappa=varkappa,
        N=int(exp.get("N", 2)),
        closed_forms=tuple(int(k) for k in exp.get("closed_forms", ())),
        initial=initial,
        integrator=IntegratorConfig(**integ),
        simulate=SimulateSpec(**sim),
        sweep=sweep,
        out_dir=str(raw.get("output", {}).get("dir", "out")),
    )
    validate(cfg)
    return cfg


def validate(cfg):
    """Resolve the built-in reference and check cross-field consistency."""
    model = cfg.model()  # raises ConfigError for unknown systems or params
    sched = cfg.schedule()
    if model.q != sched.q:
        raise ConfigError(f"system has q={model.q} but schedule has q={sched.q}")
    if cfg.N not in (1, 2):
        raise ConfigError(f"expansion N must be 1 or 2, got {cfg.N}")
    for name, _ in cfg.sweep:
        builtin(cfg.system, {**cfg.params, name: 0.0})
    init = cfg.initial
    if init.samples < 1 or init.delta < 0:
        raise ConfigError("initial.samples must be >= 1 and delta >= 0")
    if init.mode == "absolute":
        have = [k for k in ("r", "phi", "x", "y", "rho", "psi") if getattr(init, k) is not None]
        if not ({"r", "phi"} <= set(have) or {"x", "y"} <= set(have)
                or {"rho", "psi"} <= set(have)):
            raise ConfigError("absolute initial data needs (r, phi), (x, y) or (rho, psi)")
    if cfg.integrator.t_start < 1.0:
        raise ConfigError("integration starts at t >= 1")
    return cfg


def load(path, overrides=None):
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return apply_overrides(from_dict(raw, str(path)), **(overrides or {}))


def apply_overrides(cfg, t_end=None, eps_tube=None, out_dir=None, seed=None):
    """CLI flags take precedence over file values."""
    if t_end is not None:
        cfg = replace(cfg, integrator=replace(cfg.integrator, t_end=float(t_end)))
    if eps_tube is not None:
        if not eps_tube > 0:
            raise ConfigError("--eps-tube must be positive")
        cfg = replace(cfg, simulate=replace(cfg.simulate, eps_tube=float(eps_tube)))
    if out_dir is not None:
        cfg = replace(cfg, out_dir=str(out_dir))
    if seed is not None:
        cfg = replace(cfg, initial=replace(cfg.initial, seed=int(seed)))
    return cfg


def cell_label(values):
    if not values:
        return "base"
    return "_".join(f"{k}={v:g}" for k, v in values)


def expand_sweep(cfg):
    """[(label, cell_config)] over the cartesian product of the sweep values."""
    if not cfg.sweep:
        return [("base", cfg)]
    names = [k for k, _ in cfg.sweep]
    cells = []
    for combo in itertools.product(*(v for _, v in cfg.sweep)):
        values = tuple(zip(names, combo))
        params = copy.copy(cfg.params)
        params.update(dict(values))
        cells.append((cell_label(values), replace(cfg, params=params, sweep=())))
    return cells


def format_float(x):
    """Fixed formatting used by every machine-readable output."""
    if x is None:
        return "none"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x + 0.0:.12g}"  # + 0.0 folds -0 into 0
