"""Command line: ``resonate {analyze,average,simulate} <config>`` and ``resonate verify <suite>``."""
import argparse
import sys

from ..errors import ResonateError
from .config import load
from .scenarios import run_analyze, run_average, run_simulate
from .verify import SUITES, run_verify


def _parser():
    ap = argparse.ArgumentParser(prog="resonate",
                                 description="Phase-locking analysis of resonantly forced "
                                             "non-isochronous oscillators.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("analyze", "resonance, averaging, classification and asymptotics"),
                        ("average", "tabulate the averaged coefficients"),
                        ("simulate", "integrate the scenario and write CSVs")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="scenario TOML file")
        p.add_argument("--t-end", type=float, help="override integrator.t_end")
        p.add_argument("--eps-tube", type=float, help="override simulate.eps_tube")
        p.add_argument("--out-dir", help="override output.dir")
        p.add_argument("--seed", type=int, help="seed for tube-ball initial samples")
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITES + ("all",))
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            ok, _ = run_verify(args.suite)
            return 0 if ok else 1
        cfg = load(args.config, dict(t_end=args.t_end, eps_tube=args.eps_tube,
                                     out_dir=args.out_dir, seed=args.seed))
        if args.command == "analyze":
            reports = run_analyze(cfg)
            reports = reports if isinstance(reports, list) else [reports]
            return 0 if all(r.status == "ok" for r in reports) else 2
        if args.command == "average":
            run_average(cfg)
            return 0
        result = run_simulate(cfg)
        return 0 if all(r.status != "error" for r in result.runs) else 2
    except (ResonateError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
