"""Command line entry point: ``macroale solve ...``."""
import argparse
import logging
import sys

from .driver import parse_config, run_simulation
from .errors import ConfigError, MacroAleError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macroale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a moving/growing interface simulation")
    s.add_argument("--config", help="scenario config file (INI sections)")
    s.add_argument("--preset", choices=["paper1", "paper2"])
    s.add_argument("--solver", choices=["cg", "gmres", "segregated"])
    s.add_argument("--n", type=int, help="macro mesh resolution")
    s.add_argument("--tol", type=float, help="relative residual tolerance")
    s.add_argument("--out", help="output directory")
    s.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.config is None and args.preset is None:
        parser.error("solve needs --config or --preset")
    try:
        cfg = parse_config(args.config, args.preset, solver=args.solver, n=args.n, tol=args.tol, out_dir=args.out)
    except ConfigError as exc:
        print(f"macroale: config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_simulation(cfg)
    except (MacroAleError, OSError) as exc:
        print(f"macroale: error: {exc}", file=sys.stderr)
        return 1
    last = result.reports[-1]
    print(
        f"{cfg.num_steps} steps to T={cfg.end_time:g} with {last.method}; "
        f"results in {cfg.out_dir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
