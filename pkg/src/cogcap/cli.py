"""``cogcap`` command-line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 infeasible scenario,
4 validation-suite failure, 5 output error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CogcapError, InfeasibleError, ParameterError
from .experiments import (COMMANDS, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_IO, FIGURES,
                          build_spec, parse_assignment, run)
from .results import OutputError


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cogcap",
        description="Transmission capacity of a secondary network sharing spectrum with a primary PPP.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("figures", nargs="*", metavar="FIGURE",
                   help=f"for 'figures': subset of {', '.join(FIGURES)} (default all)")
    p.add_argument("--config", help="JSON experiment file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable); values parse as JSON")
    p.add_argument("--out", help="output directory (default ./cogcap-out)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials; also enables the MC cross-check")
    p.add_argument("--seed", type=int, help="master seed (overrides COGCAP_SEED and the file)")
    p.add_argument("--mode", choices=("paper_literal", "corrected", "derived"),
                   help="cross-power convention for the closed-form terms")
    p.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")
    p.add_argument("--format", dest="formats", help="comma-separated: csv, json")
    return p


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParameterError("config file must hold a JSON object")
    return doc


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.figures and args.command != "figures":
            raise ParameterError(f"unexpected arguments {args.figures} for {args.command!r}")
        document = _load(args.config) if args.config else {}
        overrides = dict(parse_assignment(s) for s in args.set)
        overrides.update({k: v for k, v in dict(
            out=args.out, trials=args.trials, master_seed=args.seed, mode=args.mode,
            workers=args.workers).items() if v is not None})
        if args.formats:
            overrides["formats"] = [f.strip() for f in args.formats.split(",") if f.strip()]
        if args.figures:
            overrides["figures"] = args.figures
        spec = build_spec(args.command, document, overrides)
        return run(spec)
    except InfeasibleError as exc:
        print(f"cogcap: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OutputError as exc:
        print(f"cogcap: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParameterError, TypeError, ValueError) as exc:
        print(f"cogcap: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cogcap: {exc}", file=sys.stderr)
        return EXIT_IO
    except CogcapError as exc:
        print(f"cogcap: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
