"""Command-line interface.

Subcommands: ``modes``, ``design``, ``scan``, ``simulate``, ``circuit``,
``run-scenario``.  Exit codes: 0 success, 2 configuration error, 3
infeasible design, 4 numerical-convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config, validate_config
from .errors import ConfigError, ConvergenceError, InfeasibleDesignError, IonpulseError
from .presets import (
    PRESETS,
    run_circuit,
    run_design,
    run_modes,
    run_scan,
    run_scenario,
    run_simulate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_CONVERGENCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionpulse",
        description="Design and verify segmented entangling pulses for ion chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON config document")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--oracle",
            action="store_true",
            help="cross-check closed forms with the quadrature oracle",
        )

    common(sub.add_parser("modes", help="normal-mode tables and gate-time advisory"))
    common(sub.add_parser("design", help="solve one pulse and write the solution document"))
    common(sub.add_parser("scan", help="sweep detuning or offsets and write a CSV"))
    p = sub.add_parser("simulate", help="exact simulation of a solution document")
    p.add_argument("--config", required=True, help="path to a solution document (from 'design')")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true")
    common(sub.add_parser("circuit", help="run a spin circuit and its analyses"))
    p = sub.add_parser("run-scenario", help="run a canned scenario preset")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "run-scenario":
            manifest = run_scenario(args.preset, out, oracle=args.oracle)
            print(f"scenario {args.preset}: wrote {len(manifest['outputs'])} files to {out}")
            return EXIT_OK
        if args.command == "simulate":
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            written = run_simulate(doc, out, oracle=args.oracle)
        else:
            norm = validate_config(load_config(args.config))
            if args.command == "modes":
                written = run_modes(norm, out)
            elif args.command == "design":
                written = run_design(norm, out, oracle=args.oracle)
            elif args.command == "scan":
                written = run_scan(norm, out, oracle=args.oracle)
            else:
                written = run_circuit(norm, out)
        for path in written:
            print(f"wrote {path}")
        return EXIT_OK
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except IonpulseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
