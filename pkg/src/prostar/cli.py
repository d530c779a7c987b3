"""Command-line front door: run scenarios, generate examples, validate files.

Exit status contract for `run`: 0 all tasks pass, 1 verification failure,
2 parse/validation error, 3 numerical failure. `validate` exits 0/2.
Only the optional NO_COLOR environment variable is consulted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .examples_gen import RECIPES, generate_example
from .report import Report
from .scenario import ScenarioError, load_scenario, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prostar",
        description=(
            "Construct and certify covariant dilations, crossed products, and "
            "inverse-limit towers at finite-dimensional scale."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario file and emit a certified report")
    run_p.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    run_p.add_argument("--output", default=None, help="base path for report files")
    run_p.add_argument("--tolerance", type=float, default=None, help="override tolerance (default 1e-10)")
    run_p.add_argument("--seed", type=int, default=None, help="override seed (default 0)")
    run_p.add_argument("--jobs", type=int, default=None, help="max concurrent tasks (default: all)")
    run_p.add_argument("--format", choices=("text", "json", "both"), default="text")

    ex_p = sub.add_parser("example", help="emit a ready-made scenario")
    ex_p.add_argument("recipe", choices=RECIPES, help="example recipe name")
    ex_p.add_argument("--seed", type=int, default=0)
    ex_p.add_argument("--output", default=None, help="write the scenario here instead of stdout")

    val_p = sub.add_parser("validate", help="parse and type-check a scenario without running it")
    val_p.add_argument("--scenario", required=True)
    val_p.add_argument("--tolerance", type=float, default=None)
    val_p.add_argument("--seed", type=int, default=None)
    return parser


def _want_color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("NO_COLOR")


def _emit_report(report: Report, output: str | None, fmt: str) -> None:
    text = report.to_text(color=_want_color() and output is None)
    js = report.to_json()
    if output is None:
        if fmt in ("text", "both"):
            sys.stdout.write(text)
        if fmt in ("json", "both"):
            sys.stdout.write(js + "\n")
        return
    base = output
    if fmt in ("json", "both"):
        path = base if base.endswith(".json") else base + ".json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(js + "\n")
    if fmt in ("text", "both"):
        path = base if base.endswith(".txt") else base + ".txt"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_text(color=False))
    sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "example":
        doc = generate_example(args.recipe, args.seed)
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
        return 0

    if args.command == "validate":
        try:
            load_scenario(args.scenario, tolerance=args.tolerance, seed=args.seed)
        except ScenarioError as err:
            sys.stderr.write(f"invalid scenario: {err}\n")
            return 2
        sys.stdout.write("scenario is valid\n")
        return 0

    # run
    try:
        scn = load_scenario(args.scenario, tolerance=args.tolerance, seed=args.seed)
    except ScenarioError as err:
        sys.stderr.write(f"invalid scenario: {err}\n")
        return 2
    report = run_scenario(scn, jobs=args.jobs, scenario_path=args.scenario)
    _emit_report(report, args.output, args.format)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
