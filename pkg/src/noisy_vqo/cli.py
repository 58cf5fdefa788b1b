"""Command-line interface.

    noisy-vqo <command> --config <path> [--seed S] [--out DIR] [--full]

Commands: qfi-scan, landscape, convergence, bounds-audit, channel-validate.
Exit codes: 0 success, 2 configuration error, 3 numerical-invariant
violation (including a failed audit).
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, NumericalInvariantError
from .experiments import RUNNERS


def _load_config(path: str | None) -> dict | None:
    if path is None:
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not text.strip():
        return {}
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config root must be a JSON object")
    return payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisy-vqo",
        description="Noisy variational-optimization experiments "
                    "(CSV + manifest + figure per run).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--out", default="results", help="output directory")
        cmd.add_argument(
            "--full", action="store_true",
            help="full-size variant (convergence runs the 8-qubit ring)",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        result = RUNNERS[args.command](
            config, out_dir=args.out, seed=args.seed, full=args.full
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalInvariantError as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return 3
    for path in result.csv_paths + result.figure_paths + [result.manifest_path]:
        print(path)
    if not result.ok:
        print("audit failed: see report for violated inequalities", file=sys.stderr)
        return 3
    return 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
