from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from ._commands import COMMANDS
from ._commands import Options
from ._commands import run_command
from ._config import Configuration
from ._errors import ConfigError
from ._errors import exit_code_for
from ._errors import QuasitileError
from ._selftest import run_selftest
from .utils import trace

log = logging.getLogger("quasitile")

DESCRIPTIONS = {
    "density": "Report window Banach densities of a set",
    "tile": "Construct and check an epsilon-quasitiling",
    "compare": "Build a bounded-multiplier injection from A into B",
    "encode": "Encode a tiling system into a symbolic array and decode it back",
    "entropy": "Evaluate tiled entropies, rectangle identities and oracles",
    "render": "Draw a tiling system over Z or Z^2",
    "selftest": "Run the built-in fixtures of every module",
}


def main(args: list[str] | None = None) -> int:
    opts = _get_cli_opts(args)
    if not logging.getLogger().handlers:
        logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    if opts.command == "selftest":
        failed = run_selftest(threads=opts.threads or 1)
        return 5 if failed else 0
    try:
        config = _load_config(opts.config)
        run = run_command(
            opts.command,
            config,
            Options(
                out=Path(opts.out),
                check=opts.check,
                threads=opts.threads,
                seed=opts.seed,
            ),
        )
    except Exception as e:
        code = exit_code_for(e)
        if code == 5 and not isinstance(e, QuasitileError):
            log.exception("internal error in %s", opts.command)
        print(f"ERROR: {e}", file=sys.stderr)
        _print_diagnostic(e)
        return code
    for line in run.checks:
        print(line)
    print(f"wrote {len(run.artifacts)} files to {os.path.relpath(run.options.out)}")
    return 0


def _load_config(path: str) -> Configuration:
    try:
        return Configuration.from_file(path)
    except QuasitileError:
        raise
    except (OSError, LookupError, ValueError) as e:
        # unreadable files and TOML syntax errors are validation failures too
        raise ConfigError("config", str(e)) from e


def _print_diagnostic(e: BaseException) -> None:
    for attribute in ("diagnostic", "achieved", "position"):
        value = getattr(e, attribute, None)
        if value is not None:
            print(f"{attribute}: {value}", file=sys.stderr)


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _nonnegative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must not be negative, got {value}")
    return value


def _get_cli_opts(args: list[str] | None) -> argparse.Namespace:
    prog = "python -m quasitile"
    desc = "Run quasitiling, comparison and entropy experiments from a config file"
    parser = argparse.ArgumentParser(prog, description=desc)
    parser.add_argument(
        "--threads",
        type=_positive,
        default=None,
        metavar="N",
        help="worker threads for per-item evaluations, results do not change",
    )
    sub = parser.add_subparsers(title="commands", dest="command", metavar="")
    sub.required = True
    for name in COMMANDS:
        desc = DESCRIPTIONS[name]
        command = sub.add_parser(
            name, help=desc[0].lower() + desc[1:], description=desc
        )
        command.add_argument(
            "-c",
            "--config",
            required=True,
            metavar="PATH",
            help="run document, a standalone TOML file or a pyproject.toml",
        )
        command.add_argument(
            "-o",
            "--out",
            default=".",
            metavar="DIR",
            help="run directory receiving the artifacts and manifest.json",
        )
        command.add_argument(
            "--seed",
            type=_nonnegative,
            default=None,
            metavar="N",
            help="override the seed of the run document",
        )
        command.add_argument(
            "--check",
            action="store_true",
            help="fail with exit code 5 when an invariant check does not hold",
        )
        command.add_argument(
            "--threads",
            type=_positive,
            default=argparse.SUPPRESS,
            metavar="N",
            help=argparse.SUPPRESS,
        )
    desc = DESCRIPTIONS["selftest"]
    sub.add_parser("selftest", help=desc[0].lower() + desc[1:], description=desc)
    opts = parser.parse_args(args)
    trace("cli options", opts)
    return opts

