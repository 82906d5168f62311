# contrastcpd/main.py
import argparse
import logging
import sys
from typing import Dict, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from . import settings
from .commands import benchmark, calibrate, detect, simulate
from .errors import ContrastError

log = logging.getLogger("cli")

COMMANDS = (calibrate, detect, simulate, benchmark)
TRUTHY = ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contrastcpd",
        description="Contrastive online change point detection",
    )
    subparsers = parser.add_subparsers(dest="command")
    for cmd in COMMANDS:
        cmd.add_parser(subparsers)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> Optional[argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def apply_config_file(parser: argparse.ArgumentParser, command: str, path: str) -> Dict[str, str]:
    """
    Use key=value pairs from `path` as defaults of `command`'s flags, so explicit flags win.
    Keys are flag names without leading dashes (`class`, `warmup`, `fit-workers` or `fit_workers`).
    """
    sub = _subparser(parser, command)
    if sub is None:
        return {}
    values = {k.strip().lower().replace("_", "-"): v for k, v in dotenv_values(path).items() if v is not None}
    by_flag = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_flag[opt[2:]] = action
    applied = {}
    for key, raw in values.items():
        action = by_flag.get(key)
        if action is None or key in ("config", "help"):
            log.warning("config file %s: unknown key %r ignored", path, key)
            continue
        if isinstance(action, argparse._StoreTrueAction):
            sub.set_defaults(**{action.dest: raw.strip().lower() in TRUTHY})
        else:
            # argparse runs string defaults through the action's type
            sub.set_defaults(**{action.dest: raw.strip()})
        applied[key] = raw
    return applied


def _configure_logging(level_name: Optional[str]) -> None:
    level = getattr(logging, (level_name or settings.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s [contrastcpd] %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("--log-level")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    _configure_logging(known.log_level)

    try:
        if known.config and known.command:
            applied = apply_config_file(parser, known.command, known.config)
            log.debug("config file %s applied keys: %s", known.config, ", ".join(sorted(applied)) or "-")
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 means "alarm" for detect
        return 0 if e.code in (0, None) else 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return 1

    log.info("boot env: %s command=%s", settings.describe(), args.command)
    try:
        return args.handler(args)
    except (ContrastError, ValidationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        log.info("stopped by user")
        return 1


if __name__ == "__main__":
    sys.exit(main())
