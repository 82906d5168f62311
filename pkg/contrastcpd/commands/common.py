# contrastcpd/commands/common.py
import argparse

from .. import settings
from ..errors import ContrastError
from ..schemas.discriminators import DiscriminatorSpec, OptimizerSettings, parse_family


class UsageError(ContrastError):
    """Missing or contradictory command-line options."""


def add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file; keys are flag names without dashes")
    parser.add_argument("--seed", type=int, help=f"base seed (default {settings.DEFAULT_SEED})")
    parser.add_argument("--workers", type=int, help="threads for replications / calibration reps")
    parser.add_argument("--fit-workers", type=int, help="threads for per-split fits inside a step")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")


def add_family_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--class", dest="family", help="poly:<p> | fourier:<q> | linear[:d] | mlp[:w1,w2,...]")
    parser.add_argument("--epochs", type=int, help="Adam epochs per mlp fit (default 50)")
    parser.add_argument("--lr", type=float, help="mlp Adam learning rate (default 0.1)")
    parser.add_argument("--clamp", type=float, help="output clamp bound (default 10)")


def add_detector_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--warmup", type=int, default=20)
    parser.add_argument("--margin", type=int, default=10)


def seed_of(args) -> int:
    return settings.DEFAULT_SEED if args.seed is None else args.seed


def workers_of(args) -> int:
    return settings.WORKERS if args.workers is None else max(1, args.workers)


def fit_workers_of(args) -> int:
    return settings.FIT_WORKERS if args.fit_workers is None else max(1, args.fit_workers)


def build_spec(args, default_epochs: int = 50) -> DiscriminatorSpec:
    family = args.family
    if not family:
        raise UsageError("--class is required")
    optimizer = OptimizerSettings(
        epochs=default_epochs if args.epochs is None else args.epochs,
        learning_rate=0.1 if args.lr is None else args.lr,
    )
    overrides = {"optimizer": optimizer}
    if args.clamp is not None:
        overrides["clamp_bound"] = args.clamp
    return parse_family(family, **overrides)
