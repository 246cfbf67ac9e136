"""Command-line entry point: ``trotterml <command> [options]``."""

from __future__ import annotations

import argparse
import atexit
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from trotterml import __version__
from trotterml.core.config import settings
from trotterml.core.errors import TrotterMLError

logger = logging.getLogger("trotterml")

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def _c_values(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 2,3, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("c values must be positive integers")
    return values


def _pair(text: str) -> tuple[Path, Path]:
    a, sep, b = text.partition(",")
    if not sep or not a or not b:
        raise argparse.ArgumentTypeError(f"expected A.jsonl,B.jsonl, got {text!r}")
    return Path(a), Path(b)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run config (defaults when omitted)")
    common.add_argument("--seed", type=int, help="override [seeds] master")
    common.add_argument("--out", type=Path, help="override [output] directory")
    common.add_argument("--exact-mode", action="store_true", help="exact expectations, no shots")
    common.add_argument(
        "--post-select", type=int, nargs="?", const=-1, metavar="N",
        help="keep only shots with N excitations (no N: popcount of the initial state)",
    )
    common.add_argument("--workers", type=int, help="generation worker processes")
    common.add_argument("--epochs", type=int, help="override [training] epochs")
    common.add_argument("--force", action="store_true", help="allow mixing lineage hashes")
    common.add_argument("--log-level", default=settings.log_level, help="logging level")

    parser = argparse.ArgumentParser(
        prog="trotterml", description="Neural-network mitigation of Trotterized spin-chain data."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="simulate stage datasets")
    p.add_argument(
        "--stage", default="all",
        choices=["quasi-ideal", "training-noisy", "eval-noisy", "all"],
    )

    p = sub.add_parser("train", parents=[common], help="train the mitigation network")
    p.add_argument("--noisy", type=Path, help="training_noisy dataset")
    p.add_argument("--quasi", type=Path, help="quasi_ideal dataset")

    p = sub.add_parser("mitigate", parents=[common], help="apply a checkpoint to eval data")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--eval", dest="eval_path", type=Path, help="eval_noisy dataset")

    p = sub.add_parser("evaluate", parents=[common], help="compare datasets")
    p.add_argument("--pair", dest="pairs", type=_pair, action="append", metavar="A,B",
                   help="datasets to compare (repeatable)")
    p.add_argument("--exact", type=Path, help="exact dataset for agreement horizons")
    p.add_argument("--axes", default="z", help="comma-separated axes for the overall MSE")

    sub.add_parser("reference", parents=[common], help="exact and ideal-Trotter datasets")

    p = sub.add_parser("export", parents=[common], help="CSV/SVG from a report or dataset")
    p.add_argument("artifact", type=Path)
    p.add_argument("--format", dest="fmt", choices=["csv", "svg"], default="csv")
    p.add_argument("--focus-init", help="initial state to chart for dataset exports")

    p = sub.add_parser("pipeline", parents=[common], help="run every stage end to end")
    p.add_argument("--c-values", type=_c_values, help="comma-separated c values to sweep")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _dispatch(args: argparse.Namespace) -> list[Path]:
    from trotterml.cli.commands.common import RunPaths, config_from_args

    if args.command == "export":
        from trotterml.cli.commands.export import cmd_export

        return cmd_export(args.artifact, args.fmt, args.out, args.focus_init)

    config = config_from_args(
        args.config,
        seed=args.seed,
        out=args.out,
        exact_mode=args.exact_mode,
        post_select=args.post_select,
        workers=args.workers,
        epochs=args.epochs,
    )
    paths = RunPaths(config.output.directory)

    if args.command == "generate":
        from trotterml.cli.commands.generate import cmd_generate

        return cmd_generate(config, args.stage, paths=paths)
    if args.command == "train":
        from trotterml.cli.commands.train import cmd_train
        from trotterml.schemas.models import Role

        noisy = args.noisy or paths.dataset(Role.TRAINING_NOISY)
        quasi = args.quasi or paths.dataset(Role.QUASI_IDEAL)
        return cmd_train(config, noisy, quasi, paths, args.force)
    if args.command == "mitigate":
        from trotterml.cli.commands.mitigate import cmd_mitigate
        from trotterml.schemas.models import Role

        checkpoint = args.checkpoint or paths.checkpoint
        eval_path = args.eval_path or paths.dataset(Role.EVAL_NOISY)
        return cmd_mitigate(config, checkpoint, eval_path, paths, args.force)
    if args.command == "evaluate":
        from trotterml.cli.commands.evaluate import cmd_evaluate
        from trotterml.schemas.models import Role

        pairs = args.pairs or [
            (paths.dataset(Role.MITIGATED), paths.dataset(Role.IDEAL_TROTTER)),
            (paths.dataset(Role.EVAL_NOISY), paths.dataset(Role.IDEAL_TROTTER)),
        ]
        exact = args.exact
        if exact is None and paths.dataset(Role.EXACT).is_file():
            exact = paths.dataset(Role.EXACT)
        axes = [a.strip() for a in args.axes.split(",") if a.strip()]
        return cmd_evaluate(config, pairs, exact, axes, paths, force=args.force)
    if args.command == "reference":
        from trotterml.cli.commands.reference import cmd_reference

        return cmd_reference(config, paths)
    if args.command == "pipeline":
        from trotterml.cli.commands.pipeline import cmd_pipeline

        return cmd_pipeline(config, args.c_values, args.force)
    raise AssertionError(f"unhandled command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    from trotterml.processing.worker_pool import shutdown_all_pools

    atexit.register(shutdown_all_pools)
    try:
        written = _dispatch(args)
    except TrotterMLError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_UNEXPECTED
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_UNEXPECTED
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
