#!/usr/bin/env python3
"""trotterml full-pipeline entry point.

Runs generate -> train -> mitigate -> reference -> evaluate -> export for
the given config (``python run.py configs/tfim.toml``); extra arguments are
passed to the ``pipeline`` command.
"""

from __future__ import annotations

import multiprocessing
import sys

# Must run before heavy imports: spawned generation workers re-import this
# entry point and must not start another pipeline.
multiprocessing.freeze_support()


def main() -> int:
    # Lazy import so worker child processes never execute this code path.
    from trotterml.cli.main import main as cli_main

    args = sys.argv[1:]
    if args and not args[0].startswith("-"):
        args = ["--config", args[0], *args[1:]]
    return cli_main(["pipeline", *args])


if __name__ == "__main__":
    sys.exit(main())
