#!/usr/bin/env python3
"""Print the noise-free Trotter error (magnetization and propagator) against N.

    python scripts/convergence_study.py --kind tfim --init 00000 --t 1.0
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from trotterml.simulation.circuits import SpinModel  # noqa: E402
from trotterml.simulation.reference import convergence_study  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", choices=["tfim", "xy"], default="tfim")
    parser.add_argument("--spins", type=int, default=5)
    parser.add_argument("--J", type=float, default=2.0)
    parser.add_argument("--h", type=float, default=1.0)
    parser.add_argument("--init", default=None, help="initial basis state (default all zeros)")
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--steps", default="2,4,8,16,32,64")
    args = parser.parse_args()

    model = SpinModel(args.kind, args.spins, args.J, args.h)
    init = args.init or "0" * args.spins
    steps = [int(s) for s in args.steps.split(",")]
    study = convergence_study(model, init, steps, args.t)

    print(f"{'N':>4}  {'<Z> error':>12}  {'ratio':>7}  {'||U_N - U||':>12}  {'ratio':>7}")
    for n in steps:
        print(
            f"{n:>4}  {study.errors[n]:12.4e}  {_ratio(study.ratios, n)}"
            f"  {study.operator_errors[n]:12.4e}  {_ratio(study.operator_ratios, n)}"
        )


def _ratio(ratios: dict[int, float], n: int) -> str:
    return f"{ratios[n]:7.3f}" if n in ratios else " " * 7


if __name__ == "__main__":
    main()
