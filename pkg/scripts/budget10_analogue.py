"""Ten-experiment discovery rate after a failure-only history.

Each repetition draws a clustered landscape, seeds the campaign with 37
known failures, and asks each strategy to find at least one feasible
configuration within ten experiments.  Prints the per-strategy success rate
over all repetitions, the desk-scale version of starting a parameter search
from a long streak of failed prints.

    python3 scripts/budget10_analogue.py
    python3 scripts/budget10_analogue.py --runs 100 --fraction 0.01
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from beam.simulator import OracleSpec, make_oracle, make_seed_failures, run_simulated_campaign
from beam.space import AxisSpec, ParameterSpace


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=100, help="grid side length")
    ap.add_argument("--fraction", type=float, default=0.02, help="feasible fraction")
    ap.add_argument("--failures", type=int, default=37, help="seeded failure rows")
    ap.add_argument("-T", "--budget", type=int, default=10)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument(
        "--strategies", default="beam,greedy,random", help="comma-separated strategies"
    )
    ap.add_argument("--seed", type=int, default=0, help="base seed for run r is seed+r")
    ap.add_argument("--pool-cap", type=int, default=2000)
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    space = ParameterSpace(
        axes=(
            AxisSpec("x", 0.0, float(args.side - 1), 1.0),
            AxisSpec("y", 0.0, float(args.side - 1), 1.0),
        )
    )
    strategies = [s.strip() for s in args.strategies.split(",")]
    hits = {s: 0 for s in strategies}
    discoveries = {s: 0 for s in strategies}

    t0 = time.perf_counter()
    for rep in range(args.runs):
        oracle = make_oracle(
            space, OracleSpec("clustered", args.fraction, 1, seed=args.seed + rep)
        )
        history = make_seed_failures(
            space, oracle, args.failures, seed=args.seed + 1000 + rep
        )
        for strategy in strategies:
            trace = run_simulated_campaign(
                space,
                oracle,
                strategy,
                T=args.budget,
                B=1,
                seed=args.seed + rep,
                seed_data=history,
                pool_cap=args.pool_cap,
            )
            hits[strategy] += 1 if trace.discoveries >= 1 else 0
            discoveries[strategy] += trace.discoveries
    wall = time.perf_counter() - t0

    print(
        f"{args.runs} runs, T={args.budget}, {args.failures} seeded failures, "
        f"feasible fraction {args.fraction:g}"
    )
    for strategy in strategies:
        rate = hits[strategy] / args.runs
        print(
            f"{strategy:<8} found >=1 feasible in {hits[strategy]:3d}/{args.runs} runs "
            f"({rate:.0%}); {discoveries[strategy]} total discoveries"
        )
    print(f"total {wall:.1f} s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
