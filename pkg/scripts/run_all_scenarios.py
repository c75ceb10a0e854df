"""Run every experiment scenario and write one CSV per scenario.

Usage: python3 scripts/run_all_scenarios.py --out results --trials 1000 --seed 7
Set DIMRED_THREADS to spread trials over worker processes.
"""

import argparse
import os
import time

from cran_dimred.channel import SystemConfig
from cran_dimred.harness import SCENARIOS, ExperimentConfig, emit_csv, run_experiment

# per-scenario overrides of the default experiment setup
SETUPS = {
    "MiVsSnr": dict(dims=[1, 2, 3, 4]),
    "DownlinkVsN": dict(base=SystemConfig(P=10 ** 0.9), sweep=list(range(2, 9))),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--only", nargs="*", choices=SCENARIOS, help="subset of scenarios")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for scenario in args.only or SCENARIOS:
        ecfg = ExperimentConfig(scenario=scenario, trials=args.trials, seed=args.seed,
                                **SETUPS.get(scenario, {}))
        t0 = time.perf_counter()
        rows = run_experiment(ecfg)
        path = os.path.join(args.out, f"{scenario}.csv")
        emit_csv(rows, path)
        print(f"{scenario:<15} {len(rows):>5} rows  {time.perf_counter() - t0:7.1f}s  -> {path}")


if __name__ == "__main__":
    main()
