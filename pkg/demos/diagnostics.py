"""Run every numerical check suite and print a one-line verdict for each.

Usage: python3 demos/diagnostics.py [--seed 0] [--trials 200]
"""

import argparse
import time

from pcsampling.suites import SUITES, run_suite

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--trials", type=int, default=200, help="Monte Carlo draws for the randomized suites")
args = parser.parse_args()

for name in SUITES:
    t0 = time.perf_counter()
    trials = args.trials if name in ("theorem1", "lemma2") else None
    report = run_suite(name, seed=args.seed, trials=trials)
    asserted = [c for c in report["checks"] if c["assert"]]
    failed = [c["name"] for c in asserted if not c["pass"]]
    verdict = "ok" if report["passed"] else f"FAILED {failed}"
    print(f"{name:>9}: {len(asserted) - len(failed)}/{len(asserted)} checks  {verdict}  "
          f"({time.perf_counter() - t0:.1f} s)")
