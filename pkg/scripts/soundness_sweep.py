"""Run many randomized scripted scenarios and check every outcome.

    python3 scripts/soundness_sweep.py [--count 1000] [--start 0]

Each scenario must end in its predicted state with a valid state path, the
predicted number of test retries and a clean lock audit.
"""

import argparse
import sys
import tempfile
import time
from collections import Counter
from pathlib import Path

from ctxcode.orchestrator.states import is_valid_state_path
from ctxcode.orchestrator.transcript import audit_locks
from ctxcode.synthetic import random_scenario, run_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=1000)
    parser.add_argument("--start", type=int, default=0, help="first seed")
    args = parser.parse_args()
    tally, bad = Counter(), []
    started = time.perf_counter()
    with tempfile.TemporaryDirectory() as scratch:
        for seed in range(args.start, args.start + args.count):
            sc = random_scenario(seed)
            r = run_scenario(sc, Path(scratch) / str(seed))
            tally[r.status] += 1
            got = (r.final_state, r.test_retries, len(r.applied_suggestions))
            want = (sc.expected_state, sc.expected_retries, sc.expected_applied)
            if got != want or not is_valid_state_path(r.transcript.state_path()) or audit_locks(r.transcript):
                bad.append(seed)
                print(f"seed {seed}: got {got}, expected {want}", file=sys.stderr)
    elapsed = time.perf_counter() - started
    print(f"{args.count} scenarios in {elapsed:.1f}s: {dict(sorted(tally.items()))}, {len(bad)} unsound")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
