"""Fuzz the sandboxed tools with generated paths and count escapes.

    python3 scripts/sandbox_fuzz.py [--paths 10000] [--seed 0]

Uses the instrumented probe from the test oracles; exits 1 on any access
outside the workspace.
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from oracles import run_sandbox_fuzz  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    started = time.perf_counter()
    with tempfile.TemporaryDirectory() as scratch:
        probe, outcomes = run_sandbox_fuzz(scratch, args.paths, seed=args.seed)
    print(f"{args.paths} paths, {probe.touched} filesystem accesses, {outcomes}, "
          f"{len(probe.violations)} outside the workspace ({time.perf_counter() - started:.1f}s)")
    for what, path in probe.violations[:20]:
        print(f"  {what}: {path!r}")
    return 1 if probe.violations else 0


if __name__ == "__main__":
    sys.exit(main())
