"""Run the bundled CustomBlock scenario through the CLI on a scratch copy.

    python3 scripts/run_customblock.py [--keep DIR]

Prints the run status, the token report and the list of changed files.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from ctxcode import cli
from ctxcode.synthetic import stage_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "customblock"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--keep", help="stage into this directory and keep it")
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as scratch:
        work = Path(args.keep) if args.keep else Path(scratch)
        staged = stage_scenario(SCENARIO, work)
        out = work / "out"
        code = cli.main(["run", "--task", staged.request, "--repo", str(staged.repo),
                         "--config", str(staged.config_path),
                         "--provider", f"scripted:{staged.fixture_path}", "--out", str(out)])
        print()
        cli.main(["report", str(out / "transcript.log")])
        print()
        print((out / "summary.txt").read_text())
        if args.keep:
            print(f"outputs kept in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
