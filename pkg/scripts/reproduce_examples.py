"""Run all five benchmark examples through the CLI runner and print a digest.

    python3 scripts/reproduce_examples.py --out runs/examples
"""
from __future__ import annotations

import argparse
import contextlib
import io
import json
from pathlib import Path

from ldpid.cases import CASES
from ldpid.cli import execute


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", type=Path, default=Path("runs/examples"))
    args = p.parse_args(argv)
    for n in CASES:
        out = args.out / f"example{n}"
        with contextlib.redirect_stdout(io.StringIO()):
            execute("example", {"n": n}, out)
        summary = json.loads((out / "summary.json").read_text())
        print(f"== example {n}: {summary['title']} (T={summary['T']} s)")
        for key, val in summary.items():
            if key.startswith("margins_"):
                print(f"  {key[8:]:>12}: omega_c={val['omega_c']}, phase_margin={val['phase_margin']}")
            elif isinstance(val, dict):
                print(f"  {key:>12}: IAE={val['iae']}, overshoot={val['overshoot']}, "
                      f"rise={val['rise_time']}, settling={val['settling_time']}, diverged={val['diverged']}")


if __name__ == "__main__":
    main()
