"""Seeded tuning runs on the benchmark specs, written as JSON per seed.

    python3 scripts/tune_examples.py --seeds 0 1 2 --out runs/tuning
    python3 scripts/tune_examples.py --only integral --budget-integral 3000

Examples 1 and 5 use the frequency-domain method with their stored specs;
example 2 minimizes IAE over its unit-step scenario.
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

from ldpid.cases import get_case
from ldpid.sim import metrics, simulate
from ldpid.tuning import tune_frequency, tune_integral


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--budget-frequency", type=int, default=20_000)
    p.add_argument("--budget-integral", type=int, default=1000)
    p.add_argument("--only", choices=("frequency", "integral"))
    p.add_argument("--out", type=Path, default=Path("runs/tuning"))
    args = p.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    for seed in args.seeds:
        if args.only != "integral":
            for n in (1, 5):
                case = get_case(n)
                spec = replace(case.spec, seed=seed, budget=args.budget_frequency)
                t0 = time.perf_counter()
                res = tune_frequency(case.plant, spec)
                rec = res.to_record() | {"seconds": time.perf_counter() - t0}
                (args.out / f"example{n}_frequency_seed{seed}.json").write_text(json.dumps(rec, indent=2))
                print(f"example {n} seed {seed}: objective {res.objective:.3g} in {rec['seconds']:.1f} s")
        if args.only != "frequency":
            case = get_case(2)
            printed = metrics(simulate(case.plant, case.controllers["ldpid"], case.scenario), case.scenario).iae
            t0 = time.perf_counter()
            res = tune_integral(case.plant, "IAE", case.scenario, M=5, T=case.T, seed=seed,
                                budget=args.budget_integral)
            rec = res.to_record() | {"seconds": time.perf_counter() - t0, "printed_iae": printed}
            (args.out / f"example2_integral_seed{seed}.json").write_text(json.dumps(rec, indent=2, default=str))
            print(f"example 2 seed {seed}: IAE {res.objective:.4f} (printed {printed:.4f}) "
                  f"in {rec['seconds']:.1f} s")


if __name__ == "__main__":
    main()
