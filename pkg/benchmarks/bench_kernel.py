"""Compiled kernel vs pure-Python fallback on representative stages and contexts.

    python3 benchmarks/bench_kernel.py [--repeat N] [--quick] [--context K2.cxt]
"""

import argparse
import time

import numpy as np

from centmon import search
from centmon.conditions import ConditionId
from centmon.fca import FormalContext, count_intents, read_cxt
from centmon.search import compiled_condition_plan, run_task

STAGES = ["C1", "E1", "U(193)", "D1", "F1", "A5"]
QUICK = ["C1", "E1", "U(193)", "D1"]


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the stages that take minutes in pure Python")
    ap.add_argument("--context", action="append", default=[], help="also time Next Closure on this .cxt file")
    args = ap.parse_args()
    if search._kernel is None:
        raise SystemExit("compiled kernel not built; run: pip install -e . --no-build-isolation")

    print(f"{'workload':<22}{'cython s':>10}{'python s':>10}{'speedup':>9}  result")
    for tag in QUICK if args.quick else STAGES:
        cp = compiled_condition_plan(ConditionId.parse(tag))
        tc, (fc, sc) = best_of(lambda: run_task(cp, (), "cython"), args.repeat)
        tp, (fp, sp) = best_of(lambda: run_task(cp, (), "python"), 1)
        assert fc == fp and sc == sp, tag
        print(f"{'stage ' + tag:<22}{tc:>10.3f}{tp:>10.2f}{tp / tc:>9.0f}  {len(fc)} monoids, {sc['nodes']} nodes", flush=True)

    rng = np.random.default_rng(0)
    contexts = [(f"closure {r}x{c}", FormalContext.from_matrix(rng.random((r, c)) < d))
                for r, c, d in [(120, 70, 0.15), (392, 167, 0.05)]]
    contexts += [(f"closure {path}", read_cxt(path)) for path in args.context]
    for label, ctx in contexts:
        tc, nc = best_of(lambda: count_intents(ctx, "cython"), args.repeat)
        tp, np_ = best_of(lambda: count_intents(ctx, "python"), 1)
        assert nc == np_
        print(f"{label:<22}{tc:>10.3f}{tp:>10.2f}{tp / tc:>9.0f}  {nc} intents", flush=True)

if __name__ == "__main__":
    main()
