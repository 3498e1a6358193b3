"""Run the repeated-split / grid-search protocol on a benchmark spec and print
the median table plus per-problem ranks.

    python3 scripts/run_protocol.py scripts/synthetic_suite.json --out results/suite
"""
import argparse
import logging
import sys
import time

from ffxnls.harness import BenchmarkSpec, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--out", default="results/protocol")
    ap.add_argument("--repetitions", type=int, help="override the spec")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    spec = BenchmarkSpec.load(args.spec)
    if args.repetitions:
        spec = BenchmarkSpec(**{**spec.__dict__, "repetitions": args.repetitions})
    t0 = time.perf_counter()
    report = run_benchmark(spec, args.out, progress=lambda s: print(s, file=sys.stderr))

    print(f"\n{'problem':<18} {'algorithm':<9} {'train mse':>11} {'test mse':>11} {'cplx':>6} {'terms':>6} {'rank':>5}")
    for r in report.summary:
        print(f"{r['problem']:<18} {r['algorithm']:<9} {r['median_train_mse']:>11.4g} {r['median_test_mse']:>11.4g} "
              f"{r['median_complexity']:>6g} {r['median_terms']:>6g} {r['rank_test']:>5g}")
    for name, err in report.errors.items():
        print(f"error in {name}: {err}")
    print(f"\n{time.perf_counter() - t0:.0f}s; report written to {args.out}")


if __name__ == "__main__":
    main()
