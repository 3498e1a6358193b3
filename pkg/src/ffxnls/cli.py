"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fit failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import FitConfig
from .dataset import DataError, load_csv, read_table, save_csv
from .expr import SchemaViolation, complexity, dumps, evaluate, loads, to_text
from .harness import BenchmarkSpec, fit_one, mse, run_benchmark
from .synth import UnknownGenerator, synth_generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_model(path):
    try:
        return loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(str(e)) from None


def _feature_matrix(path, names) -> np.ndarray:
    header, data = read_table(path)
    missing = [n for n in names if n not in header]
    if missing:
        raise DataError(f"{path}: missing feature columns {missing}")
    return data[:, [header.index(n) for n in names]]


def _model_inputs(model, path):
    if model.feature_names is not None:
        return _feature_matrix(path, model.feature_names)
    _, data = read_table(path)
    return data


def cmd_train(args) -> int:
    d = load_csv(args.input, args.target)
    cfg = FitConfig(max_terms=args.max_bases, use_bivariate=args.bivariate,
                    use_nonlinear=args.nonlinear, l1_ratio=args.l1_ratio, seed=args.seed)
    try:
        model = fit_one(d, args.algorithm, cfg)
    except Exception as e:  # noqa: BLE001
        print(f"fit failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FIT
    text = dumps(model)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    pred = evaluate(model, d.X)
    print(f"model: {to_text(model)}", file=sys.stderr)
    print(f"train mse: {mse(d.y, pred):.9g}  complexity: {complexity(model)}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _read_model(args.model)
    X = _model_inputs(model, args.input)
    pred = evaluate(model, X)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prediction"])
        for v in pred:
            w.writerow([repr(float(v))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _read_model(args.model)
    d = load_csv(args.input, args.target)
    X = _feature_matrix(args.input, model.feature_names) if model.feature_names is not None else d.X
    pred = evaluate(model, X)
    err = mse(d.y, pred)
    r2 = 1.0 - err / float(np.var(d.y)) if np.var(d.y) > 0 else float("nan")
    print(json.dumps({"mse": err, "r2": r2, "complexity": complexity(model),
                      "n_terms": model.n_terms, "model": to_text(model)}))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    try:
        spec = BenchmarkSpec.load(args.spec)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad benchmark spec {args.spec}: {e}") from None
    report = run_benchmark(spec, args.out, progress=None if args.quiet else
                           (lambda s: print(s, file=sys.stderr)))
    for row in report.summary:
        print(f"{row['problem']:<24} {row['algorithm']:<10} median test mse "
              f"{row['median_test_mse']:.6g}  rank {row['rank_test']:g}")
    return EXIT_OK if not report.errors else EXIT_DATA


def cmd_synth(args) -> int:
    try:
        d = synth_generate(args.name, args.rows, args.noise, args.seed, args.relative_noise)
    except UnknownGenerator as e:
        raise UsageError(str(e.args[0])) from None
    save_csv(d, args.out, target=args.target)
    print(d.description, file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ffxnls", description="FFX and FFX-NLS symbolic regression")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit one model")
    t.add_argument("--input", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--algorithm", choices=["ffx", "ffx-nls"], default="ffx-nls")
    t.add_argument("--max-bases", type=int, default=10)
    t.add_argument("--bivariate", action="store_true")
    t.add_argument("--nonlinear", action="store_true")
    t.add_argument("--l1-ratio", type=float, default=0.5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="predict with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--input", required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="score a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--target", required=True)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="run the repeated split / grid-search protocol")
    b.add_argument("--spec", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("synth", help="write a synthetic dataset")
    s.add_argument("--name", required=True)
    s.add_argument("--rows", type=int, default=500)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--relative-noise", action="store_true",
                   help="interpret --noise as a fraction of std(y)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target", default="y")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"ffxnls: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SchemaViolation, OSError) as e:
        print(f"ffxnls: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"ffxnls: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
