"""Benchmark protocol: repeated shuffled splits, grid search with k-fold CV,
final fits, median aggregation and per-problem ranking."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .config import GRID_KEYS, GRID_FLAGS, GRID_L1_RATIOS, GRID_MAX_TERMS, FitConfig
from .dataset import Dataset, SplitSpec, load_csv, make_folds, shuffle_split
from .expr import Model, complexity, evaluate, to_text
from .ffx import fit_ffx_budgets
from .nls import fit_ffx_nls_budgets
from .synth import synth_generate

log = logging.getLogger(__name__)

BudgetFitter = Callable[[Dataset, FitConfig, Sequence[int]], Mapping[int, Model]]


def _nls_models(train, config, budgets):
    return {b: r.model for b, r in fit_ffx_nls_budgets(train, config, budgets).items()}


ALGORITHMS: dict[str, BudgetFitter] = {"ffx": fit_ffx_budgets, "ffx_nls": _nls_models}


def canonical_algorithm(name: str) -> str:
    key = name.replace("-", "_").lower()
    if key not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {sorted(ALGORITHMS)}")
    return key


def default_grid(algorithm: str) -> dict[str, list]:
    grid = {
        "max_terms": list(GRID_MAX_TERMS),
        "use_bivariate": list(GRID_FLAGS),
        "use_nonlinear": list(GRID_FLAGS),
    }
    if canonical_algorithm(algorithm) == "ffx":
        grid["l1_ratio"] = list(GRID_L1_RATIOS)
    return grid


def expand_grid(grid: Mapping[str, Sequence], base: FitConfig = FitConfig(),
                algorithm: str = "ffx_nls") -> list[FitConfig]:
    """Cartesian product in key order of GRID_KEYS; l1_ratio is dropped for FFX-NLS."""
    bad = set(grid) - set(GRID_KEYS)
    if bad:
        raise ValueError(f"unknown grid keys {sorted(bad)}")
    keys = [k for k in GRID_KEYS if k in grid and not (k == "l1_ratio" and algorithm != "ffx")]
    if any(len(grid[k]) == 0 for k in keys):
        raise ValueError("grid values must be non-empty")
    return [base.replace(**dict(zip(keys, vals))) for vals in itertools.product(*(grid[k] for k in keys))]


def mse(y, pred) -> float:
    with np.errstate(all="ignore"):
        v = float(np.mean((np.asarray(y) - pred) ** 2))
    return v if math.isfinite(v) else math.inf


def _budget_groups(configs: list[FitConfig]) -> dict[FitConfig, list[int]]:
    groups: dict[FitConfig, list[int]] = {}
    for i, c in enumerate(configs):
        groups.setdefault(c.replace(max_terms=1), []).append(i)
    return groups


def cv_scores(train: Dataset, algorithm: str | BudgetFitter, configs: list[FitConfig],
              cv_folds: int = 5, seed: int = 0) -> np.ndarray:
    """Mean validation MSE per config; +inf if any fold fails."""
    fitter = ALGORITHMS[canonical_algorithm(algorithm)] if isinstance(algorithm, str) else algorithm
    folds = make_folds(train, cv_folds, seed)
    totals = np.zeros(len(configs))
    for f in range(cv_folds):
        tr_idx, va_idx = folds.train_test(f)
        tr, va = train.take(tr_idx), train.take(va_idx)
        for shared, idx in _budget_groups(configs).items():
            budgets = sorted({configs[i].max_terms for i in idx})
            try:
                models = fitter(tr, shared, budgets)
                scores = {b: mse(va.y, evaluate(models[b], va.X)) for b in budgets}
            except Exception as e:  # noqa: BLE001 - a failing config is scored, not fatal
                log.info("config %s failed on fold %d: %s", shared.hyperparams(), f, e)
                scores = {b: math.inf for b in budgets}
            for i in idx:
                totals[i] += scores[configs[i].max_terms]
    return totals / cv_folds


class GridSearchFailed(RuntimeError):
    pass


def pick_best(configs: list[FitConfig], scores: np.ndarray, y_var: float = 1.0,
              rtol: float = 1e-9) -> FitConfig:
    """Lowest score; scores within rtol (plus a floor tied to var(y)) of it tie,
    and ties go to the smaller max_terms, then to grid order."""
    finite = np.isfinite(scores)
    if not finite.any():
        raise GridSearchFailed("every configuration failed")
    best = float(scores[finite].min())
    tol = rtol * abs(best) + 1e-12 * max(y_var, 1e-300)
    tied = [i for i in range(len(configs)) if finite[i] and scores[i] <= best + tol]
    return configs[min(tied, key=lambda i: (configs[i].max_terms, i))]


def grid_search(train: Dataset, algorithm: str | BudgetFitter, grid: Mapping[str, Sequence] | None = None,
                cv_folds: int = 5, seed: int = 0, base: FitConfig = FitConfig()) -> FitConfig:
    name = canonical_algorithm(algorithm) if isinstance(algorithm, str) else "ffx"
    configs = expand_grid(default_grid(name) if grid is None else grid, base, name)
    if len(configs) == 1:
        return configs[0]
    scores = cv_scores(train, algorithm, configs, cv_folds, seed)
    return pick_best(configs, scores, float(np.var(train.y)))


def fit_one(train: Dataset, algorithm: str, config: FitConfig) -> Model:
    fitter = ALGORITHMS[canonical_algorithm(algorithm)]
    return fitter(train, config, [config.max_terms])[config.max_terms]


# -- benchmark ---------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    name: str
    path: str | None = None
    target: str = "y"
    synth: str | None = None
    rows: int = 500
    noise: float = 0.0
    relative_noise: bool = False
    data_seed: int = 0

    def load(self) -> Dataset:
        if self.synth is not None:
            return synth_generate(self.synth, self.rows, self.noise, self.data_seed, self.relative_noise)
        if self.path is None:
            raise ValueError(f"problem {self.name!r} has neither a path nor a generator")
        return load_csv(self.path, self.target)

    @classmethod
    def from_json(cls, doc, base_dir: Path | None = None) -> "ProblemSpec":
        if isinstance(doc, str):
            if doc.startswith("synth:"):
                return cls(name=doc[6:], synth=doc[6:])
            doc = {"path": doc}
        doc = dict(doc)
        if "path" in doc and base_dir is not None and not Path(doc["path"]).is_absolute():
            doc["path"] = str(base_dir / doc["path"])
        if "name" not in doc:
            doc["name"] = doc.get("synth") or Path(doc["path"]).stem
        return cls(**doc)


@dataclass(frozen=True)
class BenchmarkSpec:
    problems: tuple[ProblemSpec, ...]
    repetitions: int = 10
    train_fraction: float = 0.75
    cv_folds: int = 5
    algorithms: tuple[str, ...] = ("ffx", "ffx_nls")
    grids: Mapping[str, Mapping[str, Sequence]] = field(default_factory=dict)
    seed: int = 0
    baselines: tuple[str, ...] = ()

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        object.__setattr__(self, "algorithms", tuple(canonical_algorithm(a) for a in self.algorithms))
        object.__setattr__(self, "problems", tuple(self.problems))
        names = [p.name for p in self.problems]
        if len(set(names)) != len(names):
            raise ValueError("problem names must be unique")

    def grid_for(self, algorithm: str) -> Mapping[str, Sequence]:
        for key in (algorithm, algorithm.replace("_", "-")):
            if key in self.grids:
                return self.grids[key]
        return default_grid(algorithm)

    @classmethod
    def from_json(cls, doc: dict, base_dir: Path | None = None) -> "BenchmarkSpec":
        doc = dict(doc)
        doc["problems"] = tuple(ProblemSpec.from_json(p, base_dir) for p in doc["problems"])
        if "algorithms" in doc:
            doc["algorithms"] = tuple(doc["algorithms"])
        if "baselines" in doc:
            doc["baselines"] = tuple(str(base_dir / b) if base_dir and not Path(b).is_absolute() else b
                                     for b in doc["baselines"])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "BenchmarkSpec":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)


def repetition_seed(master: int, problem: str, repetition: int) -> int:
    """Independent, reproducible seed per (master seed, problem, repetition)."""
    key = [master, *problem.encode("utf-8"), repetition]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint32)[0])


RESULT_FIELDS = ["problem", "algorithm", "repetition", "seed", "status", "train_mse", "test_mse",
                 "complexity", "n_terms", "hyperparams", "model"]
SUMMARY_FIELDS = ["problem", "algorithm", "n_ok", "median_train_mse", "median_test_mse",
                  "median_complexity", "median_terms", "rank_train", "rank_test"]


@dataclass
class RunRecord:
    problem: str
    algorithm: str
    repetition: int
    seed: int
    status: str = "ok"
    train_mse: float = math.nan
    test_mse: float = math.nan
    complexity: float = math.nan
    n_terms: float = math.nan
    hyperparams: str = ""
    model: str = ""
    fit_ms: float = math.nan
    search_ms: float = math.nan


def _median(values) -> float:
    v = [x for x in values if not math.isnan(x)]
    return float(np.median(v)) if v else math.nan


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties share the average; NaN counts as worst."""
    v = np.array([math.inf if math.isnan(x) else x for x in values], dtype=float)
    return rankdata(v, method="average").tolist()


@dataclass
class BenchmarkReport:
    records: list[RunRecord]
    summary: list[dict]
    errors: dict[str, str] = field(default_factory=dict)

    def medians(self, problem: str, algorithm: str) -> dict:
        for row in self.summary:
            if row["problem"] == problem and row["algorithm"] == algorithm:
                return row
        raise KeyError((problem, algorithm))

    def ranks(self, problem: str) -> dict[str, float]:
        return {r["algorithm"]: r["rank_test"] for r in self.summary if r["problem"] == problem}

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "results.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_FIELDS)
            for r in self.records:
                w.writerow([_cell(getattr(r, f)) for f in RESULT_FIELDS])
        with (out / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_FIELDS)
            for row in self.summary:
                w.writerow([_cell(row[f]) for f in SUMMARY_FIELDS])
        # wall-clock numbers live outside the CSVs so those stay byte-reproducible
        timings = [{"problem": r.problem, "algorithm": r.algorithm, "repetition": r.repetition,
                    "fit_ms": _finite_or_str(r.fit_ms), "search_ms": _finite_or_str(r.search_ms)}
                   for r in self.records]
        (out / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
        summary = [{k: _finite_or_str(v) for k, v in row.items()} for row in self.summary]
        doc = {"summary": summary, "errors": self.errors}
        (out / "summary.json").write_text(json.dumps(doc, indent=2) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _finite_or_str(v):
    return repr(v) if isinstance(v, float) and not math.isfinite(v) else v


def load_baselines(paths: Iterable[str]) -> list[RunRecord]:
    """Per-repetition scores of external methods: problem,algorithm,repetition,train_mse,test_mse."""
    recs = []
    for p in paths:
        with open(p, newline="") as fh:
            for row in csv.DictReader(fh):
                recs.append(RunRecord(row["problem"], row["algorithm"], int(row["repetition"]), -1,
                                      "baseline", float(row["train_mse"]), float(row["test_mse"])))
    return recs


def summarize(records: list[RunRecord], problems: Sequence[str], algorithms: Sequence[str]) -> list[dict]:
    rows = []
    for prob in problems:
        block = []
        for alg in algorithms:
            rs = [r for r in records if r.problem == prob and r.algorithm == alg]
            if not rs:
                continue
            block.append({
                "problem": prob,
                "algorithm": alg,
                "n_ok": sum(r.status in ("ok", "baseline") for r in rs),
                "median_train_mse": _median([r.train_mse for r in rs]),
                "median_test_mse": _median([r.test_mse for r in rs]),
                "median_complexity": _median([r.complexity for r in rs]),
                "median_terms": _median([r.n_terms for r in rs]),
                "median_fit_ms": _median([r.fit_ms for r in rs]),
            })
        if block:
            for key, col in (("rank_train", "median_train_mse"), ("rank_test", "median_test_mse")):
                for row, rk in zip(block, average_ranks([b[col] for b in block])):
                    row[key] = rk
        rows.extend(block)
    return rows


def run_benchmark(spec: BenchmarkSpec, out_dir=None, base: FitConfig = FitConfig(),
                  progress: Callable[[str], None] | None = None) -> BenchmarkReport:
    records: list[RunRecord] = []
    errors: dict[str, str] = {}
    for prob in spec.problems:
        try:
            data = prob.load()
        except Exception as e:  # noqa: BLE001 - recorded, other problems continue
            errors[prob.name] = f"{type(e).__name__}: {e}"
            log.error("problem %s failed to load: %s", prob.name, e)
            continue
        for rep in range(spec.repetitions):
            seed = repetition_seed(spec.seed, prob.name, rep)
            try:
                train, test = shuffle_split(data, SplitSpec(spec.train_fraction, seed))
            except Exception as e:  # noqa: BLE001
                errors[prob.name] = f"{type(e).__name__}: {e}"
                break
            for alg in spec.algorithms:
                rec = RunRecord(prob.name, alg, rep, seed)
                try:
                    t0 = time.perf_counter()
                    cfg = grid_search(train, alg, spec.grid_for(alg), spec.cv_folds, seed, base)
                    t1 = time.perf_counter()
                    model = fit_one(train, alg, cfg)
                    t2 = time.perf_counter()
                except Exception as e:  # noqa: BLE001
                    rec.status = f"error: {type(e).__name__}: {e}"
                    rec.train_mse = rec.test_mse = math.inf
                else:
                    rec.search_ms = (t1 - t0) * 1e3
                    rec.fit_ms = (t2 - t1) * 1e3
                    rec.train_mse = mse(train.y, evaluate(model, train.X))
                    rec.test_mse = mse(test.y, evaluate(model, test.X))
                    rec.complexity = float(complexity(model))
                    rec.n_terms = float(model.n_terms)
                    rec.hyperparams = json.dumps(cfg.hyperparams(alg), sort_keys=True)
                    rec.model = to_text(model, data.feature_names)
                records.append(rec)
                if progress:
                    progress(f"{prob.name} rep {rep} {alg}: test mse {rec.test_mse:.6g}")
    baseline = load_baselines(spec.baselines)
    algs = list(spec.algorithms) + sorted({r.algorithm for r in baseline} - set(spec.algorithms))
    summary = summarize(records + baseline, [p.name for p in spec.problems], algs)
    report = BenchmarkReport(records, summary, errors)
    if out_dir is not None:
        report.write(out_dir)
    return report
