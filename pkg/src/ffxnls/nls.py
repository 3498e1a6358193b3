"""FFX-NLS: base functions with nonlinear parameters.

Pipeline for one fit:

1. generate univariate NLS bases;
2. optimize every slot of the full candidate model by variable projection;
3. freeze those slots and pick a support along a lasso path;
4. optionally multiply the (at most ``bivariate_pool``) picked univariate
   bases pairwise, append the products to the univariate list and repeat
   2 and 3 on the combined set;
5. re-optimize the picked bases alone, ``final_passes`` times, keeping the
   lowest-SSE result.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .basis import MAX_BIVARIATE_FACTORS, evaluate_bases, feasible_products, generate_bivariate, generate_nls_bases
from .config import FitConfig
from .dataset import Dataset
from .expr import BaseFunction, Model, evaluate
from .linsolve import PathResult, design_matrix, elastic_net_path, lasso_select
from .varpro import SeparableProblem, VpResult, optimize, project, to_model


@dataclass(frozen=True)
class FitInfo:
    n_univariate: int
    univariate_selected: tuple[int, ...]
    n_products: int
    n_candidates: int
    selected: tuple[int, ...]
    frozen_sse: float  # least-squares SSE of the selected bases at screened slots
    final_sse: float
    status: str


@dataclass(frozen=True)
class FitResult:
    model: Model
    info: FitInfo


class _Stage:
    """A candidate set after slot screening, with its lasso path (built lazily)."""

    def __init__(self, bases: list[BaseFunction], train: Dataset, config: FitConfig):
        vp = replace(config.vp, max_iters=min(config.screening_iters, config.vp.max_iters))
        problem = SeparableProblem(bases, train.X, train.y)
        self.result = optimize(problem, vp)
        self.bases = problem.bound_bases(self.result.k)
        self.cols = evaluate_bases(self.bases, train.X)
        self.y = train.y
        self.config = config
        self._D = None
        self._path: PathResult | None = None
        self._selected: dict[int, tuple[int, ...]] = {}

    def select(self, max_terms: int) -> tuple[int, ...]:
        if max_terms not in self._selected:
            if self._path is None:
                self._D = design_matrix(self.cols, self.y)
                c = self.config
                self._path = elastic_net_path(self._D, self.y, 1.0, n_lambdas=c.n_lambdas,
                                              eps=c.lambda_ratio, tol=c.cd_tol,
                                              max_sweeps=c.cd_max_sweeps)
            self._selected[max_terms] = lasso_select(self._D, self.y, max_terms, self._path)
        return self._selected[max_terms]


def _final(bases: list[BaseFunction], train: Dataset, config: FitConfig) -> tuple[Model, float, VpResult]:
    problem = SeparableProblem(bases, train.X, train.y)
    start = project(problem, problem.initial_k())
    best = None
    k = None
    for _ in range(config.final_passes):
        res = optimize(problem, config.vp, k0=k)
        if best is None or res.sse < best.sse:
            best = res
        k = res.k
    return to_model(problem, best, train.feature_names), start.sse, best


def fit_ffx_nls_budgets(train: Dataset, config: FitConfig, budgets: Iterable[int]) -> dict[int, FitResult]:
    """Fit one model per term budget, sharing every budget-independent stage."""
    budgets = list(budgets)
    if any(b < 1 for b in budgets):
        raise ValueError("max_terms must be >= 1")
    y = train.y
    cands = generate_nls_bases(train, config.use_nonlinear)
    uni = _Stage(list(cands.bases), train, config) if len(cands) else None
    pool = min(config.bivariate_pool, MAX_BIVARIATE_FACTORS)
    combined: dict[tuple[int, ...], tuple[_Stage, int]] = {}
    out = {}
    for b in budgets:
        if uni is None:
            m = Model(float(np.mean(y)), (), train.feature_names)
            sse = float(np.sum((y - y.mean()) ** 2))
            out[b] = FitResult(m, FitInfo(0, (), 0, 0, (), sse, sse, "constant"))
            continue
        stage, n_products = uni, 0
        first = uni.select(min(b, pool) if config.use_bivariate else b)
        if config.use_bivariate and len(first) >= 2:
            if first not in combined:
                factors = [uni.bases[i] for i in first]
                prods = feasible_products(generate_bivariate(factors, pool), train.X, exclude=uni.bases).bases
                combined[first] = (_Stage(list(uni.bases) + list(prods), train, config), len(prods))
            stage, n_products = combined[first]
        chosen = stage.select(b)
        if not chosen:
            m = Model(float(np.mean(y)), (), train.feature_names)
            sse = float(np.sum((y - y.mean()) ** 2))
            info = FitInfo(len(uni.bases), first, n_products, len(stage.bases), (), sse, sse, "constant")
        else:
            m, frozen, res = _final([stage.bases[i] for i in chosen], train, config)
            info = FitInfo(len(uni.bases), first, n_products, len(stage.bases), chosen,
                           frozen, res.sse, res.status)
        out[b] = FitResult(m, info)
    return out


def fit_ffx_nls(train: Dataset, config: FitConfig) -> Model:
    return fit_ffx_nls_budgets(train, config, [config.max_terms])[config.max_terms].model


def predict(m: Model, X) -> np.ndarray:
    return evaluate(m, X)
