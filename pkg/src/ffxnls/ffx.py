"""Plain FFX: fixed bases, one elastic-net path, least-squares refit on the chosen support."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .basis import (MAX_BIVARIATE_FACTORS, column_std, evaluate_bases, feasible_products,
                    generate_bivariate, generate_ffx_bases, top_by_correlation)
from .config import FitConfig
from .dataset import Dataset
from .expr import BaseFunction, Model
from .linsolve import design_matrix, elastic_net_path, ols, select_support

# a refit term whose contribution std is below this fraction of std(y) is dropped
NEGLIGIBLE = 1e-10


def ffx_candidates(train: Dataset, config: FitConfig) -> tuple[list[BaseFunction], np.ndarray]:
    """Univariate bases plus, if configured, products of the ``bivariate_pool``
    univariate columns most correlated with the target."""
    bases = list(generate_ffx_bases(train, config.use_nonlinear).bases)
    cols = evaluate_bases(bases, train.X)
    # abs(x^2) == x^2 and similar: keep the first of identical columns
    if bases:
        _, first = np.unique(cols, axis=1, return_index=True)
        keep = np.sort(first)
        bases, cols = [bases[i] for i in keep], cols[:, keep]
    if config.use_bivariate and len(bases) >= 2:
        pool = min(config.bivariate_pool, MAX_BIVARIATE_FACTORS)
        top = top_by_correlation(cols, train.y, pool)
        prods = feasible_products(generate_bivariate([bases[i] for i in top]), train.X,
                                  exclude=bases, strict_domain=False).bases
        if prods:
            bases += prods
            cols = np.hstack([cols, evaluate_bases(prods, train.X)])
    return bases, cols


def refit(bases: list[BaseFunction], cols: np.ndarray, y: np.ndarray, support,
          feature_names=None) -> Model:
    support = list(support)
    res = None
    while support:
        res = ols(design_matrix(cols[:, support], y), y)
        # drop terms the refit zeroes out (up to rounding), then solve again
        contrib = np.abs(res.coef) * column_std(cols[:, support])
        keep = contrib > NEGLIGIBLE * max(float(np.std(y)), np.finfo(float).tiny)
        if keep.all():
            break
        support = [j for j, k in zip(support, keep) if k]
    if not support:
        return Model(float(np.mean(y)), (), feature_names)
    terms = tuple((float(w), bases[j]) for w, j in zip(res.coef, support))
    return Model(res.intercept, terms, feature_names)


def fit_ffx_budgets(train: Dataset, config: FitConfig, budgets: Iterable[int]) -> dict[int, Model]:
    """One path, one model per term budget (the path does not depend on the budget)."""
    bases, cols = ffx_candidates(train, config)
    y = train.y
    models = {}
    if not bases:
        for b in budgets:
            models[b] = Model(float(np.mean(y)), (), train.feature_names)
        return models
    D = design_matrix(cols, y)
    path = elastic_net_path(D, y, config.l1_ratio, n_lambdas=config.n_lambdas,
                            eps=config.lambda_ratio, tol=config.cd_tol,
                            max_sweeps=config.cd_max_sweeps)
    for b in budgets:
        support = select_support(D, y, b, config.l1_ratio, path)
        models[b] = refit(bases, cols, y, support, train.feature_names)
    return models


def fit_ffx(train: Dataset, config: FitConfig) -> Model:
    return fit_ffx_budgets(train, config, [config.max_terms])[config.max_terms]
