"""Candidate base-function generation for plain FFX and FFX-NLS."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset
from .expr import OFFSET, SCALE, BaseFunction, FuncKind

FFX_EXPONENTS = (0.5, 1.0, 2.0)
NLS_EXPONENTS = (1.0, 2.0)
FFX_NONLINEAR = (FuncKind.ABS, FuncKind.LOG, FuncKind.EXP, FuncKind.SQRT)
NLS_NONLINEAR = (FuncKind.LOG, FuncKind.EXP, FuncKind.SQRT)

# columns with a smaller training std are treated as constant
MIN_COLUMN_STD = 1e-12
MAX_BIVARIATE_FACTORS = 10


@dataclass(frozen=True)
class CandidateSet:
    bases: tuple[BaseFunction, ...]
    n_dropped: int = 0

    @property
    def n_nonlinear(self) -> int:
        return sum(b.n_slots for b in self.bases)

    def __len__(self) -> int:
        return len(self.bases)

    def __iter__(self):
        return iter(self.bases)


def evaluate_bases(bases: Sequence[BaseFunction], X: np.ndarray) -> np.ndarray:
    """n_rows x len(bases) matrix of base values."""
    out = np.empty((X.shape[0], len(bases)))
    for j, b in enumerate(bases):
        out[:, j] = b.evaluate(X)
    return out


def column_std(cols: np.ndarray) -> np.ndarray:
    """Per-column population std that cannot overflow on huge finite values."""
    peak = np.max(np.abs(cols), axis=0, initial=0.0)
    peak = np.where(peak > 0, peak, 1.0)
    return peak * (cols / peak).std(axis=0)


def usable_column(col: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(col))) and float(column_std(col)) >= MIN_COLUMN_STD


def _keep_feasible(bases: Iterable[BaseFunction], X: np.ndarray) -> CandidateSet:
    kept, seen, dropped = [], set(), 0
    for b in bases:
        key = b.descriptor()
        if key in seen:
            continue
        seen.add(key)
        if b.arguments_positive(X) and usable_column(b.evaluate(X)):
            kept.append(b)
        else:
            dropped += 1
    return CandidateSet(tuple(kept), dropped)


def generate_ffx_bases(d: Dataset, use_nonlinear: bool) -> CandidateSet:
    """Parameter-free bases ``x^e`` and ``func(x^e)`` for e in {0.5, 1, 2}.

    Log and sqrt are skipped for features with negative values; bases that
    are non-finite or constant on the training data are dropped.  Both are
    counted in ``n_dropped``.
    """
    kinds = (FuncKind.IDENTITY,) + (FFX_NONLINEAR if use_nonlinear else ())
    # log and sqrt are only offered for features without negative values
    signed = np.any(d.X < 0, axis=0)
    raw = [
        BaseFunction(kind, e, j)
        for j in range(d.n_features)
        for kind in kinds
        for e in FFX_EXPONENTS
        if not (signed[j] and kind in (FuncKind.LOG, FuncKind.SQRT))
    ]
    n_skipped = len(kinds) * len(FFX_EXPONENTS) * d.n_features - len(raw)
    # no parameters to keep in-domain, so finiteness is the only feasibility rule
    kept, seen, dropped = [], set(), 0
    for b in raw:
        if b.descriptor() in seen:
            continue
        seen.add(b.descriptor())
        if usable_column(b.evaluate(d.X)):
            kept.append(b)
        else:
            dropped += 1
    return CandidateSet(tuple(kept), dropped + n_skipped)


def initial_offset(u: np.ndarray) -> float:
    """0 if ``u`` is already positive, else the shift that lifts its minimum to 1."""
    lo = float(np.min(u))
    return 0.0 if lo > 0 else 1.0 - lo


def initial_scale(u: np.ndarray) -> float:
    """Keeps the initial exp argument within [-1, 1]."""
    return 1.0 / max(1.0, float(np.max(np.abs(u))))


def nls_base(kind: FuncKind, exponent: float, feature: int, X: np.ndarray) -> BaseFunction:
    u = X[:, feature] ** exponent
    if kind is FuncKind.IDENTITY:
        params = ()
    elif kind is FuncKind.EXP:
        params = ((SCALE, initial_scale(u)),)
    elif kind in (FuncKind.LOG, FuncKind.SQRT):
        params = ((OFFSET, initial_offset(u)),)
    else:
        raise ValueError(f"{kind} is not an NLS base kind")
    return BaseFunction(kind, exponent, feature, params)


def generate_nls_bases(d: Dataset, use_nonlinear: bool) -> CandidateSet:
    """Bases ``func(a*x^p + b)`` with the redundant scalings removed.

    id keeps no parameter, log and sqrt keep the offset, exp keeps the scale.
    """
    kinds = (FuncKind.IDENTITY,) + (NLS_NONLINEAR if use_nonlinear else ())
    raw = [
        nls_base(kind, p, j, d.X)
        for j in range(d.n_features)
        for kind in kinds
        for p in NLS_EXPONENTS
    ]
    return _keep_feasible(raw, d.X)


def generate_bivariate(top: Sequence[BaseFunction], max_factors: int = MAX_BIVARIATE_FACTORS) -> list[BaseFunction]:
    """Products of every unordered pair of ``top``; each copies its factors' parameters."""
    if len(top) > max_factors:
        raise ValueError(f"at most {max_factors} factors, got {len(top)}")
    if any(b.is_bivariate for b in top):
        raise ValueError("factors must be univariate")
    return [a.__class__(a.kind, a.exponent, a.feature, a.nl_params, partner=b)
            for a, b in itertools.combinations(top, 2)]


def feasible_products(products: Iterable[BaseFunction], X: np.ndarray,
                      exclude: Iterable[BaseFunction] = (), strict_domain: bool = True) -> CandidateSet:
    """Drop products that are non-finite, constant, or duplicate a base in ``exclude``.

    ``strict_domain`` additionally requires log/sqrt arguments > 0, which the
    parameter optimizer needs for finite derivatives.
    """
    seen = {b.descriptor() for b in exclude}
    kept, dropped = [], 0
    for b in products:
        if b.descriptor() in seen:
            dropped += 1
            continue
        seen.add(b.descriptor())
        if (not strict_domain or b.arguments_positive(X)) and usable_column(b.evaluate(X)):
            kept.append(b)
        else:
            dropped += 1
    return CandidateSet(tuple(kept), dropped)


def top_by_correlation(cols: np.ndarray, y: np.ndarray, k: int) -> list[int]:
    """Indices of the ``k`` columns with largest |corr(col, y)|, stable on ties."""
    if cols.shape[1] == 0:
        return []
    xc = cols - cols.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum(axis=0) * float(yc @ yc))
    with np.errstate(all="ignore"):
        r = np.abs(xc.T @ yc) / denom
    r = np.where(np.isfinite(r), r, 0.0)
    order = np.argsort(-r, kind="stable")
    return sorted(order[:k].tolist())
