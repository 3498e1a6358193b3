"""Linear least squares and elastic-net coordinate descent over base-function columns.

Penalized fits work on z-scored columns and a centered target, minimizing::

    1/(2n) ||y - X b||^2 + lam * (l1_ratio * |b|_1 + (1 - l1_ratio)/2 * |b|^2)

with an unpenalized intercept.  Coefficients are reported on the original
column scale.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
import scipy.linalg as sl

from .basis import MIN_COLUMN_STD, column_std

log = logging.getLogger(__name__)

# pivots below this fraction of the largest one are treated as zero
RANK_RTOL = 1e-10
CD_TOL = 1e-7
CD_MAX_SWEEPS = 100_000
N_LAMBDAS = 100
LAMBDA_RATIO = 1e-3


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    columns: np.ndarray
    col_means: np.ndarray
    col_stds: np.ndarray
    y_mean: float = 0.0

    @property
    def n_rows(self) -> int:
        return self.columns.shape[0]

    @property
    def n_cols(self) -> int:
        return self.columns.shape[1]

    @property
    def usable(self) -> np.ndarray:
        return self.col_stds >= MIN_COLUMN_STD

    def standardized(self) -> np.ndarray:
        """z-scored columns; unusable (near-constant) columns become zero."""
        scale = np.where(self.usable, self.col_stds, 1.0)
        Z = (self.columns - self.col_means) / scale
        Z[:, ~self.usable] = 0.0
        return Z

    def to_original(self, std_coef: np.ndarray, y_mean: float | None = None) -> tuple[float, np.ndarray]:
        """Map standardized-scale coefficients to (intercept, coefficients)."""
        y_mean = self.y_mean if y_mean is None else y_mean
        coef = np.where(self.usable, std_coef / np.where(self.usable, self.col_stds, 1.0), 0.0)
        return float(y_mean - self.col_means @ coef), coef


def design_matrix(columns, y=None) -> DesignMatrix:
    columns = np.asarray(columns, dtype=float)
    if columns.ndim == 1:
        columns = columns[:, None]
    if not np.all(np.isfinite(columns)):
        raise ValueError("design matrix has non-finite entries")
    y_mean = float(np.mean(y)) if y is not None else 0.0
    return DesignMatrix(columns, columns.mean(axis=0), column_std(columns), y_mean)


# -- least squares -----------------------------------------------------------

class MinNormSolution(NamedTuple):
    x: np.ndarray
    rank: int
    Q: np.ndarray  # orthonormal basis of range(A), n_rows x rank


def min_norm_lstsq(A: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL) -> MinNormSolution:
    """Minimum-norm least squares through a complete orthogonal decomposition.

    Columns are first scaled to unit norm so that the rank decision does not
    depend on column units; the minimum norm is taken in those scaled
    coordinates.  Rank comes from column-pivoted QR.
    """
    n, m = A.shape
    if m == 0:
        return MinNormSolution(np.zeros(0), 0, np.zeros((n, 0)))
    peak = np.max(np.abs(A), axis=0)
    peak[peak == 0] = 1.0
    S = A / peak
    # column norm = peak * snorm, which may itself overflow, so never form it
    snorm = np.sqrt(np.einsum("ij,ij->j", S, S))
    Q, R, piv = sl.qr(S / snorm, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > rtol * d[0])) if d.size and d[0] > 0 else 0
    Q1 = Q[:, :rank]
    c = Q1.T @ b
    z = np.zeros(m)
    if rank == m:
        z = sl.solve_triangular(R, c)
    elif rank > 0:
        # R[:rank] = T^T Z^T with Z orthonormal; x = Z T^-T c is the min-norm solution
        Zq, T = sl.qr(R[:rank].T, mode="economic")
        z = Zq @ sl.solve_triangular(T, c, trans="T")
    x = np.empty(m)
    x[piv] = z
    return MinNormSolution(x / snorm / peak, rank, Q1)


class OlsResult(NamedTuple):
    intercept: float
    coef: np.ndarray
    rank: int


def ols(D: DesignMatrix, y) -> OlsResult:
    """Least squares with intercept; near-constant columns get coefficient 0."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 1:
        raise ValueError("need at least one row")
    coef = np.zeros(D.n_cols)
    use = np.flatnonzero(D.usable)
    ym = float(y.mean())
    rank = 0
    if use.size:
        Xc = D.columns[:, use] - D.col_means[use]
        sol = min_norm_lstsq(Xc, y - ym)
        coef[use] = sol.x
        rank = sol.rank
    return OlsResult(float(ym - D.col_means @ coef), coef, rank)


# -- coordinate descent -----------------------------------------------------

@numba.njit(cache=True)
def _cd_solve(G, c, yy, beta, grad, usable, lam, alpha, tol, max_sweeps, trace):
    """Covariance-update coordinate descent at one penalty value.

    ``grad`` holds c - G @ beta and is kept in sync with ``beta`` (both in
    place).  Alternates full sweeps with sweeps over the active set.  Writes
    the objective after each sweep into ``trace`` while there is room.
    Returns (sweeps, converged).
    """
    p = c.shape[0]
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    sweeps = 0
    full = True
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(p):
            if not usable[j]:
                continue
            if not full and beta[j] == 0.0:
                continue
            gjj = G[j, j]
            z = grad[j] + gjj * beta[j]
            if z > l1:
                new = (z - l1) / (gjj + l2)
            elif z < -l1:
                new = (z + l1) / (gjj + l2)
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                for i in range(p):
                    grad[i] -= delta * G[i, j]
                beta[j] = new
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        if sweeps < trace.shape[0]:
            f = 0.5 * yy
            pen1 = 0.0
            pen2 = 0.0
            for j in range(p):
                f -= 0.5 * beta[j] * (c[j] + grad[j])
                pen1 += abs(beta[j])
                pen2 += beta[j] * beta[j]
            trace[sweeps] = f + l1 * pen1 + 0.5 * l2 * pen2
        sweeps += 1
        if max_delta < tol:
            if full:
                return sweeps, True
            full = True
        else:
            full = False
    return sweeps, False


@dataclass(frozen=True, eq=False)
class PathResult:
    lambdas: np.ndarray
    coefs: np.ndarray  # n_lambdas x n_cols, original scale
    intercepts: np.ndarray
    nnz: np.ndarray
    std_coefs: np.ndarray  # standardized scale
    l1_ratio: float
    not_converged: tuple[float, ...] = ()

    def __len__(self) -> int:
        return self.lambdas.shape[0]

    def support(self, i: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.std_coefs[i] != 0.0).tolist())


class _Gram:
    """Standardized Gram quantities shared by every lambda of one fit."""

    def __init__(self, D: DesignMatrix, y: np.ndarray):
        n = D.n_rows
        Z = D.standardized()
        yc = y - y.mean()
        self.y_mean = float(y.mean())
        self.G = np.ascontiguousarray(Z.T @ Z / n)
        self.c = Z.T @ yc / n
        self.yy = float(yc @ yc / n)
        self.usable = D.usable.copy()

    def solve(self, lam, alpha, beta, tol=CD_TOL, max_sweeps=CD_MAX_SWEEPS, trace=None):
        beta = beta.copy()
        grad = self.c - self.G @ beta
        if trace is None:
            trace = np.zeros(0)
        sweeps, ok = _cd_solve(self.G, self.c, self.yy, beta, grad, self.usable,
                               float(lam), float(alpha), tol, max_sweeps, trace)
        return beta, ok, sweeps


def lambda_max(D: DesignMatrix, y, l1_ratio: float) -> float:
    """Smallest penalty at which every coefficient is zero."""
    g = _Gram(D, np.asarray(y, dtype=float))
    return float(np.max(np.abs(g.c), initial=0.0) / max(l1_ratio, 1e-3))


def elastic_net_path(D: DesignMatrix, y, l1_ratio: float, n_lambdas: int = N_LAMBDAS,
                     lambdas=None, eps: float = LAMBDA_RATIO, tol: float = CD_TOL,
                     max_sweeps: int = CD_MAX_SWEEPS) -> PathResult:
    """Warm-started coordinate descent along a decreasing, log-spaced penalty grid."""
    if not 0.0 <= l1_ratio <= 1.0:
        raise ValueError(f"l1_ratio must be in [0, 1], got {l1_ratio}")
    y = np.asarray(y, dtype=float)
    gram = _Gram(D, y)
    if lambdas is None:
        lmax = float(np.max(np.abs(gram.c), initial=0.0)) / max(l1_ratio, 1e-3)
        if lmax <= 0.0:
            lmax = 1.0
        lambdas = np.geomspace(lmax, lmax * eps, n_lambdas)
    lambdas = np.asarray(lambdas, dtype=float)
    p = D.n_cols
    std = np.zeros((len(lambdas), p))
    coefs = np.zeros((len(lambdas), p))
    intercepts = np.zeros(len(lambdas))
    beta = np.zeros(p)
    failed = []
    for i, lam in enumerate(lambdas):
        beta, ok, _ = gram.solve(lam, l1_ratio, beta, tol, max_sweeps)
        if not ok:
            failed.append(float(lam))
            log.info("coordinate descent hit %d sweeps at lambda=%g", max_sweeps, lam)
        std[i] = beta
        intercepts[i], coefs[i] = D.to_original(beta, gram.y_mean)
    return PathResult(lambdas, coefs, intercepts, np.count_nonzero(std, axis=1),
                      std, float(l1_ratio), tuple(failed))


def kkt_residuals(D: DesignMatrix, y, std_coef: np.ndarray, lam: float, l1_ratio: float) -> np.ndarray:
    """Per-column violation of the elastic-net optimality conditions (0 = optimal)."""
    gram = _Gram(D, np.asarray(y, dtype=float))
    g = gram.c - gram.G @ std_coef
    l1, l2 = lam * l1_ratio, lam * (1 - l1_ratio)
    nz = std_coef != 0
    out = np.where(nz, np.abs(g - l2 * std_coef - l1 * np.sign(std_coef)), np.maximum(np.abs(g) - l1, 0.0))
    return np.where(gram.usable, out, 0.0)


def select_support(D: DesignMatrix, y, max_terms: int, l1_ratio: float = 1.0,
                   path: PathResult | None = None, refinements: int = 20) -> tuple[int, ...]:
    """Densest path support with at most ``max_terms`` columns.

    Walks the path from the largest penalty and stops before the first point
    that exceeds the budget.  If that jump skips over ``max_terms``, the
    penalty is bisected (geometrically) between the two bracketing points.
    A pure ridge path (``l1_ratio == 0``) has no zeros, so the ``max_terms``
    largest standardized coefficients at the smallest penalty are kept.
    Returns sorted column indices, possibly empty.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    y = np.asarray(y, dtype=float)
    if path is None:
        path = elastic_net_path(D, y, l1_ratio)
    if path.l1_ratio == 0.0:
        b = np.abs(path.std_coefs[-1])
        order = np.argsort(-b, kind="stable")
        return tuple(sorted(j for j in order[:max_terms].tolist() if b[j] > 0))

    best = None
    for i, k in enumerate(path.nnz):
        if k > max_terms:
            break
        best = i
    if best is None:
        return ()
    beta = path.std_coefs[best]
    if path.nnz[best] < max_terms and best + 1 < len(path):
        gram = _Gram(D, y)
        hi, lo = path.lambdas[best], path.lambdas[best + 1]
        for _ in range(refinements):
            mid = math.sqrt(hi * lo)
            trial, _, _ = gram.solve(mid, path.l1_ratio, beta)
            k = int(np.count_nonzero(trial))
            if k <= max_terms:
                hi = mid
                if k > np.count_nonzero(beta):
                    beta = trial
                if k == max_terms:
                    break
            else:
                lo = mid
    return tuple(np.flatnonzero(beta).tolist())


def lasso_select(D: DesignMatrix, y, max_terms: int, path: PathResult | None = None) -> tuple[int, ...]:
    return select_support(D, y, max_terms, 1.0, path)
