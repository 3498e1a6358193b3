"""Separable nonlinear least squares by variable projection.

The model is ``y ~ l0 + sum_i l_i f_i(k, x)``.  For a fixed nonlinear vector
``k`` the linear parameters ``l`` are the least-squares solution, so only
``k`` is iterated, with Levenberg-Marquardt on the projected residual
``r(k) = P_perp(k) y``.  The Jacobian keeps only the first Golub-Pereyra term
(Kaufman's approximation, as used in Krogh's implementation)::

    J[:, j] = -P_perp(k) (dPhi/dk_j) l

which is exact wherever the residual vanishes.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .expr import BaseFunction, Model
from .linsolve import min_norm_lstsq

log = logging.getLogger(__name__)


class DomainViolation(ValueError):
    def __init__(self, base_index: int, slot: int | None, reason: str):
        where = f"base {base_index}" + (f" (slot {slot})" if slot is not None else "")
        super().__init__(f"{where}: {reason}")
        self.base_index = base_index
        self.slot = slot


@dataclass(frozen=True)
class VpConfig:
    max_iters: int = 100
    rel_tol: float = 1e-8
    grad_tol: float = 1e-10
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    max_damping_raises: int = 20
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 0 or self.max_damping_raises < 0:
            raise ValueError("iteration limits must be non-negative")
        for name in ("rel_tol", "grad_tol", "initial_damping", "damping_up", "damping_down"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class SeparableProblem:
    """Bases with nonlinear slots plus training data.

    ``k`` is the concatenation of every base's slot values in base order, so
    each slot appears exactly once.
    """

    def __init__(self, bases: Sequence[BaseFunction], X, y):
        self.bases = tuple(bases)
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        owner, starts = [], []
        for i, b in enumerate(self.bases):
            starts.append(len(owner))
            owner.extend([i] * b.n_slots)
        self.slot_owner = np.array(owner, dtype=np.intp)
        self._starts = starts

    @property
    def n_slots(self) -> int:
        return self.slot_owner.shape[0]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def initial_k(self) -> np.ndarray:
        return np.array([v for b in self.bases for v in b.slot_values()], dtype=float)

    def bound_bases(self, k) -> list[BaseFunction]:
        k = np.asarray(k, dtype=float)
        return [b.with_slots(k[s:s + b.n_slots]) if b.n_slots else b
                for b, s in zip(self.bases, self._starts)]

    def _check(self, i: int, b: BaseFunction, v: np.ndarray) -> None:
        slot = self._starts[i] if b.n_slots else None
        if not b.arguments_positive(self.X):
            raise DomainViolation(i, slot, "log/sqrt argument <= 0 on a training row")
        if not np.all(np.isfinite(v)):
            raise DomainViolation(i, slot, "non-finite base value")

    def phi(self, k) -> np.ndarray:
        """[1 | f_1 | ... | f_m] at ``k``; raises DomainViolation."""
        out = np.empty((self.n_rows, len(self.bases) + 1))
        out[:, 0] = 1.0
        for i, b in enumerate(self.bound_bases(k)):
            v = b.evaluate(self.X)
            self._check(i, b, v)
            out[:, i + 1] = v
        return out

    def slot_derivatives(self, k) -> np.ndarray:
        """n_rows x n_slots; column j is d f_owner(j) / d k_j."""
        out = np.empty((self.n_rows, self.n_slots))
        for i, b in enumerate(self.bound_bases(k)):
            if not b.n_slots:
                continue
            v, grads = b.value_and_grad(self.X)
            self._check(i, b, v)
            s = self._starts[i]
            for j, g in enumerate(grads):
                out[:, s + j] = g
        return out


class Projection(NamedTuple):
    l: np.ndarray  # intercept first
    residual: np.ndarray
    sse: float
    rank: int
    Q: np.ndarray


def project(problem: SeparableProblem, k) -> Projection:
    """Optimal linear parameters at fixed ``k`` and the projected residual."""
    Phi = problem.phi(k)
    sol = min_norm_lstsq(Phi, problem.y)
    # residual via the orthonormal range basis keeps it exactly in range(Phi)'s complement
    r = problem.y - sol.Q @ (sol.Q.T @ problem.y)
    return Projection(sol.x, r, float(r @ r), sol.rank, sol.Q)


def jacobian(problem: SeparableProblem, k, proj: Projection | None = None) -> np.ndarray:
    """Kaufman-approximated Jacobian of the projected residual w.r.t. ``k``."""
    if proj is None:
        proj = project(problem, k)
    if problem.n_slots == 0:
        return np.zeros((problem.n_rows, 0))
    with np.errstate(over="ignore", invalid="ignore"):
        Dl = problem.slot_derivatives(k) * proj.l[1 + problem.slot_owner]
        return -(Dl - proj.Q @ (proj.Q.T @ Dl))


@dataclass(frozen=True, eq=False)
class VpResult:
    k: np.ndarray
    l: np.ndarray
    sse: float
    iters: int
    converged: bool
    rank: int
    status: str
    sse_history: tuple[float, ...] = field(default=())

    @property
    def intercept(self) -> float:
        return float(self.l[0])

    @property
    def weights(self) -> np.ndarray:
        return self.l[1:]


def _lm_step(J: np.ndarray, g: np.ndarray, mu: float) -> np.ndarray:
    A = J.T @ J
    d = np.diag(A).copy()
    floor = max(1e-12 * float(d.max(initial=0.0)), 1e-300)
    d = np.maximum(d, floor)
    M = A + mu * np.diag(d)
    try:
        return np.linalg.solve(M, -g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, -g, rcond=None)[0]


def optimize(problem: SeparableProblem, config: VpConfig = VpConfig(), k0=None) -> VpResult:
    """Levenberg-Marquardt on the projected residual.

    A trial step is accepted only if it keeps every base in-domain and
    lowers the SSE; otherwise the damping grows.  Stops on small relative
    SSE decrease, small gradient, or ``max_iters``, and gives up with status
    ``nonfinite_jacobian`` when a slot derivative overflows.
    """
    k = problem.initial_k() if k0 is None else np.asarray(k0, dtype=float).copy()
    proj = project(problem, k)
    history = [proj.sse]
    if problem.n_slots == 0:
        return VpResult(k, proj.l, proj.sse, 0, True, proj.rank, "linear", tuple(history))

    mu = config.initial_damping
    status = "max_iters"
    it = 0
    while it < config.max_iters:
        it += 1
        J = jacobian(problem, k, proj)
        if not np.all(np.isfinite(J)):
            # a base is finite but its slot derivative overflows; no usable step
            status = "nonfinite_jacobian"
            break
        g = J.T @ proj.residual
        gnorm = float(np.max(np.abs(g)))
        if config.trace:
            log.debug(json.dumps({"iter": it, "sse": proj.sse, "mu": mu, "grad_inf": gnorm}))
        if gnorm < config.grad_tol:
            status = "converged"
            break
        accepted = None
        for _ in range(config.max_damping_raises + 1):
            trial = k + _lm_step(J, g, mu)
            if np.all(np.isfinite(trial)):
                try:
                    cand = project(problem, trial)
                except DomainViolation:
                    cand = None
                if cand is not None and cand.sse < proj.sse:
                    accepted = (trial, cand)
                    mu *= config.damping_down
                    break
            mu *= config.damping_up
        if accepted is None:
            # no descent direction left: stationary unless we never moved
            status = "no_feasible_step" if it == 1 else "converged"
            break
        old = proj.sse
        k, proj = accepted
        history.append(proj.sse)
        if old - proj.sse <= config.rel_tol * old:
            status = "converged"
            break
    return VpResult(k, proj.l, proj.sse, it, status == "converged", proj.rank, status, tuple(history))


def to_model(problem: SeparableProblem, result: VpResult, feature_names=None) -> Model:
    bases = problem.bound_bases(result.k)
    terms = tuple(zip(result.weights.tolist(), bases))
    return Model(result.intercept, terms, feature_names)
