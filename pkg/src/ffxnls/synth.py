"""Seeded synthetic regression problems with known generating formulas.

Each generator draws features independently and uniformly from fixed ranges
and evaluates a ground-truth :class:`~ffxnls.expr.Model`, so the formula is
both printable and executable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .expr import OFFSET, SCALE, BaseFunction, FuncKind, Model, evaluate, to_text


class UnknownGenerator(KeyError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    truth: Model
    ranges: tuple[tuple[float, float], ...]

    @property
    def n_features(self) -> int:
        return len(self.ranges)

    @property
    def formula(self) -> str:
        return "y = " + to_text(self.truth)


def _b(kind, feature, exponent=1.0, scale=None, offset=None, partner=None):
    params = []
    if scale is not None:
        params.append((SCALE, scale))
    if offset is not None:
        params.append((OFFSET, offset))
    return BaseFunction(FuncKind(kind), exponent, feature, tuple(params), partner)


GENERATORS: dict[str, Generator] = {
    g.name: g
    for g in [
        Generator("log-exp-2d",
                  Model(0.0, ((2.0, _b("log", 0, offset=3.0)), (0.5, _b("exp", 1, scale=0.7)))),
                  ((-1.0, 3.0), (-1.0, 3.0))),
        Generator("log-exp-1d",
                  Model(1.0, ((2.0, _b("log", 0, offset=3.0)), (0.5, _b("exp", 0, scale=0.7)))),
                  ((-1.0, 3.0),)),
        Generator("log-1d", Model(1.5, ((3.0, _b("log", 0, offset=2.0)),)), ((-1.0, 4.0),)),
        Generator("linear-2d", Model(1.0, ((3.0, _b("id", 0)), (-2.0, _b("id", 1)))),
                  ((-2.0, 2.0), (-2.0, 2.0))),
        Generator("interaction-3d",
                  Model(0.0, ((1.0, _b("id", 0, partner=_b("id", 1))),
                              (0.5, _b("id", 2, exponent=2.0)), (-1.0, _b("id", 0)))),
                  ((-2.0, 2.0),) * 3),
        Generator("sqrt-exp-3d",
                  Model(0.0, ((1.5, _b("sqrt", 0, offset=1.0)), (-1.0, _b("exp", 1, scale=-0.5)),
                              (1.0, _b("id", 2)))),
                  ((0.0, 4.0), (-2.0, 2.0), (-1.0, 1.0))),
        Generator("additive-10d",
                  Model(1.0, ((2.0, _b("log", 0, offset=1.5)), (0.5, _b("exp", 1, scale=0.8)),
                              (1.0, _b("sqrt", 2, offset=1.5)), (-1.5, _b("id", 3)),
                              (0.7, _b("id", 4, exponent=2.0)), (1.0, _b("id", 5, partner=_b("id", 6))),
                              (-0.8, _b("log", 7, offset=2.0)), (0.3, _b("exp", 8, scale=-1.2)),
                              (0.5, _b("id", 9)))),
                  ((-1.0, 3.0),) * 10),
    ]
}


def get_generator(name: str) -> Generator:
    try:
        return GENERATORS[name]
    except KeyError:
        raise UnknownGenerator(f"unknown generator {name!r}; known: {sorted(GENERATORS)}") from None


def synth_generate(name: str, n_rows: int, noise_sd: float = 0.0, seed: int = 0,
                   relative: bool = False) -> Dataset:
    """Sample ``n_rows`` rows; with ``relative`` the noise sd is a fraction of std(y)."""
    g = get_generator(name)
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    lo = np.array([r[0] for r in g.ranges])
    hi = np.array([r[1] for r in g.ranges])
    X = lo + (hi - lo) * rng.random((n_rows, g.n_features))
    y = evaluate(g.truth, X)
    sd = noise_sd * float(np.std(y)) if relative else noise_sd
    if sd > 0:
        y = y + rng.normal(0.0, sd, n_rows)
    names = tuple(f"x{i + 1}" for i in range(g.n_features))
    return Dataset(names, X, y, description=g.formula)
