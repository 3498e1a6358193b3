"""Hyperparameters shared by FFX and FFX-NLS fits."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .linsolve import CD_MAX_SWEEPS, CD_TOL, LAMBDA_RATIO, N_LAMBDAS
from .varpro import VpConfig

GRID_MAX_TERMS = (3, 5, 10, 20, 30, 50)
GRID_FLAGS = (True, False)
GRID_L1_RATIOS = (0.0, 0.5, 1.0)

# keys a grid may vary; everything else in FitConfig is a solver setting
GRID_KEYS = ("max_terms", "use_bivariate", "use_nonlinear", "l1_ratio")


@dataclass(frozen=True)
class FitConfig:
    max_terms: int = 10
    use_bivariate: bool = True
    use_nonlinear: bool = True
    l1_ratio: float = 0.5  # plain FFX only; FFX-NLS always selects with the lasso
    vp: VpConfig = field(default_factory=VpConfig)
    screening_iters: int = 30  # LM cap when optimizing a whole candidate set
    final_passes: int = 2
    bivariate_pool: int = 10
    n_lambdas: int = N_LAMBDAS
    lambda_ratio: float = LAMBDA_RATIO
    cd_tol: float = CD_TOL
    cd_max_sweeps: int = CD_MAX_SWEEPS
    seed: int = 0

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError("l1_ratio must be in [0, 1]")
        if self.final_passes < 1 or self.bivariate_pool < 2 or self.n_lambdas < 2:
            raise ValueError("final_passes >= 1, bivariate_pool >= 2, n_lambdas >= 2 required")

    def replace(self, **changes) -> "FitConfig":
        return dataclasses.replace(self, **changes)

    def check_benchmark(self, algorithm: str = "ffx_nls") -> None:
        """Restrict to the published hyperparameter sets."""
        if self.max_terms not in GRID_MAX_TERMS:
            raise ValueError(f"max_terms must be one of {GRID_MAX_TERMS}")
        if algorithm == "ffx" and self.l1_ratio not in GRID_L1_RATIOS:
            raise ValueError(f"l1_ratio must be one of {GRID_L1_RATIOS}")

    def hyperparams(self, algorithm: str = "ffx_nls") -> dict:
        d = {k: getattr(self, k) for k in GRID_KEYS}
        if algorithm != "ffx":
            d.pop("l1_ratio")
        return d
