"""Fast Function Extraction (FFX) and FFX with nonlinear least-squares parameters."""
from .config import FitConfig
from .dataset import Dataset, load_csv, make_folds, shuffle_split, SplitSpec
from .expr import BaseFunction, FuncKind, Model, complexity, evaluate, to_text
from .ffx import fit_ffx
from .nls import fit_ffx_nls, predict
from .varpro import VpConfig

__all__ = [
    "BaseFunction", "Dataset", "FitConfig", "FuncKind", "Model", "SplitSpec", "VpConfig",
    "complexity", "evaluate", "fit_ffx", "fit_ffx_nls", "load_csv", "make_folds",
    "predict", "shuffle_split", "to_text",
]
