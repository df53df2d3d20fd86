"""Mixed Schatten norms, positive-restricted norms and completely bounded norms of linear maps."""

from .boyd import UnsupportedRegion, boyd_solve, boyd_solve_general
from .cb import cb_norm_1p, cb_norm_22, cb_norm_qp_cp, two_indexed_norm
from .channels import (
    ChoiMap,
    KrausMap,
    LinearMap,
    MeasurePrepareMap,
    NotCompletelyPositive,
    TensorMap,
    load_map,
    save_map,
)
from .ellipsoid import norm_qp_cp
from .linalg import parse_index, schatten_norm
from .results import NormResult

__version__ = "0.1.0"

__all__ = [
    "ChoiMap",
    "KrausMap",
    "LinearMap",
    "MeasurePrepareMap",
    "NormResult",
    "NotCompletelyPositive",
    "TensorMap",
    "UnsupportedRegion",
    "boyd_solve",
    "boyd_solve_general",
    "cb_norm_1p",
    "cb_norm_22",
    "cb_norm_qp_cp",
    "load_map",
    "norm_qp_cp",
    "parse_index",
    "save_map",
    "schatten_norm",
    "two_indexed_norm",
]
