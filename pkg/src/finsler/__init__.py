"""Numerical toolkit for Minkowski spaces with a Finsler norm.

The squared norm ``F^2`` is given as a built-in family or an expression in
a small DSL; everything else (metric, Cartan tensor, orthonormal bases,
motions) is derived from it by exact forward-mode differentiation.
"""

from .core import (
    Kind,
    cartan_at,
    classify,
    euler_report,
    find_asymmetry_witness,
    light_speed,
    lowered,
    metric_at,
    scalar_product,
    unit_vector,
)
from .errors import FinslerError
from .motions import (
    active_check,
    defect_rate,
    infinitesimal_space,
    motion_between,
    probe_closure,
    probe_search,
    quasimotion_check,
    scalar_defect,
)
from .norms import FinslerNorm, euclidean, eval_f2, parse_metric, pseudo, ratio3, spacetime4
from .ortho import Basis, cone_split, orthogonalize, triangular_report
from .transform import passive_transform

__version__ = "0.1.0"
