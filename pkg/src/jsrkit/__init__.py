"""Joint spectral radius toolkit: bounds, stability verdicts, closed forms and certificates."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    Bracket,
    BoundsRecord,
    Status,
    bracket,
    decide_stability,
    lower_bound_k,
    msr_estimate_k,
    smp_candidates,
    upper_bound_k,
    validate_smp,
)
from .errors import JSRError  # noqa: E402
from .family import MatrixFamily, evaluate_word, necklaces  # noqa: E402
from .matrix_core import Ellipsoidal, EllipsoidalShape, Norm, operator_norm, spectral_radius  # noqa: E402
from .special import try_closed_form  # noqa: E402

__all__ = [
    "Bracket",
    "BoundsRecord",
    "Ellipsoidal",
    "EllipsoidalShape",
    "JSRError",
    "MatrixFamily",
    "Norm",
    "Status",
    "bracket",
    "decide_stability",
    "evaluate_word",
    "lower_bound_k",
    "msr_estimate_k",
    "necklaces",
    "operator_norm",
    "smp_candidates",
    "spectral_radius",
    "try_closed_form",
    "upper_bound_k",
    "validate_smp",
]
