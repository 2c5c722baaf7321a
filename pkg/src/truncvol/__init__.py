"""Deterministic volume approximation for unit cubes cut by separable constraints."""

from .errors import TruncVolError
from .exact import Rational, format_rational, parse_rational
from .geometry import find_intercept
from .model import (
    Instance,
    SeparableConstraint,
    UnivariateFn,
    canonicalize_halfspace,
    normalize_offsets,
    validate,
)
from .multi import round_robps
from .robp import count_binary_knapsack, evaluate_robp, round_robp_single
from .volume import (
    VolumeEstimate,
    estimate_volume,
    volume_convex,
    volume_halfspace,
    volume_multi_convex,
    volume_multi_halfspace,
)

__all__ = [
    "Instance",
    "Rational",
    "SeparableConstraint",
    "TruncVolError",
    "UnivariateFn",
    "VolumeEstimate",
    "canonicalize_halfspace",
    "count_binary_knapsack",
    "estimate_volume",
    "evaluate_robp",
    "find_intercept",
    "format_rational",
    "normalize_offsets",
    "parse_rational",
    "round_robp_single",
    "round_robps",
    "validate",
    "volume_convex",
    "volume_halfspace",
    "volume_multi_convex",
    "volume_multi_halfspace",
]
