"""Supporting hyperplanes close to near-boundary points of well-centred polytopes."""
from .body import (FacetTable, Hyperplane, VPolytope, chord_diameter, gauge, ray_boundary,
                   support_value, supporting_hyperplane_at)
from .centering import JohnFrame, hyperplane_from_frame, mvee, well_center
from .errors import DegenerateInputError, InputError, InvariantViolation, VerificationError
from .selector import Selection, make_schedule, select_hyperplane
from .verify import check_bound, naive_strategies, oracle_best_ratio, thin_family

__all__ = [
    "FacetTable", "Hyperplane", "VPolytope", "chord_diameter", "gauge", "ray_boundary",
    "support_value", "supporting_hyperplane_at", "JohnFrame", "hyperplane_from_frame",
    "mvee", "well_center", "DegenerateInputError", "InputError", "InvariantViolation",
    "VerificationError", "Selection", "make_schedule", "select_hyperplane", "check_bound",
    "naive_strategies", "oracle_best_ratio", "thin_family",
]
