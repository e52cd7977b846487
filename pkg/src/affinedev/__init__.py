"""Affine equivalence of convex polyhedra from their developments."""

from .cmgeom import AffineMap, cayley_menger_det, polygon_affine_equivalent, realizable_simplex, simplex_volume_squared
from .devmodel import (
    CombinatorialMap,
    Development,
    build_correspondence,
    load_development,
    parse_development,
    validate_development,
)
from .oracle import EmbeddedPolyhedron, apply_affine, extract_development, generate, oracle_affine_equivalent
from .patchsys import enumerate_patches, patch_distances, patch_system
from .recognizer import RecognizerConfig, recognize, report, report_json
from .simplepath import find_gamma_path, simple_affine_verdict
from .solver import AlphaSet, SolverConfig, project_alpha, solve_positive
from .suspension import detect_suspension, suspension_certificate, suspension_system
from .verdict import CONDITIONAL, INCONCLUSIVE, NOT_AFFINE, Verdict

__version__ = "0.1.0"
