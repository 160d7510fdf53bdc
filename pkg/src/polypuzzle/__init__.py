"""Puzzle-piece combinatorics of polynomial maps on equipotential domains.

The pipeline: a polynomial plus a potential level defines a restriction
between equipotential domains; its puzzle tree is computed as labeled
sublevel components per depth; tableaux, accumulation classes, landing
domains, and the spreading partition are built on top, each with its
supporting facts as executable checks.
"""

__version__ = "0.1.0"

from .combinatorics import (
    AccumRelation,
    Classification,
    Decomposition,
    accumulates,
    build_decomposition,
    build_relation,
    case_of,
    children,
    classify,
    normalize_star_star,
)
from .compare import (
    DecoratedTree,
    EquivalenceVerdict,
    canonical_form,
    compare,
    decorated_from_json,
    extract,
)
from .landing import (
    LandingDomain,
    NeverLands,
    PieceUnion,
    is_nice,
    landing,
    spreading_partition,
    tau,
    verify_annulus,
    verify_corollary_32,
    verify_lemma_basic,
    verify_union_nice,
)
from .mapmodel import (
    CriticalPoint,
    PolynomialMap,
    SetUpRestriction,
    ValidationReport,
    build_setup,
    critical_points,
    eval_map,
    green,
    map_from_json,
    map_to_json,
    suggest_level,
    validate,
)
from .puzzle import (
    Piece,
    PieceId,
    PuzzleTree,
    build_tree,
    build_tree_capped,
    interior_samples,
    iterated_degree,
    iterated_image,
    masks_to_json,
    piece_containing,
    tree_to_json,
    verify_image_consistency,
    verify_nesting,
)
from .raster import GridSpec
from .tableau import (
    Tableau,
    build_tableau,
    periodic_column,
    render_ascii,
    rule3_full_scan,
    verify_rule1,
    verify_rule2,
    verify_rule3,
)
