"""Exact level-set persistence for piecewise-linear maps.

The library computes, over GF(2) and the integers, the intersection
homomorphism from the cohomology of a region preimage to its homology, the
stable groups it carves out, the sheaf of those groups over a finite basis
of target regions, and the level-set zigzag with its interval barcode, plus
executable checks of the duality, degree, commutativity, and stability
statements that tie them together.
"""

from .complexes import (
    Chain,
    Cochain,
    HomologyBasis,
    SimplicialComplex,
    betti_numbers,
    boundary_matrix,
    cohomology,
    fundamental_class,
    homology,
    is_closed_pseudomanifold,
    reindex,
)
from .errors import LevelsheafError
from .intersect import (
    IntersectionMap,
    OrientationData,
    StableGroup,
    cap,
    check_commutativity,
    check_duality,
    cup,
    degree,
    intersection_hom,
    pullback_point_cocycle,
    restrict_stable,
    signed_crossing_count,
    stable_group,
)
from .io import load_function, load_map, load_mesh, save_function, save_mesh
from .linalg import (
    SNFResult,
    SparseMatrix,
    kernel_basis,
    rank,
    smith_normal_form,
    solve,
)
from .maps import (
    PLMap,
    TargetRegion,
    barycentric_subdivide,
    level_betti,
    preimage_subcomplex,
    regular_sample,
    stabilized_preimage,
    wildness,
)
from .sheaf import (
    BasisCover,
    PresheafModel,
    SectionModel,
    Stalk,
    build_presheaf,
    germ_resolution,
    interval_section_correspondence,
    maximal_sections,
    resolution_sheaf,
    sections_over,
    stalk_at,
)
from .stability import (
    SimilarityReport,
    check_local_stability,
    match_intervals,
    similarity_measure,
)
from .zigzag import (
    CriticalData,
    IntervalZigzag,
    ZigzagDiagram,
    barcode_lines,
    barcode_svg,
    build_zigzag,
    critical_values,
    interval_decomposition,
    span_and_persistence,
)

__version__ = "0.1.0"
