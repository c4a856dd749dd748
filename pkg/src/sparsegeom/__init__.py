"""Approximate nearest induced flats, simplices and segments.

Quick start::

    import numpy as np
    from sparsegeom import AnifIndex, exhaustive_affine

    P = np.random.default_rng(0).normal(size=(25, 6))
    index = AnifIndex(P, k=3, epsilon=0.25)
    q = np.ones(6)
    index.query(q).distance <= 1.25 * exhaustive_affine(P, q, 3).distance
"""

__version__ = "0.1.0"

from .ann import AnnConfig, AnnIndex, ExactIndex, TreeIndex, ann_build, ann_query
from .book import AnisIndex, BookIndex, anis_build, anis_query, page_query
from .bouquet import (
    AnifIndex,
    BouquetIndex,
    PositiveBouquetIndex,
    anif_build,
    anif_query,
    anlf_build,
    anlf_query,
    bouquet_build,
    bouquet_query,
    positive_bouquet_build,
    positive_bouquet_query,
)
from .brute import exhaustive_affine, exhaustive_linear, exhaustive_segment, exhaustive_simplex
from .errors import SparseGeomError
from .geometry import (
    CanonicalFrame,
    PointSet,
    QueryResult,
    SimplexWitness,
    base_angles,
    direction,
    flat_distance,
    linear_flat_distance,
    orbit_point,
    orthonormal_frame,
    simplex_distance,
    trilaterate,
)
from .io import ResultRecord, load_pointset, save_pointset
from .offline import offline_nearest_segment, spherical_project, spherical_reflect
from .reductions import (
    detect_affine_degeneracy,
    hopcroft_lift,
    ksum_lift,
    solve_ksum,
)
from .star import (
    OnlineSegmentIndex,
    PrefixAnnIndex,
    StarIndex,
    UniformStarIndex,
    online_segment_build,
    online_segment_query,
    star_query,
)
