"""Numerical Fatou/Julia experiments for semigroups of polynomial maps of C^k."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .polyalg import MultiPoly, PolyMap, jacobian, jacobian_det, to_expression
from .parser import parse_poly
from .semigroup import (EscapedToInfinity, OrbitRecord, Semigroup, WordSampler, chebyshev_family,
                        eval_word, keyed_rng, orbit, power_subsemigroup)
from .classify import ClassifierConfig, Evidence, PointClass, classify_array, classify_point
from .gridscan import (Raster, ReferenceSet, Region, compare, compare_rasters, modulus_region,
                       scan, slice_region)
from .fixedpoints import (backward_orbit, classify_fixed_point, covering_check,
                          find_fixed_points)
from .components import (estimate_limit_manifold, label_components, limit_rank,
                         recurrence_test)
from .config import ExperimentConfig, load_config
