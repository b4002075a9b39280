"""Covering calculus for finite metric spaces, hyperbolic cones and their products."""
from .metric import (TOL, FiniteMetricSpace, LineSpace, ProductSpace, HyperbolicityReport,
                     gromov_product, hyperbolicity_delta, make_product, space_from_spec)
from .cone import HyperbolicCone, ConeConstants, cone_distance, cone_gromov_limit, measure_constants
from .covering import (BoxBound, ColoredCovering, CoveringError, CoveringMetrics, box_lebesgue_check,
                       box_mesh, box_neighborhood, covering_metrics, neighborhood, shrink, union_colored)

__version__ = "0.1.0"
