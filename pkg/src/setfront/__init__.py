"""Minimal invariant sets of bounded-noise planar maps, computed two ways:
box coverings of the set-valued map and wave fronts of its boundary map."""
from .boundary import boundary_map, boundary_map_inverse
from .errors import SetFrontError
from .front import (
    ClosedCurve,
    ellipse_curve,
    equidistant_front,
    lift_circle,
    lift_closed_curve,
    propagate_loop,
    relax_to_invariant_loop,
)
from .geometry import (
    LegendrianLoop,
    TangentPoint,
    hausdorff_distance,
    max_contact_residual,
    t1_hausdorff_distance,
)
from .hyperbolicity import classify, estimate_spectrum
from .persistence import (
    attracting_boundary_check,
    cross_route_check,
    run_persistence_experiment,
    verify_equivalence,
)
from .setvalued import BoxSet, Grid, boxset_boundary_points, image_boxset, minimal_invariant_set
from .systems import (
    Scenario,
    catalog,
    epsilon_family,
    scenario_from_dict,
    shear_family,
    validate_scenario,
)

__version__ = "0.1.0"
