"""Mass of asymptotically hyperbolic manifolds with a non-compact boundary face.

Submodules: ``geometry`` (metric fields, finite-difference jets, curvature),
``reference`` (hyperbolic model, static potentials, Lorentz group),
``quadrature`` (hemisphere/equator rules), ``mass`` (charge form, mass vector,
Ricci-form mass, identity checks), ``zoo`` (test metrics), ``spin``
(Clifford algebra, Killing spinors) and ``cli``.
"""

from .geometry import Chart, ChartPoint, GeometryError, MetricField, curvature, validate_decay
from .mass import (
    MassError,
    MassReport,
    calibrate_dn,
    charge_form,
    exactness_residual,
    expansion_residual,
    extrapolate_mass,
    mass_at_radius,
    mass_vector,
    ricci_mass_at_radius,
)
from .quadrature import QuadratureRule
from .reference import (
    CausalClass,
    IsometryElement,
    LorentzVector,
    StaticPotential,
    classify,
    isometry_action,
    lorentz_product,
    transform_mass_vector,
)
from .spin import (
    KillingSpec,
    SpinError,
    boundary_chirality,
    build_clifford,
    killing_residual,
    killing_spinor_eval,
    null_cone_inverse,
    v_phi,
)
from .zoo import (
    ConformallyCompactData,
    DiffeoSpec,
    RadialProfile,
    ads_schwarzschild_half,
    conformally_compact,
    decaying_field,
    isometry_pullback,
    load_conformal_data,
    pushforward,
    reference,
    trace_perturbation,
    transported_reference,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
