"""Exact polynomial maps into nilpotent Lie groups, PET induction with
certified descent, Zariski genericity sampling, and numerical averaging
experiments on nilmanifolds."""

from .averaging import (
    AverageReport,
    JoiningSpec,
    MeanErgodicReport,
    convergence_scan,
    flow_correlation_trajectory,
    invariance_check,
    joining_average,
    mean_ergodic_base,
    vdc_check,
)
from .dynamics import (
    NilPoint,
    NilSystem,
    TestFunction,
    act,
    heisenberg3,
    reduce_point,
    sample_haar,
    torus,
)
from .errors import CertificateError, TruncationError
from .lie_core import (
    GroupElement,
    LieAlgebraSpec,
    LieElement,
    bch_product,
    bracket,
    group_inverse,
    identity,
    make_builtin,
    verify_algebra,
)
from .multipoly import MultiPoly
from .pet import (
    PETTrace,
    PolyFamily,
    Weight,
    derived_family,
    family_precedes,
    pet_trace,
    pivot,
    weight,
)
from .poly_maps import (
    LeadingTerm,
    PolyMap,
    difference,
    leading_term,
    lt_equivalent,
    polynomial_degree,
)
from .zariski import (
    MeagreSet,
    Variety,
    generic_sample,
    membership,
    nonvanishing_certificate,
    vanishing_variety,
)

__version__ = "0.1.0"

__all__ = [
    "AverageReport",
    "CertificateError",
    "GroupElement",
    "JoiningSpec",
    "LeadingTerm",
    "LieAlgebraSpec",
    "LieElement",
    "MeagreSet",
    "MeanErgodicReport",
    "MultiPoly",
    "NilPoint",
    "NilSystem",
    "PETTrace",
    "PolyFamily",
    "PolyMap",
    "TestFunction",
    "TruncationError",
    "Variety",
    "Weight",
    "act",
    "bch_product",
    "bracket",
    "convergence_scan",
    "derived_family",
    "difference",
    "family_precedes",
    "flow_correlation_trajectory",
    "generic_sample",
    "group_inverse",
    "heisenberg3",
    "identity",
    "invariance_check",
    "joining_average",
    "leading_term",
    "lt_equivalent",
    "make_builtin",
    "mean_ergodic_base",
    "membership",
    "nonvanishing_certificate",
    "pet_trace",
    "pivot",
    "polynomial_degree",
    "reduce_point",
    "sample_haar",
    "torus",
    "vanishing_variety",
    "vdc_check",
    "verify_algebra",
    "weight",
]
