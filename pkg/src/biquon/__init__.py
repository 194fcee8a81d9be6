"""Deformed quon algebras, biorthogonal families and bi-coherent states."""

from .qcore import (
    BetaSequence,
    beta,
    beta_sq,
    disc_radius,
    log_number_eigenvalue,
    q_factorial,
    q_factorial_sq,
    q_number,
    q_number_factorial,
)
from .fock import (
    TruncatedOperator,
    make_identity,
    make_quon_c,
    norm_growth_probe,
    qmutator,
    qmutator_residual,
)
from .pseudoquon import (
    BiorthogonalFamily,
    IdentitySimilarity,
    RankOneDeformation,
    RankOneSimilarity,
    build_family,
    build_theta,
    build_theta_inverse,
    check_ladder,
    check_theta_conjugate,
    closed_form_theta,
    expanded_pair,
    gram_deviation,
    gram_matrix,
    make_pair,
    number_eigencheck,
    weak_resolution_check,
    worked_deformation,
)
from .bicoherent import (
    BiCoherentState,
    RadiusReport,
    UncertaintyResult,
    bicoherent_state,
    eigen_check,
    empirical_radius,
    family_radius,
    normalization,
    pairing,
    quon_coherent_vector,
    radius_report,
    uncertainty_product,
)
from .resolution import (
    RadialQuadrature,
    moment,
    resolution_check,
    solve_moment_measure,
)
from . import positionrep

__version__ = "0.1.0"
