"""hillkit: periodic-orbit stability for discrete and continuous Lagrangian
systems, certified by computing both sides of Hill's formula independently."""

from . import billiards, continuous, dls, hill, models, reversible, routh
from .dls import (
    DiscreteLagrangian,
    PeriodicOrbit,
    StepBlocks,
    action,
    advance,
    evaluate_blocks,
    orbit_with_residual,
    refine_orbit,
    residual,
)
from .hill import (
    HessianChain,
    HillReport,
    analyze,
    assemble_chain,
    double_chain,
    hessian_matrix,
    hill_identity_residual,
    monodromy,
    morse_index,
    multipliers,
    stability_verdicts,
)
from .continuous import (
    ContinuousSystem,
    autonomous_criteria,
    classic_hill_matrix,
    continuous_identity_residual,
    ode_monodromy,
    rho_index_continuous,
    truncated_hill_det,
)

__version__ = "0.1.0"
