"""Computational density theory on the natural numbers.

Modulus functions, natural and f-densities of integer sets, finite-horizon
estimates of the limsup functionals h_f and g_f, and the separating-set
construction for moduli whose f-ideal is strictly smaller than the
statistical ideal.
"""

from .errors import DomainError, NotFound, PreconditionError
from .reals import ApproxReal
from .modulus import (
    AxiomReport,
    ModulusDescriptor,
    TableModulus,
    check_axioms,
    eval_big,
    evaluate,
    example3_exact,
    example3_iterative,
)
from .sets import (
    Blocks,
    Builtin,
    DensityProfile,
    ExplicitFinite,
    MembershipVerdict,
    alpha,
    default_grid,
    density_profile,
    f_density_profile,
    membership_verdict,
)
from .separator import (
    ConstructionReport,
    SeparatorResult,
    build_separating_set,
    find_witness,
    verify_construction,
)
from .diagnostics import (
    CriterionVerdict,
    LimsupEstimate,
    delta,
    estimate_g,
    estimate_h,
    lemma1_check,
    ratio_sequence,
    theorem1_trend,
    theorem2_verdict,
)

__version__ = "0.1.0"
