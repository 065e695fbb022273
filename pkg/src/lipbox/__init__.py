"""Exact norms, summing certificates and integral representations for
Lipschitz-linear operators on finite pointed metric spaces with polyhedral
Banach targets.  Everything is rational arithmetic; every reported value
comes with a certificate that re-verifies without the solver.
"""

from .bounds import Value, exact
from .config import CapExceeded, Caps, caps_from_env
from .spaces import (
    FiniteMetricSpace,
    FreeVector,
    LipschitzFunctionVector,
    MetricError,
    NormFormatError,
    PolyhedralNorm,
    ball_points,
    dual_vertices,
    free_ball_molecules,
    free_norm,
    free_norm_dual,
    free_space_norm,
    l1_norm,
    linf_norm,
    lipschitz_ball_vertices,
    metric_from_norm,
    molecule,
    polyhedral_norm,
    scalar_norm,
    validate_metric,
)
from .operators import (
    DimensionMismatch,
    FreeTensor,
    LipLinearOperator,
    LipschitzMap,
    MetricMap,
    TwoLipschitzTable,
    associate_TR,
    blip_norm,
    compose,
    delta_box,
    dual_norm_of,
    elementary_operator,
    free_tensor,
    from_two_lipschitz,
    injective_norm,
    lip_linear_operator,
    lip_norm,
    lipl_norm,
    lipschitz_map,
    linearization_norm,
    metric_map,
    opnorm,
    projective_norm,
    tensor_of,
    to_two_lipschitz,
    two_lipschitz_table,
)
from .summing import (
    ConvergenceError,
    DegenerateSampleError,
    DominationCertificate,
    SequenceSample,
    SummingError,
    VerificationReport,
    dominated_lower_bound,
    dominated_via_A,
    dominated_via_B,
    lipschitz_p_summing,
    pietsch_interval,
    q_summing,
    sequence_sample,
    two_measure_certificate,
    verify_certificate,
)
from .integral import (
    IntegralCertificate,
    IntegralError,
    LinftyFactorization,
    SupportOutsideBall,
    eps_dual_check,
    factorize_Linfty,
    integral_norm,
    reconstruct,
)
from .integral import verify_certificate as verify_integral_certificate

__version__ = "0.1.0"
