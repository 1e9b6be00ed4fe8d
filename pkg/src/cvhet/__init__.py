"""cvhet: heterodyne characterization of continuous-variable states.

Classical simulation of heterodyne detection (sampling the Husimi Q
function), reliable density-matrix tomography with analytical
confidence radii, fidelity certification under the i.i.d. assumption,
and verification without it — with exact closed-form oracles for every
Monte-Carlo estimator.
"""

from .certify import (
    CertificationParams,
    CertifyReport,
    ProbabilityBudget,
    VerificationParams,
    VerifyReport,
    certification_budget,
    certify,
    downstream_bound,
    fidelity_estimate,
    p_choice,
    p_support_iid,
    scaling_suggest,
    verification_budget,
    verify,
)
from .errors import (
    InternalConsistencyError,
    ParameterError,
    ParseError,
    ValidationError,
)
from .fock import (
    DensityMatrix,
    FockOperator,
    FockVector,
    apply_loss,
    coherent_overlap,
    fidelity_pure,
    spectral_decompose,
    trace_distance,
)
from .laguerre import (
    EstimatorConfig,
    c_kl,
    c_psi,
    f_elem,
    f_elem_via_generalized_laguerre,
    f_op,
    f_pure,
    k_const,
    k_const_pure,
    laguerre2d,
    m_bound,
)
from .oracle import expected_f_elem, expected_f_op, quadrature_expect
from .sampling import (
    AdversaryModel,
    HonestIID,
    MixtureIID,
    NoisyIID,
    ProtocolSamples,
    SubsetSwap,
    iter_sample_chunks,
    q_eval,
    run_protocol_sampling,
    sample_q,
    support_count,
)
from .tomography import (
    TomographyReport,
    estimate_element,
    failure_log_prob,
    required_samples_tomography,
    tomography_run,
    tomography_stream,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryModel",
    "CertificationParams",
    "CertifyReport",
    "DensityMatrix",
    "EstimatorConfig",
    "FockOperator",
    "FockVector",
    "HonestIID",
    "InternalConsistencyError",
    "MixtureIID",
    "NoisyIID",
    "ParameterError",
    "ParseError",
    "ProbabilityBudget",
    "ProtocolSamples",
    "SubsetSwap",
    "TomographyReport",
    "ValidationError",
    "VerificationParams",
    "VerifyReport",
    "apply_loss",
    "c_kl",
    "c_psi",
    "certification_budget",
    "certify",
    "coherent_overlap",
    "downstream_bound",
    "estimate_element",
    "expected_f_elem",
    "expected_f_op",
    "f_elem",
    "f_elem_via_generalized_laguerre",
    "f_op",
    "f_pure",
    "failure_log_prob",
    "fidelity_estimate",
    "fidelity_pure",
    "iter_sample_chunks",
    "k_const",
    "k_const_pure",
    "laguerre2d",
    "m_bound",
    "p_choice",
    "p_support_iid",
    "q_eval",
    "quadrature_expect",
    "required_samples_tomography",
    "run_protocol_sampling",
    "sample_q",
    "scaling_suggest",
    "spectral_decompose",
    "support_count",
    "tomography_run",
    "tomography_stream",
    "trace_distance",
    "verification_budget",
    "verify",
]
