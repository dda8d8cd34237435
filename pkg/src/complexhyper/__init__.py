"""Complex, hyperbolic and elliptic gamma functions and a verification harness
for hypergeometric integral identities over the complex numbers."""

from .gamma_core import GammaPoleError, HalfInt, complex_gamma, complex_gamma_ab, log_gamma, pochhammer
from .identity_registry import IdentityInstance, descriptor, sample_params, validate
from .mb_engine import QuadConfig, VerificationReport, verify
from .rational_engine import RationalInstance, verify_exact

__version__ = "0.1.0"

__all__ = [
    "GammaPoleError",
    "HalfInt",
    "IdentityInstance",
    "QuadConfig",
    "RationalInstance",
    "VerificationReport",
    "complex_gamma",
    "complex_gamma_ab",
    "descriptor",
    "log_gamma",
    "pochhammer",
    "sample_params",
    "validate",
    "verify",
    "verify_exact",
]
