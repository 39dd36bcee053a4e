"""Covariant quantization on Riemannian configuration spaces.

Half-form energy operators, the scalar-curvature term that separates the
covariant and BKS energy operators, residual-based verification of the
identities relating them, and spectra of the discretized Hamiltonians.
"""

__version__ = "0.1.0"
