"""Koopman autoencoders with spectral regularisation.

Training framework for Koopman autoencoders featuring eigenvalue-controlled
initialisation of the Koopman operator (spike-and-slab modulus resampling),
an eigenvalue-modulus penalty with an analytic adjoint gradient, DMD-based
estimation of the initialisation hyperparameter, synthetic dynamical-system
datasets, and a reproducible experiment harness.
"""

__version__ = "0.1.0"
