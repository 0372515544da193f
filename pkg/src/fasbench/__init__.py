"""fasbench: flux-across-surfaces verification workbench for quantum scattering.

Subpackages
-----------
specfun     complex error-function kernels and half-line Gaussian moments
quadrature  radial transforms and phase-exact oscillatory integration
pointmodel  exactly solvable point-interaction scattering model
lsradial    radial Lippmann-Schwinger solver and zero-energy resonance tools
fluxfas     probability current, cone probabilities and the FAS harness
cli         reproducible experiment runner
"""

__version__ = "0.1.0"
