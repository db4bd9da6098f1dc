"""lmcflab: a desk-scale numerical laboratory for Lagrangian mean curvature flow.

Subpackages cover discrete Lagrangian geometry, curve-shortening / product
flows with parabolic rescaling, Gaussian monotonicity diagnostics, the
drift-Laplacian spectral toolkit on planes and plane pairs, heat equations
along evolving flows, linking-number topology checks, and reproducible
scenario runs behind a CLI.
"""

__version__ = "0.1.0"
