"""Averaged Fourier decay of fractal measures along nondegenerate space curves.

Modules: ``exponents`` (closed-form exponent engine), ``curves``,
``measures`` (discrete alpha-dimensional measures and the extremal
constructions), ``transforms`` (oscillatory quadrature), ``decomposition``
(Whitney cover and tube geometry), ``experiments`` (lambda-ladder drivers)
and ``cli``.
"""

from . import curves, decomposition, experiments, exponents, measures, transforms

__all__ = ["curves", "decomposition", "experiments", "exponents", "measures", "transforms"]
__version__ = "0.1.0"
