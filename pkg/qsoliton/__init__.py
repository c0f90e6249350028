"""
qsoliton
========

Verification engine for gradient q-solitons.

Computes curvature and flow tensors on exactly-differentiable coordinate charts and
checks soliton identities, rigidity criteria, growth bounds and volume estimates on a
library of exact soliton geometries.

Usage:
    from qsoliton.manifolds import build
    from qsoliton.tools.verify import soliton_residual

    example = build("cylinder_shrinker", {"k": 2})
    print(soliton_residual(example.soliton).verdict)
"""

__version__ = "2.0.0"
__author__ = "qsoliton developers"
