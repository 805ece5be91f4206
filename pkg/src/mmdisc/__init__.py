"""Discretize sampled metric measure spaces and check the discrete hypotheses.

The public surface mirrors the modules: ``spaces`` (samples and measures),
``net`` (maximal separated nets), ``graph`` (approximating graphs),
``analysis`` (doubling, comparability, distortion), ``poincare``
(discrete Poincare constants), ``unity`` (partition of unity), ``onecomplex``
(metric one-complexes), ``ghcheck`` (pointed GH conditions and multiscale
reports) and ``cli``.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .spaces import (BallSpec, SampledSpace, ball_measure, load_point_cloud,
                     make_euclidean_lattice, sierpinski_prefractal)
from .net import EpsNet, build_maximal_net, check_net, hausdorff_gap, nested_chain, refine_nested
from .graph import (NetGraph, VertexFunction, build_graph, graph_ball, graph_distance,
                    hop_distances)
from .analysis import comparability, distortion, estimate_doubling, theoretical_bounds
from .poincare import (PoincareEstimate, estimate_constant_lower, exact_constant_p1_tiny,
                       holder_lift, pi_sides, spectral_upper_p2)
from .unity import PartitionOfUnity, check_pointwise_bound, extend_function
from .onecomplex import OneComplex, build_complex, complex_distance
from .ghcheck import gh_condition_check, multiscale_report

__all__ = [
    "__version__", "BallSpec", "SampledSpace", "ball_measure", "load_point_cloud",
    "make_euclidean_lattice", "sierpinski_prefractal", "EpsNet", "build_maximal_net",
    "check_net", "hausdorff_gap", "nested_chain", "refine_nested", "NetGraph", "VertexFunction",
    "build_graph", "graph_ball", "graph_distance", "hop_distances", "comparability",
    "distortion", "estimate_doubling", "theoretical_bounds", "PoincareEstimate",
    "estimate_constant_lower", "exact_constant_p1_tiny", "holder_lift", "pi_sides",
    "spectral_upper_p2", "PartitionOfUnity", "check_pointwise_bound", "extend_function",
    "OneComplex", "build_complex", "complex_distance", "gh_condition_check",
    "multiscale_report",
]
