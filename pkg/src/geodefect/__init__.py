"""Exact curvature calculus for polynomial metrics and the connection variation under Ricci flow."""
from .scalarfield import Polynomial, as_rational, make_point
from .geometry import MetricField, MetricJet, CurvatureBundle, jet_at, curvature_at

__version__ = "0.1.0"

__all__ = [
    "Polynomial",
    "MetricField",
    "MetricJet",
    "CurvatureBundle",
    "as_rational",
    "make_point",
    "jet_at",
    "curvature_at",
]
