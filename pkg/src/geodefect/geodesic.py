"""Geodesic equation, axis residuals and the curve-shortening curvature vector."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .geometry import MetricField, SingularMetricError, christoffel_at, jet_at
from .scalarfield import as_rational, make_point


@dataclass(frozen=True)
class CompiledMetric:
    """Float, flattened copy of a :class:`MetricField` for the kernels."""

    n: int
    ci: np.ndarray
    cj: np.ndarray
    exps: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def from_metric(cls, m: MetricField) -> "CompiledMetric":
        ci, cj, exps, coeffs = [], [], [], []
        for i in range(m.n):
            for j in range(i, m.n):
                for e, c in m.components[i][j].items():
                    ci.append(i)
                    cj.append(j)
                    exps.append(e)
                    coeffs.append(float(c))
        return cls(
            m.n,
            np.array(ci, dtype=np.int64),
            np.array(cj, dtype=np.int64),
            np.array(exps, dtype=np.int64).reshape(-1, m.n),
            np.array(coeffs, dtype=float),
        )

    def args(self):
        return self.ci, self.cj, self.exps, self.coeffs

    def metric_at(self, x) -> np.ndarray:
        g, _ = kernels.metric_jet1(*self.args(), np.asarray(x, dtype=float))
        return g


@dataclass(frozen=True)
class CurveSample:
    param: Fraction
    position: tuple
    velocity: tuple
    acceleration: tuple


@dataclass(frozen=True)
class SampledCurve:
    samples: tuple
    step: Fraction

    def __post_init__(self):
        params = [s.param for s in self.samples]
        if any(b - a != self.step for a, b in zip(params, params[1:])):
            raise ValueError("curve parameters must increase with constant step")

    def __len__(self):
        return len(self.samples)

    def positions(self) -> np.ndarray:
        return np.array([[float(c) for c in s.position] for s in self.samples])

    def velocities(self) -> np.ndarray:
        return np.array([[float(c) for c in s.velocity] for s in self.samples])


def geodesic_rhs(m: MetricField, x, v, exact: bool = False):
    """Acceleration ``-Γ^k_ij v^i v^j`` of the geodesic through ``x`` with velocity ``v``."""
    if exact:
        gamma = christoffel_at(jet_at(m, make_point(x), 1))
        v = make_point(v)
        n = m.n
        return tuple(
            -sum((gamma[k, i, j] * v[i] * v[j] for i in range(n) for j in range(n)), Fraction(0))
            for k in range(n)
        )
    cm = CompiledMetric.from_metric(m)
    x = np.asarray([float(c) for c in x])
    if not np.all(np.linalg.eigvalsh(cm.metric_at(x)) > 0):
        raise SingularMetricError("metric not positive-definite at x")
    return kernels.geodesic_accel(*cm.args(), x, np.asarray([float(c) for c in v]))


def integrate_geodesic(m: MetricField, x0, v0, T, steps: int, *, backend=None) -> SampledCurve:
    """Fixed-step classical RK4 for ``ẍ = -Γ(ẋ, ẋ)``.

    ``backend`` is an optional kernel module (see :func:`kernels.backends`).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    T = as_rational(T)
    h = T / steps
    cm = CompiledMetric.from_metric(m)
    impl = backend or kernels
    x0f = np.array([float(c) for c in x0])
    v0f = np.array([float(c) for c in v0])
    try:
        X, V, A = impl.rk4_integrate(*cm.args(), x0f, v0f, float(h), steps)
    except ZeroDivisionError as exc:
        raise SingularMetricError(str(exc)) from exc
    for x in X[:: max(1, steps // 16)].tolist() + [X[-1].tolist()]:
        if not np.all(np.linalg.eigvalsh(cm.metric_at(x)) > 0):
            raise SingularMetricError("metric degenerates along the integrated path")
    samples = tuple(
        CurveSample(k * h, tuple(X[k]), tuple(V[k]), tuple(A[k])) for k in range(steps + 1)
    )
    return SampledCurve(samples, h)


def speeds(m: MetricField, curve: SampledCurve) -> np.ndarray:
    """``g(ẋ, ẋ)`` at each sample."""
    cm = CompiledMetric.from_metric(m)
    out = []
    for s in curve.samples:
        v = np.array([float(c) for c in s.velocity])
        out.append(v @ cm.metric_at([float(c) for c in s.position]) @ v)
    return np.array(out)


def axis_point(n: int, x1) -> tuple:
    return (as_rational(x1),) + (Fraction(0),) * (n - 1)


def axis_residual(m: MetricField, x1_values: Iterable) -> list[tuple]:
    """Geodesic defect of ``t ↦ (t, 0, ..., 0)`` at each ``x1``: exactly ``Γ^k_11``."""
    out = []
    for x1 in x1_values:
        gamma = christoffel_at(jet_at(m, axis_point(m.n, x1), 1))
        out.append(tuple(gamma[k, 0, 0] for k in range(m.n)))
    return out


def axis_curve(n: int, x1_values: Sequence) -> SampledCurve:
    """Unit-coordinate-speed samples of the ``x1``-axis."""
    vals = [as_rational(v) for v in x1_values]
    step = vals[1] - vals[0] if len(vals) > 1 else Fraction(1)
    e1 = (Fraction(1),) + (Fraction(0),) * (n - 1)
    zero = (Fraction(0),) * n
    return SampledCurve(tuple(CurveSample(v, axis_point(n, v), e1, zero) for v in vals), step)


def curvature_vector(m: MetricField, curve: SampledCurve, index: int, method: str = "recorded"):
    """Curvature vector ``H`` of the curve at an interior sample, and its norm.

    ``H`` is the covariant acceleration of the unit-speed reparametrization:
    with ``A = ẍ + Γ(ẋ, ẋ)`` and ``σ² = g(ẋ, ẋ)``,
    ``H = (A - g(A, ẋ)/σ² · ẋ) / σ²``.

    ``method="recorded"`` uses the stored velocity/acceleration,
    ``method="differences"`` uses second-order central differences of positions.
    """
    if not 0 < index < len(curve) - 1:
        raise IndexError("curvature vector needs an interior sample")
    s = curve.samples[index]
    x = np.array([float(c) for c in s.position])
    if method == "recorded":
        v = np.array([float(c) for c in s.velocity])
        a = np.array([float(c) for c in s.acceleration])
    elif method == "differences":
        h = float(curve.step)
        prev = np.array([float(c) for c in curve.samples[index - 1].position])
        nxt = np.array([float(c) for c in curve.samples[index + 1].position])
        v = (nxt - prev) / (2 * h)
        a = (nxt - 2 * x + prev) / (h * h)
    else:
        raise ValueError(f"unknown method {method!r}")
    cm = CompiledMetric.from_metric(m)
    g, _ = kernels.metric_jet1(*cm.args(), x)
    sigma2 = v @ g @ v
    if sigma2 <= 0:
        raise ValueError("zero-velocity sample")
    cov = a - kernels.geodesic_accel(*cm.args(), x, v)
    H = (cov - (cov @ g @ v) / sigma2 * v) / sigma2
    return H, float(np.sqrt(max(H @ g @ H, 0.0)))


def curve_to_csv(m: MetricField, curve: SampledCurve, out=None) -> str:
    """CSV with ``param, x1.., v1.., residual_norm`` columns.

    ``residual_norm`` is the Euclidean norm of ``ẍ + Γ(ẋ, ẋ)`` at each sample.
    """
    n = m.n
    cm = CompiledMetric.from_metric(m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)] + ["residual_norm"])
    for s in curve.samples:
        x = np.array([float(c) for c in s.position])
        v = np.array([float(c) for c in s.velocity])
        a = np.array([float(c) for c in s.acceleration])
        res = a - kernels.geodesic_accel(*cm.args(), x, v)
        w.writerow(
            [repr(float(s.param))] + [repr(float(c)) for c in x] + [repr(float(c)) for c in v] + [repr(float(np.linalg.norm(res)))]
        )
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
