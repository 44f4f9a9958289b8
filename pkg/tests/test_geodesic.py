import csv
import io
import math
from fractions import Fraction as F

import numpy as np
import pytest

from geodefect import kernels
from geodefect.counterexample import FamilyParams, build_family_metric
from geodefect.flow import flowed_metric
from geodefect.geodesic import (
    CurveSample,
    SampledCurve,
    axis_curve,
    axis_residual,
    curvature_vector,
    curve_to_csv,
    geodesic_rhs,
    integrate_geodesic,
    speeds,
)
from geodefect.geometry import MetricField, christoffel_at, jet_at
from geodefect.scalarfield import Polynomial
from geodefect.verify import RandomMetricSpec, random_metric

O3 = (F(0),) * 3
X1_SAMPLES = [F(-1, 10), F(-1, 20), F(0), F(1, 20), F(1, 10)]


def curved_metric():
    return random_metric(RandomMetricSpec(3, 3, F(3, 10), 11))


def polar_like():
    x1 = Polynomial.variable(2, 1)
    return MetricField([[Polynomial.constant(2, 1), Polynomial.zero(2)], [Polynomial.zero(2), x1 * x1]])


def test_rhs_examples():
    assert np.allclose(geodesic_rhs(MetricField.identity(3), (1, 2, 3), (1, -1, 2)), 0)
    assert geodesic_rhs(polar_like(), (2, 0), (0, 1), exact=True) == (2, 0)
    assert np.allclose(geodesic_rhs(polar_like(), (2, 0), (0, 1)), [2, 0])
    assert geodesic_rhs(curved_metric(), (F(1, 10),) * 3, (0, 0, 0), exact=True) == (0, 0, 0)


def test_flat_geodesic_is_straight_line():
    c = integrate_geodesic(MetricField.identity(3), O3, (1, 0, 0), 1, 10)
    t = np.array([float(s.param) for s in c.samples])
    assert np.abs(c.positions() - np.outer(t, [1, 0, 0])).max() < 1e-12
    assert c.step == F(1, 10)


def test_fourth_order_convergence():
    m = curved_metric()
    v0 = (1, F(1, 2), F(-1, 3))
    ref = integrate_geodesic(m, O3, v0, 1, 2560).positions()[-1]
    errs = [np.linalg.norm(integrate_geodesic(m, O3, v0, 1, s).positions()[-1] - ref) for s in (20, 40)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_speed_is_conserved():
    for seed in range(3):
        m = random_metric(RandomMetricSpec(3, 3, F(1, 10), seed))
        c = integrate_geodesic(m, O3, (1, F(1, 3), 0), 1, 200)
        sp = speeds(m, c)
        assert np.abs(sp - sp[0]).max() / sp[0] < 1e-8


def test_backends_agree():
    m = curved_metric()
    backends = kernels.backends()
    outs = {name: integrate_geodesic(m, O3, (1, F(1, 2), 0), 1, 50, backend=b).positions() for name, b in backends.items()}
    ref = outs["python"]
    for arr in outs.values():
        assert np.abs(arr - ref).max() < 1e-12


def test_geodesic_has_zero_curvature_vector():
    m = curved_metric()
    c = integrate_geodesic(m, O3, (1, F(1, 2), F(-1, 3)), 1, 100)
    for k in range(1, len(c) - 1):
        _, norm = curvature_vector(m, c, k)
        assert norm < 1e-8


def test_circle_curvature():
    r, N = 2.0, 400
    h = F(1, 100)
    samples = []
    for k in range(N):
        th = float(k * h)
        samples.append(
            CurveSample(k * h, (r * math.cos(th), r * math.sin(th), 0.0),
                        (-r * math.sin(th), r * math.cos(th), 0.0), (-r * math.cos(th), -r * math.sin(th), 0.0))
        )
    c = SampledCurve(tuple(samples), h)
    m = MetricField.identity(3)
    _, k_rec = curvature_vector(m, c, 50)
    _, k_fd = curvature_vector(m, c, 50, method="differences")
    assert abs(k_rec - 1 / r) < 1e-12
    assert abs(k_fd - 1 / r) < 1e-4


def test_curvature_vector_needs_interior_index():
    c = axis_curve(3, X1_SAMPLES)
    with pytest.raises(IndexError):
        curvature_vector(MetricField.identity(3), c, 0)


def test_axis_residual_examples():
    fam = build_family_metric(FamilyParams())
    assert all(v == (0, 0, 0) for v in axis_residual(fam, X1_SAMPLES))
    assert all(v == (0, 0, 0) for v in axis_residual(MetricField.identity(3), X1_SAMPLES))
    tau = F(1, 100)
    fm = flowed_metric(fam, tau, O3, 3)
    res = axis_residual(fm, X1_SAMPLES)
    assert abs(float(res[2][1]) - float(tau) / 2) <= 1e-6


def test_axis_residual_is_christoffel():
    m = random_metric(RandomMetricSpec(3, 3, F(1, 10), 8))
    for x1, vec in zip(X1_SAMPLES, axis_residual(m, X1_SAMPLES)):
        g = christoffel_at(jet_at(m, (x1, 0, 0), 1))
        assert vec == tuple(g[k, 0, 0] for k in range(3))


def test_axis_curve_curvature_after_flow():
    tau = F(1, 100)
    fm = flowed_metric(build_family_metric(FamilyParams()), tau, O3, 3)
    H, norm = curvature_vector(fm, axis_curve(3, X1_SAMPLES), 2)
    assert abs(norm - 0.005) < 1e-6
    assert abs(H[1] - 0.005) < 1e-6


def test_curve_csv_export():
    m = curved_metric()
    c = integrate_geodesic(m, O3, (1, 0, 0), F(1, 2), 5)
    rows = list(csv.reader(io.StringIO(curve_to_csv(m, c))))
    assert rows[0] == ["param", "x1", "x2", "x3", "v1", "v2", "v3", "residual_norm"]
    assert len(rows) == 7
    assert all(float(r[-1]) < 1e-12 for r in rows[1:])


def test_sampled_curve_requires_constant_step():
    s = [CurveSample(F(k), (0,), (1,), (0,)) for k in (0, 1, 3)]
    with pytest.raises(ValueError):
        SampledCurve(tuple(s), F(1))
