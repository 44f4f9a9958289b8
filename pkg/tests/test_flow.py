from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest

from geodefect.counterexample import FamilyParams, build_family_metric
from geodefect.flow import (
    DeltaGammaResult,
    Method,
    NotNormalizedError,
    PointMismatchError,
    delta_gamma_covariant_at,
    delta_gamma_finite_difference_at,
    delta_gamma_nabla_ricci_at,
    flowed_metric,
    ricci_flow_polynomial,
    ricci_flow_variation_at,
    tensor_transform_delta_gamma,
    third_derivative_display_at,
)
from geodefect.geometry import (
    MetricField,
    SingularMetricError,
    christoffel_at,
    is_all_zero,
    jet_at,
    ricci_full_at,
    ricci_partials_at,
)
from geodefect.scalarfield import Polynomial
from geodefect.verify import RandomMetricSpec, random_metric

O3 = (F(0),) * 3


def family(A=F(1), n=3, s=2, t=3):
    return build_family_metric(FamilyParams(n, s, t, F(A)))


def covariant(m, x=O3, use_full=True):
    jet = jet_at(m, x, 3)
    return delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet, use_full))


def no_linear_terms(m):
    n = m.n
    comps = [[Polynomial(n, {e: c for e, c in m.components[i][j].items() if sum(e) != 1}) for j in range(n)] for i in range(n)]
    return MetricField(comps)


def test_flat_variation_is_zero():
    jet = jet_at(MetricField.identity(3), (1, 2, 3), 3)
    v = ricci_flow_variation_at(jet)
    assert is_all_zero(v.dg_var) and is_all_zero(v.d_dg_var)


def test_family_variation_values():
    v = ricci_flow_variation_at(jet_at(family(), O3, 3))
    assert v.dg_var[0, 0] == 0
    assert v.d_dg_var[1, 0, 0] == 1
    assert v.d_dg_var[0, 0, 1] == 1


def test_variation_linear_in_amplitude_at_first_order():
    x = (F(1, 4), F(1, 4), F(1, 4))

    def defect(A):
        dA = ricci_flow_variation_at(jet_at(family(A), x, 3)).dg_var
        dh = ricci_flow_variation_at(jet_at(family(A / 2), x, 3)).dg_var
        return max(abs(v) for v in (dA - 2 * dh).flat)

    ratio = float(defect(F(1)) / defect(F(1, 2)))
    assert 3.2 <= ratio <= 4.8


def test_covariant_zero_variation():
    jet = jet_at(family(), O3, 3)
    from geodefect.flow import VariationJet
    from geodefect.geometry import zeros

    res = delta_gamma_covariant_at(jet, VariationJet(jet.point, zeros((3, 3)), zeros((3, 3, 3))))
    assert is_all_zero(res.values)


def test_covariant_family_value():
    res = covariant(family())
    assert res.component(2, 1, 1) == F(1, 2)
    assert res.specialized == {2: F(1, 2), 3: 0}
    assert np.array_equal(res.values, np.swapaxes(res.values, 1, 2))


def test_covariant_point_mismatch():
    m = family()
    jet = jet_at(m, O3, 3)
    var = ricci_flow_variation_at(jet_at(m, (1, 0, 0), 3))
    with pytest.raises(PointMismatchError):
        delta_gamma_covariant_at(jet, var)


def test_nabla_ricci_routes():
    assert delta_gamma_nabla_ricci_at(jet_at(MetricField.identity(3), O3, 3)).specialized == {2: 0, 3: 0}
    res = delta_gamma_nabla_ricci_at(jet_at(family(), O3, 3))
    assert res.specialized[2] == F(1, 2)
    assert res.method is Method.NABLA_RICCI


def test_nabla_ricci_equals_covariant_on_random_normalized_metrics():
    for seed in range(8):
        m = random_metric(RandomMetricSpec(3 + seed % 2, 3, F(1, 10), seed))
        x = (F(0),) * m.n
        jet = jet_at(m, x, 3)
        assert delta_gamma_nabla_ricci_at(jet).specialized == covariant(m, x).specialized
        assert delta_gamma_nabla_ricci_at(jet, use_full=False).specialized == covariant(m, x, False).specialized


def test_nabla_ricci_requires_identity():
    m = random_metric(RandomMetricSpec(3, 2, F(1, 10), 4, normalize_at_origin=False))
    with pytest.raises(NotNormalizedError):
        delta_gamma_nabla_ricci_at(jet_at(m, O3, 3))


def test_display_values():
    d = third_derivative_display_at(jet_at(MetricField.identity(3), O3, 3), 2)
    assert (d.verbatim, d.corrected) == (0, 0)
    d = third_derivative_display_at(jet_at(family(), O3, 3), 2)
    assert d.verbatim == 1 and d.corrected == 1
    assert d.verbatim_restricted == 1 and d.corrected_restricted == 1
    assert d.verbatim / covariant(family()).component(2, 1, 1) == 2
    with pytest.raises(ValueError):
        third_derivative_display_at(jet_at(family(), O3, 3), 1)


def test_display_linear_in_free_parameter():
    for A in (F(1, 2), F(1), F(2), F(-3)):
        assert third_derivative_display_at(jet_at(family(A), O3, 3), 2).verbatim == A


def test_half_corrected_display_equals_exact_variation_in_adapted_jets():
    # with g(x0) = I and ∂g(x0) = 0, linearizing ∇_s R_11 - 2∇_1 R_1s by hand gives
    # -(1/2)(2 g_st,11t - 2 g_1s,1tt + g_11,tts - g_tt,11s): half the index-corrected display
    for seed in range(10):
        m = no_linear_terms(random_metric(RandomMetricSpec(3 + seed % 2, 3, F(1, 10), 100 + seed)))
        x = (F(0),) * m.n
        jet = jet_at(m, x, 3)
        exact = covariant(m, x).specialized
        lin = covariant(m, x, use_full=False).specialized
        for s in range(2, m.n + 1):
            d = third_derivative_display_at(jet, s)
            assert exact[s] == d.corrected / 2
            assert lin[s] == d.corrected / 2


def test_verbatim_and_corrected_differ_in_general():
    x1, x2 = Polynomial.variable(3, 1), Polynomial.variable(3, 2)
    m = MetricField.from_perturbation(3, {(1, 1): x1 * x2 * x2 * F(1, 5) + x2 * x2 * x2 * F(1, 7)})
    d = third_derivative_display_at(jet_at(m, O3, 3), 2)
    assert d.verbatim != d.corrected


def test_finite_difference_flat_and_family():
    assert is_all_zero(delta_gamma_finite_difference_at(MetricField.identity(3), O3).values)
    res = delta_gamma_finite_difference_at(family(), O3, eps=F(1, 1000))
    assert abs(float(res.component(2, 1, 1)) - 0.5) <= 1e-6
    assert res.method is Method.FINITE_DIFFERENCE


def test_finite_difference_second_order_before_extrapolation():
    m = random_metric(RandomMetricSpec(3, 3, F(1, 10), 21))
    exact = covariant(m).values
    P = ricci_flow_polynomial(m, O3, 1)
    errs = []
    for eps in (F(1, 10), F(1, 20), F(1, 40)):
        raw = delta_gamma_finite_difference_at(m, O3, eps=eps, P=P).metadata["raw_central"][eps][0]
        errs.append(max(abs(float(v)) for v in (raw - exact).flat))
    for a, b in zip(errs, errs[1:]):
        assert 3.2 <= a / b <= 4.8


def test_finite_difference_rejects_huge_eps():
    with pytest.raises(SingularMetricError):
        delta_gamma_finite_difference_at(family(F(200)), (F(1), F(1), F(0)), eps=F(10))


def test_finite_difference_agrees_with_exact_routes():
    for seed in range(6):
        m = random_metric(RandomMetricSpec(2 + seed % 3, 3, F(1, 10), seed))
        x = (F(0),) * m.n
        fd = delta_gamma_finite_difference_at(m, x).values
        ex = covariant(m, x).values
        scale = max(abs(float(v)) for v in ex.flat) or 1.0
        assert max(abs(float(v)) for v in (fd - ex).flat) <= 1e-6 * scale


def test_flowed_metric_basics():
    flat = MetricField.identity(3)
    assert flowed_metric(flat, F(1, 10), O3) == flat
    m = family()
    assert flowed_metric(m, 0, O3) is m


def test_flow_polynomial_matches_ricci_jet():
    for seed in range(3):
        m = random_metric(RandomMetricSpec(3, 3, F(1, 10), seed))
        c = (F(1, 10), F(0), F(-1, 10))
        P = ricci_flow_polynomial(m, c, 3)
        jet = jet_at(m, c, 3)
        R, dR = ricci_full_at(jet), ricci_partials_at(jet)
        for i, j in product(range(3), repeat=2):
            assert P.components[i][j].eval(c) == -2 * R[i, j]
            for a in range(3):
                assert P.components[i][j].partial(a + 1).eval(c) == -2 * dR[a, i, j]


def test_flowed_family_gamma():
    tau = F(1, 100)
    fm = flowed_metric(family(), tau, O3, 3)
    g = christoffel_at(jet_at(fm, O3, 1))[1, 0, 0]
    assert abs(float(g) - float(tau) / 2) <= 1e-6


def test_flowed_metric_not_positive_definite():
    m = random_metric(RandomMetricSpec(3, 2, F(1, 10), 5, normalize_at_origin=False))
    with pytest.raises(SingularMetricError):
        flowed_metric(m, F(10**6), O3, 2)


def test_tensor_law_identity_and_permutation():
    m = family()
    base = covariant(m).values
    I = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert np.array_equal(tensor_transform_delta_gamma(base, I), base)
    perm = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]
    pulled = covariant(m.pullback_linear(perm)).values
    assert np.array_equal(pulled, tensor_transform_delta_gamma(base, perm))


def test_linearity_in_amplitude_of_linear_route():
    vals = {A: covariant(family(A), use_full=False).component(2, 1, 1) for A in (F(1, 4), F(1, 2), F(1), F(2))}
    assert all(v == A / 2 for A, v in vals.items())
    full = {A: covariant(family(A)).component(2, 1, 1) for A in (F(1, 10), F(1, 5))}
    assert full[F(1, 5)] - 2 * full[F(1, 10)] == 0


def test_coefficient_independent_of_dimension():
    for n, s, t in [(3, 2, 3), (3, 3, 2), (4, 2, 3), (4, 3, 4), (4, 4, 2)]:
        res = covariant(family(F(1), n, s, t), (F(0),) * n)
        assert res.component(s, 1, 1) == F(1, 2)
        assert isinstance(res, DeltaGammaResult)
