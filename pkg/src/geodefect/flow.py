"""First variation of the metric and connection under Ricci flow.

Three exact routes to the connection variation are provided, plus an
independent finite-difference oracle:

* :func:`delta_gamma_covariant_at` -- ``½ g^kl (∇_i δg_jl + ∇_j δg_il - ∇_l δg_ij)``
* :func:`delta_gamma_nabla_ricci_at` -- ``∇_s R_11 - 2 ∇_1 R_1s`` (identity-normalized point only)
* :func:`third_derivative_display_at` -- third-derivative shortcut formula, both index readings
* :func:`delta_gamma_finite_difference_at` -- difference quotient of Christoffel symbols of
  ``g ± ε P`` where ``P`` is the Taylor polynomial of ``-2 Ric`` built by truncated series
  arithmetic (no use of the pointwise jet formulas).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .geometry import (
    MetricField,
    MetricJet,
    SingularMetricError,
    christoffel_at,
    covariant_gradient_sym2_at,
    jet_at,
    ricci_full_at,
    ricci_linear_at,
    ricci_partials_at,
    zeros,
)
from .scalarfield import Polynomial, as_rational, make_point, rational_inverse

ZERO = Fraction(0)
DEFAULT_EPS_LADDER = (Fraction(1, 100), Fraction(1, 1000), Fraction(1, 10000))


class Method(str, enum.Enum):
    COVARIANT = "covariant_formula"
    NABLA_RICCI = "nabla_ricci_formula"
    DISPLAY = "third_derivative_display"
    FINITE_DIFFERENCE = "finite_difference"


class PointMismatchError(ValueError):
    pass


class NotNormalizedError(ValueError):
    """Metric is not the identity at the evaluation point."""


@dataclass(frozen=True, eq=False)
class VariationJet:
    point: tuple
    dg_var: np.ndarray  # δg_ij
    d_dg_var: np.ndarray  # ∂_a δg_ij, indexed [a, i, j]


@dataclass(frozen=True, eq=False)
class DeltaGammaResult:
    method: Method
    values: np.ndarray | None  # δΓ^k_ij indexed [k, i, j]
    specialized: dict  # s (1-based) -> δΓ^s_11
    metadata: dict = field(default_factory=dict)

    def component(self, k: int, i: int, j: int) -> Fraction:
        """1-based component accessor."""
        if self.values is None:
            if (i, j) != (1, 1):
                raise KeyError("only (s;1,1) components are available for this route")
            return self.specialized[k]
        return self.values[k - 1, i - 1, j - 1]


def ricci_flow_variation_at(jet: MetricJet, use_full: bool = True) -> VariationJet:
    """``δg = -2 Ric`` together with its first partials."""
    if jet.order < 3:
        raise ValueError("variation needs a jet of order 3")
    R = ricci_full_at(jet) if use_full else ricci_linear_at(jet)
    dR = ricci_partials_at(jet, use_full=use_full)
    return VariationJet(jet.point, -2 * R, -2 * dR)


def delta_gamma_from_variation(jet: MetricJet, dg_var, d_dg_var, gamma=None) -> np.ndarray:
    n = jet.n
    nabla = covariant_gradient_sym2_at(jet, dg_var, d_dg_var, gamma)
    low = zeros((n, n, n))
    for l, i, j in product(range(n), repeat=3):
        low[l, i, j] = (nabla[i, j, l] + nabla[j, i, l] - nabla[l, i, j]) / 2
    return np.tensordot(jet.ginv, low, axes=([1], [0]))


def delta_gamma_covariant_at(jet: MetricJet, var: VariationJet) -> DeltaGammaResult:
    if tuple(jet.point) != tuple(var.point):
        raise PointMismatchError("metric jet and variation jet are at different points")
    values = delta_gamma_from_variation(jet, var.dg_var, var.d_dg_var)
    spec = {s + 1: values[s, 0, 0] for s in range(1, jet.n)}
    return DeltaGammaResult(Method.COVARIANT, values, spec)


def delta_gamma_nabla_ricci_at(jet: MetricJet, use_full: bool = True) -> DeltaGammaResult:
    """``∇_s R_11 - 2 ∇_1 R_1s`` for every ``s != 1``; requires ``g = I`` at the point."""
    n = jet.n
    if any(jet.g[i, j] != int(i == j) for i in range(n) for j in range(n)):
        raise NotNormalizedError("metric is not the identity at the evaluation point")
    if jet.order < 3:
        raise ValueError("needs a jet of order 3")
    R = ricci_full_at(jet) if use_full else ricci_linear_at(jet)
    dR = ricci_partials_at(jet, use_full=use_full)
    nabla = covariant_gradient_sym2_at(jet, R, dR)
    spec = {s + 1: nabla[s, 0, 0] - 2 * nabla[0, 0, s] for s in range(1, n)}
    return DeltaGammaResult(Method.NABLA_RICCI, None, spec, {"ricci": "full" if use_full else "linear"})


@dataclass(frozen=True)
class DisplayValues:
    s: int
    verbatim: Fraction
    corrected: Fraction
    verbatim_restricted: Fraction  # t ranging over t ∉ {1, s}
    corrected_restricted: Fraction


def third_derivative_display_at(jet: MetricJet, s: int) -> DisplayValues:
    """Evaluate ``-(2 g_st,11t - 2 g_1s,tt1 + g_11,tt? - g_tt,11s)`` summed over ``t``.

    The verbatim reading differentiates ``g_11`` by ``x^t x^t x^1``; the corrected
    reading uses ``x^t x^t x^s``.  ``s`` is 1-based and must not be 1.
    """
    if jet.order < 3:
        raise ValueError("needs a jet of order 3")
    if s == 1 or not 1 <= s <= jet.n:
        raise ValueError("s must be in 2..n")
    d3g = jet.d3g
    si = s - 1
    sums = {"verbatim": ZERO, "corrected": ZERO, "verbatim_restricted": ZERO, "corrected_restricted": ZERO}
    for t in range(jet.n):
        common = 2 * d3g[0, 0, t, si, t] - 2 * d3g[t, t, 0, 0, si] - d3g[0, 0, si, t, t]
        verb = -(common + d3g[t, t, 0, 0, 0])
        corr = -(common + d3g[t, t, si, 0, 0])
        sums["verbatim"] += verb
        sums["corrected"] += corr
        if t not in (0, si):
            sums["verbatim_restricted"] += verb
            sums["corrected_restricted"] += corr
    return DisplayValues(s, **sums)


# -- truncated series route -------------------------------------------------


def _poly_matmul(A, B, max_degree):
    n = len(A)
    dim = A[0][0].dim
    out = [[Polynomial.zero(dim) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = Polynomial.zero(dim)
            for k in range(n):
                if not A[i][k].is_zero() and not B[k][j].is_zero():
                    acc = acc + A[i][k].mul_truncated(B[k][j], max_degree)
            out[i][j] = acc
    return out


def ricci_taylor_polynomials(m: MetricField, center: Sequence, degree: int, use_full: bool = True):
    """Taylor polynomials of ``R_ij`` about ``center`` up to total ``degree``.

    Works in shifted coordinates ``y = x - center`` with the inverse metric
    expanded as a Neumann series ``Σ (-G0⁻¹ N)^k G0⁻¹`` where ``G0 = g(center)``
    and ``N`` has no constant term, so the series is finite under truncation.
    Returned polynomials are in the original coordinates.
    """
    c = make_point(center)
    n = m.n
    D1 = degree + 1  # Γ is needed one order higher than Ric
    gs = [[m.components[i][j].shift(c) for j in range(n)] for i in range(n)]
    G0 = [[gs[i][j].coefficient((0,) * n) for j in range(n)] for i in range(n)]
    G0inv = rational_inverse(G0)
    N = [[gs[i][j] - G0[i][j] for j in range(n)] for i in range(n)]
    G0inv_p = [[Polynomial.constant(n, G0inv[i][j]) for j in range(n)] for i in range(n)]
    step = [[-p for p in row] for row in _poly_matmul(G0inv_p, N, D1)]  # -G0⁻¹ N
    term = G0inv_p
    ginv = G0inv_p
    for _ in range(D1):
        term = _poly_matmul(step, term, D1)
        if all(p.is_zero() for row in term for p in row):
            break
        ginv = [[ginv[i][j] + term[i][j] for j in range(n)] for i in range(n)]

    dg = [[[gs[i][j].partial(a + 1) for j in range(n)] for i in range(n)] for a in range(n)]
    low = {}
    for mm, i, j in product(range(n), repeat=3):
        if j < i:
            low[mm, i, j] = low[mm, j, i]
        else:
            low[mm, i, j] = (dg[i][j][mm] + dg[j][i][mm] - dg[mm][i][j]).scale(Fraction(1, 2))
    gamma = {}
    for k, i, j in product(range(n), repeat=3):
        if j < i:
            gamma[k, i, j] = gamma[k, j, i]
            continue
        acc = Polynomial.zero(n)
        for mm in range(n):
            if not low[mm, i, j].is_zero():
                acc = acc + ginv[k][mm].mul_truncated(low[mm, i, j], D1)
        gamma[k, i, j] = acc

    R = [[Polynomial.zero(n) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            acc = Polynomial.zero(n)
            for t in range(n):
                acc = acc + gamma[t, i, j].partial(t + 1) - gamma[t, i, t].partial(j + 1)
            if use_full:
                for mm in range(n):
                    for t in range(n):
                        acc = acc + gamma[t, t, mm].mul_truncated(gamma[mm, i, j], degree)
                        acc = acc - gamma[t, j, mm].mul_truncated(gamma[mm, i, t], degree)
            acc = acc.truncate(degree)
            R[i][j] = R[j][i] = acc.shift(tuple(-v for v in c))
    return R


def ricci_flow_polynomial(m: MetricField, center: Sequence, degree: int, use_full: bool = True) -> MetricField:
    """``P_ij``: Taylor polynomial of ``-2 R_ij`` about ``center`` as a (non-metric) symmetric field."""
    R = ricci_taylor_polynomials(m, center, degree, use_full)
    return MetricField([[p.scale(-2) for p in row] for row in R])


def _scaled_sum(m: MetricField, P: MetricField, tau: Fraction) -> MetricField:
    n = m.n
    return MetricField([[m.components[i][j] + P.components[i][j].scale(tau) for j in range(n)] for i in range(n)])


def flowed_metric(m: MetricField, tau, center: Sequence, truncation_degree: int = 3, *, use_full: bool = True) -> MetricField:
    """Linearized Ricci flow at time ``tau``: ``m + tau·P`` with ``P ≈ -2 Ric`` near ``center``."""
    tau = as_rational(tau)
    if tau == 0:
        return m
    P = ricci_flow_polynomial(m, center, truncation_degree, use_full)
    out = _scaled_sum(m, P, tau)
    if not out.is_positive_definite_at(center):
        raise SingularMetricError(f"flowed metric is not positive-definite at the center (tau={tau})")
    return out


def _gamma_of(m: MetricField, x) -> np.ndarray:
    return christoffel_at(jet_at(m, x, 1))


def delta_gamma_finite_difference_at(
    m: MetricField,
    x: Sequence,
    eps=None,
    truncation_degree: int = 1,
    *,
    eps_ladder: Sequence | None = None,
    use_full: bool = True,
    P: MetricField | None = None,
) -> DeltaGammaResult:
    """Oracle for ``δΓ``: central differences of ``Γ[m ± ε P]`` at ``x``, one Richardson step.

    For each ``ε`` in the ladder the Richardson value ``(4 D(ε/2) - D(ε)) / 3`` is
    formed; the value reported is the one from the smallest ``ε`` and the spread to
    the previous rung is recorded as ``error_estimate``.  Everything is exact
    rational arithmetic, so the only error is truncation in ``ε``.
    """
    x = make_point(x)
    if eps is not None:
        ladder = [as_rational(eps)]
    else:
        ladder = [as_rational(e) for e in (eps_ladder or DEFAULT_EPS_LADDER)]
    if any(e <= 0 for e in ladder):
        raise ValueError("eps must be positive")
    if P is None:
        P = ricci_flow_polynomial(m, x, truncation_degree, use_full)

    def central(e):
        plus, minus = _scaled_sum(m, P, e), _scaled_sum(m, P, -e)
        for g in (plus, minus):
            if not g.is_positive_definite_at(x):
                raise SingularMetricError(f"perturbed metric not positive-definite at x for eps={e}")
        return (_gamma_of(plus, x) - _gamma_of(minus, x)) / (2 * e)

    rungs = []
    raw = {}
    for e in ladder:
        d_e, d_half = central(e), central(e / 2)
        raw[e] = (d_e, d_half)
        rungs.append((4 * d_half - d_e) / 3)
    values = rungs[-1]
    err = 0.0
    if len(rungs) > 1:
        err = max(abs(float(v)) for v in (rungs[-1] - rungs[-2]).flat)
    n = m.n
    spec = {s + 1: values[s, 0, 0] for s in range(1, n)}
    meta = {
        "eps_ladder": [str(e) for e in ladder],
        "truncation_degree": truncation_degree,
        "error_estimate": err,
        "raw_central": raw,
    }
    return DeltaGammaResult(Method.FINITE_DIFFERENCE, values, spec, meta)


def tensor_transform_delta_gamma(values: np.ndarray, L) -> np.ndarray:
    """Express a (1,2)-tensor given in x-coordinates in the chart ``x = L·y``.

    ``T'^k_ij = (L⁻¹)^k_a T^a_bc L^b_i L^c_j``.
    """
    L = np.array([[as_rational(v) for v in row] for row in L], dtype=object)
    Linv = np.array(rational_inverse(L.tolist()), dtype=object)
    t = np.tensordot(Linv, values, axes=([1], [0]))  # [k, b, c]
    t = np.tensordot(t, L, axes=([1], [0]))  # [k, c, i]
    t = np.tensordot(t, L, axes=([1], [0]))  # [k, i, j]
    return t
