"""Pointwise curvature calculus for polynomial metrics.

Everything here is exact.  The inverse metric is never formed as a field;
only its value and first two partials at the evaluation point are computed,
from the identities

    ∂_a g⁻¹ = -g⁻¹ (∂_a g) g⁻¹
    ∂_a ∂_b g⁻¹ = g⁻¹ ∂_a g g⁻¹ ∂_b g g⁻¹ + g⁻¹ ∂_b g g⁻¹ ∂_a g g⁻¹ - g⁻¹ ∂_a ∂_b g g⁻¹

Array layout (all 0-based numpy object arrays of Fractions):

- ``dg[a, i, j] = ∂_a g_ij``, ``d2g[a, b, i, j]``, ``d3g[a, b, c, i, j]``
- ``gamma[k, i, j] = Γ^k_ij`` (upper index first)
- ``dgamma[a, k, i, j] = ∂_a Γ^k_ij``
- ``dricci[a, i, j] = ∂_a R_ij``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from .scalarfield import (
    DimensionError,
    Polynomial,
    as_rational,
    leading_minors,
    make_point,
    rational_inverse,
)

ZERO = Fraction(0)


class SingularMetricError(ValueError):
    """Metric is not positive-definite at the requested point."""


def zeros(shape) -> np.ndarray:
    return np.full(shape, ZERO, dtype=object)


def _dot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # object-dtype matmul keeps Fractions exact
    return np.dot(A, B)


class MetricField:
    """Symmetric matrix of polynomials ``g_ij(x)``."""

    def __init__(self, components: Sequence[Sequence[Polynomial]], base_point: Sequence | None = None):
        n = len(components)
        if n == 0 or any(len(row) != n for row in components):
            raise DimensionError("metric components must form a square matrix")
        dims = {p.dim for row in components for p in row}
        if dims != {n}:
            raise DimensionError(f"component polynomials must all have dimension {n}")
        for i in range(n):
            for j in range(i + 1, n):
                if components[i][j] != components[j][i]:
                    raise ValueError(f"metric not symmetric: g[{i + 1},{j + 1}] != g[{j + 1},{i + 1}]")
        self.n = n
        self.components = tuple(tuple(row) for row in components)
        if base_point is not None:
            self.check_positive_definite(base_point)

    @classmethod
    def identity(cls, n: int) -> "MetricField":
        return cls([[Polynomial.constant(n, int(i == j)) for j in range(n)] for i in range(n)])

    @classmethod
    def from_perturbation(cls, n: int, perturbation: dict) -> "MetricField":
        """Identity plus ``{(i, j): poly}`` with 1-based indices, symmetrized."""
        comps = [[Polynomial.constant(n, int(i == j)) for j in range(n)] for i in range(n)]
        for (i, j), p in perturbation.items():
            comps[i - 1][j - 1] = comps[i - 1][j - 1] + p
            if i != j:
                comps[j - 1][i - 1] = comps[j - 1][i - 1] + p
        return cls(comps)

    def __getitem__(self, ij) -> Polynomial:
        i, j = ij
        return self.components[i][j]

    def __eq__(self, other):
        return isinstance(other, MetricField) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __add__(self, other: "MetricField") -> "MetricField":
        if other.n != self.n:
            raise DimensionError("metric dimension mismatch")
        return MetricField(
            [[self.components[i][j] + other.components[i][j] for j in range(self.n)] for i in range(self.n)]
        )

    def value_at(self, x) -> np.ndarray:
        x = make_point(x)
        out = zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                out[i, j] = out[j, i] = self.components[i][j].eval(x)
        return out

    def is_positive_definite_at(self, x) -> bool:
        return all(m > 0 for m in leading_minors(self.value_at(x).tolist()))

    def check_positive_definite(self, x) -> None:
        if not self.is_positive_definite_at(x):
            raise SingularMetricError(f"metric not positive-definite at {tuple(map(str, make_point(x)))}")

    def is_identity_at(self, x) -> bool:
        g = self.value_at(x)
        return all(g[i, j] == int(i == j) for i in range(self.n) for j in range(self.n))

    def is_constant(self) -> bool:
        return all(p.degree() <= 0 for row in self.components for p in row)

    def max_degree(self) -> int:
        return max(p.degree() for row in self.components for p in row)

    def pullback_linear(self, L) -> "MetricField":
        """Metric in the chart ``x = L·y``: ``g'_ij(y) = L_ai L_bj g_ab(L y)``."""
        L = [[as_rational(v) for v in row] for row in L]
        n = self.n
        composed = [[self.components[a][b].compose_linear(L) for b in range(n)] for a in range(n)]
        comps = [[Polynomial.zero(n) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                acc = Polynomial.zero(n)
                for a in range(n):
                    for b in range(n):
                        c = L[a][i] * L[b][j]
                        if c:
                            acc = acc + composed[a][b].scale(c)
                comps[i][j] = comps[j][i] = acc
        return MetricField(comps)

    @cached_property
    def _derivative_cache(self) -> dict:
        return {}

    def derivative_poly(self, axes: tuple, i: int, j: int) -> Polynomial:
        """``∂_axes g_ij`` as a polynomial, axes 0-based and sorted for caching."""
        if i > j:
            i, j = j, i
        key = (tuple(sorted(axes)), i, j)
        cache = self._derivative_cache
        if key not in cache:
            if not key[0]:
                cache[key] = self.components[i][j]
            else:
                head = key[0][:-1]
                cache[key] = self.derivative_poly(head, i, j).partial(key[0][-1] + 1)
        return cache[key]

    def to_records(self) -> dict:
        return {
            "dimension": self.n,
            "components": [
                {"i": i + 1, "j": j + 1, "terms": self.components[i][j].to_records()}
                for i in range(self.n)
                for j in range(i, self.n)
            ],
        }

    @classmethod
    def from_records(cls, data: dict) -> "MetricField":
        n = int(data["dimension"])
        comps = [[Polynomial.zero(n) for _ in range(n)] for _ in range(n)]
        for rec in data["components"]:
            i, j = int(rec["i"]) - 1, int(rec["j"]) - 1
            comps[i][j] = comps[j][i] = Polynomial.from_records(n, rec["terms"])
        return cls(comps)

    def __repr__(self):
        rows = "; ".join(
            f"g{i + 1}{j + 1}={self.components[i][j]}" for i in range(self.n) for j in range(i, self.n)
        )
        return f"MetricField(n={self.n}: {rows})"


@dataclass(frozen=True, eq=False)
class MetricJet:
    point: tuple
    order: int
    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray | None
    d3g: np.ndarray | None
    ginv: np.ndarray
    dginv: np.ndarray
    d2ginv: np.ndarray | None

    @property
    def n(self) -> int:
        return self.g.shape[0]


def jet_at(m: MetricField, x, order: int = 3) -> MetricJet:
    """Exact derivatives of ``m`` at ``x`` up to ``order``."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    x = make_point(x)
    if len(x) != m.n:
        raise DimensionError("point dimension mismatch")
    n = m.n
    g = m.value_at(x)
    if not all(v > 0 for v in leading_minors(g.tolist())):
        raise SingularMetricError(f"metric not positive-definite at {tuple(map(str, x))}")

    def fill(k):
        arr = zeros((n,) * k + (n, n))
        for axes in product(range(n), repeat=k):
            if list(axes) != sorted(axes):
                continue
            for i in range(n):
                for j in range(i, n):
                    v = m.derivative_poly(axes, i, j).eval(x)
                    if v:
                        for perm in set(_perms(axes)):
                            arr[perm + (i, j)] = v
                            arr[perm + (j, i)] = v
        return arr

    dg = fill(1)
    d2g = fill(2) if order >= 2 else None
    d3g = fill(3) if order >= 3 else None

    ginv = np.array(rational_inverse(g.tolist()), dtype=object)
    dginv = zeros((n, n, n))
    for a in range(n):
        dginv[a] = -_dot(_dot(ginv, dg[a]), ginv)
    d2ginv = None
    if order >= 3:
        # inverse partials are populated up to order - 1
        d2ginv = zeros((n, n, n, n))
        for a in range(n):
            for b in range(a, n):
                t1 = _dot(_dot(dginv[a], dg[b]), ginv)
                t2 = _dot(_dot(dginv[b], dg[a]), ginv)
                t3 = _dot(_dot(ginv, d2g[a, b]), ginv)
                d2ginv[a, b] = d2ginv[b, a] = -t1 - t2 - t3
    return MetricJet(x, order, g, dg, d2g, d3g, ginv, dginv, d2ginv)


def _perms(axes):
    from itertools import permutations

    return permutations(axes)


# -- Christoffel symbols --------------------------------------------------


def christoffel_lowered_at(jet: MetricJet) -> np.ndarray:
    """``Γ_mij = ½(∂_i g_jm + ∂_j g_im - ∂_m g_ij)`` indexed ``[m, i, j]``."""
    n, dg = jet.n, jet.dg
    out = zeros((n, n, n))
    for m, i, j in product(range(n), repeat=3):
        if j < i:
            out[m, i, j] = out[m, j, i]
            continue
        out[m, i, j] = (dg[i, j, m] + dg[j, i, m] - dg[m, i, j]) / 2
    return out


def _lowered_partials(jet: MetricJet) -> np.ndarray:
    n, d2g = jet.n, jet.d2g
    out = zeros((n, n, n, n))
    for a, m, i, j in product(range(n), repeat=4):
        out[a, m, i, j] = (d2g[a, i, j, m] + d2g[a, j, i, m] - d2g[a, m, i, j]) / 2
    return out


def _lowered_second_partials(jet: MetricJet) -> np.ndarray:
    n, d3g = jet.n, jet.d3g
    out = zeros((n, n, n, n, n))
    for a, b, m, i, j in product(range(n), repeat=5):
        if b < a:
            out[a, b, m, i, j] = out[b, a, m, i, j]
            continue
        out[a, b, m, i, j] = (d3g[a, b, i, j, m] + d3g[a, b, j, i, m] - d3g[a, b, m, i, j]) / 2
    return out


def _raise(ginv: np.ndarray, low: np.ndarray) -> np.ndarray:
    # contract ginv[k, m] with low[m, i, j]
    return np.tensordot(ginv, low, axes=([1], [0]))


def christoffel_at(jet: MetricJet) -> np.ndarray:
    """``Γ^k_ij = ½ g^km (∂_i g_jm + ∂_j g_im - ∂_m g_ij)``."""
    return _raise(jet.ginv, christoffel_lowered_at(jet))


def christoffel_partials_at(jet: MetricJet) -> np.ndarray:
    """``∂_a Γ^k_ij`` from the product rule on ``g^km Γ_mij``."""
    if jet.order < 2:
        raise ValueError("christoffel partials need a jet of order >= 2")
    n = jet.n
    low = christoffel_lowered_at(jet)
    dlow = _lowered_partials(jet)
    out = zeros((n, n, n, n))
    for a in range(n):
        out[a] = _raise(jet.dginv[a], low) + _raise(jet.ginv, dlow[a])
    return out


def christoffel_second_partials_at(jet: MetricJet) -> np.ndarray:
    """``∂_a ∂_b Γ^k_ij`` indexed ``[a, b, k, i, j]``."""
    if jet.order < 3:
        raise ValueError("second christoffel partials need a jet of order 3")
    n = jet.n
    low = christoffel_lowered_at(jet)
    dlow = _lowered_partials(jet)
    d2low = _lowered_second_partials(jet)
    out = zeros((n, n, n, n, n))
    for a in range(n):
        for b in range(a, n):
            v = (
                _raise(jet.d2ginv[a, b], low)
                + _raise(jet.dginv[a], dlow[b])
                + _raise(jet.dginv[b], dlow[a])
                + _raise(jet.ginv, d2low[a, b])
            )
            out[a, b] = v
            out[b, a] = v
    return out


# -- Ricci tensor ---------------------------------------------------------


def _ricci_linear_from(dgamma: np.ndarray) -> np.ndarray:
    # R_ij = ∂_t Γ^t_ij - ∂_j Γ^t_it
    n = dgamma.shape[0]
    out = zeros((n, n))
    for i, j in product(range(n), repeat=2):
        out[i, j] = sum((dgamma[t, t, i, j] - dgamma[j, t, i, t] for t in range(n)), ZERO)
    return out


def _ricci_quadratic_from(gamma: np.ndarray) -> np.ndarray:
    # Γ^t_tm Γ^m_ij - Γ^t_jm Γ^m_it
    n = gamma.shape[0]
    trace = [sum((gamma[t, t, m] for t in range(n)), ZERO) for m in range(n)]
    out = zeros((n, n))
    for i, j in product(range(n), repeat=2):
        acc = ZERO
        for m in range(n):
            acc += trace[m] * gamma[m, i, j]
            for t in range(n):
                acc -= gamma[t, j, m] * gamma[m, i, t]
        out[i, j] = acc
    return out


def ricci_linear_at(jet: MetricJet) -> np.ndarray:
    """Ricci tensor without the quadratic Christoffel terms."""
    return _ricci_linear_from(christoffel_partials_at(jet))


def ricci_full_at(jet: MetricJet) -> np.ndarray:
    gamma = christoffel_at(jet)
    return _ricci_linear_from(christoffel_partials_at(jet)) + _ricci_quadratic_from(gamma)


def ricci_partials_at(jet: MetricJet, use_full: bool = True) -> np.ndarray:
    """``∂_a R_ij`` indexed ``[a, i, j]``, of the full or the truncated Ricci tensor."""
    if jet.order < 3:
        raise ValueError("ricci partials need a jet of order 3")
    n = jet.n
    d2gamma = christoffel_second_partials_at(jet)
    out = zeros((n, n, n))
    for a in range(n):
        out[a] = _ricci_linear_from(d2gamma[a])
    if use_full:
        gamma = christoffel_at(jet)
        dgamma = christoffel_partials_at(jet)
        for a in range(n):
            # product rule on Γ^t_tm Γ^m_ij - Γ^t_jm Γ^m_it
            for i, j in product(range(n), repeat=2):
                acc = ZERO
                for m in range(n):
                    for t in range(n):
                        acc += dgamma[a, t, t, m] * gamma[m, i, j] + gamma[t, t, m] * dgamma[a, m, i, j]
                        acc -= dgamma[a, t, j, m] * gamma[m, i, t] + gamma[t, j, m] * dgamma[a, m, i, t]
                out[a, i, j] += acc
    return out


def covariant_derivative_sym2_at(
    jet: MetricJet, h: np.ndarray, dh: np.ndarray, a: int, gamma: np.ndarray | None = None
) -> np.ndarray:
    """``∇_a h_ij = ∂_a h_ij - Γ^m_ai h_mj - Γ^m_aj h_im`` for a symmetric 2-tensor.

    ``h`` holds the values at the jet's point and ``dh[b, i, j] = ∂_b h_ij``.
    ``a`` is a 0-based axis.
    """
    h = np.asarray(h, dtype=object)
    n = jet.n
    if any(h[i, j] != h[j, i] for i in range(n) for j in range(n)):
        raise ValueError("covariant_derivative_sym2_at expects a symmetric tensor")
    if gamma is None:
        gamma = christoffel_at(jet)
    out = zeros((n, n))
    for i, j in product(range(n), repeat=2):
        acc = dh[a, i, j]
        for m in range(n):
            acc -= gamma[m, a, i] * h[m, j] + gamma[m, a, j] * h[i, m]
        out[i, j] = acc
    return out


def covariant_gradient_sym2_at(jet: MetricJet, h, dh, gamma=None) -> np.ndarray:
    """All of ``∇_a h_ij`` at once, indexed ``[a, i, j]``."""
    if gamma is None:
        gamma = christoffel_at(jet)
    return np.array([covariant_derivative_sym2_at(jet, h, dh, a, gamma) for a in range(jet.n)], dtype=object)


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    point: tuple
    gamma: np.ndarray
    dgamma: np.ndarray
    ricci_full: np.ndarray
    ricci_linear: np.ndarray
    dricci: np.ndarray | None = field(default=None)

    @property
    def ricci_linear_symmetric(self) -> bool:
        R = self.ricci_linear
        return bool(np.array_equal(R, R.T))


def curvature_at(jet: MetricJet) -> CurvatureBundle:
    gamma = christoffel_at(jet)
    dgamma = christoffel_partials_at(jet)
    lin = _ricci_linear_from(dgamma)
    full = lin + _ricci_quadratic_from(gamma)
    dricci = ricci_partials_at(jet, use_full=True) if jet.order >= 3 else None
    return CurvatureBundle(jet.point, gamma, dgamma, full, lin, dricci)


def is_all_zero(arr) -> bool:
    return all(v == 0 for v in np.asarray(arr, dtype=object).flat)
