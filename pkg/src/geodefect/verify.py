"""Randomized oracle battery: finite differences, tensoriality, truncation scaling.

All randomness comes from :class:`random.Random` seeded per trial, so every
verdict is reproducible bit-for-bit.
"""
from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .counterexample import FamilyParams, build_family_metric, relative_error
from .flow import (
    delta_gamma_covariant_at,
    delta_gamma_finite_difference_at,
    delta_gamma_nabla_ricci_at,
    ricci_flow_variation_at,
    tensor_transform_delta_gamma,
)
from .geometry import (
    MetricField,
    christoffel_at,
    christoffel_partials_at,
    jet_at,
    ricci_full_at,
    ricci_linear_at,
    ricci_partials_at,
)
from .scalarfield import Polynomial, as_rational, format_rational, rational_det

FD_STEP = Fraction(1, 10000)
GAMMA_TOLERANCE = 1e-8
RICCI_TOLERANCE = 1e-8
DELTA_GAMMA_TOLERANCE = 1e-6
SCALING_TOLERANCE = 0.2


@dataclass(frozen=True)
class RandomMetricSpec:
    n: int = 3
    max_degree: int = 3
    amplitude: Fraction = Fraction(1, 20)
    seed: int = 0
    normalize_at_origin: bool = True

    def __post_init__(self):
        object.__setattr__(self, "amplitude", as_rational(self.amplitude))
        if self.n < 1 or self.max_degree < 0:
            raise ValueError("need n >= 1 and max_degree >= 0")
        if self.amplitude < 0 or self.amplitude * self.n >= 1:
            raise ValueError("amplitude must satisfy 0 <= amplitude * n < 1 (diagonal dominance at the origin)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["amplitude"] = format_rational(self.amplitude)
        return d


@dataclass
class OracleVerdict:
    name: str
    max_relative_error: float
    tolerance: float
    passed: bool
    worst_case_input: dict
    trials: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_relative_error": self.max_relative_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "worst_case_input": self.worst_case_input,
            "trials": self.trials,
            "details": self.details,
        }


def _monomials(n: int, max_degree: int):
    for exps in product(range(max_degree + 1), repeat=n):
        if sum(exps) <= max_degree:
            yield exps


def random_metric(spec: RandomMetricSpec) -> MetricField:
    """Identity plus a random symmetric polynomial perturbation, deterministic in ``spec.seed``."""
    rng = random.Random(spec.seed)
    n = spec.n
    monos = sorted(_monomials(n, spec.max_degree))
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            terms = {}
            for e in monos:
                if spec.normalize_at_origin and sum(e) == 0:
                    continue
                if rng.random() < 0.5:
                    continue
                c = spec.amplitude * Fraction(rng.randint(-20, 20), 20)
                if c:
                    terms[e] = c
            p = Polynomial(n, terms) + int(i == j)
            comps[i][j] = comps[j][i] = p
    return MetricField(comps)


def _trial_spec(spec: RandomMetricSpec, k: int, dims: Sequence[int] | None) -> RandomMetricSpec:
    n = dims[k % len(dims)] if dims else spec.n
    amp = min(spec.amplitude, Fraction(1, n + 1) - Fraction(1, 1000))
    return RandomMetricSpec(n, spec.max_degree, amp, spec.seed * 1000003 + k, spec.normalize_at_origin)


def _random_point(spec: RandomMetricSpec) -> tuple:
    rng = random.Random(spec.seed ^ 0x5EED)
    return tuple(Fraction(rng.randint(-5, 5), 20) for _ in range(spec.n))


def _richardson_partial(f, x, axis: int, h: Fraction = FD_STEP):
    """Central difference of ``f`` along ``axis`` with one Richardson step, exact."""

    def central(step):
        plus = list(x)
        minus = list(x)
        plus[axis] += step
        minus[axis] -= step
        return (f(tuple(plus)) - f(tuple(minus))) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def _fd_gamma(m: MetricField, x) -> float:
    exact = christoffel_partials_at(jet_at(m, x, 2))
    approx = np.array(
        [_richardson_partial(lambda y: christoffel_at(jet_at(m, y, 1)), x, a) for a in range(m.n)],
        dtype=object,
    )
    return relative_error(approx.flat, exact.flat)


def _fd_ricci(m: MetricField, x) -> float:
    exact = ricci_partials_at(jet_at(m, x, 3), use_full=True)
    approx = np.array(
        [_richardson_partial(lambda y: ricci_full_at(jet_at(m, y, 2)), x, a) for a in range(m.n)],
        dtype=object,
    )
    return relative_error(approx.flat, exact.flat)


def _fd_delta_gamma(m: MetricField, x) -> float:
    jet = jet_at(m, x, 3)
    exact = delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet)).values
    approx = delta_gamma_finite_difference_at(m, x).values
    return relative_error(approx.flat, exact.flat)


_FD_QUANTITIES = {"gamma": (_fd_gamma, GAMMA_TOLERANCE), "ricci": (_fd_ricci, RICCI_TOLERANCE),
                  "delta_gamma": (_fd_delta_gamma, DELTA_GAMMA_TOLERANCE)}


def fd_check(quantity: str, spec: RandomMetricSpec, trials: int, dims: Sequence[int] | None = None,
             metric: MetricField | None = None) -> OracleVerdict:
    """Compare exact derivatives/variations with Richardson-extrapolated central differences.

    ``gamma`` and ``ricci`` are checked at a random point near the origin,
    ``delta_gamma`` at the origin.  ``metric`` overrides the random metric
    (every trial then uses it).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check, tol = _FD_QUANTITIES[quantity]
    worst, worst_input = 0.0, {}
    for k in range(trials):
        ts = _trial_spec(spec, k, dims)
        m = metric if metric is not None else random_metric(ts)
        x = (Fraction(0),) * m.n if quantity == "delta_gamma" else _random_point(ts)
        err = check(m, x)
        if err > worst or not worst_input:
            worst = max(worst, err)
            worst_input = {"spec": ts.to_dict(), "point": [format_rational(v) for v in x]}
    return OracleVerdict(f"fd_{quantity}", worst, tol, worst <= tol, worst_input, trials)


def random_linear_change(rng: random.Random, n: int) -> list:
    """Rational matrix with entries in [-2, 2] (quarter steps) and ``|det| >= 1/4``."""
    while True:
        L = [[Fraction(rng.randint(-8, 8), 4) for _ in range(n)] for _ in range(n)]
        if abs(rational_det(L)) >= Fraction(1, 4):
            return L


def _delta_gamma_values(m: MetricField, x) -> np.ndarray:
    jet = jet_at(m, x, 3)
    return delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet)).values


def tensoriality_check(spec: RandomMetricSpec, trials: int, metric: MetricField | None = None,
                       changes: Sequence | None = None) -> OracleVerdict:
    """Pull the metric back by ``x = L y`` and compare ``δΓ`` in both charts, exactly.

    Linear changes keep the origin fixed, so both computations happen at the origin.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m = metric if metric is not None else random_metric(spec)
    n = m.n
    origin = (Fraction(0),) * n
    base = _delta_gamma_values(m, origin)
    rng = random.Random(spec.seed)
    worst, worst_input, mismatches = 0.0, {}, 0
    for k in range(trials):
        L = changes[k] if changes is not None and k < len(changes) else random_linear_change(rng, n)
        pulled = _delta_gamma_values(m.pullback_linear(L), origin)
        expected = tensor_transform_delta_gamma(base, L)
        if not np.array_equal(pulled, expected):
            mismatches += 1
            err = relative_error(pulled.flat, expected.flat)
            if err >= worst:
                worst = err
                worst_input = {"spec": spec.to_dict(), "L": [[format_rational(v) for v in row] for row in L]}
    if not worst_input:
        worst_input = {"spec": spec.to_dict()}
    return OracleVerdict("tensoriality", worst, 0.0, mismatches == 0, worst_input, trials,
                         {"exact_mismatches": mismatches})


DEFAULT_SCALING_POINTS = (
    (Fraction(1, 4), Fraction(1, 4), Fraction(1, 4)),
    (Fraction(1, 2), Fraction(-1, 3), Fraction(1, 5)),
    (Fraction(-1, 3), Fraction(1, 2), Fraction(0)),
    (Fraction(1, 5), Fraction(1, 5), Fraction(-1, 2)),
)


def ricci_truncation_gap(m: MetricField, x) -> Fraction:
    jet = jet_at(m, x, 2)
    diff = ricci_full_at(jet) - ricci_linear_at(jet)
    return max(abs(v) for v in diff.flat)


def truncation_scaling_check(p: FamilyParams, points: Sequence | None = None) -> OracleVerdict:
    """``‖Ric - Ric_linear‖`` must drop by a factor 4 ± 20% when ``A`` halves."""
    n = p.n
    pts = [tuple(pt[:n]) + (Fraction(0),) * (n - len(pt)) for pt in (points or DEFAULT_SCALING_POINTS)]
    origin = (Fraction(0),) * n
    m_full = build_family_metric(p)
    m_half = build_family_metric(p.with_amplitude(p.A / 2))
    origin_gap = ricci_truncation_gap(m_full, origin)
    details = {"origin_gap": format_rational(origin_gap), "ratios": []}
    if p.A == 0:
        gaps = [ricci_truncation_gap(m_full, x) for x in pts]
        ok = all(g == 0 for g in gaps) and origin_gap == 0
        return OracleVerdict("truncation_scaling", 0.0, SCALING_TOLERANCE, ok, {"params": p.to_dict()}, len(pts), details)
    worst, worst_input = 0.0, {}
    for x in pts:
        g1, g2 = ricci_truncation_gap(m_full, x), ricci_truncation_gap(m_half, x)
        if g2 == 0:
            ratio = float("inf") if g1 else 4.0
        else:
            ratio = float(g1 / g2)
        details["ratios"].append(ratio)
        err = abs(ratio / 4 - 1)
        if err >= worst:
            worst = err
            worst_input = {"params": p.to_dict(), "point": [format_rational(v) for v in x]}
    passed = worst <= SCALING_TOLERANCE and origin_gap == 0
    return OracleVerdict("truncation_scaling", worst, SCALING_TOLERANCE, passed, worst_input, len(pts), details)


def exact_route_check(spec: RandomMetricSpec, trials: int, dims: Sequence[int] | None = None) -> OracleVerdict:
    """Covariant and ``∇R`` routes must agree exactly on identity-normalized metrics."""
    mismatches, worst_input = 0, {}
    for k in range(trials):
        ts = _trial_spec(spec, k, dims)
        m = random_metric(ts)
        jet = jet_at(m, (Fraction(0),) * m.n, 3)
        cov = delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet)).specialized
        nab = delta_gamma_nabla_ricci_at(jet).specialized
        if cov != nab:
            mismatches += 1
            worst_input = {"spec": ts.to_dict()}
    return OracleVerdict("exact_routes", float(mismatches), 0.0, mismatches == 0, worst_input, trials)


def run_battery(seed: int = 0, trials: int = 50, tensor_trials: int = 20) -> list[OracleVerdict]:
    """Everything the ``check`` subcommand runs."""
    spec = RandomMetricSpec(n=3, max_degree=3, amplitude=Fraction(1, 10), seed=seed)
    dims = (2, 3, 4)
    family = build_family_metric(FamilyParams())
    verdicts = [
        fd_check("gamma", spec, trials, dims),
        fd_check("ricci", spec, trials, dims),
        fd_check("delta_gamma", spec, trials, dims),
        exact_route_check(spec, trials, dims),
        tensoriality_check(RandomMetricSpec(3, 3, Fraction(1, 10), seed), tensor_trials),
        tensoriality_check(RandomMetricSpec(3, 3, Fraction(1, 10), seed + 1), tensor_trials, metric=family),
        truncation_scaling_check(FamilyParams()),
    ]
    verdicts[5].name = "tensoriality_family"
    return verdicts
