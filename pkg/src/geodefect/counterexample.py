"""The metric family with a free transverse third derivative, and the refutation experiment.

The curve under study is the ``x1``-axis and the base point is the origin.
The family is ``g = I + (A/2) x1² x^s`` on the ``(t, t)`` entry, so
``∂³g_tt/∂x1²∂x^s(0) = A`` while ``g_11`` and every ``g_1m`` stay constant;
the axis is therefore a geodesic for every ``A``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .flow import (
    DEFAULT_EPS_LADDER,
    Method,
    delta_gamma_covariant_at,
    delta_gamma_finite_difference_at,
    delta_gamma_nabla_ricci_at,
    flowed_metric,
    ricci_flow_variation_at,
    third_derivative_display_at,
)
from .geometry import MetricField, SingularMetricError, christoffel_at, curvature_at, jet_at
from .geodesic import axis_residual
from .scalarfield import Polynomial, as_rational, format_rational

ORACLE_TOLERANCE = 1e-6
DEFAULT_TAUS = (Fraction(1, 1000), Fraction(3, 1000), Fraction(1, 100))
DEFAULT_AXIS_SAMPLES = (Fraction(-1, 10), Fraction(-1, 20), Fraction(0), Fraction(1, 20), Fraction(1, 10))


class Verdict(str, enum.Enum):
    CONFIRMED = "counterexample_confirmed"
    INCONCLUSIVE = "inconclusive"
    INVALID = "construction_invalid"


class ConstructionError(ValueError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class FamilyParams:
    n: int = 3
    s: int = 2
    t: int = 3
    A: Fraction = Fraction(1)
    extra_perturbations: tuple = ()  # ((i, j), Polynomial) with 1-based indices

    def __post_init__(self):
        object.__setattr__(self, "A", as_rational(self.A))
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.s == 1 or not 2 <= self.s <= self.n:
            raise ValueError("s must satisfy s != 1 and 2 <= s <= n")
        if self.t in (1, self.s) or not 1 <= self.t <= self.n:
            raise ValueError("t must satisfy t not in {1, s} and 1 <= t <= n")
        for (i, j), p in self.extra_perturbations:
            if not (1 <= i <= self.n and 1 <= j <= self.n) or p.dim != self.n:
                raise ValueError(f"extra perturbation ({i},{j}) does not fit dimension {self.n}")

    def with_amplitude(self, A) -> "FamilyParams":
        return FamilyParams(self.n, self.s, self.t, as_rational(A), self.extra_perturbations)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "t": self.t,
            "A": format_rational(self.A),
            "extra_perturbations": [
                {"i": i, "j": j, "terms": p.to_records()} for (i, j), p in self.extra_perturbations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FamilyParams":
        n = int(d["n"])
        extras = tuple(
            ((int(e["i"]), int(e["j"])), Polynomial.from_records(n, e["terms"]))
            for e in d.get("extra_perturbations", [])
        )
        return cls(n, int(d["s"]), int(d["t"]), as_rational(d["A"]), extras)


@dataclass(frozen=True)
class AxisCertificate:
    """``Γ_m11 = ½(2∂_1 g_1m - ∂_m g_11)`` restricted to the axis, one per ``m``.

    Since ``g`` is invertible, ``Γ^k_11 ≡ 0`` on the axis iff all of these vanish.
    """

    polynomials: tuple

    @property
    def passed(self) -> bool:
        return all(p.is_zero() for p in self.polynomials)

    def offending(self) -> dict:
        return {m + 1: str(p) for m, p in enumerate(self.polynomials) if not p.is_zero()}


def verify_axis_geodesic(m: MetricField) -> AxisCertificate:
    n = m.n
    off_axis = {a: 0 for a in range(2, n + 1)}
    polys = []
    for mm in range(n):
        low = m.components[0][mm].partial(1).scale(2) - m.components[0][0].partial(mm + 1)
        polys.append(low.scale(Fraction(1, 2)).restrict(off_axis))
    return AxisCertificate(tuple(polys))


def family_perturbation(p: FamilyParams) -> Polynomial:
    exps = [0] * p.n
    exps[0] = 2
    exps[p.s - 1] += 1
    return Polynomial.monomial(p.n, exps, p.A / 2)


def build_family_metric(p: FamilyParams) -> MetricField:
    pert = {(p.t, p.t): family_perturbation(p)}
    for (i, j), poly in p.extra_perturbations:
        key = (min(i, j), max(i, j))
        pert[key] = pert[key] + poly if key in pert else poly
    m = MetricField.from_perturbation(p.n, pert)
    origin = (Fraction(0),) * p.n
    if not m.is_positive_definite_at(origin):
        raise ConstructionError("family metric not positive-definite at the origin")
    cert = verify_axis_geodesic(m)
    if not cert.passed:
        raise ConstructionError(
            "extra perturbation breaks the axis geodesic: Γ_m11 on axis = " + repr(cert.offending()),
            cert,
        )
    return m


@dataclass
class ExperimentReport:
    params: dict
    gamma_s11_before: Fraction | None = None
    delta_gamma_by_method: dict = field(default_factory=dict)
    display_value_verbatim: Fraction | None = None
    display_value_corrected: Fraction | None = None
    display_value_verbatim_restricted: Fraction | None = None
    display_value_corrected_restricted: Fraction | None = None
    display_ratio: Fraction | None = None
    oracle_relative_error: float | None = None
    residual_after_flow: dict = field(default_factory=dict)
    ricci_linear_symmetric: bool | None = None
    verdict: Verdict = Verdict.INCONCLUSIVE
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def q(v):
            return None if v is None else format_rational(v)

        return {
            "params": self.params,
            "gamma_s11_before": q(self.gamma_s11_before),
            "delta_gamma_by_method": {k: q(v) for k, v in sorted(self.delta_gamma_by_method.items())},
            "display_value_verbatim": q(self.display_value_verbatim),
            "display_value_corrected": q(self.display_value_corrected),
            "display_value_verbatim_restricted": q(self.display_value_verbatim_restricted),
            "display_value_corrected_restricted": q(self.display_value_corrected_restricted),
            "display_ratio": q(self.display_ratio),
            "oracle_relative_error": self.oracle_relative_error,
            "residual_after_flow": {
                tau: {
                    "x1": [q(v) for v in entry["x1"]],
                    "residuals": [[q(c) for c in vec] for vec in entry["residuals"]],
                    "max_abs": q(entry["max_abs"]),
                    "origin_component_s": q(entry["origin_component_s"]),
                }
                for tau, entry in self.residual_after_flow.items()
            },
            "ricci_linear_symmetric": self.ricci_linear_symmetric,
            "verdict": self.verdict.value,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        def q(v):
            return None if v is None else as_rational(v)

        return cls(
            params=d["params"],
            gamma_s11_before=q(d["gamma_s11_before"]),
            delta_gamma_by_method={k: q(v) for k, v in d["delta_gamma_by_method"].items()},
            display_value_verbatim=q(d["display_value_verbatim"]),
            display_value_corrected=q(d["display_value_corrected"]),
            display_value_verbatim_restricted=q(d["display_value_verbatim_restricted"]),
            display_value_corrected_restricted=q(d["display_value_corrected_restricted"]),
            display_ratio=q(d["display_ratio"]),
            oracle_relative_error=d["oracle_relative_error"],
            residual_after_flow={
                tau: {
                    "x1": [q(v) for v in e["x1"]],
                    "residuals": [tuple(q(c) for c in vec) for vec in e["residuals"]],
                    "max_abs": q(e["max_abs"]),
                    "origin_component_s": q(e["origin_component_s"]),
                }
                for tau, e in d["residual_after_flow"].items()
            },
            ricci_linear_symmetric=d["ricci_linear_symmetric"],
            verdict=Verdict(d["verdict"]),
            diagnostics=list(d["diagnostics"]),
        )

    def __eq__(self, other):
        return isinstance(other, ExperimentReport) and self.to_dict() == other.to_dict()


def relative_error(approx, exact) -> float:
    """Normwise ``max|approx - exact| / max|exact|``; 0 when both vanish."""
    approx = [approx] if not hasattr(approx, "__iter__") else list(approx)
    exact = [exact] if not hasattr(exact, "__iter__") else list(exact)
    diff = max((abs(a - b) for a, b in zip(approx, exact)), default=0)
    scale = max((abs(b) for b in exact), default=0)
    if diff == 0:
        return 0.0
    if scale == 0:
        return float("inf")
    return float(Fraction(diff) / Fraction(scale))


def run_experiment(
    p: FamilyParams,
    taus: Sequence = DEFAULT_TAUS,
    eps_ladder: Sequence = DEFAULT_EPS_LADDER,
    truncation_degree: int = 3,
    axis_samples: Sequence = DEFAULT_AXIS_SAMPLES,
) -> ExperimentReport:
    report = ExperimentReport(params=p.to_dict())
    report.params["taus"] = [format_rational(as_rational(t)) for t in taus]
    report.params["eps_ladder"] = [format_rational(as_rational(e)) for e in eps_ladder]
    report.params["truncation_degree"] = truncation_degree
    diag = report.diagnostics
    s = p.s
    try:
        m = build_family_metric(p)
    except ConstructionError as exc:
        report.verdict = Verdict.INVALID
        diag.append(f"construction failed: {exc}")
        return report
    diag.append("axis geodesic certificate: all Γ_m11 vanish identically on the x1-axis")

    origin = (Fraction(0),) * p.n
    jet = jet_at(m, origin, 3)
    gamma = christoffel_at(jet)
    report.gamma_s11_before = gamma[s - 1, 0, 0]
    report.ricci_linear_symmetric = curvature_at(jet).ricci_linear_symmetric

    var_full = ricci_flow_variation_at(jet, use_full=True)
    var_lin = ricci_flow_variation_at(jet, use_full=False)
    cov = delta_gamma_covariant_at(jet, var_full).specialized[s]
    cov_lin = delta_gamma_covariant_at(jet, var_lin).specialized[s]
    nab = delta_gamma_nabla_ricci_at(jet, use_full=True).specialized[s]
    nab_lin = delta_gamma_nabla_ricci_at(jet, use_full=False).specialized[s]
    fd = delta_gamma_finite_difference_at(m, origin, eps_ladder=eps_ladder, truncation_degree=truncation_degree)
    disp = third_derivative_display_at(jet, s)
    report.delta_gamma_by_method = {
        Method.COVARIANT.value: cov,
        Method.NABLA_RICCI.value: nab,
        Method.FINITE_DIFFERENCE.value: fd.specialized[s],
        Method.COVARIANT.value + "_linear_ricci": cov_lin,
        Method.NABLA_RICCI.value + "_linear_ricci": nab_lin,
    }
    report.display_value_verbatim = disp.verbatim
    report.display_value_corrected = disp.corrected
    report.display_value_verbatim_restricted = disp.verbatim_restricted
    report.display_value_corrected_restricted = disp.corrected_restricted
    report.display_ratio = disp.verbatim / cov if cov else None
    report.oracle_relative_error = relative_error(fd.specialized[s], cov)

    for tau in taus:
        tau = as_rational(tau)
        try:
            fm = flowed_metric(m, tau, origin, truncation_degree)
        except SingularMetricError as exc:
            diag.append(f"tau={tau}: {exc}")
            continue
        res = axis_residual(fm, axis_samples)
        origin_idx = [as_rational(v) for v in axis_samples].index(0) if 0 in axis_samples else None
        report.residual_after_flow[format_rational(tau)] = {
            "x1": [as_rational(v) for v in axis_samples],
            "residuals": res,
            "max_abs": max((abs(c) for vec in res for c in vec), default=Fraction(0)),
            "origin_component_s": None if origin_idx is None else res[origin_idx][s - 1],
        }

    exact_routes = [cov, nab]
    if report.gamma_s11_before != 0:
        report.verdict = Verdict.INVALID
        diag.append("Γ^s_11 at the base point is nonzero before the flow: the axis is not a geodesic")
    elif all(v == 0 for v in exact_routes):
        report.verdict = Verdict.INCONCLUSIVE
        diag.append("all variations vanish: the flat fixed point is not a counterexample")
    elif len(set(exact_routes)) != 1:
        report.verdict = Verdict.INCONCLUSIVE
        diag.append("exact routes disagree")
    elif report.oracle_relative_error > ORACLE_TOLERANCE:
        report.verdict = Verdict.INCONCLUSIVE
        diag.append(f"finite-difference oracle disagrees (relative error {report.oracle_relative_error:.3e})")
    else:
        report.verdict = Verdict.CONFIRMED
        diag.append(
            f"δΓ^{s}_11(0) = {cov} != 0 while Γ^{s}_11 = 0 before the flow: the axis stops being a geodesic"
        )
    if report.display_ratio is not None:
        diag.append(f"third-derivative display / exact δΓ = {report.display_ratio}")
    return report


@dataclass
class SweepTable:
    rows: list
    slope_full: Fraction
    slope_linear: Fraction
    deviation_full: Fraction
    deviation_linear: Fraction

    def to_dict(self) -> dict:
        f = format_rational
        return {
            "rows": self.rows,
            "slope_full": f(self.slope_full),
            "slope_linear": f(self.slope_linear),
            "max_deviation_full": f(self.deviation_full),
            "max_deviation_linear": f(self.deviation_linear),
        }


def _ls_slope(xs, ys):
    # least squares through the origin, exact
    den = sum(x * x for x in xs)
    if den == 0:
        return Fraction(0)
    return sum(x * y for x, y in zip(xs, ys)) / den


def sweep(A_values: Iterable, template: FamilyParams, taus: Sequence = (Fraction(1, 100),),
          eps_ladder: Sequence = DEFAULT_EPS_LADDER, truncation_degree: int = 3) -> SweepTable:
    values = sorted({as_rational(a) for a in A_values})
    if not values:
        raise ValueError("sweep needs at least one amplitude")
    rows, full, lin = [], [], []
    for A in values:
        r = run_experiment(template.with_amplitude(A), taus, eps_ladder, truncation_degree)
        if r.verdict == Verdict.INVALID:
            raise ConstructionError("; ".join(r.diagnostics))
        f_val = r.delta_gamma_by_method[Method.COVARIANT.value]
        l_val = r.delta_gamma_by_method[Method.COVARIANT.value + "_linear_ricci"]
        full.append(f_val)
        lin.append(l_val)
        rows.append(
            {
                "A": format_rational(A),
                "delta_gamma_full": format_rational(f_val),
                "delta_gamma_linear": format_rational(l_val),
                "finite_difference": format_rational(r.delta_gamma_by_method[Method.FINITE_DIFFERENCE.value]),
                "display_verbatim": format_rational(r.display_value_verbatim),
                "verdict": r.verdict.value,
            }
        )
    sf, sl = _ls_slope(values, full), _ls_slope(values, lin)
    dev_f = max(abs(y - sf * a) for a, y in zip(values, full))
    dev_l = max(abs(y - sl * a) for a, y in zip(values, lin))
    return SweepTable(rows, sf, sl, dev_f, dev_l)
