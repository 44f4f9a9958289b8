"""Exit criteria, one test per criterion, tolerances pinned here."""
import subprocess
import sys
from fractions import Fraction as F

import numpy as np
import pytest

from geodefect.counterexample import FamilyParams, build_family_metric, relative_error, run_experiment
from geodefect.flow import (
    delta_gamma_covariant_at,
    delta_gamma_finite_difference_at,
    delta_gamma_nabla_ricci_at,
    flowed_metric,
    ricci_flow_variation_at,
    ricci_taylor_polynomials,
    third_derivative_display_at,
)
from geodefect.geodesic import axis_residual, integrate_geodesic, speeds
from geodefect.geometry import (
    MetricField,
    christoffel_at,
    covariant_gradient_sym2_at,
    curvature_at,
    is_all_zero,
    jet_at,
)
from geodefect.scalarfield import Polynomial
from geodefect.verify import (
    RandomMetricSpec,
    fd_check,
    random_metric,
    tensoriality_check,
    truncation_scaling_check,
)

from conftest import record_criterion

O3 = (F(0),) * 3
ORACLE_REL_TOL = 1e-6
RESIDUAL_REL_TOL = 0.05
GAMMA_FD_TOL = 1e-8
RICCI_FD_TOL = 1e-8
DELTA_GAMMA_FD_TOL = 1e-6
FD_TRIALS = 50
TENSOR_TRIALS = 20
CONVERGENCE_RATIO = (16 * 0.75, 16 * 1.25)
SPEED_TOL = 1e-8
SCALING_WINDOW = (3.2, 4.8)


def test_ac1_counterexample_confirmation():
    m = build_family_metric(FamilyParams(n=3, s=2, t=3, A=F(1)))
    jet = jet_at(m, O3, 3)
    before = christoffel_at(jet)[1, 0, 0]

    # independent first-order expansion: R_11 = -(1/2) x2, R_12 = -(1/2) x1 near the origin,
    # Γ(0) = 0, so ∇_2 R_11 - 2 ∇_1 R_12 = -1/2 + 1
    R = ricci_taylor_polynomials(m, O3, 1)
    assert R[0][0] == Polynomial.variable(3, 2).scale(F(-1, 2))
    assert R[0][1] == Polynomial.variable(3, 1).scale(F(-1, 2))
    expansion = R[0][0].partial(2).eval(O3) - 2 * R[0][1].partial(1).eval(O3)

    cov = delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet)).component(2, 1, 1)
    nab = delta_gamma_nabla_ricci_at(jet).specialized[2]
    fd = delta_gamma_finite_difference_at(m, O3).specialized[2]
    err = relative_error(fd, cov)
    ok = before == 0 and expansion == cov == nab == F(1, 2) and err <= ORACLE_REL_TOL
    record_criterion(
        "AC1 counterexample confirmation",
        ok,
        f"Gamma^2_11(0)={before}, expansion={expansion}, covariant={cov}, nabla_R={nab}, fd rel err={err:.2e}",
    )
    assert ok


def test_ac2_residual_growth():
    m = build_family_metric(FamilyParams())
    dg = F(1, 2)
    taus = [F(1, 1000), F(3, 1000), F(1, 100)]
    comps = []
    for tau in taus:
        fm = flowed_metric(m, tau, O3, 3)
        comps.append(axis_residual(fm, [F(0)])[0][1])
    rel = [abs(float(c) / float(tau * dg) - 1) for c, tau in zip(comps, taus)]
    slope, _ = np.polyfit([float(t) for t in taus], [float(c) for c in comps], 1)
    slope_err = abs(slope / float(dg) - 1)
    ok = max(rel) <= RESIDUAL_REL_TOL and slope_err <= RESIDUAL_REL_TOL
    record_criterion(
        "AC2 residual growth",
        ok,
        f"residuals={[float(c) for c in comps]}, max rel dev={max(rel):.2e}, slope={slope:.6g} (rel err {slope_err:.2e})",
    )
    assert ok


def test_ac3_third_derivative_display():
    ratios, values = [], []
    for A in (F(1, 2), F(1), F(2)):
        m = build_family_metric(FamilyParams(A=A))
        jet = jet_at(m, O3, 3)
        disp = third_derivative_display_at(jet, 2).verbatim
        exact_lin = delta_gamma_covariant_at(jet, ricci_flow_variation_at(jet, use_full=False)).component(2, 1, 1)
        values.append((A, disp, exact_lin))
        ratios.append(disp / exact_lin)
    report = run_experiment(FamilyParams(), taus=(F(1, 100),))
    shown = (
        report.display_value_verbatim is not None
        and report.delta_gamma_by_method.get("covariant_formula") is not None
        and report.display_ratio is not None
    )
    ok = (
        all(d == A for A, d, _ in values)
        and len(set(ratios)) == 1
        and all(d != 0 for _, d, _ in values)
        and shown
    )
    record_criterion("AC3 third-derivative display", ok, f"(A, display, exact)={[(str(a), str(d), str(e)) for a, d, e in values]}, ratio={ratios[0]}")
    assert ok


def test_ac4_oracle_battery():
    spec = RandomMetricSpec(n=3, max_degree=3, amplitude=F(1, 10), seed=2024)
    dims = (2, 3, 4)
    gamma = fd_check("gamma", spec, FD_TRIALS, dims)
    ricci = fd_check("ricci", spec, FD_TRIALS, dims)
    delta = fd_check("delta_gamma", spec, FD_TRIALS, dims)
    tens = tensoriality_check(spec, TENSOR_TRIALS)
    tens_family = tensoriality_check(spec, TENSOR_TRIALS, metric=build_family_metric(FamilyParams()))
    ok = (
        gamma.passed and gamma.tolerance == GAMMA_FD_TOL
        and ricci.passed and ricci.tolerance == RICCI_FD_TOL
        and delta.passed and delta.tolerance == DELTA_GAMMA_FD_TOL
        and tens.passed and tens_family.passed
    )
    record_criterion(
        "AC4 oracle battery",
        ok,
        f"gamma {gamma.max_relative_error:.1e}, ricci {ricci.max_relative_error:.1e}, delta_gamma {delta.max_relative_error:.1e} "
        f"over {FD_TRIALS} metrics; tensoriality exact mismatches {tens.details['exact_mismatches']}+{tens_family.details['exact_mismatches']} of {2 * TENSOR_TRIALS}",
    )
    assert ok


def test_ac5_structural_invariants():
    flat = MetricField.identity(3)
    jet = jet_at(flat, (F(1, 3), F(-2), F(5)), 3)
    b = curvature_at(jet)
    var = ricci_flow_variation_at(jet)
    dgam = delta_gamma_covariant_at(jet, var).values
    res = axis_residual(flowed_metric(flat, F(1, 100), O3, 3), [F(-1), F(0), F(1)])
    flat_ok = all(is_all_zero(a) for a in (b.gamma, b.ricci_full, b.dricci, var.dg_var, var.d_dg_var, dgam)) and all(
        all(c == 0 for c in v) for v in res
    )

    compat_ok = sym_ok = True
    for seed in range(10):
        m = random_metric(RandomMetricSpec(2 + seed % 3, 3, F(1, 10), seed))
        j = jet_at(m, (F(1, 9),) * m.n, 3)
        compat_ok &= is_all_zero(covariant_gradient_sym2_at(j, j.g, j.dg))
        c = curvature_at(j)
        sym_ok &= np.array_equal(c.gamma, np.swapaxes(c.gamma, 1, 2)) and np.array_equal(c.ricci_full, c.ricci_full.T)

    m = random_metric(RandomMetricSpec(3, 3, F(3, 10), 11))
    v0 = (1, F(1, 2), F(-1, 3))
    ref = integrate_geodesic(m, O3, v0, 1, 2560).positions()[-1]
    errs = [np.linalg.norm(integrate_geodesic(m, O3, v0, 1, s).positions()[-1] - ref) for s in (20, 40)]
    ratio = errs[0] / errs[1]
    conv_ok = CONVERGENCE_RATIO[0] <= ratio <= CONVERGENCE_RATIO[1]

    drift = 0.0
    for seed in range(3):
        mm = random_metric(RandomMetricSpec(3, 3, F(1, 10), seed))
        sp = speeds(mm, integrate_geodesic(mm, O3, (1, F(1, 3), 0), 1, 200))
        drift = max(drift, float(np.abs(sp - sp[0]).max() / sp[0]))
    ok = flat_ok and compat_ok and sym_ok and conv_ok and drift <= SPEED_TOL
    record_criterion(
        "AC5 structural invariants",
        ok,
        f"flat zero={flat_ok}, nabla g=0 {compat_ok}, symmetry {sym_ok}, RK4 ratio={ratio:.3f}, speed drift={drift:.1e}",
    )
    assert ok


def test_ac6_truncation_scaling():
    v = truncation_scaling_check(FamilyParams())
    ratios = v.details["ratios"]
    ok = all(SCALING_WINDOW[0] <= r <= SCALING_WINDOW[1] for r in ratios) and v.details["origin_gap"] == "0/1"
    record_criterion("AC6 truncation scaling", ok, f"ratios={[round(r, 4) for r in ratios]}, gap at x0={v.details['origin_gap']}")
    assert ok


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "geodefect.cli", *args], capture_output=True, check=False)


@pytest.mark.parametrize(
    "args",
    [
        ("experiment", "--format", "structured", "--seed", "7"),
        ("check", "--format", "structured", "--seed", "7", "--trials", "10", "--tensor-trials", "5"),
    ],
)
def test_ac7_determinism(args):
    a, b = _cli(*args), _cli(*args)
    ok = a.returncode == b.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    record_criterion(f"AC7 determinism ({args[0]})", ok, f"{len(a.stdout)} bytes, identical={a.stdout == b.stdout}")
    assert ok
