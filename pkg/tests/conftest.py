from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from geodefect.counterexample import FamilyParams, build_family_metric
from geodefect.scalarfield import Polynomial

F = Fraction


@pytest.fixture
def family():
    return build_family_metric(FamilyParams(n=3, s=2, t=3, A=F(1)))


@pytest.fixture
def origin3():
    return (F(0),) * 3


def rationals(bound=3, den=6):
    return st.builds(F, st.integers(-bound * den, bound * den), st.integers(1, den))


@st.composite
def polynomials(draw, dim=3, max_degree=3, max_terms=5):
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        exps = draw(st.lists(st.integers(0, max_degree), min_size=dim, max_size=dim))
        if sum(exps) > max_degree:
            continue
        terms[tuple(exps)] = draw(rationals())
    return Polynomial(dim, terms)


def float_metric(m, x):
    n = m.n
    return np.array([[m.components[i][j].eval_float(x) for j in range(n)] for i in range(n)])


def fd_christoffel(m, x, h=1e-5):
    """Christoffel symbols from central differences of float metric evaluations."""
    x = np.asarray(x, dtype=float)
    n = m.n
    dg = np.zeros((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dg[a] = (float_metric(m, x + e) - float_metric(m, x - e)) / (2 * h)
    ginv = np.linalg.inv(float_metric(m, x))
    low = 0.5 * (np.einsum("ijm->mij", dg) + np.einsum("jim->mij", dg) - dg)
    return np.einsum("km,mij->kij", ginv, low)


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
