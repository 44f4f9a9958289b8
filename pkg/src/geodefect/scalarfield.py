"""Exact multivariate polynomials with rational coefficients.

A :class:`Polynomial` is an immutable mapping from exponent tuples to
:class:`fractions.Fraction` coefficients.  Axes are numbered from 1 in the
public API (``partial(p, 1)`` differentiates by ``x1``) to match the usual
coordinate labels; exponent tuples are plain 0-based Python tuples.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

Rational = Fraction
Point = tuple  # tuple[Fraction, ...]


class DimensionError(ValueError):
    pass


def as_rational(value) -> Fraction:
    """Convert ints, Fractions, ``"num/den"`` strings or floats to a Fraction.

    Floats go through their decimal repr so that ``1e-3`` becomes ``1/1000``
    rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def make_point(coords: Iterable) -> tuple:
    return tuple(as_rational(c) for c in coords)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class Polynomial:
    """Immutable polynomial in ``dim`` variables over the rationals."""

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[tuple, object] | None = None):
        if dim < 1:
            raise DimensionError("dimension must be positive")
        self.dim = dim
        clean: dict[tuple, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim:
                raise DimensionError(f"multi-index {exps} has length != {dim}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = as_rational(coeff)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "Polynomial":
        # trusted constructor: terms already canonical and zero-free
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._terms = dict(sorted(terms.items()))
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls._raw(dim, {})

    @classmethod
    def constant(cls, dim: int, value) -> "Polynomial":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, axis: int) -> "Polynomial":
        _check_axis(dim, axis)
        exps = [0] * dim
        exps[axis - 1] = 1
        return cls._raw(dim, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, dim: int, exponents: Sequence[int], coeff=1) -> "Polynomial":
        return cls(dim, {tuple(exponents): coeff})

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def coefficient(self, exponents: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exponents), Fraction(0))

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.dim, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, tuple(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({self.dim}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for exps, c in self._terms.items():
            mono = "*".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(exps) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return Polynomial.constant(self.dim, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        return self.mul_truncated(other, None)

    __rmul__ = __mul__

    def mul_truncated(self, other: "Polynomial", max_degree: int | None) -> "Polynomial":
        """Product keeping only terms of total degree <= ``max_degree``."""
        other = self._coerce(other)
        out: dict[tuple, Fraction] = {}
        right = [(e, c, sum(e)) for e, c in other._terms.items()]
        for ea, ca in self._terms.items():
            da = sum(ea)
            for eb, cb, db in right:
                if max_degree is not None and da + db > max_degree:
                    continue
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Polynomial._raw(self.dim, {e: c for e, c in out.items() if c})

    def scale(self, c) -> "Polynomial":
        c = as_rational(c)
        if not c:
            return Polynomial.zero(self.dim)
        return Polynomial._raw(self.dim, {e: v * c for e, v in self._terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.dim, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------
    def partial(self, axis: int) -> "Polynomial":
        _check_axis(self.dim, axis)
        i = axis - 1
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = c * e[i]
        return Polynomial._raw(self.dim, out)

    def derivative(self, axes: Iterable[int]) -> "Polynomial":
        p = self
        for a in axes:
            p = p.partial(a)
        return p

    def truncate(self, max_degree: int) -> "Polynomial":
        return Polynomial._raw(
            self.dim, {e: c for e, c in self._terms.items() if sum(e) <= max_degree}
        )

    # -- evaluation -----------------------------------------------------
    def eval(self, x: Sequence) -> Fraction:
        if len(x) != self.dim:
            raise DimensionError(f"point has {len(x)} coordinates, expected {self.dim}")
        x = [as_rational(v) for v in x]
        total = Fraction(0)
        for e, c in self._terms.items():
            term = c
            for xi, ei in zip(x, e):
                if ei:
                    term *= xi**ei
            total += term
        return total

    __call__ = eval

    def eval_float(self, x: Sequence[float]) -> float:
        if len(x) != self.dim:
            raise DimensionError(f"point has {len(x)} coordinates, expected {self.dim}")
        total = 0.0
        for e, c in self._terms.items():
            term = float(c)
            for xi, ei in zip(x, e):
                if ei:
                    term *= float(xi) ** ei
            total += term
        return total

    # -- changes of variables ------------------------------------------
    def shift(self, center: Sequence) -> "Polynomial":
        """Return ``q`` with ``q(y) = p(y + center)``."""
        c = make_point(center)
        if len(c) != self.dim:
            raise DimensionError("center dimension mismatch")
        out: dict[tuple, Fraction] = {}
        for e, coeff in self._terms.items():
            # expand prod_i (y_i + c_i)^{e_i}
            partial_terms = {(): coeff}
            for ei, ci in zip(e, c):
                nxt = {}
                for head, v in partial_terms.items():
                    for k in range(ei + 1):
                        w = v * comb(ei, k) * ci ** (ei - k) if ci or k == ei else 0
                        if w:
                            key = head + (k,)
                            nxt[key] = nxt.get(key, 0) + w
                partial_terms = nxt
            for key, v in partial_terms.items():
                out[key] = out.get(key, 0) + v
        return Polynomial._raw(self.dim, {e: v for e, v in out.items() if v})

    def compose_linear(self, L: Sequence[Sequence]) -> "Polynomial":
        """Return ``p∘L``, i.e. ``x ↦ p(L·x)``; ``L`` must be invertible."""
        M = [[as_rational(v) for v in row] for row in L]
        if len(M) != self.dim or any(len(row) != self.dim for row in M):
            raise DimensionError("matrix shape does not match dimension")
        if rational_det(M) == 0:
            raise ValueError("singular linear change of coordinates")
        rows = []
        for i in range(self.dim):
            lin = {}
            for j in range(self.dim):
                if M[i][j]:
                    e = [0] * self.dim
                    e[j] = 1
                    lin[tuple(e)] = M[i][j]
            rows.append(Polynomial._raw(self.dim, lin))
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(i, k):
            if (i, k) not in powers:
                powers[(i, k)] = rows[i] ** k
            return powers[(i, k)]

        total = Polynomial.zero(self.dim)
        for e, c in self._terms.items():
            term = Polynomial.constant(self.dim, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            total = total + term
        return total

    def taylor_truncate(self, center: Sequence, max_degree: int) -> "Polynomial":
        """Taylor polynomial about ``center`` up to total degree ``max_degree``.

        Expressed in the original coordinates.
        """
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        c = make_point(center)
        local = self.shift(c).truncate(max_degree)
        return local.shift(tuple(-v for v in c))

    def restrict(self, values: Mapping[int, object]) -> "Polynomial":
        """Substitute fixed values for some axes (1-based); dimension is kept."""
        vals = {a - 1: as_rational(v) for a, v in values.items()}
        out: dict[tuple, Fraction] = {}
        for e, c in self._terms.items():
            ne = list(e)
            for i, v in vals.items():
                if e[i]:
                    c = c * v ** e[i]
                ne[i] = 0
            if c:
                key = tuple(ne)
                out[key] = out.get(key, 0) + c
        return Polynomial._raw(self.dim, {e: v for e, v in out.items() if v})

    # -- serialization ----------------------------------------------------
    def to_records(self) -> list[dict]:
        return [
            {"exponents": list(e), "coeff": format_rational(c)} for e, c in self._terms.items()
        ]

    @classmethod
    def from_records(cls, dim: int, records: Iterable[Mapping]) -> "Polynomial":
        terms: dict[tuple, Fraction] = {}
        for rec in records:
            e = tuple(rec["exponents"])
            terms[e] = terms.get(e, Fraction(0)) + as_rational(rec["coeff"])
        return cls(dim, terms)


def _check_axis(dim: int, axis: int) -> None:
    if not 1 <= axis <= dim:
        raise IndexError(f"axis {axis} out of range 1..{dim}")


def eval(p: Polynomial, x: Sequence) -> Fraction:  # noqa: A001 - module-level alias
    return p.eval(x)


def partial(p: Polynomial, axis: int) -> Polynomial:
    return p.partial(axis)


def compose_linear(p: Polynomial, L) -> Polynomial:
    return p.compose_linear(L)


def taylor_truncate(p: Polynomial, center, max_degree: int) -> Polynomial:
    return p.taylor_truncate(center, max_degree)


# ---------------------------------------------------------------------------
# small exact linear algebra used throughout the package


def rational_det(M: Sequence[Sequence[Fraction]]) -> Fraction:
    A = [list(map(as_rational, row)) for row in M]
    n = len(A)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if A[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            A[col], A[pivot] = A[pivot], A[col]
            det = -det
        det *= A[col][col]
        inv = 1 / A[col][col]
        for r in range(col + 1, n):
            f = A[r][col] * inv
            if f:
                for k in range(col, n):
                    A[r][k] -= f * A[col][k]
    return det


def rational_inverse(M: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(M)
    A = [list(map(as_rational, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if A[r][col]), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        A[col], A[pivot] = A[pivot], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


def leading_minors(M: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    return [rational_det([row[:k] for row in M[:k]]) for k in range(1, len(M) + 1)]


def matmul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum((A[i][k] * B[k][j] for k in range(m)), Fraction(0)) for j in range(p)] for i in range(n)]
