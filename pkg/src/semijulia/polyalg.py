"""Sparse multivariate polynomials over C and polynomial self-maps of C^k.

A ``MultiPoly`` stores ``{exponent tuple: complex coefficient}`` in canonical
form: coefficients of modulus <= ``ZERO_TOL`` are dropped, so two polynomials
compare equal iff their canonical term maps agree.  Everything here is
immutable and safe to share between workers.
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import (DegenerateLeadingCoefficient, DegreeBudgetExceeded,
                     DimensionMismatch, IndexOutOfRange, NonConvergence,
                     UnsupportedDimension)

ZERO_TOL = 1e-14
MAX_COMPOSE_DEGREE = 64
MAX_DET_DIM = 4


def _canonical(terms: Mapping[tuple, complex]) -> dict:
    out = {}
    for exp, c in terms.items():
        c = complex(c)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError(f"non-finite coefficient {c!r} for {exp}")
        # parts below the tolerance are noise; dropping them keeps printing lossless
        c = complex(0.0 if abs(c.real) <= ZERO_TOL else c.real,
                    0.0 if abs(c.imag) <= ZERO_TOL else c.imag)
        if abs(c) > ZERO_TOL:
            out[tuple(int(e) for e in exp)] = c
    return out


class MultiPoly:
    """Polynomial in ``nvars`` complex variables.

    >>> p = MultiPoly(2, {(2, 0): 1, (0, 1): 1})   # z1^2 + z2
    >>> p((1, 2))
    (3+0j)
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, complex] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        terms = terms or {}
        for exp in terms:
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {nvars} variables")
        object.__setattr__(self, "nvars", int(nvars))
        object.__setattr__(self, "terms", _canonical(terms))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c: complex) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "MultiPoly":
        if not 0 <= index < nvars:
            raise IndexOutOfRange(f"variable {index} out of range for {nvars}")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def univariate(cls, coeffs: Sequence[complex]) -> "MultiPoly":
        """From ascending coefficients ``a_0, a_1, ...``."""
        return cls(1, {(i,): c for i, c in enumerate(coeffs)})

    # -- structure ---------------------------------------------------------
    def canonicalize(self) -> "MultiPoly":
        return MultiPoly(self.nvars, self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, var: int) -> int:
        return max((e[var] for e in self.terms), default=0)

    def depends_on(self, var: int) -> bool:
        return any(e[var] > 0 for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> complex:
        return self.terms.get((0,) * self.nvars, 0j)

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = MultiPoly.constant(self.nvars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash",
                               hash((self.nvars, frozenset(self.terms.items()))))
        return self._hash

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {to_expression(self)!r})"

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise DimensionMismatch(f"{self.nvars} vs {other.nvars} variables")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return MultiPoly.constant(self.nvars, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, 0j) + c
        return MultiPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = MultiPoly.constant(self.nvars, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- evaluation --------------------------------------------------------
    def __call__(self, z):
        return eval_poly(self, z)

    def differentiate(self, var: int) -> "MultiPoly":
        return differentiate(self, var)

    def substitute(self, values: Mapping[int, complex]) -> "MultiPoly":
        """Fix some variables numerically; the result keeps ``nvars``."""
        terms: dict = {}
        for exp, c in self.terms.items():
            e = list(exp)
            for var, val in values.items():
                if e[var]:
                    c = c * complex(val) ** e[var]
                    e[var] = 0
            key = tuple(e)
            terms[key] = terms.get(key, 0j) + c
        return MultiPoly(self.nvars, terms)

    def univariate_coeffs(self, var: int) -> list:
        """Ascending coefficients in ``var``; all other exponents must be 0."""
        deg = self.degree_in(var)
        coeffs = [0j] * (deg + 1)
        for exp, c in self.terms.items():
            if any(e for i, e in enumerate(exp) if i != var):
                raise ValueError("polynomial depends on other variables")
            coeffs[exp[var]] += c
        return coeffs

    def compose(self, maps: Sequence["MultiPoly"],
                max_degree: int = MAX_COMPOSE_DEGREE) -> "MultiPoly":
        """``self(q_1, ..., q_k)`` with a guard on the resulting degree."""
        if len(maps) != self.nvars:
            raise DimensionMismatch("compose needs one polynomial per variable")
        inner = maps[0].nvars
        bound = self.degree * max((q.degree for q in maps), default=0)
        if bound > max_degree:
            raise DegreeBudgetExceeded(
                f"composed degree bound {bound} exceeds {max_degree}")
        cache: dict = {}

        def power(var, e):
            key = (var, e)
            if key not in cache:
                cache[key] = maps[var] ** e
            return cache[key]

        result = MultiPoly.zero(inner)
        for exp, c in self.terms.items():
            term = MultiPoly.constant(inner, c)
            for var, e in enumerate(exp):
                if e:
                    term = term * power(var, e)
            result = result + term
        return result


def eval_poly(p: MultiPoly, z):
    """Evaluate ``p`` at ``z`` by direct term summation.

    ``z`` is a length-``nvars`` sequence of scalars or equally shaped arrays.
    Powers of each coordinate are memoized across terms.
    """
    if len(z) != p.nvars:
        raise DimensionMismatch(f"point has {len(z)} coordinates, "
                                f"polynomial has {p.nvars} variables")
    memo: dict = {}
    total = 0j
    for exp, c in p.terms.items():
        term = c
        for var, e in enumerate(exp):
            if e == 0:
                continue
            key = (var, e)
            if key not in memo:
                memo[key] = z[var] ** e
            term = term * memo[key]
        total = total + term
    return total


def differentiate(p: MultiPoly, var: int) -> MultiPoly:
    if not 0 <= var < p.nvars:
        raise IndexOutOfRange(f"variable {var} out of range for {p.nvars}")
    terms: dict = {}
    for exp, c in p.terms.items():
        e = exp[var]
        if e == 0:
            continue
        new = list(exp)
        new[var] = e - 1
        terms[tuple(new)] = terms.get(tuple(new), 0j) + c * e
    return MultiPoly(p.nvars, terms)


# ---------------------------------------------------------------------------
# Maps and matrices
# ---------------------------------------------------------------------------

class PolyMap:
    """A polynomial self-map ``F = (F_1, ..., F_k)`` of C^k."""

    __slots__ = ("k", "components", "label")

    def __init__(self, components: Sequence[MultiPoly], label: str = ""):
        components = tuple(components)
        if not components:
            raise ValueError("a map needs at least one component")
        k = len(components)
        for c in components:
            if c.nvars != k:
                raise DimensionMismatch(
                    f"component in {c.nvars} variables for a map of C^{k}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("PolyMap is immutable")

    @classmethod
    def identity(cls, k: int, label: str = "id") -> "PolyMap":
        return cls([MultiPoly.variable(k, i) for i in range(k)], label)

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        body = ", ".join(to_expression(c) for c in self.components)
        return f"PolyMap({self.label!r}: ({body}))"

    def __call__(self, z):
        return eval_map(self, z)

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def compose(self, inner: "PolyMap",
                max_degree: int = MAX_COMPOSE_DEGREE) -> "PolyMap":
        """Symbolic ``self o inner``."""
        if inner.k != self.k:
            raise DimensionMismatch("maps act on different dimensions")
        comps = [c.compose(inner.components, max_degree) for c in self.components]
        return PolyMap(comps, f"{self.label}o{inner.label}")

    def power(self, n: int, max_degree: int = MAX_COMPOSE_DEGREE) -> "PolyMap":
        """``n``-fold self-composition, refusing results above ``max_degree``."""
        if n < 1:
            raise ValueError("power must be >= 1")
        if self.degree ** n > max_degree and self.degree > 1:
            raise DegreeBudgetExceeded(
                f"{self.label}^{n} has degree up to {self.degree ** n}")
        result = self
        for _ in range(n - 1):
            result = self.compose(result, max_degree)
        return PolyMap(result.components, f"{self.label}^{n}" if n > 1 else self.label)

    def is_triangular(self) -> bool:
        """Each component depends only on z_1..z_i and genuinely on z_i."""
        for i, c in enumerate(self.components):
            if not c.depends_on(i):
                return False
            if any(c.depends_on(j) for j in range(i + 1, self.k)):
                return False
        return True


def eval_map(F: PolyMap, z):
    if len(z) != F.k:
        raise DimensionMismatch(f"point has {len(z)} coordinates, map acts on C^{F.k}")
    return tuple(eval_poly(c, z) for c in F.components)


class PolyMatrix:
    """Rectangular array of polynomials sharing ``nvars``."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[MultiPoly]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("PolyMatrix must be rectangular")
        nv = rows[0][0].nvars
        if any(p.nvars != nv for r in rows for p in r):
            raise DimensionMismatch("inconsistent nvars in PolyMatrix")
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("PolyMatrix is immutable")

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.rows == other.rows

    def evaluate(self, z) -> np.ndarray:
        return np.array([[complex(eval_poly(p, z)) for p in r] for r in self.rows])

    def det(self) -> MultiPoly:
        n, m = self.shape
        if n != m:
            raise ValueError("determinant of a non-square matrix")
        if n > MAX_DET_DIM:
            raise UnsupportedDimension(f"symbolic determinant capped at {MAX_DET_DIM}x{MAX_DET_DIM}")
        return _cofactor_det([list(r) for r in self.rows])


def _cofactor_det(rows) -> MultiPoly:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = MultiPoly.zero(rows[0][0].nvars)
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _cofactor_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def jacobian(F: PolyMap) -> PolyMatrix:
    return PolyMatrix([[differentiate(c, j) for j in range(F.k)] for c in F.components])


def jacobian_det(F: PolyMap) -> MultiPoly:
    if F.k > MAX_DET_DIM:
        raise UnsupportedDimension(f"jacobian_det supports k <= {MAX_DET_DIM}")
    return jacobian(F).det()


def numeric_jacobian(F: PolyMap, z) -> np.ndarray:
    """Jacobian matrix of ``F`` at ``z`` from the symbolic partials."""
    return jacobian(F).evaluate(z)


def is_volume_preserving(F: PolyMap, tol: float = 1e-12) -> bool:
    d = jacobian_det(F)
    return d.is_constant() and abs(abs(d.constant_value()) - 1.0) <= tol


def is_degenerate(F: PolyMap) -> bool:
    """True when det DF vanishes identically (F lacks maximal generic rank)."""
    if F.k > MAX_DET_DIM:
        return False
    return jacobian_det(F).is_zero()


# ---------------------------------------------------------------------------
# Univariate roots
# ---------------------------------------------------------------------------

def roots_1d(p: MultiPoly, tol: float = 1e-12, max_iter: int = 500) -> list:
    """All complex roots of a univariate polynomial, with multiplicity.

    Uses Aberth-Ehrlich simultaneous iteration started from a slightly
    rotated circle whose radius bounds the root moduli.  Exact zero roots
    (vanishing low-order coefficients) are split off first.
    """
    if p.nvars != 1:
        raise DimensionMismatch("roots_1d needs a univariate polynomial")
    return roots_from_coeffs(p.univariate_coeffs(0), tol, max_iter)


def roots_from_coeffs(coeffs: Sequence[complex], tol: float = 1e-12,
                      max_iter: int = 500) -> list:
    a = [complex(c) for c in coeffs]
    while a and abs(a[-1]) <= ZERO_TOL:
        a.pop()
    n = len(a) - 1
    if n < 1:
        raise DegenerateLeadingCoefficient("polynomial has degree < 1")
    if abs(a[-1]) <= tol:
        raise DegenerateLeadingCoefficient(
            f"leading coefficient {a[-1]} below tolerance {tol}")
    zeros = 0
    while abs(a[zeros]) <= ZERO_TOL:
        zeros += 1
    a = a[zeros:]
    roots = [0j] * zeros
    n = len(a) - 1
    if n == 0:
        return roots
    if n == 1:
        return roots + [-a[0] / a[1]]

    coef = np.array(a[::-1], dtype=complex)          # descending for polyval
    monic = coef / coef[0]
    absc = np.abs(coef)
    dcoef = coef[:-1] * np.arange(n, 0, -1)
    radius = 2.0 * max(abs(monic[i]) ** (1.0 / i) for i in range(1, n + 1))
    radius = max(radius, 1e-3)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)

    def residual_ok(z):
        val = np.abs(np.polyval(coef, z))
        scale = np.polyval(absc, np.abs(z))
        return val <= tol * (1.0 + scale)

    for it in range(max_iter):
        ok = residual_ok(z)
        if ok.all():
            return roots + [complex(v) for v in z]
        pv = np.polyval(coef, z)
        dv = np.polyval(dcoef, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            sums = inv.sum(axis=1)
            step = ratio / (1.0 - ratio * sums)
        step = np.where(np.isfinite(step), step, 1e-3 * (1 + 1j))
        step = np.where(ok, 0.0, step)
        z = z - step
    raise NonConvergence(f"Aberth iteration did not converge in {max_iter} steps",
                         diagnostic={"iterates": z.tolist(),
                                     "residuals": np.abs(np.polyval(coef, z)).tolist()})


# ---------------------------------------------------------------------------
# Printing (inverse of the expression parser)
# ---------------------------------------------------------------------------

def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return f"({_fmt_real(c.real)})"
    if c.real == 0:
        return f"({_fmt_real(c.imag)}i)"
    sign = "+" if c.imag >= 0 else "-"
    return f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"


def to_expression(p: MultiPoly) -> str:
    """Render in the grammar accepted by ``semijulia.parser``; lossless."""
    if not p.terms:
        return "(0.0)"
    parts = []
    for exp in sorted(p.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
        factors = [_fmt_coeff(p.terms[exp])]
        for var, e in enumerate(exp):
            if e == 1:
                factors.append(f"z{var + 1}")
            elif e > 1:
                factors.append(f"z{var + 1}^{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def chebyshev(n: int) -> MultiPoly:
    """T_n(z) from T_0 = 1, T_1 = z, T_{n+1} = 2 z T_n - T_{n-1}."""
    prev, cur = MultiPoly.constant(1, 1.0), MultiPoly.variable(1, 0)
    if n == 0:
        return prev
    z = MultiPoly.variable(1, 0)
    for _ in range(n - 1):
        prev, cur = cur, 2 * z * cur - prev
    return cur


def lift(p: MultiPoly, k: int, var: int) -> MultiPoly:
    """Embed a univariate polynomial as a polynomial in ``z_{var}`` of C^k."""
    terms = {}
    for (e,), c in p.terms.items():
        exp = [0] * k
        exp[var] = e
        terms[tuple(exp)] = c
    return MultiPoly(k, terms)
