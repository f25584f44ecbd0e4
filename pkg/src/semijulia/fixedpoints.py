"""Fixed points, their linear type, covering relations and backward orbits."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import BudgetExceeded, DegenerateLeadingCoefficient, NotAFixedPoint, PreimageUnavailable
from .polyalg import MultiPoly, PolyMap, eval_map, jacobian, roots_1d

ATTRACTING = "Attracting"
REPELLING = "Repelling"
SADDLE = "Saddle"
INDETERMINATE = "Indeterminate"


@dataclass
class FixedPointRecord:
    location: tuple
    residual: float
    eigenvalues: list
    kind: str
    jacobian_det_modulus: float


@dataclass
class BackwardOrbitTree:
    """``levels[d]`` holds the depth-``d`` preimages (``levels[0] == [p]``).

    ``parents[d][i]`` indexes the node in ``levels[d-1]`` that
    ``levels[d][i]`` maps to.  ``truncated`` means completeness is not
    certified (general mode, or budget hit).
    """

    root: tuple
    levels: list
    parents: list
    truncated: bool
    exact: bool
    region_radius: float

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def count(self) -> int:
        return sum(len(level) for level in self.levels[1:])


@dataclass
class CoveringReport:
    center: tuple
    radius: float
    n_boundary: int
    min_boundary_image_modulus: float
    contains_preimage_of_center: bool
    verdict: bool
    margin: float
    note: str = ("heuristic certificate: sampled boundary and a Newton preimage "
                 "search give evidence for compact containment, not a proof")


def _norm(z) -> float:
    return float(np.linalg.norm(np.asarray(z, dtype=complex)))


class _Evaluator:
    """Cached symbolic Jacobian for repeated numeric use."""

    def __init__(self, F: PolyMap):
        self.F = F
        self.J = jacobian(F)

    def value(self, z) -> np.ndarray:
        return np.array(eval_map(self.F, tuple(z)), dtype=complex)

    def jac(self, z) -> np.ndarray:
        return self.J.evaluate(tuple(z))


def _newton(ev: _Evaluator, z0, target, shift: bool, tol: float, max_iter: int):
    """Solve ``F(z) - (z if shift) = target``; return the root or None."""
    z = np.array(z0, dtype=complex)
    k = z.size
    eye = np.eye(k)
    for _ in range(max_iter):
        r = ev.value(z) - target - (z if shift else 0)
        if not np.all(np.isfinite(r)):
            return None
        A = ev.jac(z) - (eye if shift else 0)
        try:
            step = np.linalg.solve(A, r)
        except np.linalg.LinAlgError:
            return None
        z = z - step
        if not np.all(np.isfinite(z)) or _norm(z) > 1e12:
            return None
        if _norm(step) <= 1e-3 * tol * (1 + _norm(z)):
            break
    r = ev.value(z) - target - (z if shift else 0)
    if _norm(r) <= tol * (1 + _norm(z)):
        return z
    return None


def polydisc_starts(k: int, radius: float, n: int, seed: int = 0, center=None) -> np.ndarray:
    """Seeded scrambled-Halton points in the polydisc of ``radius``."""
    u = qmc.Halton(d=2 * k, scramble=True, seed=seed).random(n)
    pts = radius * np.sqrt(u[:, :k]) * np.exp(2j * np.pi * u[:, k:])
    if center is not None:
        pts = pts + np.asarray(center, dtype=complex)
    return pts


def _dedup(points, dist: float) -> list:
    kept = []
    for z in points:
        if all(_norm(z - q) > dist for q in kept):
            kept.append(z)
    return kept


def _clean(z, scale: float = 1e-14) -> tuple:
    """Drop rounding noise below ``scale`` from real and imaginary parts."""
    out = []
    for c in z:
        c = complex(c)
        re = 0.0 if abs(c.real) < scale else c.real
        im = 0.0 if abs(c.imag) < scale else c.imag
        out.append(complex(re, im))
    return tuple(out)


def _lex_key(z):
    return tuple(x for c in z for x in (round(c.real, 9), round(c.imag, 9)))


def find_fixed_points(F: PolyMap, radius: float = 2.0, n_starts: int = 200,
                      tol: float = 1e-10, max_iter: int = 60, seed: int = 0,
                      center=None) -> list:
    """Fixed points in the polydisc ``|z_i - c_i| <= radius`` by multistart Newton.

    Returns ``FixedPointRecord`` objects sorted by the real and imaginary
    parts of successive coordinates.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    ev = _Evaluator(F)
    c = np.zeros(F.k, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    found = []
    for z0 in polydisc_starts(F.k, radius, n_starts, seed, c):
        z = _newton(ev, z0, 0.0, True, tol, max_iter)
        if z is not None and np.max(np.abs(z - c)) <= radius * (1 + 1e-12):
            found.append(z)
    pts = _dedup(found, 10 * tol)
    pts.sort(key=_lex_key)
    return [classify_fixed_point(F, _clean(p), tol=tol) for p in pts]


def eigenvalues(A: np.ndarray) -> list:
    """Eigenvalues sorted by decreasing modulus; closed form for 2x2."""
    A = np.asarray(A, dtype=complex)
    if A.shape == (2, 2):
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        s = cmath.sqrt(tr * tr / 4 - det)
        # avoid cancellation in the smaller root
        l1 = tr / 2 + s if abs(tr / 2 + s) >= abs(tr / 2 - s) else tr / 2 - s
        l2 = det / l1 if l1 != 0 else tr - l1
        vals = [complex(l1), complex(l2)]
    elif A.shape == (1, 1):
        vals = [complex(A[0, 0])]
    else:
        vals = [complex(v) for v in np.linalg.eigvals(A)]
    return sorted(vals, key=lambda v: (-abs(v), cmath.phase(v)))


def kind_of(eigs, tol_unit: float = 1e-6) -> str:
    mods = [abs(v) for v in eigs]
    if any(abs(m - 1.0) <= tol_unit for m in mods):
        return INDETERMINATE
    if all(m < 1 - tol_unit for m in mods):
        return ATTRACTING
    if all(m > 1 + tol_unit for m in mods):
        return REPELLING
    return SADDLE


def classify_fixed_point(F: PolyMap, p, tol_unit: float = 1e-6,
                         tol: float = 1e-8) -> FixedPointRecord:
    """Linear type of ``F`` at a fixed point ``p``.

    Raises ``NotAFixedPoint`` if ``|F(p) - p| > tol * (1 + |p|)``.
    """
    z = np.array([complex(c) for c in p])
    res = _norm(np.array(eval_map(F, tuple(z))) - z)
    if not res <= tol * (1 + _norm(z)):
        raise NotAFixedPoint(f"|F(p) - p| = {res:.3g} at {tuple(z)}")
    A = jacobian(F).evaluate(tuple(z))
    eigs = eigenvalues(A)
    return FixedPointRecord(tuple(complex(c) for c in z), res, eigs,
                            kind_of(eigs, tol_unit), float(abs(np.linalg.det(A))))


def is_invertible_at(F: PolyMap, p, tol: float = 1e-10) -> bool:
    return abs(np.linalg.det(jacobian(F).evaluate(tuple(p)))) > tol


def sphere_samples(k: int, n: int, seed: int = 0) -> np.ndarray:
    """At least ``n`` unit vectors of C^k.

    For k = 2 a product-of-circles grid ``(cos a e^{it}, sin a e^{is})``;
    otherwise seeded normalized Gaussians.
    """
    if k == 2:
        m = max(2, math.ceil(n ** (1 / 3)))
        a = (np.arange(m) + 0.5) * (np.pi / 2) / m
        t = 2 * np.pi * np.arange(2 * m) / (2 * m)
        A, T, S = np.meshgrid(a, t, t, indexing="ij")
        pts = np.stack([np.cos(A) * np.exp(1j * T), np.sin(A) * np.exp(1j * S)], axis=-1)
        pts = pts.reshape(-1, 2)
        # include the coordinate circles themselves
        extra = np.stack([np.exp(1j * t), 0 * t], axis=-1), np.stack([0 * t, np.exp(1j * t)], axis=-1)
        return np.concatenate([pts, *extra])
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2 * k))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, :k] + 1j * x[:, k:]


def covering_check(F: PolyMap, center, r: float, margin: float = 0.1,
                   n_boundary: int = 256, seed: int = 0) -> CoveringReport:
    """Evidence that the ball ``B(center, r)`` is compactly inside its image.

    The verdict requires every sampled boundary image to stay farther than
    ``r * (1 + margin)`` from ``center`` and a Newton solution of
    ``F(z) = center`` inside the ball.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if n_boundary < 64:
        raise ValueError("n_boundary must be >= 64")
    c = np.array([complex(x) for x in center])
    ev = _Evaluator(F)
    dirs = sphere_samples(F.k, n_boundary, seed)
    min_mod = math.inf
    for d in dirs:
        w = ev.value(c + r * d) - c
        min_mod = min(min_mod, _norm(w))
    starts = np.concatenate([c[None, :], c + 0.5 * r * polydisc_starts(F.k, 1.0, 16, seed) / math.sqrt(F.k)])
    contains = False
    for z0 in starts:
        z = _newton(ev, z0, c, False, 1e-10, 60)
        if z is not None and _norm(z - c) < r:
            contains = True
            break
    verdict = bool(min_mod > r * (1 + margin) and contains)
    return CoveringReport(tuple(complex(x) for x in c), r, len(dirs), float(min_mod),
                          contains, verdict, margin)


def _exact_preimages(F: PolyMap, target, tol: float) -> list:
    """All solutions of ``F(z) = target`` for a triangular map, by
    sequential univariate root finding."""
    k = F.k
    partial = [dict()]
    for i, comp in enumerate(F.components):
        nxt = []
        for fixed in partial:
            q = comp.substitute(fixed) - target[i]
            one = MultiPoly(1, {(e[i],): c for e, c in q.terms.items()})
            try:
                roots = roots_1d(one, tol=1e-13)
            except DegenerateLeadingCoefficient as exc:
                raise PreimageUnavailable(f"component {i + 1} does not determine z{i + 1}") from exc
            for x in _dedup([np.array([r]) for r in roots], tol):
                d = dict(fixed)
                d[i] = complex(x[0])
                nxt.append(d)
        partial = nxt
    return [np.array([d[i] for i in range(k)]) for d in partial]


def preimages(F: PolyMap, target, tol: float = 1e-9, n_starts: int = 200,
              radius: float = 2.0, seed: int = 0):
    """Solutions of ``F(z) = target``; returns ``(points, exact)``.

    Triangular maps are solved exactly; other maps by multistart Newton in
    the polydisc of ``radius`` (not certified complete).
    """
    target = np.array([complex(x) for x in target])
    if F.is_triangular():
        return _exact_preimages(F, target, tol), True
    ev = _Evaluator(F)
    found = []
    for z0 in polydisc_starts(F.k, radius, n_starts, seed):
        z = _newton(ev, z0, target, False, 1e-11, 60)
        if z is not None:
            found.append(z)
    return _dedup(found, tol), False


def backward_orbit(F: PolyMap, p, depth: int, radius: float = 2.0,
                   budget: int = 10 ** 4, n_starts: int = 200,
                   tol: float = 1e-9, seed: int = 0) -> BackwardOrbitTree:
    """Iterated preimages of ``p`` kept inside the polydisc of ``radius``.

    ``budget`` bounds the number of preimage solves (one per node) in exact
    mode and Newton runs in general mode.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    root = np.array([complex(x) for x in p])
    levels = [[root]]
    parents = [[]]
    exact_all = True
    spent = 0
    for d in range(1, depth + 1):
        level, par = [], []
        for idx, node in enumerate(levels[-1]):
            cost = 1 if F.is_triangular() else n_starts
            if spent + cost > budget:
                raise BudgetExceeded(f"backward orbit needs more than {budget} solves")
            spent += cost
            pts, exact = preimages(F, node, tol, n_starts, radius, seed + d)
            exact_all &= exact
            for z in pts:
                if np.max(np.abs(z)) <= radius * (1 + 1e-12):
                    level.append(z)
                    par.append(idx)
        # merge coincident nodes (for example, a fixed point that is its own preimage)
        merged, mpar = [], []
        for z, i in sorted(zip(level, par), key=lambda t: _lex_key(t[0])):
            if all(_norm(z - q) > tol * (1 + _norm(q)) for q in merged):
                merged.append(z)
                mpar.append(i)
        levels.append(merged)
        parents.append(mpar)
        if not merged:
            break
    tree_levels = [[_clean(z) for z in lev] for lev in levels]
    return BackwardOrbitTree(tuple(complex(c) for c in root), tree_levels, parents,
                             truncated=not exact_all, exact=exact_all, region_radius=radius)
