"""Fatou components of rasters: labelling, recurrence, limit maps.

Recurrence is probed by pushing sample points of a component through random
words and locating the images on the raster.  Images outside the raster land
in a virtual component named by the region-sized tile they fall in, so a
drift such as a translation registers as a sequence of new components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .classify import ClassifierConfig, PointClass
from .errors import EmptyComponent
from .gridscan import MODULUS_PLANE, Raster
from .polyalg import PolyMap, eval_map, jacobian
from .semigroup import EscapedToInfinity, Semigroup, eval_word, keyed_rng

RECURRENT = "RecurrentLikely"
WANDERING = "WanderingLikely"
INCONCLUSIVE = "Inconclusive"

ONE_SIDED_NOTE = ("sampled evidence is one-sided: a failure to return is strong "
                  "evidence against recurrence, while observed returns along "
                  "sampled sequences do not prove recurrence for all sequences")


@dataclass
class ComponentLabeling:
    """``labels[iy, ix]`` is the component id of a Fatou cell, -1 otherwise."""

    raster: Raster
    labels: np.ndarray
    n_components: int
    cells: list
    bboxes: list
    classes: list

    def component_of(self, iy: int, ix: int) -> int:
        return int(self.labels[iy, ix])


def label_components(raster: Raster) -> ComponentLabeling:
    """4-connected components of cells sharing a Fatou verdict.

    Ids follow the row-major position of each component's first cell.
    """
    cells = raster.cells
    raw = np.zeros(cells.shape, dtype=np.int64)
    cls_of = {}
    offset = 0
    for cls in (PointClass.FatouBounded, PointClass.FatouEscaping):
        lab, n = ndimage.label(cells == int(cls))
        mask = lab > 0
        raw[mask] = lab[mask] + offset
        for i in range(1, n + 1):
            cls_of[i + offset] = cls
        offset += n
    labels = np.full(cells.shape, -1, dtype=np.int64)
    flat = raw.ravel()
    order = {}
    for r in flat[flat > 0]:
        if r not in order:
            order[r] = len(order)
    members, bboxes, classes = [], [], []
    for r, new in order.items():
        mask = raw == r
        labels[mask] = new
        iy, ix = np.nonzero(mask)
        members.append(np.stack([iy, ix], axis=1))
        bboxes.append((int(iy.min()), int(ix.min()), int(iy.max()), int(ix.max())))
        classes.append(cls_of[r])
    return ComponentLabeling(raster, labels, len(order), members, bboxes, classes)


@dataclass
class RecurrenceReport:
    component_id: int
    n_sequences: int
    n_recurrent: int
    n_escaping: int
    distinct_target_components: int
    verdict: str
    lengths: tuple = ()
    targets_by_length: list = field(default_factory=list)
    note: str = ONE_SIDED_NOTE


def cell_point(raster: Raster, iy: int, ix: int, k: int) -> tuple:
    """Representative point of a cell (phase zero on a modulus plane)."""
    reg = raster.region
    xs, ys = reg.centers()
    if reg.mode == MODULUS_PLANE:
        rest = list(reg.slice_fixture) if reg.slice_fixture else [0j] * k
        return (complex(xs[ix]), complex(ys[iy]), *rest[2:])
    p = list(reg.slice_fixture)
    p[reg.free] = complex(xs[ix], ys[iy])
    return tuple(p)


def locate(labeling: ComponentLabeling, z):
    """Component hit by ``z``: an int label, ``None`` for a non-Fatou cell,
    or a ``("tile", tx, ty)`` virtual component outside the raster.

    On a modulus plane a point is placed by ``(|z1|, |z2|)``; on a complex
    slice by its free coordinate alone.
    """
    reg = labeling.raster.region
    if reg.mode == MODULUS_PLANE:
        x, y = abs(z[0]), abs(z[1])
    else:
        x, y = z[reg.free].real, z[reg.free].imag
    (x0, x1), (y0, y1) = reg.bounds
    nx, ny = reg.resolution
    tx = math.floor((x - x0) / (x1 - x0))
    ty = math.floor((y - y0) / (y1 - y0))
    if tx != 0 or ty != 0:
        return ("tile", tx, ty)
    ix = min(int((x - x0) / (x1 - x0) * nx), nx - 1)
    iy = min(int((y - y0) / (y1 - y0) * ny), ny - 1)
    lab = int(labeling.labels[iy, ix])
    return lab if lab >= 0 else None


def recurrence_test(G: Semigroup, labeling: ComponentLabeling, component_id: int,
                    cfg: ClassifierConfig = ClassifierConfig(), n_sequences: int = 8,
                    lengths=(2, 4, 8, 12), n_points: int = 16) -> RecurrenceReport:
    """Sampled recurrence probe for one component.

    Sequence ``s`` draws one seeded random word per length.  It counts as
    recurrent when some sample point returns into the component at three or
    more of the lengths.
    """
    if not 0 <= component_id < labeling.n_components:
        raise EmptyComponent(f"no component with id {component_id}")
    members = labeling.cells[component_id]
    if len(members) == 0:
        raise EmptyComponent(f"component {component_id} has no cells")
    lengths = tuple(int(x) for x in lengths)
    rng = keyed_rng(cfg.seed, component_id, stream=3)
    take = min(n_points, len(members))
    picks = members[np.sort(rng.choice(len(members), size=take, replace=False))]
    pts = [cell_point(labeling.raster, int(iy), int(ix), G.k) for iy, ix in picks]

    n_rec = 0
    n_esc = 0
    targets_by_length = [set() for _ in lengths]
    for s in range(n_sequences):
        returns = 0
        for li, length in enumerate(lengths):
            draw = keyed_rng(cfg.seed, s * len(lengths) + li, stream=4)
            w = tuple(int(x) for x in draw.integers(0, G.m, size=length))
            back = False
            for p in pts:
                img = eval_word(G, w, p, guard=cfg.R)
                if isinstance(img, EscapedToInfinity):
                    n_esc += 1
                    continue
                t = locate(labeling, img)
                if t is None:
                    continue
                targets_by_length[li].add(t)
                if t == component_id:
                    back = True
            returns += back
        if returns >= 3:
            n_rec += 1

    cumulative = []
    seen: set = set()
    for tset in targets_by_length:
        seen |= tset
        cumulative.append(len(seen))
    growing = len(lengths) >= 3 and all(b > a for a, b in zip(cumulative, cumulative[1:])) \
        and cumulative[0] > 0
    if n_sequences > 0 and n_rec == n_sequences:
        verdict = RECURRENT
    elif n_sequences > 0 and n_rec == 0 and growing and \
            not any(component_id in t for t in targets_by_length):
        verdict = WANDERING
    else:
        verdict = INCONCLUSIVE
    return RecurrenceReport(component_id, n_sequences, n_rec, n_esc, len(seen), verdict,
                            lengths, [sorted(map(str, t)) for t in targets_by_length])


# ---------------------------------------------------------------------------
# Limit maps
# ---------------------------------------------------------------------------

@dataclass
class LimitMapEstimate:
    label: str
    n: int
    samples: list
    rank: int
    ranks: list
    singular_values: list
    converged: bool


def _iterate_with_jacobian(F: PolyMap, z, n: int, J, bound: float):
    """``(F^n(z), D(F^n)(z), D(F^{n-1})(z))`` by the chain rule, or None."""
    z = tuple(complex(c) for c in z)
    P = np.eye(F.k, dtype=complex)
    prev = P
    for _ in range(n):
        A = J.evaluate(z)
        prev = P
        P = A @ P
        z = eval_map(F, z)
        if not max(abs(c) for c in z) <= bound:
            return None
    return z, P, prev


def numeric_rank(s: np.ndarray, rank_tol: float) -> int:
    """Singular values above ``rank_tol * max(s_max, 1)``.

    The floor of 1 keeps a uniformly contracting product (all singular
    values tending to 0) at rank 0.
    """
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s > rank_tol * max(float(s[0]), 1.0)))


def limit_rank(F: PolyMap, samples, n: int = 40, rank_tol: float = 1e-6,
               bound: float = 1e6) -> LimitMapEstimate:
    """Numeric rank of ``D(F^n)`` over samples; the estimate is the maximum."""
    samples = [tuple(complex(c) for c in z) for z in samples]
    if not samples:
        raise ValueError("limit_rank needs at least one sample")
    J = jacobian(F)
    ranks, svals = [], []
    converged = True
    for z in samples:
        out = _iterate_with_jacobian(F, z, n, J, bound)
        if out is None:
            converged = False
            continue
        _, P, prev = out
        s = np.linalg.svd(P, compute_uv=False)
        ranks.append(numeric_rank(s, rank_tol))
        svals.append(s.tolist())
        if np.linalg.norm(P - prev) > 1e-6 * (1 + np.linalg.norm(P)):
            converged = False
    rank = max(ranks) if ranks else 0
    return LimitMapEstimate(F.label, n, samples, rank, ranks, svals, converged and bool(ranks))


@dataclass
class ManifoldEstimate:
    cloud: list
    residuals: list
    period: Optional[int]
    kind: str            # "point", "line", "full" or "empty"
    center: tuple
    normal: Optional[tuple]
    fit_residual: float
    dimension: int


def _power_apply(F: PolyMap, z, times: int):
    for _ in range(times):
        z = eval_map(F, z)
    return z


def estimate_limit_manifold(F: PolyMap, samples, n: int = 40, residual_tol: float = 1e-6,
                            n_max: int = 4000, bound: float = 1e6,
                            max_period: int = 3) -> ManifoldEstimate:
    """Cloud of limits ``F^N(x)`` that are fixed by some ``F^l``, ``l <= 3``.

    Each sample is iterated at least ``n`` times and then until
    ``|F^l(x) - x| <= residual_tol`` for the smallest such period, up to
    ``n_max`` steps, then polished by ``n`` further periods.  The cloud is fitted by a point (diameter below
    ``10 * residual_tol``), otherwise by a complex affine subspace via total
    least squares; for k = 2 a one-dimensional fit is a line.
    """
    cloud, residuals, periods = [], [], []
    for x in samples:
        z = _power_apply(F, tuple(complex(c) for c in x), n)
        steps = n
        found = None
        while found is None and steps <= n_max:
            if not max(abs(c) for c in z) <= bound:
                break
            for l in range(1, max_period + 1):
                r = float(np.linalg.norm(np.subtract(_power_apply(F, z, l), z)))
                if r <= residual_tol:
                    found = (l, r)
                    break
            if found is None:
                z = _power_apply(F, z, max(n, 1))
                steps += max(n, 1)
        if found is not None:
            # polish: a further n steps only move the point closer to its limit
            w = _power_apply(F, z, max(n, 1) * found[0])
            if max(abs(c) for c in w) <= bound:
                z = w
                found = (found[0], float(np.linalg.norm(np.subtract(_power_apply(F, z, found[0]), z))))
            cloud.append(z)
            residuals.append(found[1])
            periods.append(found[0])
    k = F.k
    if not cloud:
        return ManifoldEstimate([], [], None, "empty", (), None, math.inf, -1)
    X = np.array(cloud, dtype=complex)
    center = X.mean(axis=0)
    period = max(set(periods), key=periods.count)
    diam = max(float(np.linalg.norm(a - b)) for a in X for b in X) if len(X) < 400 else \
        float(2 * np.max(np.linalg.norm(X - center, axis=1)))
    if diam < 10 * residual_tol:
        return ManifoldEstimate(cloud, residuals, period, "point", tuple(center), None,
                                diam, 0)
    _, s, vh = np.linalg.svd(X - center, full_matrices=True)
    scale = np.zeros(k)
    scale[:len(s)] = s / math.sqrt(len(X))
    dim = int(np.count_nonzero(scale > 10 * residual_tol))
    normal = None
    fit = 0.0
    if dim < k:
        normal = tuple(np.conj(vh[-1]))
        fit = float(scale[-1])
    kind = "line" if dim == 1 else ("full" if dim >= k else f"dim{dim}")
    return ManifoldEstimate(cloud, residuals, period, kind, tuple(center), normal, fit, dim)
