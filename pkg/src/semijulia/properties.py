"""Sampled checks of set-level statements about Fatou and Julia sets.

Every check returns a ``PropertyReport``: a violation count over the checked
samples, up to eight witnesses that reproduce under the embedded seed, and a
pass flag comparing the violation rate with an explicit threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .classify import ClassifierConfig, PointClass, classify_array
from .components import (ComponentLabeling, RECURRENT, locate, recurrence_test)
from .errors import NotCommuting, NotVolumePreserving, PreimageUnavailable
from .fixedpoints import preimages
from .gridscan import MODULUS_PLANE, Raster, Region, ReferenceSet, compare_rasters, reference_masks, scan
from .polyalg import PolyMap, eval_map, is_volume_preserving, jacobian
from .semigroup import EscapedToInfinity, Semigroup, eval_word, keyed_rng, power_subsemigroup

MAX_WITNESSES = 8


@dataclass
class PropertyReport:
    name: str
    n_checked: int
    n_violations: int
    witnesses: list
    passed: bool
    threshold: float
    seed: int
    n_excluded: int = 0
    notes: list = field(default_factory=list)

    @property
    def violation_rate(self) -> Optional[float]:
        return self.n_violations / self.n_checked if self.n_checked else None


def _report(name, checked, violations, witnesses, threshold, seed, excluded=0, notes=()):
    rate = violations / checked if checked else 0.0
    return PropertyReport(name, checked, violations, witnesses[:MAX_WITNESSES],
                          rate <= threshold, threshold, seed, excluded, list(notes))


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------

def julia_band(raster: Raster, eps: float) -> np.ndarray:
    """Cells whose center lies within ``eps`` of a non-Fatou cell center."""
    fatou = (raster.cells == int(PointClass.FatouBounded)) | \
            (raster.cells == int(PointClass.FatouEscaping))
    if not fatou.any():
        return np.ones(fatou.shape, dtype=bool)
    if fatou.all():
        return np.zeros(fatou.shape, dtype=bool)
    (x0, x1), (y0, y1) = raster.region.bounds
    nx, ny = raster.region.resolution
    dist = ndimage.distance_transform_edt(fatou, sampling=((y1 - y0) / ny, (x1 - x0) / nx))
    return dist <= eps


def _band(raster: Raster, eps: float, ref: Optional[ReferenceSet]) -> np.ndarray:
    if ref is not None:
        return reference_masks(raster.region, ref, eps)[1]
    return julia_band(raster, eps)


def sample_cell_point(region: Region, iy: int, ix: int, k: int, rng) -> tuple:
    """A point of the cell: random phases on a modulus plane, the center on a
    complex slice."""
    xs, ys = region.centers()
    if region.mode == MODULUS_PLANE:
        th = rng.uniform(0, 2 * np.pi, size=2)
        rest = list(region.slice_fixture) if region.slice_fixture else [0j] * k
        return (complex(xs[ix] * np.exp(1j * th[0])), complex(ys[iy] * np.exp(1j * th[1])),
                *rest[2:])
    p = list(region.slice_fixture)
    p[region.free] = complex(xs[ix], ys[iy])
    return tuple(p)


def _pick(mask: np.ndarray, n: int, rng) -> np.ndarray:
    idx = np.argwhere(mask)
    if len(idx) > n:
        idx = idx[np.sort(rng.choice(len(idx), size=n, replace=False))]
    return idx


def _verdicts(G, pts, cfg):
    if not pts:
        return np.zeros(0, dtype=np.int8)
    return classify_array(G, np.array(pts, dtype=complex), cfg, early_exit=True)[0]


# ---------------------------------------------------------------------------
# Invariance
# ---------------------------------------------------------------------------

def check_forward_invariance(G: Semigroup, raster: Raster, cfg: ClassifierConfig = ClassifierConfig(),
                             n_points: int = 200, threshold: float = 0.05, eps: float = 0.05,
                             ref: Optional[ReferenceSet] = None, seed: int = 0,
                             det_floor: float = 1e-8) -> PropertyReport:
    """Fatou points off the critical set should map to Fatou points.

    Samples Fatou cells outside the ``eps`` band (around ``ref``'s boundary
    if given, else around the raster's own non-Fatou cells), applies one
    generator per sample in turn, and counts images classified
    JuliaCandidate.
    """
    rng = keyed_rng(seed, 0, stream=10)
    fatou = np.isin(raster.cells, [int(PointClass.FatouBounded), int(PointClass.FatouEscaping)])
    band = _band(raster, eps, ref)
    cells = _pick(fatou & ~band, n_points, rng)
    jacs = [jacobian(g) for g in G.generators]
    pts, imgs, gens = [], [], []
    excluded = int(np.count_nonzero(fatou & band))
    for t, (iy, ix) in enumerate(cells):
        i = t % G.m
        p = sample_cell_point(raster.region, iy, ix, G.k, rng)
        if abs(np.linalg.det(jacs[i].evaluate(p))) <= det_floor:
            excluded += 1
            continue
        pts.append(p)
        imgs.append(eval_map(G.generators[i], p))
        gens.append(i)
    v = _verdicts(G, imgs, cfg)
    bad = [(pts[j], gens[j]) for j in np.nonzero(v == int(PointClass.JuliaCandidate))[0]]
    return _report("forward_invariance", len(pts), len(bad), bad, threshold, seed, excluded,
                   [f"{excluded} Fatou cells excluded (boundary band or critical set)"])


def check_backward_invariance(G: Semigroup, raster: Raster, cfg: ClassifierConfig = ClassifierConfig(),
                              n_points: int = 100, threshold: float = 0.05, seed: int = 0,
                              generators: Optional[Sequence[int]] = None) -> PropertyReport:
    """Julia points in a generator's image should have some Julia preimage.

    A sample counts as a violation only if every preimage classifies Fatou.
    Generators whose preimages cannot be enumerated exactly are skipped and
    named in the notes.
    """
    rng = keyed_rng(seed, 0, stream=11)
    julia = raster.cells == int(PointClass.JuliaCandidate)
    cells = _pick(julia, n_points, rng)
    gens = list(range(G.m)) if generators is None else list(generators)
    notes = []
    usable = []
    for i in gens:
        if G.generators[i].is_triangular():
            usable.append(i)
        else:
            notes.append(f"generator {i}: {PreimageUnavailable.__name__}, "
                         "no exact preimage solver for non-triangular maps")
    checked, bad = 0, []
    if not usable:
        return _report("backward_invariance", 0, 0, [], threshold, seed, len(cells), notes)
    for t, (iy, ix) in enumerate(cells):
        i = usable[t % len(usable)]
        q = sample_cell_point(raster.region, iy, ix, G.k, rng)
        try:
            pre, _ = preimages(G.generators[i], q)
        except PreimageUnavailable as exc:
            notes.append(f"generator {i} at {q}: {exc}")
            continue
        if not pre:
            continue
        v = _verdicts(G, [tuple(z) for z in pre], cfg)
        checked += 1
        if np.all((v == int(PointClass.FatouBounded)) | (v == int(PointClass.FatouEscaping))):
            bad.append((q, i))
    return _report("backward_invariance", checked, len(bad), bad, threshold, seed, 0, notes)


# ---------------------------------------------------------------------------
# Raster equalities
# ---------------------------------------------------------------------------

def raster_disagreement(a: Raster, b: Raster, eps: float, ref: Optional[ReferenceSet] = None):
    """``(n_compared, n_disagree)`` off the union of both rasters' bands."""
    band = _band(a, eps, ref) | _band(b, eps, ref)
    und = int(PointClass.Undetermined)
    use = (a.cells != und) & (b.cells != und) & ~band
    ja = a.cells == int(PointClass.JuliaCandidate)
    jb = b.cells == int(PointClass.JuliaCandidate)
    return int(np.count_nonzero(use)), int(np.count_nonzero(use & (ja != jb)))


def _raster_equality(name, A, B, region, cfg, eps, threshold, ref, workers):
    ra = scan(A, region, cfg, workers)
    rb = ra if B is A else scan(B, region, cfg, workers)
    compare_rasters(ra, rb)     # geometry check
    n, d = raster_disagreement(ra, rb, eps, ref)
    wit = [tuple(int(x) for x in c) for c in np.argwhere(
        (ra.cells == int(PointClass.JuliaCandidate)) != (rb.cells == int(PointClass.JuliaCandidate)))[:MAX_WITNESSES]]
    rep = _report(name, n, d, wit, threshold, cfg.seed, ra.cells.size - n,
                  ["witnesses are (iy, ix) cells where the Julia verdicts differ (band included)"])
    return rep, ra, rb


def check_finite_index_equality(G: Semigroup, l: Sequence[int], region: Region,
                                cfg: ClassifierConfig = ClassifierConfig(), eps: float = 0.05,
                                threshold: float = 0.05, ref: Optional[ReferenceSet] = None,
                                workers: int = 1) -> PropertyReport:
    """Rasters of ``G`` and of ``<phi_i^{l_i}>`` should agree off the band."""
    H = power_subsemigroup(G, l)
    H_is_G = all(x == 1 for x in l)
    rep, _, _ = _raster_equality("finite_index_equality", G, G if H_is_G else H, region,
                                 cfg, eps, threshold, ref, workers)
    return rep


def check_commuting(F: PolyMap, H: PolyMap, n_points: int = 64, tol: float = 1e-10,
                    seed: int = 0) -> bool:
    """``F o H == H o F`` at seeded points of the unit polydisc."""
    rng = keyed_rng(seed, 0, stream=12)
    k = F.k
    r = np.sqrt(rng.uniform(0, 1, size=(n_points, k)))
    pts = r * np.exp(2j * np.pi * rng.uniform(0, 1, size=(n_points, k)))
    for p in pts:
        a = np.array(eval_map(F, eval_map(H, tuple(p))))
        b = np.array(eval_map(H, eval_map(F, tuple(p))))
        if np.linalg.norm(a - b) > tol * (1 + np.linalg.norm(a)):
            return False
    return True


def check_power_tuple_independence(G: Semigroup, l: Sequence[int], l2: Sequence[int],
                                   region: Region, cfg: ClassifierConfig = ClassifierConfig(),
                                   eps: float = 0.05, threshold: float = 0.05,
                                   ref: Optional[ReferenceSet] = None,
                                   workers: int = 1) -> PropertyReport:
    """For commuting generators, rasters of ``G_l`` and ``G_l2`` should agree."""
    gens = G.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            if not check_commuting(gens[i], gens[j]):
                raise NotCommuting(f"generators {i} and {j} do not commute")
    A = power_subsemigroup(G, l)
    B = A if tuple(l) == tuple(l2) else power_subsemigroup(G, l2)
    rep, _, _ = _raster_equality("power_tuple_independence", A, B, region, cfg, eps,
                                 threshold, ref, workers)
    return rep


# ---------------------------------------------------------------------------
# Component-level checks
# ---------------------------------------------------------------------------

def boundary_cells(labeling: ComponentLabeling, component_id: int) -> np.ndarray:
    """Cells of the component with a 4-neighbour outside it (raster edges
    do not count)."""
    lab = labeling.labels
    inside = lab == component_id
    edge = np.zeros_like(inside)
    for axis in (0, 1):
        for shift in (1, -1):
            nb = np.roll(lab, shift, axis=axis)
            diff = inside & (nb != component_id)
            if shift == 1:
                sl = (slice(0, 1), slice(None)) if axis == 0 else (slice(None), slice(0, 1))
            else:
                sl = (slice(-1, None), slice(None)) if axis == 0 else (slice(None), slice(-1, None))
            diff[sl] = False
            edge |= diff
    return np.argwhere(edge)


def _cell_index(labeling: ComponentLabeling, z):
    reg = labeling.raster.region
    if reg.mode == MODULUS_PLANE:
        x, y = abs(z[0]), abs(z[1])
    else:
        x, y = z[reg.free].real, z[reg.free].imag
    (x0, x1), (y0, y1) = reg.bounds
    nx, ny = reg.resolution
    ix = int(np.floor((x - x0) / (x1 - x0) * nx))
    iy = int(np.floor((y - y0) / (y1 - y0) * ny))
    if 0 <= ix < nx and 0 <= iy < ny:
        return iy, ix
    return None


def check_boundary_containment(G: Semigroup, labeling: ComponentLabeling,
                               n_boundary_cells: int = 64, threshold: float = 0.05,
                               component_ids: Optional[Sequence[int]] = None,
                               seed: int = 0, n_interior: int = 16) -> PropertyReport:
    """Boundary cells of a component should map near the boundary of the
    component that receives the component's interior.

    For each generator the receiving component is the most common label hit
    by images of interior samples.  A boundary cell passes when some
    generator sends it within one cell of that component's boundary.  Images
    leaving the raster cannot be judged and are excluded.
    """
    rng = keyed_rng(seed, 0, stream=13)
    ids = range(labeling.n_components) if component_ids is None else component_ids
    raster = labeling.raster
    checked, excluded, bad = 0, 0, []
    edge_cache = {}

    def near_edge(t, cell):
        if t not in edge_cache:
            m = np.zeros(labeling.labels.shape, dtype=bool)
            e = boundary_cells(labeling, t)
            if len(e):
                m[e[:, 0], e[:, 1]] = True
            edge_cache[t] = ndimage.binary_dilation(m, structure=np.ones((3, 3), bool))
        return bool(edge_cache[t][cell])

    for c in ids:
        edge = boundary_cells(labeling, c)
        if len(edge) == 0:
            continue
        members = labeling.cells[c]
        inner = members[np.sort(rng.choice(len(members), size=min(n_interior, len(members)),
                                           replace=False))]
        targets = []
        for g in G.generators:
            hits = []
            for iy, ix in inner:
                z = sample_cell_point(raster.region, iy, ix, G.k, rng)
                t = locate(labeling, eval_map(g, z))
                if isinstance(t, int):
                    hits.append(t)
            targets.append(max(set(hits), key=hits.count) if hits else None)
        take = edge if len(edge) <= n_boundary_cells else \
            edge[np.sort(rng.choice(len(edge), size=n_boundary_cells, replace=False))]
        for iy, ix in take:
            z = sample_cell_point(raster.region, iy, ix, G.k, rng)
            judged, ok = False, False
            for g, t in zip(G.generators, targets):
                if t is None:
                    continue
                cell = _cell_index(labeling, eval_map(g, z))
                if cell is None:
                    continue
                judged = True
                if near_edge(t, cell):
                    ok = True
                    break
            if not judged:
                excluded += 1
                continue
            checked += 1
            if not ok:
                bad.append((z, int(c)))
    return _report("boundary_containment", checked, len(bad), bad, threshold, seed, excluded,
                   ["approximate: cell-resolution boundaries, images off the raster excluded"])


def check_volume_divergence(G: Semigroup, labeling: ComponentLabeling, component_id: int,
                            cfg: ClassifierConfig = ClassifierConfig(), n_sequences: int = 32,
                            max_length: int = 48, n_points: int = 8,
                            seed: int = 0) -> PropertyReport:
    """For volume-preserving generators: either some sampled word sends a
    point of the component beyond ``R``, or the component tests recurrent."""
    for i, g in enumerate(G.generators):
        if not is_volume_preserving(g):
            raise NotVolumePreserving(f"generator {i} does not have constant unit-modulus Jacobian")
    rng = keyed_rng(seed, component_id, stream=14)
    members = labeling.cells[component_id]
    cells = members[np.sort(rng.choice(len(members), size=min(n_points, len(members)),
                                       replace=False))]
    pts = [sample_cell_point(labeling.raster.region, iy, ix, G.k, rng) for iy, ix in cells]
    witness = None
    tried = 0
    for s in range(n_sequences):
        draw = keyed_rng(seed, s, stream=15)
        w = tuple(int(x) for x in draw.integers(0, G.m, size=max_length))
        tried += 1
        for p in pts:
            if isinstance(eval_word(G, w, p, guard=cfg.R), EscapedToInfinity):
                witness = (p, w)
                break
        if witness is not None:
            break
    notes = []
    if witness is not None:
        notes.append("escaping sequence found")
        return _report("volume_divergence", tried, 0, [witness], 0.0, seed, 0, notes)
    rec = recurrence_test(G, labeling, component_id, cfg)
    notes.append(f"no escaping sequence among {tried}; recurrence test: {rec.verdict}")
    ok = rec.verdict == RECURRENT
    return _report("volume_divergence", tried, 0 if ok else 1, [], 0.0, seed, 0, notes)


def check_local_boundedness(G: Semigroup, labeling: ComponentLabeling, component_id: int,
                            cfg: ClassifierConfig = ClassifierConfig(), n_words: int = 64,
                            n_points: int = 16, bound: Optional[float] = None,
                            seed: int = 0) -> PropertyReport:
    """Premise only: orbit norms over sampled words stay bounded on a
    compact sample of the component.  Says nothing about the conclusions
    drawn from this premise."""
    bound = cfg.R if bound is None else bound
    rng = keyed_rng(seed, component_id, stream=16)
    members = labeling.cells[component_id]
    cells = members[np.sort(rng.choice(len(members), size=min(n_points, len(members)),
                                       replace=False))]
    pts = [sample_cell_point(labeling.raster.region, iy, ix, G.k, rng) for iy, ix in cells]
    bad, checked, worst = [], 0, 0.0
    for s in range(n_words):
        draw = keyed_rng(seed, s, stream=17)
        w = tuple(int(x) for x in draw.integers(0, G.m, size=int(draw.integers(1, cfg.L + 1))))
        for p in pts:
            checked += 1
            img = eval_word(G, w, p, guard=bound)
            if isinstance(img, EscapedToInfinity):
                bad.append((p, w))
            else:
                worst = max(worst, max(abs(c) for c in img))
    return _report("local_boundedness", checked, len(bad), bad, 0.0, seed, 0,
                   ["premise only", f"largest sampled image norm {worst:.4g}"])
