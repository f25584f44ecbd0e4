"""Region scans, closed-form reference sets, and raster output.

A ``ModulusPlane`` region has axes ``(|z1|, |z2|)``; each cell classifies
``phase_samples`` points sharing the cell-center moduli.  A ``ComplexSlice``
region varies one coordinate over a rectangle in C and holds the others fixed.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classify import ClassifierConfig, PointClass, classify_array
from .errors import BudgetExceeded, DimensionMismatch, GeometryMismatch, SemiJuliaError
from .polyalg import to_expression
from .semigroup import Semigroup

MAX_CELLS = 10 ** 7

MODULUS_PLANE = "ModulusPlane"
COMPLEX_SLICE = "ComplexSlice"

PALETTE = {
    PointClass.FatouBounded: (0, 160, 0),
    PointClass.FatouEscaping: (0, 64, 224),
    PointClass.JuliaCandidate: (0, 0, 0),
    PointClass.Undetermined: (128, 128, 128),
}


class IoFailure(SemiJuliaError, OSError):
    pass


@dataclass(frozen=True)
class Region:
    """Rectangle ``bounds = ((x_lo, x_hi), (y_lo, y_hi))`` split into
    ``resolution = (nx, ny)`` cells.

    For ``ComplexSlice``, ``slice_fixture`` gives every coordinate of the
    point and ``free`` names the one replaced by ``x + iy``.  For
    ``ModulusPlane``, coordinates past the second are taken from
    ``slice_fixture`` when it is given, else zero.
    """

    mode: str
    bounds: tuple
    resolution: tuple
    phase_samples: int = 1
    slice_fixture: tuple = ()
    free: int = 0
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.mode not in (MODULUS_PLANE, COMPLEX_SLICE):
            raise ValueError(f"unknown region mode {self.mode!r}")
        (x0, x1), (y0, y1) = self.bounds
        object.__setattr__(self, "bounds", ((float(x0), float(x1)), (float(y0), float(y1))))
        if not (x0 < x1 and y0 < y1):
            raise ValueError("region bounds need low < high on both axes")
        nx, ny = (int(n) for n in self.resolution)
        object.__setattr__(self, "resolution", (nx, ny))
        if nx < 2 or ny < 2:
            raise ValueError("resolution must be at least 2 x 2")
        if self.phase_samples < 1:
            raise ValueError("phase_samples must be >= 1")
        object.__setattr__(self, "slice_fixture", tuple(complex(c) for c in self.slice_fixture))
        if self.mode == COMPLEX_SLICE:
            if not self.slice_fixture:
                raise ValueError("a ComplexSlice needs slice_fixture")
            if not 0 <= self.free < len(self.slice_fixture):
                raise ValueError("free coordinate outside slice_fixture")
        if self.mode == MODULUS_PLANE and min(self.bounds[0][0], self.bounds[1][0]) < 0:
            raise ValueError("moduli must be nonnegative")

    @property
    def n_cells(self) -> int:
        return self.resolution[0] * self.resolution[1]

    def centers(self):
        """Cell-center coordinates ``(xs, ys)`` along each axis."""
        (x0, x1), (y0, y1) = self.bounds
        nx, ny = self.resolution
        xs = x0 + (np.arange(nx) + 0.5) * ((x1 - x0) / nx)
        ys = y0 + (np.arange(ny) + 0.5) * ((y1 - y0) / ny)
        return xs, ys

    def dimension(self, default: int = 2) -> int:
        if self.mode == COMPLEX_SLICE:
            return len(self.slice_fixture)
        return max(2, len(self.slice_fixture)) if self.slice_fixture else default

    def sample_points(self, k: int) -> np.ndarray:
        """Points of shape ``(ny, nx, samples, k)`` in row-major cell order."""
        xs, ys = self.centers()
        nx, ny = self.resolution
        if self.mode == COMPLEX_SLICE:
            if len(self.slice_fixture) != k:
                raise DimensionMismatch(f"slice fixture has {len(self.slice_fixture)} "
                                        f"coordinates for maps of C^{k}")
            pts = np.empty((ny, nx, 1, k), dtype=complex)
            pts[...] = np.array(self.slice_fixture)
            pts[:, :, 0, self.free] = xs[None, :] + 1j * ys[:, None]
            return pts
        if k < 2:
            raise DimensionMismatch("a ModulusPlane needs k >= 2")
        P = self.phase_samples
        rest = np.zeros(k, dtype=complex)
        if self.slice_fixture:
            if len(self.slice_fixture) != k:
                raise DimensionMismatch("slice fixture length differs from k")
            rest[:] = self.slice_fixture
        j = np.arange(P)
        ph1 = np.exp(1j * (self.phase_offset + 2 * np.pi * j / P))
        ph2 = np.exp(1j * (self.phase_offset + 2 * np.pi * (j + 0.5) / P))
        pts = np.empty((ny, nx, P, k), dtype=complex)
        pts[...] = rest
        pts[:, :, :, 0] = xs[None, :, None] * ph1[None, None, :]
        pts[:, :, :, 1] = ys[:, None, None] * ph2[None, None, :]
        return pts


@dataclass
class Raster:
    """Classified grid; ``cells[iy, ix]`` holds a ``PointClass`` value."""

    region: Region
    cells: np.ndarray
    scores: np.ndarray
    config_fingerprint: str
    generator_fingerprint: str

    @property
    def shape(self):
        return self.cells.shape

    def count(self, cls: PointClass) -> int:
        return int(np.count_nonzero(self.cells == int(cls)))


def generator_fingerprint(G: Semigroup) -> str:
    text = ";".join(",".join(to_expression(c) for c in g.components) for g in G.generators)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def config_fingerprint(cfg: ClassifierConfig, region: Optional[Region] = None) -> str:
    items = sorted(asdict(cfg).items())
    if region is not None:
        items.append(("region", repr(region)))
    return hashlib.sha256(repr(items).encode()).hexdigest()[:16]


def aggregate(verdicts: np.ndarray) -> np.ndarray:
    """Combine per-sample verdicts along the last axis.

    JuliaCandidate if any sample says so; a unanimous Fatou kind is kept;
    anything else is Undetermined.
    """
    v = np.asarray(verdicts)
    out = np.full(v.shape[:-1], int(PointClass.Undetermined), dtype=np.int8)
    for cls in (PointClass.FatouBounded, PointClass.FatouEscaping):
        out[np.all(v == int(cls), axis=-1)] = int(cls)
    out[np.any(v == int(PointClass.JuliaCandidate), axis=-1)] = int(PointClass.JuliaCandidate)
    return out


def scan(G: Semigroup, region: Region, cfg: ClassifierConfig = ClassifierConfig(),
         workers: int = 1) -> Raster:
    """Classify every cell of ``region``.  Bitwise identical for any ``workers``."""
    if region.n_cells > MAX_CELLS:
        raise BudgetExceeded(f"{region.n_cells} cells exceed the limit of {MAX_CELLS}")
    pts = region.sample_points(G.k)
    ny, nx, S, k = pts.shape
    verdict, _, _, max_sep, _ = classify_array(G, pts.reshape(-1, k), cfg,
                                               workers=workers, early_exit=False)
    cells = aggregate(verdict.reshape(ny, nx, S))
    with np.errstate(divide="ignore"):
        logs = np.where(max_sep > 1.0, np.log(np.maximum(max_sep, 1.0)), 0.0)
    scores = logs.reshape(ny, nx, S).max(axis=-1)
    return Raster(region, cells, scores, config_fingerprint(cfg, region),
                  generator_fingerprint(G))


# ---------------------------------------------------------------------------
# Closed-form reference sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    """One coordinate constraint.

    ``kind`` is ``"interval"`` (``lo <= |z| <= hi``), ``"circle"``
    (``|z| = lo``), ``"segment"`` (``z`` real in ``[lo, hi]``) or ``"disk"``
    (``|z| <= lo``).
    """

    kind: str
    lo: float
    hi: float = math.nan

    def __post_init__(self):
        if self.kind not in ("interval", "circle", "segment", "disk"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind in ("interval", "segment") and not self.lo <= self.hi:
            raise ValueError("factor needs lo <= hi")
        if self.kind != "segment" and self.lo < 0:
            raise ValueError("radii must be nonnegative")

    @property
    def modulus_range(self):
        if self.kind == "interval":
            return self.lo, self.hi
        if self.kind == "circle":
            return self.lo, self.lo
        if self.kind == "disk":
            return 0.0, self.lo
        raise GeometryMismatch("a real segment is not described by moduli")

    def set_distance(self, u: complex, moduli: bool) -> float:
        if self.kind == "segment":
            if moduli:
                raise GeometryMismatch("a real segment is not described by moduli")
            x = min(max(u.real, self.lo), self.hi)
            return abs(u - x)
        rho = abs(u.real) if moduli else abs(u)
        a, b = self.modulus_range
        return max(a - rho, rho - b, 0.0)

    def boundary_distance(self, u: complex, moduli: bool) -> float:
        if self.kind == "segment":
            return self.set_distance(u, moduli)
        rho = abs(u.real) if moduli else abs(u)
        a, b = self.modulus_range
        d = abs(rho - b)
        if a > 0:
            d = min(d, abs(rho - a))
        return d

    def contains(self, u: complex, moduli: bool) -> bool:
        return self.set_distance(u, moduli) == 0.0


@dataclass(frozen=True)
class ReferenceSet:
    """Finite union of products; each term holds one ``Factor`` per coordinate."""

    terms: tuple

    def __post_init__(self):
        terms = tuple(tuple(t) for t in self.terms)
        if not terms:
            raise ValueError("a reference set needs at least one term")
        k = len(terms[0])
        if any(len(t) != k for t in terms):
            raise DimensionMismatch("all terms need the same number of factors")
        object.__setattr__(self, "terms", terms)

    @property
    def k(self) -> int:
        return len(self.terms[0])

    def _check(self, point) -> list:
        pt = [complex(c) for c in point]
        if len(pt) != self.k:
            raise DimensionMismatch(f"point of length {len(pt)} for a set in C^{self.k}")
        return pt

    def contains(self, point, moduli: bool = False) -> bool:
        pt = self._check(point)
        return any(all(f.contains(u, moduli) for f, u in zip(t, pt)) for t in self.terms)

    def boundary_distance(self, point, moduli: bool = False) -> float:
        """Euclidean distance to the nearest term boundary.

        The boundary of a product is reached by moving one factor to its own
        boundary while the others move into their sets.  For a union this is
        an upper bound on the distance to nearby boundary points, which is the
        conservative direction for band exclusion.
        """
        pt = self._check(point)
        best = math.inf
        for t in self.terms:
            sd = [f.set_distance(u, moduli) for f, u in zip(t, pt)]
            tot = sum(d * d for d in sd)
            for i, (f, u) in enumerate(zip(t, pt)):
                bd = f.boundary_distance(u, moduli)
                best = min(best, math.sqrt(bd * bd + tot - sd[i] * sd[i]))
        return best


def membership(ref: ReferenceSet, point, moduli: bool = False) -> bool:
    """Closed-set membership of a point, or of a modulus tuple when ``moduli``."""
    return ref.contains(point, moduli)


def example1_reference(a: float = 2.0) -> ReferenceSet:
    """Julia set of ``<(z1^2, z2^2), (z1^2/a, z2^2)>`` for ``|a| > 1``."""
    return ReferenceSet((
        (Factor("disk", 1.0), Factor("circle", 1.0)),
        (Factor("interval", 1.0, abs(a)), Factor("disk", 1.0)),
    ))


def squaring_reference() -> ReferenceSet:
    """Julia set of the single map ``(z1^2, z2^2)``."""
    return ReferenceSet((
        (Factor("circle", 1.0), Factor("disk", 1.0)),
        (Factor("disk", 1.0), Factor("circle", 1.0)),
    ))


def chebyshev_reference() -> ReferenceSet:
    """Julia set of the family ``(T_i(z1), z2^2)``, ``i >= 0``."""
    return ReferenceSet(((Factor("segment", -1.0, 1.0), Factor("disk", 1.0)),))


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    agreement: Optional[float]
    n_decided: int
    n_excluded: int
    confusion: dict = field(default_factory=dict)
    eps: float = 0.05


def cell_points(region: Region, k: int):
    """Yield ``(iy, ix, point, moduli_flag)`` with the cell-center point used
    for reference comparison."""
    xs, ys = region.centers()
    if region.mode == MODULUS_PLANE:
        rest = list(region.slice_fixture) if region.slice_fixture else [0j] * k
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                yield iy, ix, [complex(x), complex(y)] + rest[2:], True
    else:
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                p = list(region.slice_fixture)
                p[region.free] = complex(x, y)
                yield iy, ix, p, False


def reference_masks(region: Region, ref: ReferenceSet, eps: float):
    """Boolean ``(member, in_band)`` grids for the cell centers."""
    nx, ny = region.resolution
    member = np.zeros((ny, nx), dtype=bool)
    band = np.zeros((ny, nx), dtype=bool)
    k = region.dimension(ref.k)
    if k != ref.k:
        raise GeometryMismatch(f"region lives in C^{k}, reference set in C^{ref.k}")
    for iy, ix, p, moduli in cell_points(region, k):
        try:
            member[iy, ix] = ref.contains(p, moduli)
            band[iy, ix] = ref.boundary_distance(p, moduli) <= eps
        except DimensionMismatch as exc:
            raise GeometryMismatch(str(exc)) from exc
    return member, band


def compare(raster: Raster, ref: ReferenceSet, eps: float = 0.05) -> ComparisonReport:
    """Score decided off-band cells: JuliaCandidate should be a member,
    Fatou classes should not.  Undetermined cells are not decided."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    member, band = reference_masks(raster.region, ref, eps)
    cells = raster.cells
    decided = cells != int(PointClass.Undetermined)
    use = decided & ~band
    julia = cells == int(PointClass.JuliaCandidate)
    confusion = {
        "julia_member": int(np.count_nonzero(use & julia & member)),
        "julia_nonmember": int(np.count_nonzero(use & julia & ~member)),
        "fatou_member": int(np.count_nonzero(use & ~julia & member)),
        "fatou_nonmember": int(np.count_nonzero(use & ~julia & ~member)),
    }
    n = int(np.count_nonzero(use))
    agree = confusion["julia_member"] + confusion["fatou_nonmember"]
    return ComparisonReport(agree / n if n else None, n, int(np.count_nonzero(band)),
                            confusion, eps)


def compare_rasters(a: Raster, b: Raster, ref: Optional[ReferenceSet] = None,
                    eps: float = 0.05):
    """Fraction of cells where two rasters disagree on Julia-vs-Fatou.

    Cells undetermined in either raster, and cells within ``eps`` of the
    boundary of ``ref`` when it is given, are skipped.  Returns
    ``(disagreement or None, n_compared)``.
    """
    if a.region.bounds != b.region.bounds or a.region.resolution != b.region.resolution \
            or a.region.mode != b.region.mode:
        raise GeometryMismatch("rasters cover different regions")
    und = int(PointClass.Undetermined)
    use = (a.cells != und) & (b.cells != und)
    if ref is not None:
        _, band = reference_masks(a.region, ref, eps)
        use &= ~band
    ja = a.cells == int(PointClass.JuliaCandidate)
    jb = b.cells == int(PointClass.JuliaCandidate)
    n = int(np.count_nonzero(use))
    if n == 0:
        return None, 0
    return int(np.count_nonzero(use & (ja != jb))) / n, n


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def ppm_bytes(raster: Raster) -> bytes:
    """P6 image; the top row is the highest ``y``."""
    ny, nx = raster.cells.shape
    lut = np.zeros((4, 3), dtype=np.uint8)
    for cls, rgb in PALETTE.items():
        lut[int(cls)] = rgb
    pix = lut[raster.cells[::-1].astype(np.intp)]
    return f"P6\n{nx} {ny}\n255\n".encode("ascii") + pix.tobytes()


def render_ppm(raster: Raster, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(ppm_bytes(raster))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def csv_text(raster: Raster) -> str:
    """Columns ``ix, iy, x_center, y_center, class, score``; rows by ``iy``
    then ``ix``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ix", "iy", "x_center", "y_center", "class", "score"])
    xs, ys = raster.region.centers()
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            w.writerow([ix, iy, repr(float(x)), repr(float(y)),
                        PointClass(int(raster.cells[iy, ix])).name,
                        f"{raster.scores[iy, ix]:.6f}"])
    return buf.getvalue()


def write_csv(raster: Raster, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(raster))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def modulus_region(bounds: Sequence, resolution: Sequence, phases: int = 4,
                   offset: float = 0.0) -> Region:
    return Region(MODULUS_PLANE, tuple(map(tuple, bounds)), tuple(resolution),
                  phase_samples=phases, phase_offset=offset)


def slice_region(bounds: Sequence, resolution: Sequence, fixture: Sequence,
                 free: int = 0) -> Region:
    return Region(COMPLEX_SLICE, tuple(map(tuple, bounds)), tuple(resolution),
                  slice_fixture=tuple(fixture), free=free)
