import csv

import numpy as np
import pytest

from semijulia.classify import ClassifierConfig, PointClass
from semijulia.errors import BudgetExceeded, GeometryMismatch
from semijulia.gridscan import (COMPLEX_SLICE, Raster, Region, aggregate, compare, compare_rasters,
                                example1_reference, membership, modulus_region, ppm_bytes,
                                reference_masks, render_ppm, scan, slice_region,
                                squaring_reference, write_csv)
from semijulia.semigroup import Semigroup

from conftest import pmap

E1 = Semigroup((pmap("z1^2", "z2^2"), pmap("0.5*z1^2", "z2^2")))
SQ = Semigroup((pmap("z1^2", "z2^2"),))


@pytest.fixture(scope="module")
def e1_raster():
    return scan(E1, modulus_region(((0, 3), (0, 2)), (100, 100), 4))


def test_example1_raster_traces_reference(e1_raster):
    rep = compare(e1_raster, example1_reference(2.0), 0.05)
    assert rep.agreement >= 0.9
    assert e1_raster.count(PointClass.JuliaCandidate) > 1000
    assert rep.confusion["julia_member"] > 0


def test_resolution_refinement(e1_raster):
    coarse = scan(E1, modulus_region(((0, 3), (0, 2)), (50, 50), 4))
    ref = example1_reference(2.0)
    assert compare(e1_raster, ref).agreement >= compare(coarse, ref).agreement - 0.02


def test_phase_offset_symmetry():
    reg = modulus_region(((0, 3), (0, 2)), (50, 50), 4)
    a = scan(E1, reg)
    b = scan(E1, modulus_region(((0, 3), (0, 2)), (50, 50), 4, offset=0.3))
    assert np.mean(a.cells == b.cells) >= 0.98


def test_single_map_julia_on_unit_circles():
    # odd resolution over [0, 2] puts a column and a row of centers on |z| = 1
    r = scan(SQ, modulus_region(((0, 2), (0, 2)), (101, 101), 4))
    xs, ys = r.region.centers()
    assert xs[50] == 1.0 and ys[50] == 1.0
    J = int(PointClass.JuliaCandidate)
    assert np.all(r.cells[:51, 50] == J)
    assert np.all(r.cells[50, :51] == J)
    assert compare(r, squaring_reference(), 0.05).agreement == 1.0


def test_escape_zone_all_escaping():
    r = scan(E1, modulus_region(((5, 6), (0, 2)), (10, 10), 4))
    assert r.count(PointClass.FatouEscaping) == 100


def test_membership_examples():
    ref = example1_reference(2.0)
    assert membership(ref, (1.5, 0.3), moduli=True)
    assert not membership(ref, (0.5, 0.5), moduli=True)
    assert membership(ref, (0.5, 1.0), moduli=True)
    assert membership(ref, (1.5j, -0.3), moduli=False)


def _raster_from(region, cells):
    return Raster(region, cells.astype(np.int8), np.zeros(cells.shape), "x", "y")


def test_compare_trivial_cases():
    reg = modulus_region(((0, 3), (0, 2)), (40, 30), 1)
    ref = example1_reference(2.0)
    member, _ = reference_masks(reg, ref, 0.05)
    perfect = np.where(member, int(PointClass.JuliaCandidate), int(PointClass.FatouBounded))
    assert compare(_raster_from(reg, perfect), ref).agreement == 1.0
    und = np.full(member.shape, int(PointClass.Undetermined))
    rep = compare(_raster_from(reg, und), ref)
    assert rep.n_decided == 0 and rep.agreement is None


def test_compare_rasters_geometry():
    a = _raster_from(modulus_region(((0, 1), (0, 1)), (4, 4)), np.zeros((4, 4)))
    b = _raster_from(modulus_region(((0, 2), (0, 1)), (4, 4)), np.zeros((4, 4)))
    with pytest.raises(GeometryMismatch):
        compare_rasters(a, b)
    assert compare_rasters(a, a) == (0.0, 16)


def test_aggregate_rule():
    B, E, J, U = (int(c) for c in PointClass.__members__.values())
    v = np.array([[B, B, B], [B, E, B], [B, J, E], [U, B, B], [E, E, E]])
    np.testing.assert_array_equal(aggregate(v), [B, U, J, U, E])


def test_ppm_and_csv(tmp_path):
    reg = modulus_region(((0, 1), (0, 1)), (2, 2))
    cells = np.array([[0, 1], [2, 3]])
    r = _raster_from(reg, cells)
    data = ppm_bytes(r)
    header = b"P6\n2 2\n255\n"
    assert data.startswith(header) and len(data) - len(header) == 12
    # top row of the image is the highest y (row iy = 1)
    assert data[len(header):len(header) + 3] == bytes((0, 0, 0))
    render_ppm(r, tmp_path / "a.ppm")
    assert (tmp_path / "a.ppm").read_bytes() == data
    write_csv(r, tmp_path / "a.csv")
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == ["ix", "iy", "x_center", "y_center", "class", "score"]
    assert rows[1] == ["0", "0", "0.25", "0.25", "FatouBounded", "0.000000"]
    assert len(rows) == 5


def test_workers_bitwise_identical():
    reg = slice_region(((-2, 2), (-1, 1)), (40, 20), (0, 0.5))
    C = Semigroup((pmap("2*z1^2 - 1", "z2^2"), pmap("z1", "z2^2")))
    a = scan(C, reg, workers=1)
    b = scan(C, reg, workers=3)
    np.testing.assert_array_equal(a.cells, b.cells)
    np.testing.assert_array_equal(a.scores, b.scores)
    assert ppm_bytes(a) == ppm_bytes(b)


def test_region_validation():
    with pytest.raises(ValueError):
        Region(COMPLEX_SLICE, ((0, 1), (0, 1)), (4, 4))
    with pytest.raises(ValueError):
        modulus_region(((-1, 1), (0, 1)), (4, 4))
    with pytest.raises(BudgetExceeded):
        scan(E1, modulus_region(((0, 1), (0, 1)), (5000, 5000)))


def test_fingerprints_track_inputs():
    reg = modulus_region(((0, 1), (0, 1)), (3, 3), 1)
    a = scan(E1, reg)
    b = scan(E1, reg, ClassifierConfig(seed=1))
    c = scan(SQ, reg)
    assert a.config_fingerprint != b.config_fingerprint
    assert a.generator_fingerprint != c.generator_fingerprint
    assert a.generator_fingerprint == b.generator_fingerprint
