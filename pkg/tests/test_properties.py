import math

import numpy as np
import pytest

from semijulia.classify import ClassifierConfig, PointClass, classify_array
from semijulia.components import label_components
from semijulia.errors import NotCommuting, NotVolumePreserving
from semijulia.fixedpoints import preimages
from semijulia.gridscan import example1_reference, modulus_region, scan, squaring_reference
from semijulia.properties import (check_backward_invariance, check_boundary_containment,
                                  check_commuting, check_finite_index_equality,
                                  check_forward_invariance, check_local_boundedness,
                                  check_power_tuple_independence, check_volume_divergence,
                                  julia_band)
from semijulia.semigroup import Semigroup

from conftest import pmap

F = pmap("z1^2", "z2^2")
G_ = pmap("0.5*z1^2", "z2^2")
E1 = Semigroup((F, G_))
SQ = Semigroup((F,))
REG = modulus_region(((0, 3), (0, 2)), (60, 40), 4)


@pytest.fixture(scope="module")
def e1():
    return scan(E1, REG)


def test_forward_invariance_example1(e1):
    rep = check_forward_invariance(E1, e1, n_points=100, ref=example1_reference(2.0))
    assert rep.passed and rep.n_checked > 50
    again = check_forward_invariance(E1, e1, n_points=100, ref=example1_reference(2.0))
    assert again == rep


def test_forward_invariance_escape_zone():
    r = scan(SQ, modulus_region(((1.2, 3), (1.2, 2)), (10, 10), 4))
    rep = check_forward_invariance(SQ, r, n_points=50)
    assert rep.n_violations == 0 and rep.n_checked > 0


def test_band_is_reported(e1):
    rep = check_forward_invariance(E1, e1, n_points=100, eps=0.2)
    assert rep.n_excluded > 0
    assert julia_band(e1, 0.2).sum() > julia_band(e1, 0.05).sum()


def test_backward_invariance_example1(e1):
    rep = check_backward_invariance(E1, e1, n_points=60)
    assert rep.passed and rep.n_checked > 0


@pytest.mark.parametrize("q", [(math.sqrt(2), 0.5), (1.0, 1.0)])
def test_preimages_of_julia_points_are_julia(q):
    ph = np.exp(0.7j)
    target = (q[0] * ph, q[1] * ph.conjugate())
    pts, exact = preimages(F, target)
    assert exact and len(pts) == 4
    v = classify_array(E1, np.array(pts), ClassifierConfig())[0]
    assert np.any(v == int(PointClass.JuliaCandidate))


def test_finite_index_single_map():
    reg = modulus_region(((0, 3), (0, 2)), (40, 40), 4)
    rep = check_finite_index_equality(SQ, (2,), reg, ref=squaring_reference())
    assert rep.passed
    rep = check_finite_index_equality(SQ, (1,), reg)
    assert rep.n_violations == 0


def test_commuting():
    assert check_commuting(F, pmap("z1^3", "z2^3"))
    assert check_commuting(pmap("z1^3", "z2^3"), F)
    assert not check_commuting(F, G_)
    assert not check_commuting(G_, F)
    assert check_commuting(G_, G_)


def test_power_tuple():
    with pytest.raises(NotCommuting):
        check_power_tuple_independence(E1, (1, 1), (2, 2), REG)
    G = Semigroup((F, pmap("z1^3", "z2^3")))
    reg = modulus_region(((0, 3), (0, 2)), (30, 30), 2)
    rep = check_power_tuple_independence(G, (1, 1), (1, 1), reg)
    assert rep.n_violations == 0


def test_boundary_containment():
    lab = label_components(scan(SQ, modulus_region(((0, 3), (0, 2)), (61, 41), 4)))
    assert check_boundary_containment(SQ, lab, n_boundary_cells=32).passed


def test_boundary_containment_example1(e1):
    rep = check_boundary_containment(E1, label_components(e1), n_boundary_cells=32,
                                     threshold=0.1)
    assert rep.passed


def test_volume_divergence():
    H = Semigroup((pmap("z2", "z1 + z2^2"),))
    lab = label_components(scan(H, modulus_region(((0, 2), (0, 2)), (30, 30), 4)))
    assert lab.n_components > 0
    for c in range(lab.n_components):
        assert check_volume_divergence(H, lab, c).passed
    with pytest.raises(NotVolumePreserving):
        check_volume_divergence(E1, lab, 0)
    L = Semigroup((pmap("2*z1", "0.5*z2"),))
    lab = label_components(scan(L, modulus_region(((0, 2), (0, 2)), (20, 20), 4)))
    rep = check_volume_divergence(L, lab, 0)
    assert rep.passed and "escaping sequence found" in rep.notes


def test_local_boundedness_premise(e1):
    lab = label_components(e1)
    rep = check_local_boundedness(E1, lab, lab.component_of(0, 0))
    assert rep.passed and "premise only" in rep.notes
