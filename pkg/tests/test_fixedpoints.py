import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semijulia.errors import BudgetExceeded, NotAFixedPoint
from semijulia.fixedpoints import (ATTRACTING, INDETERMINATE, REPELLING, SADDLE, backward_orbit,
                                   classify_fixed_point, covering_check, eigenvalues,
                                   find_fixed_points, is_invertible_at, kind_of)
from semijulia.polyalg import eval_map, numeric_jacobian

from conftest import pmap

PHI1 = pmap("z2", "0.25*z1 - z2^2")


def _near(a, b, tol=1e-9):
    return all(abs(complex(x) - complex(y)) <= tol for x, y in zip(a, b))


def test_find_fixed_points_phi1():
    recs = find_fixed_points(PHI1, radius=2.0)
    assert len(recs) == 2
    locs = [r.location for r in recs]
    assert any(_near(p, (0, 0)) for p in locs)
    assert any(_near(p, (-0.75, -0.75)) for p in locs)


def test_find_fixed_points_squaring():
    recs = find_fixed_points(pmap("z1^2", "z2^2"), radius=1.5)
    locs = sorted((round(p[0].real), round(p[1].real)) for p in (r.location for r in recs))
    assert locs == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_translation_has_none():
    assert find_fixed_points(pmap("z1 + 1", "z2")) == []


def test_classify_examples():
    r = classify_fixed_point(PHI1, (0, 0))
    assert r.kind == ATTRACTING
    np.testing.assert_allclose([abs(v) for v in r.eigenvalues], [0.5, 0.5], atol=1e-12)
    assert classify_fixed_point(pmap("2*z1", "2*z2 + z1^2"), (0, 0)).kind == REPELLING
    r = classify_fixed_point(PHI1, (-0.75, -0.75))
    assert r.kind == SADDLE
    roots = np.sort(np.roots([1, -1.5, -0.25]).real)[::-1]
    np.testing.assert_allclose([v.real for v in r.eigenvalues], roots, atol=1e-12)
    with pytest.raises(NotAFixedPoint):
        classify_fixed_point(PHI1, (0.3, 0))


def test_kind_dead_zone():
    assert kind_of([1.0, 0.5]) == INDETERMINATE
    assert kind_of([1 + 1e-8, 0.5]) == INDETERMINATE
    assert kind_of([1.1, 1.2]) == REPELLING


def test_eigenvalues_closed_form_matches_numpy():
    rng = np.random.default_rng(1)
    for _ in range(50):
        A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        ours = sorted(eigenvalues(A), key=lambda v: (v.real, v.imag))
        ref = sorted(np.linalg.eigvals(A), key=lambda v: (v.real, v.imag))
        np.testing.assert_allclose(ours, ref, atol=1e-12)


def test_covering_examples():
    rep = covering_check(pmap("2*z1", "2*z2"), (0, 0), 1.0)
    assert rep.verdict and rep.min_boundary_image_modulus == pytest.approx(2.0, rel=1e-9)
    assert not covering_check(pmap("0.5*z1", "0.5*z2"), (0, 0), 1.0).verdict
    assert covering_check(pmap("2*z1 + z2^2", "3*z2"), (0, 0), 0.1).verdict


def test_backward_orbit_examples():
    F = pmap("z1^2", "z2^2")
    t = backward_orbit(F, (1, 1), 1)
    pts = sorted((round(p[0].real), round(p[1].real)) for p in t.levels[1])
    assert pts == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    assert t.exact and not t.truncated
    t = backward_orbit(F, (0, 0), 3)
    assert [len(level) for level in t.levels] == [1, 1, 1, 1]
    t = backward_orbit(pmap("2*z1", "2*z2"), (0, 0), 3)
    assert [len(level) for level in t.levels] == [1, 1, 1, 1]


def test_backward_orbit_exact_mode_returns_to_root():
    F = pmap("z1^2 - 0.3", "z2^2 + 0.1*z1")
    p = (0.2 + 0.1j, -0.4)
    t = backward_orbit(F, p, 3)
    assert t.exact
    for d, level in enumerate(t.levels):
        for z in level:
            for _ in range(d):
                z = eval_map(F, tuple(z))
            assert _near(z, p, 1e-7 * (1 + max(abs(c) for c in p)))


def test_backward_orbit_budget():
    with pytest.raises(BudgetExceeded):
        backward_orbit(pmap("z1^2", "z2^2"), (0.5, 0.7), 6, budget=20)


def test_is_invertible_examples():
    F = pmap("z1^2", "z2^2")
    assert is_invertible_at(F, (1, 1))
    assert not is_invertible_at(F, (0, 0))
    assert is_invertible_at(PHI1, (0, 0))


def test_determinism():
    a = find_fixed_points(PHI1, seed=3)
    b = find_fixed_points(PHI1, seed=3)
    assert [r.location for r in a] == [r.location for r in b]


def test_covering_fixed_points_never_attracting():
    rng = np.random.default_rng(4)
    for _ in range(5):
        c = rng.uniform(-0.1, 0.1, 2)
        F = pmap(f"2*z1 + {c[0]:.4f}*z2^2", f"2*z2 + z1^2 + {c[1]:.4f}*z1*z2")
        assert covering_check(F, (0, 0), 0.1).verdict
        for r in find_fixed_points(F, radius=0.5):
            assert r.kind in (REPELLING, INDETERMINATE)


coef = st.floats(-1, 1, allow_nan=False).map(lambda x: round(x, 3))


@settings(max_examples=25, deadline=None)
@given(coef, coef, coef)
def test_fixed_point_invariants(a, b, c):
    F = pmap(f"z2 + ({a})*z1^2", f"({b})*z1 - z2^2 + ({c})")
    for r in find_fixed_points(F, radius=2.0, n_starts=60):
        p = r.location
        assert r.residual <= 1e-10 * (1 + max(abs(x) for x in p))
        det = np.linalg.det(numeric_jacobian(F, p))
        prod = np.prod(r.eigenvalues)
        assert abs(prod - det) <= 1e-8 * (1 + abs(det))
