"""Acceptance criteria 1-10 at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""
import csv
import json

import numpy as np
import pytest

from semijulia.classify import ClassifierConfig, PointClass, classify_array
from semijulia.cli import main
from semijulia.components import (RECURRENT, estimate_limit_manifold, label_components,
                                  limit_rank, locate, recurrence_test)
from semijulia.config import load_config
from semijulia.fixedpoints import ATTRACTING, SADDLE, find_fixed_points
from semijulia.gridscan import (Raster, compare, example1_reference, scan,
                                squaring_reference)
from semijulia.properties import (check_backward_invariance, check_commuting,
                                  check_finite_index_equality, check_forward_invariance,
                                  check_power_tuple_independence)
from semijulia.semigroup import Semigroup, keyed_rng

from conftest import pmap


def _cli_scan(config, out, workers=1):
    assert main(["scan", "--config", config, "--out", str(out), "--workers", str(workers)],
                out=open("/dev/null", "w")) == 0
    cfg = load_config(config)
    return cfg, json.loads((out / f"{cfg.name}.manifest.json").read_text())


def _raster_from_csv(cfg, path):
    region = cfg.region_obj()
    nx, ny = region.resolution
    cells = np.empty((ny, nx), dtype=np.int8)
    scores = np.empty((ny, nx))
    for row in csv.DictReader(open(path)):
        iy, ix = int(row["iy"]), int(row["ix"])
        cells[iy, ix] = int(PointClass[row["class"]])
        scores[iy, ix] = float(row["score"])
    return Raster(region, cells, scores, "", "")


@pytest.fixture(scope="module")
def example1_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("e1")
    one = _cli_scan("example1_a2", base / "w1", workers=1)
    two = _cli_scan("example1_a2", base / "w2", workers=2)
    return base, one, two


def test_c01_example1_raster(example1_runs, criterion):
    _, (cfg, man), _ = example1_runs
    agreement = man["comparison"]["agreement"]
    ok = agreement is not None and agreement >= 0.90
    criterion(1, ok, f"agreement {agreement:.4f} over {man['comparison']['n_decided']} decided "
                     f"cells (>= 0.90)")
    assert ok


def test_c02_single_map(criterion):
    cfg = load_config("single_squaring")
    r = scan(cfg.semigroup(), cfg.region_obj(), cfg.classifier_config())
    rep = compare(r, cfg.reference_set(), cfg.band)
    ok = rep.agreement is not None and rep.agreement >= 0.90
    criterion(2, ok, f"agreement {rep.agreement:.4f} over {rep.n_decided} decided cells (>= 0.90)")
    assert ok


def _segment_distance(region):
    xs, ys = region.centers()
    X, Y = np.meshgrid(xs, ys)
    return np.where(np.abs(X) <= 1, np.abs(Y), np.hypot(np.abs(X) - 1, Y))


def test_c03_chebyshev_slice(tmp_path, criterion):
    cfg, man = _cli_scan("chebyshev_N4", tmp_path)
    r = _raster_from_csv(cfg, tmp_path / "chebyshev_N4.csv")
    d = _segment_distance(r.region)
    J = r.cells == int(PointClass.JuliaCandidate)
    fatou = np.isin(r.cells, [int(PointClass.FatouBounded), int(PointClass.FatouEscaping)])
    near = float((d[J] <= 0.1).mean()) if J.any() else float("nan")
    far = float(fatou[d > 0.15].mean())
    caveat = any("truncated" in c for c in man["caveats"])
    ok = J.any() and near >= 0.90 and far >= 0.90 and caveat
    criterion(3, ok, f"{int(J.sum())} Julia cells, {near:.4f} within 0.1 of [-1,1]; "
                     f"{far:.4f} of far cells Fatou; truncation caveat {caveat}")
    # informational: default kappa on a coarser slice
    coarse = load_config("chebyshev_N4").to_dict()
    coarse["classifier"] = {}
    coarse["region"]["resolution"] = [100, 50]
    from semijulia.config import ExperimentConfig
    c2 = ExperimentConfig.from_dict(coarse)
    r2 = scan(c2.semigroup(), c2.region_obj(), c2.classifier_config())
    print("default kappa, 100x50:", {c.name: r2.count(c) for c in PointClass})
    assert ok


def test_c04_fixed_points(criterion):
    F = pmap("z2", "0.25*z1 - z2^2")
    recs = find_fixed_points(F, radius=2.0)
    by = {(round(r.location[0].real, 6), round(r.location[1].real, 6)): r for r in recs}
    roots = np.sort(np.roots([1, -1.5, -0.25]).real)[::-1]
    ok = len(recs) == 2 and (0.0, 0.0) in by and (-0.75, -0.75) in by
    if ok:
        o, s = by[(0.0, 0.0)], by[(-0.75, -0.75)]
        ok = (o.kind == ATTRACTING
              and all(abs(abs(v) - 0.5) <= 1e-6 for v in o.eigenvalues)
              and s.kind == SADDLE
              and all(abs(v - t) <= 1e-6 for v, t in zip(s.eigenvalues, roots)))
    criterion(4, ok, f"{len(recs)} fixed points: " +
              "; ".join(f"{r.kind} {[round(abs(v), 8) for v in r.eigenvalues]}" for r in recs))
    assert ok


def test_c05_limit_map_diagnostics(criterion):
    phi1 = pmap("z2", "0.25*z1 - z2^2")
    phi2 = pmap("z1*z2", "z2")
    rng = np.random.default_rng(0)

    def near(c, r):
        return [tuple(np.array(c) + r * (rng.standard_normal(2) + 1j * rng.standard_normal(2)))
                for _ in range(10)]

    r2 = limit_rank(phi2, near((0.1, 0.5), 0.01)).rank
    m = estimate_limit_manifold(phi2, near((0.1, 0.5), 0.01))
    zmax = max(abs(z[0]) for z in m.cloud)
    r1 = limit_rank(phi1, near((0, 0), 0.01)).rank
    cfg = load_config("recurrent_origin")
    G = cfg.semigroup()
    ccfg = cfg.classifier_config()
    lab = label_components(scan(G, cfg.region_obj(), ccfg))
    cid = locate(lab, (0j, 0j))
    rec = recurrence_test(G, lab, cid, ccfg)
    ok = r2 == 1 and len(m.cloud) > 0 and zmax <= 1e-6 and r1 == 0 and rec.verdict == RECURRENT
    criterion(5, ok, f"r(phi2)={r2}, cloud max|z|={zmax:.2e}, r(phi1)={r1}, "
                     f"origin component {rec.verdict}")
    assert ok


def test_c06_finite_index(criterion):
    cfg = load_config("single_squaring")
    rep = check_finite_index_equality(cfg.semigroup(), (2,), cfg.region_obj(),
                                      cfg.classifier_config(), cfg.band, 0.05,
                                      squaring_reference())
    ok = rep.n_checked > 0 and rep.violation_rate <= 0.05
    criterion(6, ok, f"disagreement {rep.violation_rate:.4f} over {rep.n_checked} cells (<= 0.05)")
    assert ok


def test_c07_power_tuple(criterion):
    cfg = load_config("power_tuple")
    G = cfg.semigroup()
    commute = check_commuting(G.generators[0], G.generators[1])
    rep = check_power_tuple_independence(G, (1, 1), (2, 3), cfg.region_obj(),
                                         cfg.classifier_config(), cfg.band, 0.05,
                                         cfg.reference_set())
    ok = commute and rep.n_checked > 0 and rep.violation_rate <= 0.05
    criterion(7, ok, f"commuting {commute}; disagreement {rep.violation_rate:.4f} over "
                     f"{rep.n_checked} cells (<= 0.05)")
    assert ok


def test_c08_invariance(example1_runs, criterion):
    base, (cfg, _), _ = example1_runs
    r = _raster_from_csv(cfg, base / "w1" / "example1_a2.csv")
    G = cfg.semigroup()
    ccfg = cfg.classifier_config()
    fwd = check_forward_invariance(G, r, ccfg, n_points=200, threshold=0.05, eps=cfg.band,
                                   ref=cfg.reference_set(), seed=cfg.seed)
    bwd = check_backward_invariance(G, r, ccfg, n_points=100, threshold=0.05, seed=cfg.seed)
    ok = fwd.passed and bwd.passed and fwd.n_checked > 0 and bwd.n_checked > 0
    criterion(8, ok, f"forward {fwd.n_violations}/{fwd.n_checked}, "
                     f"backward {bwd.n_violations}/{bwd.n_checked} (rates <= 0.05)")
    assert ok


def test_c09_oracle_equivalence(criterion):
    G = Semigroup((pmap("z1^2", "z2^2"), pmap("0.5*z1^2", "z2^2")))
    ref = example1_reference(2.0)
    rng = keyed_rng(2024, 0, stream=77)
    mod = np.column_stack([rng.uniform(0, 3, 100), rng.uniform(0, 2, 100)])
    pts = mod * np.exp(2j * np.pi * rng.random((100, 2)))
    far = np.array([ref.boundary_distance(tuple(p), False) > 0.05 for p in pts])
    ex = classify_array(G, pts, ClassifierConfig(sampler="exhaustive", L=8))[0]
    rnd = classify_array(G, pts, ClassifierConfig(N=200, L=12))[0]
    rate = float(np.mean(ex[far] == rnd[far]))
    ok = far.sum() > 0 and rate >= 0.95
    criterion(9, ok, f"agreement {rate:.4f} on {int(far.sum())} points off the 0.05 band (>= 0.95)")
    assert ok


def test_c10_determinism(example1_runs, criterion):
    base, (cfg, m1), (_, m2) = example1_runs
    same = all((base / "w1" / f).read_bytes() == (base / "w2" / f).read_bytes()
               for f in ("example1_a2.ppm", "example1_a2.csv", "example1_a2.manifest.json"))
    ok = same and m1["outputs"] == m2["outputs"]
    criterion(10, ok, f"workers 1 vs 2: PPM/CSV/manifest byte-identical {same}; "
                      f"ppm {m1['outputs']['example1_a2.ppm'][:12]}")
    assert ok
