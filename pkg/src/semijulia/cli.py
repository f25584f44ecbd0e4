"""Command-line entry point.

Exit codes: 0 success, 1 a verified property failed, 2 config or parse
error, 3 budget exceeded, 4 precondition failed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .components import label_components, locate, recurrence_test
from .config import ConfigError, ExperimentConfig, bundled_names, load_config, parse_complex
from .errors import BudgetExceeded, ParseError, PreconditionFailed
from .fixedpoints import find_fixed_points
from .classify import PointClass
from .gridscan import compare, csv_text, ppm_bytes, scan
from .polyalg import PolyMap
from .properties import (check_backward_invariance, check_boundary_containment, check_commuting,
                         check_finite_index_equality, check_forward_invariance,
                         check_local_boundedness, check_power_tuple_independence,
                         check_volume_divergence)
from .semigroup import orbit

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET, EXIT_PRECONDITION = 0, 1, 2, 3, 4

PROPERTIES = ("forward-invariance", "backward-invariance", "finite-index", "power-tuple",
              "commuting", "boundary-containment", "volume-divergence", "local-boundedness")


def git_blob_sha1(data: bytes) -> str:
    """Content fingerprint computed the way git hashes a blob."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _stem(cfg: ExperimentConfig) -> str:
    return cfg.section("output").get("stem") or cfg.name or "run"


def _parse_word(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"bad word {text!r}; expected comma-separated generator indices") from exc


def _parse_point(text: str, k: int) -> tuple:
    parts = [p for p in text.split(",")]
    if len(parts) != k:
        raise ConfigError(f"point needs {k} comma-separated coordinates")
    return tuple(parse_complex(p.strip(), "point") for p in parts)


def _word_map(G, word) -> PolyMap:
    F = G.generators[word[-1]]
    for i in reversed(word[:-1]):
        F = G.generators[i].compose(F)
    return PolyMap(F.components, ",".join(map(str, word)))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_scan(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    G = cfg.semigroup()
    region = cfg.region_obj()
    raster = scan(G, region, cfg.classifier_config(), workers=args.workers)
    ppm = ppm_bytes(raster)
    table = csv_text(raster).encode()
    d = _out_dir(args)
    stem = _stem(cfg)
    (d / f"{stem}.ppm").write_bytes(ppm)
    (d / f"{stem}.csv").write_bytes(table)
    manifest = {
        "tool": "semijulia", "version": __version__,
        "config": cfg.to_dict(), "config_sha256": cfg.digest(),
        "raster": {"config_fingerprint": raster.config_fingerprint,
                   "generator_fingerprint": raster.generator_fingerprint,
                   "shape": list(raster.cells.shape),
                   "counts": {c.name: raster.count(c) for c in PointClass}},
        "outputs": {f"{stem}.ppm": git_blob_sha1(ppm), f"{stem}.csv": git_blob_sha1(table)},
        "caveats": cfg.caveats(),
    }
    ref = cfg.reference_set()
    if ref is not None:
        rep = compare(raster, ref, cfg.band)
        manifest["comparison"] = rep.__dict__
    (d / f"{stem}.manifest.json").write_text(_dump(manifest) + "\n")
    print(_dump({"outputs": manifest["outputs"], "counts": manifest["raster"]["counts"],
                 "comparison": manifest.get("comparison")}), file=out)
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    ref = cfg.reference_set()
    if ref is None:
        raise ConfigError("compare needs a 'reference' section")
    raster = scan(cfg.semigroup(), cfg.region_obj(), cfg.classifier_config(), workers=args.workers)
    rep = compare(raster, ref, cfg.band)
    text = _dump({"comparison": rep.__dict__, "caveats": cfg.caveats()})
    (_out_dir(args) / f"{_stem(cfg)}.compare.json").write_text(text + "\n")
    print(text, file=out)
    return EXIT_OK


def cmd_fixed_points(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    G = cfg.semigroup()
    word = _parse_word(args.word) if args.word else (0,)
    G.check_word(word)
    F = _word_map(G, word)
    opts = cfg.section("fixed_points")
    recs = find_fixed_points(F, radius=float(opts.get("radius", 2.0)),
                             n_starts=int(opts.get("n_starts", 200)),
                             tol=float(opts.get("tol", 1e-10)), seed=cfg.seed)
    rows = [{"location": r.location, "residual": r.residual, "eigenvalues": r.eigenvalues,
             "eigenvalue_moduli": [abs(v) for v in r.eigenvalues], "kind": r.kind,
             "jacobian_det_modulus": r.jacobian_det_modulus} for r in recs]
    text = _dump({"word": list(word), "fixed_points": rows})
    d = _out_dir(args)
    (d / f"{_stem(cfg)}.fixed_points.json").write_text(text + "\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{part}_z{i + 1}" for i in range(G.k) for part in ("re", "im")]
               + ["residual", "kind", "abs_lambda1", "abs_lambda2", "abs_det_jacobian"])
    for r in recs:
        w.writerow([repr(v) for c in r.location for v in (c.real, c.imag)]
                   + [repr(r.residual), r.kind] + [repr(abs(v)) for v in r.eigenvalues[:2]]
                   + [repr(r.jacobian_det_modulus)])
    (d / f"{_stem(cfg)}.fixed_points.csv").write_text(buf.getvalue())
    print(text, file=out)
    return EXIT_OK


def cmd_orbit(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    G = cfg.semigroup()
    o = cfg.section("orbit")
    word = _parse_word(args.word) if args.word else tuple(o.get("word", [0]))
    if args.point:
        z = _parse_point(args.point, G.k)
    elif "point" in o:
        z = tuple(parse_complex(v, "orbit.point") for v in o["point"])
    else:
        raise ConfigError("orbit needs --point or orbit.point in the config")
    rec = orbit(G, word, z, float(o.get("R", 100.0)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step"] + [f"{part}_z{i + 1}" for i in range(G.k) for part in ("re", "im")]
               + ["sup_norm", "exited"])
    for s, p in enumerate(rec.points, start=1):
        w.writerow([s] + [repr(v) for c in p for v in (c.real, c.imag)]
                   + [repr(max(abs(c) for c in p)), int(s == rec.exit_step)])
    (_out_dir(args) / f"{_stem(cfg)}.orbit.csv").write_text(buf.getvalue())
    out.write(buf.getvalue())
    return EXIT_OK


def _component(cfg, labeling, key_source: dict):
    pt = key_source.get("component_point")
    if pt is None:
        return 0
    z = tuple(parse_complex(v, "component_point") for v in pt)
    c = locate(labeling, z)
    if not isinstance(c, int):
        raise ConfigError(f"component_point {pt} is not in a Fatou component of the raster")
    return c


def cmd_recurrence(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    G = cfg.semigroup()
    ccfg = cfg.classifier_config()
    raster = scan(G, cfg.region_obj(), ccfg, workers=args.workers)
    lab = label_components(raster)
    opts = cfg.section("recurrence")
    if args.point:
        opts["component_point"] = [p.strip() for p in args.point.split(",")]
    cid = args.component if args.component is not None else _component(cfg, lab, opts)
    rep = recurrence_test(G, lab, cid, ccfg, n_sequences=int(opts.get("n_sequences", 8)),
                          lengths=tuple(opts.get("lengths", (2, 4, 8, 12))),
                          n_points=int(opts.get("n_points", 16)))
    text = _dump(rep.__dict__)
    (_out_dir(args) / f"{_stem(cfg)}.recurrence.json").write_text(text + "\n")
    print(text, file=out)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args, out=sys.stdout) -> int:
    props = []
    for p in args.property or []:
        props.extend(x.strip() for x in p.split(",") if x.strip())
    if not props:
        raise ConfigError("verify needs at least one --property")
    if "all" in props:
        props = list(PROPERTIES)
        run_all = True
    else:
        run_all = False
    unknown = [p for p in props if p not in PROPERTIES]
    if unknown:
        raise ConfigError(f"unknown propert{'ies' if len(unknown) > 1 else 'y'} {unknown}; "
                          f"choose from {list(PROPERTIES)} or 'all'")
    G = cfg.semigroup()
    ccfg = cfg.classifier_config()
    region = cfg.region_obj()
    ref = cfg.reference_set()
    v = cfg.section("verify")
    thr = float(v.get("threshold", 0.05))
    state = {}

    def raster():
        if "raster" not in state:
            state["raster"] = scan(G, region, ccfg, workers=args.workers)
        return state["raster"]

    def labeling():
        if "lab" not in state:
            state["lab"] = label_components(raster())
        return state["lab"]

    reports, skipped = [], {}
    for name in props:
        try:
            if name == "forward-invariance":
                r = check_forward_invariance(G, raster(), ccfg, n_points=int(v.get("n_points", 200)),
                                             threshold=thr, eps=cfg.band, ref=ref, seed=cfg.seed)
            elif name == "backward-invariance":
                r = check_backward_invariance(G, raster(), ccfg, n_points=int(v.get("n_points", 100)),
                                              threshold=thr, seed=cfg.seed)
            elif name == "finite-index":
                l = tuple(v.get("l", [2] * G.m))
                r = check_finite_index_equality(G, l, region, ccfg, cfg.band, thr, ref, args.workers)
            elif name == "power-tuple":
                l = tuple(v.get("l", [1] * G.m))
                l2 = tuple(v.get("l2", [2] * G.m))
                r = check_power_tuple_independence(G, l, l2, region, ccfg, cfg.band, thr, ref,
                                                   args.workers)
            elif name == "commuting":
                pairs = [(i, j) for i in range(G.m) for j in range(i + 1, G.m)]
                bad = [(i, j) for i, j in pairs
                       if not check_commuting(G.generators[i], G.generators[j], seed=cfg.seed)]
                from .properties import _report
                r = _report("commuting", len(pairs), len(bad), bad, 0.0, cfg.seed)
            elif name == "boundary-containment":
                r = check_boundary_containment(G, labeling(), threshold=float(v.get("threshold", 0.1)),
                                               seed=cfg.seed)
            elif name == "volume-divergence":
                lab = labeling()
                r = check_volume_divergence(G, lab, _component(cfg, lab, v), ccfg, seed=cfg.seed)
            else:
                lab = labeling()
                r = check_local_boundedness(G, lab, _component(cfg, lab, v), ccfg, seed=cfg.seed)
        except PreconditionFailed as exc:
            if run_all:
                skipped[name] = f"{type(exc).__name__}: {exc}"
                continue
            raise
        reports.append(r)
    bundle = {"config_sha256": cfg.digest(), "reports": [r.__dict__ for r in reports],
              "skipped": skipped, "caveats": cfg.caveats()}
    text = _dump(bundle)
    (_out_dir(args) / f"{_stem(cfg)}.verify.json").write_text(text + "\n")
    print(text, file=out)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.n_violations}/{r.n_checked}",
              file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


COMMANDS = {"scan": cmd_scan, "compare": cmd_compare, "fixed-points": cmd_fixed_points,
            "orbit": cmd_orbit, "verify": cmd_verify, "recurrence": cmd_recurrence}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semijulia",
                                 description="Fatou/Julia experiments for semigroups of polynomial maps")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help=f"config path or bundled name ({', '.join(bundled_names())})")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=".", help="output directory")
        if name in ("fixed-points", "orbit"):
            p.add_argument("--word", help="comma-separated generator indices, outermost first")
        if name in ("orbit", "recurrence"):
            p.add_argument("--point", help="comma-separated coordinates, e.g. 0.5,0.3+0.1i")
        if name == "recurrence":
            p.add_argument("--component", type=int, help="component id (overrides --point)")
        if name == "verify":
            p.add_argument("--property", action="append",
                           help=f"one of {', '.join(PROPERTIES)} or all; repeatable")
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PreconditionFailed as exc:
        print(f"precondition failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (IndexError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
