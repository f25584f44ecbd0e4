"""JSON experiment configs.

Complex numbers appear only as expression strings (``"0.3+0.2i"``) or plain
JSON numbers.  Every level rejects unknown keys; ``seed`` is mandatory.
Bundled configs live in the ``configs`` directory of the package and can be
named without a path.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .classify import ClassifierConfig
from .errors import ParseError, SemiJuliaError
from .gridscan import COMPLEX_SLICE, MODULUS_PLANE, Factor, ReferenceSet, Region
from .parser import parse_poly
from .polyalg import PolyMap
from .semigroup import Semigroup, chebyshev_family


class ConfigError(SemiJuliaError, ValueError):
    """Invalid config content; ``line``/``column`` point into the file when known."""

    def __init__(self, message, line=None, column=None, expr=None, expr_column=None):
        self.line = line
        self.column = column
        self.expr = expr
        self.expr_column = expr_column
        self.message = message
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(message + where)


ALIASES = {"example_single_squaring": "single_squaring"}

_TOP = {"name", "seed", "k", "generators", "family", "region", "classifier", "reference",
        "band", "verify", "fixed_points", "recurrence", "orbit", "output"}
_CLASSIFIER = {"R", "L", "N", "delta", "kappa", "n_companions", "sampler", "escape_window"}
_REGION = {"mode", "bounds", "resolution", "phase_samples", "phase_offset", "slice_fixture", "free"}
_VERIFY = {"l", "l2", "threshold", "n_points", "component_point"}
_FIXED = {"radius", "n_starts", "tol"}
_RECUR = {"component_point", "n_sequences", "lengths", "n_points"}
_ORBIT = {"word", "point", "R"}
_OUTPUT = {"stem"}


def _only(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {extra} in {where}")


def parse_complex(value, where: str) -> complex:
    """A JSON number or a constant expression string."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            p = parse_poly(value, 1)
        except ParseError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if not p.is_constant():
            raise ConfigError(f"{where}: {value!r} is not a constant")
        return p.constant_value()
    raise ConfigError(f"{where}: expected a number or expression string")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    k: int = 2
    name: str = ""
    generators: tuple = ()           # ((label, (expr, ...)), ...)
    family: Optional[tuple] = None   # ("chebyshev", N)
    region: Optional[dict] = None
    classifier: dict = field(default_factory=dict)
    reference: Optional[tuple] = None
    band: float = 0.05
    verify: dict = field(default_factory=dict)
    fixed_points: dict = field(default_factory=dict)
    recurrence: dict = field(default_factory=dict)
    orbit: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    # -- construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _only(d, _TOP, "config")
        if "seed" not in d:
            raise ConfigError("config is missing the mandatory 'seed'")
        seed = d["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        k = d.get("k", 2)
        if not isinstance(k, int) or k < 1:
            raise ConfigError("k must be a positive integer")
        gens = ()
        family = None
        if ("generators" in d) == ("family" in d):
            raise ConfigError("give exactly one of 'generators' or 'family'")
        if "generators" in d:
            out = []
            for i, g in enumerate(d["generators"]):
                _only(g, {"label", "components"}, f"generators[{i}]")
                comps = g.get("components")
                if not isinstance(comps, list) or len(comps) != k:
                    raise ConfigError(f"generators[{i}] needs {k} component strings")
                out.append((str(g.get("label", f"g{i}")), tuple(str(c) for c in comps)))
            if not out:
                raise ConfigError("at least one generator is required")
            gens = tuple(out)
        else:
            f = d["family"]
            _only(f, {"name", "N"}, "family")
            if f.get("name") != "chebyshev" or not isinstance(f.get("N"), int) or f["N"] < 0:
                raise ConfigError("family must be {'name': 'chebyshev', 'N': >= 0}")
            if k != 2:
                raise ConfigError("the chebyshev family acts on C^2")
            family = ("chebyshev", f["N"])
        region = d.get("region")
        if region is not None:
            _only(region, _REGION, "region")
        clf = d.get("classifier", {})
        _only(clf, _CLASSIFIER, "classifier")
        ref = None
        if "reference" in d:
            r = d["reference"]
            _only(r, {"terms"}, "reference")
            terms = []
            for ti, t in enumerate(r.get("terms", [])):
                facs = []
                for fi, fac in enumerate(t):
                    _only(fac, {"kind", "lo", "hi"}, f"reference.terms[{ti}][{fi}]")
                    facs.append((fac.get("kind"), float(fac.get("lo", 0.0)),
                                 float(fac["hi"]) if "hi" in fac else None))
                terms.append(tuple(facs))
            ref = tuple(terms)
        for key, allowed in (("verify", _VERIFY), ("fixed_points", _FIXED),
                             ("recurrence", _RECUR), ("orbit", _ORBIT), ("output", _OUTPUT)):
            _only(d.get(key, {}), allowed, key)
        cfg = cls(seed=seed, k=k, name=str(d.get("name", "")), generators=gens, family=family,
                  region=_freeze(region), classifier=_freeze(clf), reference=ref,
                  band=float(d.get("band", 0.05)), verify=_freeze(d.get("verify", {})),
                  fixed_points=_freeze(d.get("fixed_points", {})),
                  recurrence=_freeze(d.get("recurrence", {})), orbit=_freeze(d.get("orbit", {})),
                  output=_freeze(d.get("output", {})))
        # validate everything that can fail late
        cfg.semigroup()
        cfg.classifier_config()
        if region is not None:
            cfg.region_obj()
        if ref is not None:
            cfg.reference_set()
        return cfg

    def to_dict(self) -> dict:
        d = {"name": self.name, "seed": self.seed, "k": self.k}
        if self.family is not None:
            d["family"] = {"name": self.family[0], "N": self.family[1]}
        else:
            d["generators"] = [{"label": lab, "components": list(c)} for lab, c in self.generators]
        if self.region is not None:
            d["region"] = _thaw(self.region)
        if self.classifier:
            d["classifier"] = _thaw(self.classifier)
        if self.reference is not None:
            d["reference"] = {"terms": [[_factor_dict(f) for f in t] for t in self.reference]}
        d["band"] = self.band
        for key in ("verify", "fixed_points", "recurrence", "orbit", "output"):
            v = getattr(self, key)
            if v:
                d[key] = _thaw(v)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = self.to_dict()
        d["seed"] = seed
        return ExperimentConfig.from_dict(d)

    def section(self, key: str) -> dict:
        """Plain-dict view of an optional section."""
        return _thaw(getattr(self, key)) or {}

    # -- derived objects ----------------------------------------------------
    def semigroup(self) -> Semigroup:
        if self.family is not None:
            return chebyshev_family(self.family[1])
        maps = []
        for i, (label, comps) in enumerate(self.generators):
            polys = []
            for j, text in enumerate(comps):
                try:
                    polys.append(parse_poly(text, self.k))
                except ParseError as exc:
                    raise ConfigError(f"generator {label!r} component {j + 1}: {exc.message} "
                                      f"in {text!r}", expr=text,
                                      expr_column=exc.column) from exc
            maps.append(PolyMap(polys, label))
        return Semigroup(tuple(maps), self.name)

    def classifier_config(self) -> ClassifierConfig:
        try:
            return ClassifierConfig(seed=self.seed, **_thaw(self.classifier))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"classifier: {exc}") from exc

    def region_obj(self) -> Region:
        if self.region is None:
            raise ConfigError("config has no region")
        r = _thaw(self.region)
        try:
            fixture = tuple(parse_complex(v, "region.slice_fixture") for v in r.get("slice_fixture", []))
            mode = r.get("mode")
            if mode not in (MODULUS_PLANE, COMPLEX_SLICE):
                raise ConfigError(f"region.mode must be {MODULUS_PLANE} or {COMPLEX_SLICE}")
            return Region(mode, tuple(tuple(b) for b in r["bounds"]), tuple(r["resolution"]),
                          phase_samples=int(r.get("phase_samples", 1)),
                          slice_fixture=fixture, free=int(r.get("free", 0)),
                          phase_offset=float(r.get("phase_offset", 0.0)))
        except KeyError as exc:
            raise ConfigError(f"region is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"region: {exc}") from exc

    def reference_set(self) -> Optional[ReferenceSet]:
        if self.reference is None:
            return None
        try:
            return ReferenceSet(tuple(tuple(Factor(kind, lo, hi if hi is not None else float("nan"))
                                            for kind, lo, hi in t) for t in self.reference))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"reference: {exc}") from exc

    def caveats(self) -> list:
        out = []
        if self.family is not None:
            out.append(f"generator family truncated to f_0..f_{self.family[1]}; the full "
                       "family is infinite and results describe the truncation")
        return out


def _factor_dict(f):
    kind, lo, hi = f
    d = {"kind": kind, "lo": lo}
    if hi is not None:
        d["hi"] = hi
    return d


def _freeze(v):
    """Hashable deep copy of JSON data (dicts become sorted item tuples)."""
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    if isinstance(v, list):
        return ("__list__",) + tuple(_freeze(x) for x in v)
    return v


def _thaw(v):
    if isinstance(v, tuple):
        if v and v[0] == "__list__":
            return [_thaw(x) for x in v[1:]]
        return {k: _thaw(x) for k, x in v}
    return v


def bundled_names() -> list:
    pkg = resources.files("semijulia") / "configs"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name: str) -> ExperimentConfig:
    """Load a config from a path, or a bundled config by name."""
    p = Path(path_or_name)
    if p.exists():
        text = p.read_text()
    else:
        name = ALIASES.get(path_or_name, path_or_name)
        res = resources.files("semijulia") / "configs" / f"{name}.json"
        if not res.is_file():
            raise ConfigError(f"no config file or bundled config named {path_or_name!r}")
        text = res.read_text()
    return loads_config(text)


def loads_config(text: str) -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    try:
        return ExperimentConfig.from_dict(d)
    except ConfigError as exc:
        if exc.line is None and exc.expr is not None:
            pos = text.find(json.dumps(exc.expr))
            if pos >= 0:
                pos += exc.expr_column  # skip the opening quote
                line = text.count("\n", 0, pos) + 1
                col = pos - (text.rfind("\n", 0, pos) + 1) + 1
                raise ConfigError(exc.message, line, col) from exc
        raise
