"""Pointwise Fatou/Julia classification by sampled words.

A point is probed together with ``n_companions`` points on a small sphere of
radius ``delta`` around it.  Every sampled word is followed cyclically for at
least ``L`` letters (each partial composition is itself an element of the
semigroup), and its outcome is one of:

* escaping: the point and all companions leave the radius ``R``;
* bounded: all stay within ``R``; the chordal separation growth is recorded;
* split: companions disagree, or bounded with separation growth > ``kappa``.

Verdicts: any split word gives JuliaCandidate.  So does an escaping word
together with a *settled* bounded word, i.e. one whose endpoint no longer
escapes under the generators that carried the point itself to infinity (this
separates genuinely coexisting fates from words that simply did not move the
point, such as the identity).  Unanimous escape gives FatouEscaping,
unanimous bounded with small separation gives FatouBounded.  Escape mixed
only with unsettled or rank-degenerate bounded words reads as FatouEscaping;
anything else is Undetermined.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .polyalg import is_degenerate
from .semigroup import (OVERFLOW_GUARD, Semigroup, WordSampler, enumerate_words,
                        keyed_rng, orbit, sample_words)


class PointClass(enum.IntEnum):
    FatouBounded = K.FATOU_BOUNDED
    FatouEscaping = K.FATOU_ESCAPING
    JuliaCandidate = K.JULIA
    Undetermined = K.UNDETERMINED

    @property
    def is_fatou(self) -> bool:
        return self in (PointClass.FatouBounded, PointClass.FatouEscaping)


@dataclass(frozen=True)
class ClassifierConfig:
    R: float = 1e6
    L: int = 12
    N: int = 200
    delta: float = 1e-4
    kappa: float = 1e3
    seed: int = 0
    n_companions: int = 8
    sampler: str = "random"      # or "exhaustive": every word of length <= L
    escape_window: int = 2

    def __post_init__(self):
        if not self.R > 1:
            raise ValueError("escape radius R must exceed 1")
        if not 0 < self.delta < 1e-2 * self.R:
            raise ValueError("delta must lie in (0, 1e-2 * R)")
        if not self.kappa > 1:
            raise ValueError("kappa must exceed 1")
        if self.n_companions < 4:
            raise ValueError("need at least 4 companions")
        if self.L < 1 or self.N < 0:
            raise ValueError("L must be >= 1 and N >= 0")
        if self.sampler not in ("random", "exhaustive"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    def with_(self, **kw) -> "ClassifierConfig":
        return replace(self, **kw)


@dataclass
class Evidence:
    n_escaping_words: int
    n_bounded_words: int
    max_separation_ratio: float
    witness_words: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Word plans
# ---------------------------------------------------------------------------

def word_set(G: Semigroup, cfg: ClassifierConfig) -> list:
    """Single letters first (they double as probes), then short exhaustive
    words, then the sampler's words."""
    m = G.m
    words = [(i,) for i in range(m)]
    if cfg.sampler == "exhaustive":
        for length in range(2, cfg.L + 1):
            words.extend(enumerate_words(m, length))
        return words
    for length in range(2, min(cfg.L, 4) + 1):
        words.extend(enumerate_words(m, length))
    words.extend(sample_words(G, WordSampler("random", cfg.L, cfg.N, cfg.seed)))
    return words


@dataclass(frozen=True)
class _Plan:
    words: tuple
    seqs: np.ndarray
    seqlens: np.ndarray
    wlens: np.ndarray
    word_nondeg: np.ndarray
    gen_nondeg: np.ndarray
    packed: tuple
    offsets: np.ndarray
    order: np.ndarray
    lcp: np.ndarray


def companion_offsets(k: int, n: int, delta: float, seed: int) -> np.ndarray:
    """Points on the sphere of radius ``delta`` in C^k = R^{2k}.

    The first ``4k`` directions are the signed real axes (+Re, +Im per
    coordinate, then their negatives); further ones are seeded Gaussians.
    """
    dirs = []
    axes = [(v, 1.0) for v in range(k)] + [(v, 1j) for v in range(k)]
    for sign in (1.0, -1.0):
        for v, unit in axes:
            d = np.zeros(k, dtype=complex)
            d[v] = sign * unit
            dirs.append(d)
    i = 0
    while len(dirs) < n:
        x = keyed_rng(seed, i, stream=1).standard_normal(2 * k)
        x /= np.linalg.norm(x)
        dirs.append(x[:k] + 1j * x[k:])
        i += 1
    return delta * np.array(dirs[:n])


def _build_plan(G: Semigroup, cfg: ClassifierConfig) -> _Plan:
    words = word_set(G, cfg)
    n_letters = [max(len(w), cfg.L) for w in words]
    seqs = np.zeros((len(words), max(n_letters)), dtype=np.int64)
    for r, (w, n) in enumerate(zip(words, n_letters)):
        rev = w[::-1]
        seqs[r, :n] = [rev[t % len(rev)] for t in range(n)]
    gen_nondeg = np.array([not is_degenerate(g) for g in G.generators])
    word_nondeg = np.array([all(gen_nondeg[i] for i in w) for w in words])
    seqlens = np.array(n_letters, dtype=np.int64)
    wlens = np.array([len(w) for w in words], dtype=np.int64)
    order, lcp = K.trie_order(seqs, seqlens)
    return _Plan(tuple(words), seqs, seqlens, wlens, word_nondeg, gen_nondeg,
                 K.pack_generators(G.generators),
                 companion_offsets(G.k, cfg.n_companions, cfg.delta, cfg.seed),
                 order, lcp)


@lru_cache(maxsize=32)
def plan_for(G: Semigroup, cfg: ClassifierConfig) -> _Plan:
    return _build_plan(G, cfg)


def classify_array(G: Semigroup, points, cfg: ClassifierConfig,
                   workers: int = 1, early_exit: bool = True,
                   chunk: int = 2048):
    """Classify an ``(n, k)`` array of points.

    Returns ``(verdicts, n_escaping, n_bounded, max_sep, witnesses)``.
    Output is independent of ``workers`` and ``chunk``: every point is
    processed by the same pure kernel.
    """
    plan = plan_for(G, cfg)
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.complex128).reshape(-1, G.k))
    n = pts.shape[0]
    verdict = np.empty(n, dtype=np.int8)
    n_esc = np.empty(n, dtype=np.int64)
    n_bnd = np.empty(n, dtype=np.int64)
    max_sep = np.empty(n, dtype=np.float64)
    wit = np.empty((n, 4), dtype=np.int64)
    R = min(cfg.R, OVERFLOW_GUARD)

    def run(lo):
        hi = min(lo + chunk, n)
        K.classify_block(pts[lo:hi], plan.offsets, plan.seqs, plan.seqlens, plan.wlens,
                         plan.order, plan.lcp, plan.word_nondeg, plan.gen_nondeg, G.m, cfg.L, R,
                         cfg.kappa, cfg.escape_window, early_exit, *plan.packed,
                         verdict[lo:hi], n_esc[lo:hi], n_bnd[lo:hi],
                         max_sep[lo:hi], wit[lo:hi])

    starts = range(0, n, chunk)
    if workers <= 1:
        for lo in starts:
            run(lo)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return verdict, n_esc, n_bnd, max_sep, wit


def classify_point(G: Semigroup, z, cfg: ClassifierConfig = ClassifierConfig()):
    """Return ``(PointClass, Evidence)`` for a single point, full evidence."""
    v, ne, nb, ms, wit = classify_array(G, [z], cfg, early_exit=False)
    words = plan_for(G, cfg).words
    witnesses = [words[i] for i in wit[0] if i >= 0]
    return PointClass(int(v[0])), Evidence(int(ne[0]), int(nb[0]), float(ms[0]), witnesses)


def normality_score(G: Semigroup, z, cfg: ClassifierConfig = ClassifierConfig()) -> float:
    """``log`` of the largest chordal separation growth over bounded words, >= 0."""
    _, ev = classify_point(G, z, cfg)
    r = ev.max_separation_ratio
    return math.log(r) if r > 1.0 else 0.0


def escape_time(G: Semigroup, w, z, R: float):
    """Letters applied when the sup-norm first exceeds ``R``; None otherwise."""
    return orbit(G, w, z, R).escape_time
