"""Finitely generated semigroups of polynomial maps, their words and orbits.

A word is a tuple of generator indices.  ``word[0]`` is the OUTERMOST map,
so ``(i, j)`` denotes ``phi_i o phi_j`` and is applied to a point by first
applying ``phi_j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, EmptyWord
from .polyalg import MultiPoly, PolyMap, chebyshev, eval_map, lift

OVERFLOW_GUARD = 1e150
MAX_ENUMERATION = 10 ** 7

Word = tuple  # tuple[int, ...]


def sup_norm(z) -> float:
    return max(abs(complex(c)) for c in z)


class EscapedToInfinity:
    """Sentinel returned when an orbit crosses the overflow guard."""

    __slots__ = ("step",)

    def __init__(self, step: int):
        self.step = step

    def __repr__(self):
        return f"EscapedToInfinity(step={self.step})"

    def __eq__(self, other):
        return isinstance(other, EscapedToInfinity) and other.step == self.step


@dataclass(frozen=True)
class Semigroup:
    generators: tuple
    name: str = ""

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("a semigroup needs at least one generator")
        k = gens[0].k
        if any(g.k != k for g in gens):
            raise DimensionMismatch("generators act on different dimensions")
        object.__setattr__(self, "generators", gens)

    @property
    def k(self) -> int:
        return self.generators[0].k

    @property
    def m(self) -> int:
        return len(self.generators)

    def __len__(self):
        return self.m

    def check_word(self, w: Sequence[int]) -> Word:
        w = tuple(int(i) for i in w)
        if not w:
            raise EmptyWord("words must be nonempty")
        if any(not 0 <= i < self.m for i in w):
            raise IndexError(f"word {w} uses a letter outside [0, {self.m})")
        return w


def eval_word(G: Semigroup, w: Sequence[int], z, guard: float = OVERFLOW_GUARD):
    """Apply the word to ``z`` (last letter first).

    Returns the image as a tuple, or ``EscapedToInfinity`` when an
    intermediate point's sup-norm exceeds ``guard``.
    """
    w = G.check_word(w)
    if len(z) != G.k:
        raise DimensionMismatch(f"point of length {len(z)} for maps of C^{G.k}")
    z = tuple(complex(c) for c in z)
    for step, letter in enumerate(reversed(w), start=1):
        z = eval_map(G.generators[letter], z)
        n = sup_norm(z)
        if not n <= guard:  # also catches NaN
            return EscapedToInfinity(step)
    return z


def enumerate_words(m: int, L: int) -> list:
    """All ``m**L`` words of length ``L`` in lexicographic order."""
    if m < 1 or L < 1:
        raise ValueError("need m >= 1 and L >= 1")
    if m ** L > MAX_ENUMERATION:
        raise BudgetExceeded(f"{m}^{L} words exceed the enumeration budget")
    return [tuple(w) for w in itertools.product(range(m), repeat=L)]


def enumerate_words_upto(m: int, L: int) -> list:
    out = []
    for length in range(1, L + 1):
        out.extend(enumerate_words(m, length))
    return out


@dataclass(frozen=True)
class WordSampler:
    """``mode`` is ``"exhaustive"`` (all words of length ``L``) or
    ``"random"`` (``N`` words, lengths uniform in ``[1, L]``)."""

    mode: str = "random"
    L: int = 12
    N: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.L < 1:
            raise ValueError("L must be >= 1")


def keyed_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)`` at counter ``index``.

    Draw ``index`` never depends on how many other draws happened first.
    """
    key = (int(seed) & (2 ** 64 - 1)) | ((int(stream) & (2 ** 64 - 1)) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, int(index), 0, 0]))


def random_word(m: int, L: int, seed: int, index: int, stream: int = 0) -> Word:
    rng = keyed_rng(seed, index, stream)
    length = int(rng.integers(1, L + 1))
    return tuple(int(x) for x in rng.integers(0, m, size=length))


def sample_words(G: Semigroup | int, s: WordSampler) -> list:
    m = G if isinstance(G, int) else G.m
    if s.mode == "exhaustive":
        return enumerate_words(m, s.L)
    return [random_word(m, s.L, s.seed, i) for i in range(s.N)]


def power_subsemigroup(G: Semigroup, l: Sequence[int]) -> Semigroup:
    """``<phi_1^{l_1}, ..., phi_m^{l_m}>`` by symbolic self-composition."""
    l = tuple(int(x) for x in l)
    if len(l) != G.m:
        raise ValueError(f"power tuple has {len(l)} entries for {G.m} generators")
    if any(x < 1 for x in l):
        raise ValueError("power tuple entries must be >= 1")
    gens = tuple(g.power(n) for g, n in zip(G.generators, l))
    return Semigroup(gens, f"{G.name}^{l}")


@dataclass
class OrbitRecord:
    """Trajectory of a point under successive suffixes of a word.

    ``points[0]`` is the start point; ``exit_step`` is the 1-based position in
    ``points`` of the first point beyond the radius (so it equals the number
    of letters applied plus one), or ``None`` when the word completes.
    """

    word: Word
    points: list = field(default_factory=list)
    exit_step: Optional[int] = None
    max_norm: float = 0.0

    @property
    def completed(self) -> bool:
        return self.exit_step is None

    @property
    def escape_time(self) -> Optional[int]:
        return None if self.exit_step is None else self.exit_step - 1


def orbit(G: Semigroup, w: Sequence[int], z, R: float,
          segment_limit: Optional[int] = None) -> OrbitRecord:
    """Follow ``z`` letter by letter (innermost first) until exit beyond ``R``.

    ``segment_limit`` caps the number of letters applied.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    w = G.check_word(w)
    z = tuple(complex(c) for c in z)
    rec = OrbitRecord(word=w, points=[z], max_norm=sup_norm(z))
    if rec.max_norm > R:
        rec.exit_step = 1
        return rec
    letters = list(reversed(w))
    if segment_limit is not None:
        letters = letters[:segment_limit]
    for letter in letters:
        z = eval_map(G.generators[letter], z)
        n = sup_norm(z)
        rec.points.append(z)
        if not n <= R:
            rec.exit_step = len(rec.points)
            rec.max_norm = max(rec.max_norm, n) if n == n else float("inf")
            return rec
        rec.max_norm = max(rec.max_norm, n)
    return rec


def chebyshev_family(N: int) -> Semigroup:
    """Truncation ``<f_0, ..., f_N>`` of ``f_i(z1, z2) = (T_i(z1), z2^2)``."""
    gens = []
    z2sq = MultiPoly(2, {(0, 2): 1.0})
    for i in range(N + 1):
        gens.append(PolyMap([lift(chebyshev(i), 2, 0), z2sq], label=f"f{i}"))
    return Semigroup(tuple(gens), f"chebyshev_N{N}")
