"""Representations of free groups into SL3 and their growth diagnostics.

Word trees are walked depth-first from each first letter, carrying the
product of the prefix, so every reduced word costs one matrix product.
Subtrees rooted at different first letters are independent and are
scheduled on a thread pool; results are merged in alphabet order.
"""

import math
import threading
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np
import structlog

from .config import settings
from .errors import EnumerationLimitError, ValidationError
from .exactlinalg import RatMat, discriminant, is_unipotent, singular_values
from .freegroup import (
    IDENTITY,
    GeneratorSet,
    Word,
    alphabet,
    check_letters,
    count_words,
    random_word,
    walk_words,
)
from .models import GrowthProfile, ScanResult

logger = structlog.get_logger(__name__)

_CACHE_LIMIT = 200_000


class Representation:
    """Generator images of a free group in SL3(Q)."""

    def __init__(
        self, images: Sequence[RatMat], names: Sequence[str] | None = None
    ) -> None:
        for i, m in enumerate(images):
            if m.n != 3:
                raise ValidationError(f"image {i} is not 3x3")
            if m.det != 1:
                raise ValidationError(f"image {i} has determinant {m.det}, expected 1")
        self.generators = GeneratorSet(len(images), tuple(names or ()))
        self.images = tuple(images)
        self._inverses = tuple(m.inv() for m in images)
        self._cache: dict[Word, RatMat] = {IDENTITY: RatMat.identity(3)}
        self._lock = threading.Lock()

    @property
    def rank(self) -> int:
        return self.generators.rank

    @property
    def names(self) -> tuple[str, ...]:
        return self.generators.names

    def letter(self, x: int) -> RatMat:
        return self.images[x - 1] if x > 0 else self._inverses[-x - 1]

    def evaluate(self, w: Word) -> RatMat:
        """Exact image of a reduced word, memoized along its prefixes."""
        check_letters(w, self.rank)
        with self._lock:
            cached = self._cache.get(w)
            if cached is not None:
                return cached
            i = len(w)
            while w[:i] not in self._cache:
                i -= 1
            m = self._cache[w[:i]]
            for j in range(i, len(w)):
                m = m @ self.letter(w[j])
                if len(self._cache) < _CACHE_LIMIT:
                    self._cache[w[: j + 1]] = m
            return m

    def float_images(self) -> list[np.ndarray]:
        return [m.to_float() for m in self.images]

    def to_json(self) -> dict[str, Any]:
        return {
            "rank": self.rank,
            "names": list(self.names),
            "images": [m.to_json() for m in self.images],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Representation":
        images = [RatMat.from_json(m) for m in data["images"]]
        if "rank" in data and data["rank"] != len(images):
            raise ValidationError("rank does not match the number of images")
        return cls(images, data.get("names"))

    @classmethod
    def trivial(cls, rank: int = 2) -> "Representation":
        return cls([RatMat.identity(3)] * rank)


def evaluate(rho: Representation, w: Word) -> RatMat:
    return rho.evaluate(w)


# Tree walks


def check_cap(rank: int, max_length: int) -> None:
    if max_length < 1:
        raise ValidationError("max length must be >= 1")
    total = count_words(rank, max_length)
    if total > settings.enumeration_cap:
        raise EnumerationLimitError(
            f"{total} products at length {max_length} exceed the cap "
            f"{settings.enumeration_cap}; use sample mode"
        )


def map_first_letters(rank: int, task: Callable[[int], Any]) -> list[Any]:
    letters = alphabet(rank)
    workers = min(settings.worker_count(), len(letters))
    if workers <= 1:
        return [task(x) for x in letters]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, letters))


def iter_ball(rho: Representation, max_length: int) -> Iterator[tuple[Word, RatMat]]:
    """(word, exact image) for all nontrivial reduced words up to max_length."""
    check_cap(rho.rank, max_length)
    for first in alphabet(rho.rank):
        found: list[tuple[Word, RatMat]] = []
        walk_words(
            rho.rank,
            max_length,
            lambda m, x: m @ rho.letter(x),
            RatMat.identity(3),
            lambda w, m, out=found: out.append((w, m)),
            first=first,
        )
        yield from found


# Growth profiles


def _fit(lengths: list[int], values: list[float]) -> tuple[float, float]:
    """Ordinary least squares over lengths >= 2 (all lengths if fewer)."""
    pts = [(n, v) for n, v in zip(lengths, values, strict=True) if n >= 2]
    if len(pts) < 2:
        pts = list(zip(lengths, values, strict=True))
    if len(pts) < 2:
        return 0.0, pts[0][1] if pts else 0.0
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def _log_s1(m: RatMat) -> float:
    return math.log(singular_values(m)[0])


def _log_gap(m: RatMat) -> float:
    s = singular_values(m)
    return math.log(s[0]) - math.log(s[1])


def _profile(
    rho: Representation,
    max_length: int,
    metric: Callable[[RatMat], float],
    kind: str,
) -> GrowthProfile:
    check_cap(rho.rank, max_length)

    def task(first: int) -> dict[int, tuple[float, Word, int]]:
        best: dict[int, tuple[float, Word, int]] = {}

        def visit(w: Word, m: RatMat) -> None:
            n = len(w)
            value = metric(m)
            cur = best.get(n)
            if cur is None:
                best[n] = (value, w, 1)
            else:
                count = cur[2] + 1
                if (value, w) < (cur[0], cur[1]):
                    best[n] = (value, w, count)
                else:
                    best[n] = (cur[0], cur[1], count)

        walk_words(
            rho.rank,
            max_length,
            lambda m, x: m @ rho.letter(x),
            RatMat.identity(3),
            visit,
            first=first,
        )
        return best

    partials = map_first_letters(rho.rank, task)
    lengths = list(range(1, max_length + 1))
    minima: list[float] = []
    witnesses: list[list[int]] = []
    counts: list[int] = []
    for n in lengths:
        entries = [p[n] for p in partials if n in p]
        value, word, _ = min(entries, key=lambda e: (e[0], e[1]))
        minima.append(value)
        witnesses.append(list(word))
        counts.append(sum(e[2] for e in entries))
    slope, intercept = _fit(lengths, minima)
    logger.info(
        "profile_computed", kind=kind, max_length=max_length, slope=slope,
        words=sum(counts),
    )
    return GrowthProfile(
        kind=kind,  # type: ignore[arg-type]
        max_length=max_length,
        lengths=lengths,
        minima=minima,
        witnesses=witnesses,
        words_per_length=counts,
        slope=slope,
        intercept=intercept,
    )


def qi_profile(rho: Representation, max_length: int) -> GrowthProfile:
    """Per-length minima of log s_1 over all reduced words."""
    return _profile(rho, max_length, _log_s1, "qi")


def anosov_gap_profile(rho: Representation, max_length: int) -> GrowthProfile:
    """Per-length minima of log s_1 - log s_2 over all reduced words."""
    return _profile(rho, max_length, _log_gap, "anosov_gap")


def sample_profile(
    rho: Representation,
    max_length: int,
    samples: int,
    kind: str = "qi",
    seed: int | None = None,
) -> GrowthProfile:
    """Profile over random reduced words; not exhaustive."""
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    metric = _log_s1 if kind == "qi" else _log_gap
    lengths = list(range(1, max_length + 1))
    minima, witnesses = [], []
    for n in lengths:
        best: tuple[float, Word] | None = None
        for _ in range(samples):
            w = random_word(rho.rank, n, rng)
            value = metric(rho.evaluate(w))
            if best is None or (value, w) < best:
                best = (value, w)
        assert best is not None
        minima.append(best[0])
        witnesses.append(list(best[1]))
    slope, intercept = _fit(lengths, minima)
    logger.info("sample_profile_computed", kind=kind, max_length=max_length)
    return GrowthProfile(
        kind=kind,  # type: ignore[arg-type]
        max_length=max_length,
        lengths=lengths,
        minima=minima,
        witnesses=witnesses,
        words_per_length=[samples] * len(lengths),
        slope=slope,
        intercept=intercept,
        exhaustive=False,
    )


def profile_tsv(profile: GrowthProfile) -> str:
    """gnuplot-ready columns: length, minimum, witness."""
    lines = [f"# {profile.kind} slope={profile.slope:.12g}"]
    for n, v, w in zip(profile.lengths, profile.minima, profile.witnesses, strict=True):
        lines.append(f"{n}\t{v:.12g}\t{' '.join(str(x) for x in w)}")
    return "\n".join(lines) + "\n"


# Witnesses


def nonreal_spectrum_witness(rho: Representation, w: Word) -> bool:
    """Exact negative discriminant: one real eigenvalue and a complex pair."""
    return discriminant(rho.evaluate(w).charpoly()) < 0


def unipotent_scan(rho: Representation, max_length: int) -> ScanResult:
    """All words of length 1..N with unipotent, non-identity image.

    The walk multiplies exact images, so no witness is lost to rounding.
    """
    check_cap(rho.rank, max_length)

    def task(first: int) -> tuple[list[tuple[Word, RatMat]], int]:
        found: list[tuple[Word, RatMat]] = []
        seen = [0]

        def visit(w: Word, m: RatMat) -> None:
            seen[0] += 1
            if is_unipotent(m) and not m.is_identity():
                found.append((w, m))

        walk_words(
            rho.rank,
            max_length,
            lambda m, x: m @ rho.letter(x),
            RatMat.identity(3),
            visit,
            first=first,
        )
        return found, seen[0]

    hits: list[tuple[Word, RatMat]] = []
    checked = 0
    for found, seen in map_first_letters(rho.rank, task):
        checked += seen
        hits.extend(found)
    hits.sort(key=lambda h: (len(h[0]), h[0]))
    logger.info(
        "unipotent_scan_completed", max_length=max_length, words=checked,
        witnesses=len(hits),
    )
    return ScanResult(
        max_length=max_length,
        words_checked=checked,
        witnesses=[list(w) for w, _ in hits],
        images=[m.to_json() for _, m in hits],
    )
