"""Free groups: reduced words, enumeration, abelianization, finite-index bases.

Words are tuples of nonzero signed generator indices; ``i > 0`` is generator
``i`` and ``-i`` its inverse. The empty tuple is the identity.
"""

from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from typing import TypeVar

import numpy as np
import structlog

from .errors import RankMismatchError, ValidationError
from .models import FiniteIndexResult

logger = structlog.get_logger(__name__)

Word = tuple[int, ...]
T = TypeVar("T")

IDENTITY: Word = ()

# Rank-2 alphabet used by finite-index constructions
A, B = 1, 2


@dataclass(frozen=True)
class GeneratorSet:
    """Names for the generators of a free group of rank ``rank``."""

    rank: int
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.rank < 2:
            raise ValidationError(f"free group rank must be >= 2, got {self.rank}")
        if not self.names:
            object.__setattr__(self, "names", default_names(self.rank))
        if len(self.names) != self.rank or len(set(self.names)) != self.rank:
            raise ValidationError("generator names must be unique, one per generator")


def default_names(rank: int) -> tuple[str, ...]:
    """Generator names a, b, c, ... (x1, x2, ... past 26)."""
    if rank <= 26:
        return tuple(chr(ord("a") + i) for i in range(rank))
    return tuple(f"x{i + 1}" for i in range(rank))


def alphabet(rank: int) -> tuple[int, ...]:
    """Signed letters in enumeration order: -k < ... < -1 < 1 < ... < k."""
    return tuple(range(-rank, 0)) + tuple(range(1, rank + 1))


def check_letters(letters: Iterable[int], rank: int | None) -> None:
    for x in letters:
        if x == 0:
            raise ValidationError("letter 0 is not a generator index")
        if rank is not None and abs(x) > rank:
            raise RankMismatchError(f"letter {x} outside rank {rank}")


def reduce_word(letters: Iterable[int], rank: int | None = None) -> Word:
    """Freely reduce a letter sequence."""
    letters = tuple(letters)
    check_letters(letters, rank)
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def concat(w1: Word, w2: Word, rank: int | None = None) -> Word:
    """Reduced product w1 * w2 (both assumed reduced)."""
    if rank is not None:
        check_letters(w1, rank)
        check_letters(w2, rank)
    i = 0
    n = min(len(w1), len(w2))
    while i < n and w1[len(w1) - 1 - i] == -w2[i]:
        i += 1
    return w1[: len(w1) - i] + w2[i:]


def invert(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def power(w: Word, n: int) -> Word:
    """w^n for any integer n."""
    base = w if n >= 0 else invert(w)
    out: Word = IDENTITY
    for _ in range(abs(n)):
        out = concat(out, base)
    return out


def commutator(w1: Word, w2: Word) -> Word:
    """[w1, w2] = w1 w2 w1^-1 w2^-1, reduced."""
    out = concat(w1, w2)
    out = concat(out, invert(w1))
    return concat(out, invert(w2))


def product(*words: Word) -> Word:
    out: Word = IDENTITY
    for w in words:
        out = concat(out, w)
    return out


def count_words(rank: int, length: int) -> int:
    """Number of reduced words of a given length: 2k(2k-1)^(n-1)."""
    if length == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (length - 1)


def ball_size(rank: int, length: int) -> int:
    """Number of nontrivial reduced words of length 1..N."""
    return sum(count_words(rank, n) for n in range(1, length + 1))


def enumerate_words(rank: int, length: int, first: int | None = None) -> Iterator[Word]:
    """Yield all reduced words of the given length in lexicographic order.

    With ``first`` set, only the words starting with that letter are produced,
    which partitions the sphere for parallel consumers.
    """
    if length < 0:
        raise ValidationError("length must be >= 0")
    letters = alphabet(rank)
    if length == 0:
        if first is None:
            yield IDENTITY
        return
    if first is not None:
        check_letters((first,), rank)
        yield from _extend((first,), length - 1, letters)
    else:
        yield from _extend(IDENTITY, length, letters)


def _extend(word: Word, remaining: int, letters: tuple[int, ...]) -> Iterator[Word]:
    if remaining == 0:
        yield word
        return
    last = word[-1] if word else 0
    for x in letters:
        if x != -last:
            yield from _extend((*word, x), remaining - 1, letters)


def random_word(rank: int, length: int, rng: np.random.Generator) -> Word:
    """Uniform random reduced word of the given length."""
    letters = alphabet(rank)
    word: list[int] = []
    while len(word) < length:
        x = int(letters[rng.integers(len(letters))])
        if word and word[-1] == -x:
            continue
        word.append(x)
    return tuple(word)


def abelianize(w: Word, rank: int) -> tuple[int, ...]:
    """Signed letter counts per generator."""
    check_letters(w, rank)
    counts = [0] * rank
    for x in w:
        counts[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(counts)


def word_to_str(w: Word, names: tuple[str, ...] | None = None) -> str:
    """Readable form; inverses are written in upper case ("a b A")."""
    if not w:
        return "1"
    rank = max(abs(x) for x in w)
    names = names or default_names(max(rank, 2))
    parts = []
    for x in w:
        name = names[abs(x) - 1]
        parts.append(name if x > 0 else name.upper())
    return " ".join(parts)


def parse_word(text: str, names: tuple[str, ...]) -> Word:
    """Inverse of ``word_to_str`` for lower-case generator names."""
    text = text.strip()
    if text in ("", "1"):
        return IDENTITY
    index = {name: i + 1 for i, name in enumerate(names)}
    letters = []
    for token in text.split():
        if token in index:
            letters.append(index[token])
        elif token.lower() in index:
            letters.append(-index[token.lower()])
        else:
            raise ValidationError(f"unknown generator {token!r}")
    return reduce_word(letters, len(names))


UNDEFINED = -1


@dataclass
class CosetTable:
    """Coset table of a finitely generated subgroup of a free group.

    Subgroup generators are traced as loops at coset 0 and coincidences are
    folded with a union-find, so the table ends up as the folded Schreier
    graph. The index is finite exactly when every live coset has all of its
    2k edges defined.
    """

    rank: int
    labels: list[int] = field(default_factory=list)
    neighbors: list[list[int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.labels:
            self._add_coset()

    def _column(self, x: int) -> int:
        return x - 1 if x > 0 else self.rank - x - 1

    def _add_coset(self) -> int:
        c = len(self.labels)
        self.labels.append(c)
        self.neighbors.append([UNDEFINED] * (2 * self.rank))
        return c

    def find(self, c: int) -> int:
        root = c
        while self.labels[root] != root:
            root = self.labels[root]
        while self.labels[c] != root:
            self.labels[c], c = root, self.labels[c]
        return root

    def _unify(self, c1: int, c2: int) -> None:
        pending = [(c1, c2)]
        while pending:
            c1, c2 = pending.pop()
            c1, c2 = self.find(c1), self.find(c2)
            if c1 == c2:
                continue
            c1, c2 = min(c1, c2), max(c1, c2)
            self.labels[c2] = c1
            for d in range(2 * self.rank):
                n1 = self.neighbors[c1][d]
                n2 = self.neighbors[c2][d]
                if n1 == UNDEFINED:
                    self.neighbors[c1][d] = n2
                elif n2 != UNDEFINED:
                    pending.append((n1, n2))

    def _define(self, c: int, x: int, d: int) -> None:
        for src, letter, dst in ((c, x, d), (d, -x, c)):
            src = self.find(src)
            col = self._column(letter)
            current = self.neighbors[src][col]
            if current == UNDEFINED:
                self.neighbors[src][col] = dst
            else:
                self._unify(current, dst)

    def follow(self, c: int, x: int) -> int:
        n = self.neighbors[self.find(c)][self._column(x)]
        return UNDEFINED if n == UNDEFINED else self.find(n)

    def add_generator(self, w: Word) -> None:
        """Trace w as a loop at coset 0, creating cosets as needed."""
        check_letters(w, self.rank)
        if not w:
            return
        c = 0
        for x in w[:-1]:
            nxt = self.follow(c, x)
            if nxt == UNDEFINED:
                nxt = self._add_coset()
                self._define(c, x, nxt)
            c = self.find(nxt)
        self._define(c, w[-1], 0)

    def live(self) -> list[int]:
        return [c for c in range(len(self.labels)) if self.find(c) == c]

    def is_complete(self) -> bool:
        return all(
            all(n != UNDEFINED for n in self.neighbors[c]) for c in self.live()
        )

    def index(self) -> int | None:
        """Subgroup index, or None when the table is incomplete (infinite index)."""
        return len(self.live()) if self.is_complete() else None

    def subgroup_rank(self) -> int | None:
        """Rank of the subgroup from its Schreier graph: edges minus tree edges."""
        if not self.is_complete():
            return None
        live = self.live()
        edges = sum(
            1 for c in live for x in range(1, self.rank + 1) if self.follow(c, x) != UNDEFINED
        )
        return edges - (len(live) - 1)

    def contains(self, w: Word) -> bool:
        c = 0
        for x in w:
            c = self.follow(c, x)
            if c == UNDEFINED:
                return False
        return self.find(c) == self.find(0)


def enumerate_cosets(rank: int, generators: Iterable[Word]) -> CosetTable:
    table = CosetTable(rank=rank)
    for w in generators:
        table.add_generator(w)
    return table


def _covering(sheets: int) -> tuple[list[int], list[int]]:
    """Permutations of a and b on the sheets of the covering graph.

    b swaps sheets 0 and 1 and fixes the rest; a fixes sheet 0 and cycles
    1 -> 2 -> ... -> sheets-1 -> 1.
    """
    perm_b = list(range(sheets))
    perm_b[0], perm_b[1] = 1, 0
    perm_a = list(range(sheets))
    for v in range(1, sheets):
        perm_a[v] = v + 1 if v + 1 < sheets else 1
    return perm_a, perm_b


def finite_index_generators(k: int) -> FiniteIndexResult:
    """Free basis c_1..c_k of an index k-1 subgroup of <a, b>.

    Generators are read off the (k-1)-sheeted covering graph with the
    spanning tree made of the b-edge 0 -> 1 followed by the a-path
    1 -> 2 -> ... -> k-2. The basis starts c_1 = a, c_2 = b^2,
    c_3 = b a^p b^-1 with p = k - 2; the remaining generators are the
    b-loops at sheets 2..k-2.
    """
    if k < 3:
        raise ValidationError(f"finite_index_generators needs k >= 3, got {k}")
    sheets = k - 1
    perm_a, perm_b = _covering(sheets)

    # Tree paths from sheet 0
    paths: dict[int, Word] = {0: IDENTITY, 1: (B,)}
    for v in range(2, sheets):
        paths[v] = (*paths[v - 1], A)
    tree = ["0 -b-> 1"] + [f"{v} -a-> {v + 1}" for v in range(1, sheets - 1)]

    def loop(v: int, letter: int) -> Word:
        target = perm_a[v] if letter == A else perm_b[v]
        return reduce_word((*paths[v], letter, *invert(paths[target])))

    edges = [(0, A), (1, B), (sheets - 1, A)] + [(v, B) for v in range(2, sheets)]
    generators = [loop(v, letter) for v, letter in edges]
    p = sheets - 1

    table = enumerate_cosets(2, generators)
    coset_index = table.index()
    members = all(table.contains(w) for w in generators)
    result = FiniteIndexResult(
        rank=k,
        generators=[list(w) for w in generators],
        generator_names=[word_to_str(w) for w in generators],
        p=p,
        index=sheets,
        coset_index=coset_index,
        members_verified=members,
        nielsen_schreier=table.subgroup_rank() == len(generators),
        tree=tree,
    )
    if coset_index != sheets:
        logger.warning(
            "coset_index_mismatch", k=k, expected=sheets, found=coset_index
        )
    logger.info("finite_index_generators", k=k, p=p, index=coset_index)
    return result


def walk_words(
    rank: int,
    max_length: int,
    step: Callable[[T, int], T],
    start: T,
    visit: Callable[[Word, T], None],
    first: int | None = None,
) -> None:
    """Depth-first walk of nontrivial reduced words up to ``max_length``.

    ``step(value, letter)`` extends the value carried by a prefix, so each
    word costs one step. Siblings are visited in alphabet order.
    """
    letters = alphabet(rank)
    for f in letters if first is None else (first,):
        stack: list[tuple[Word, T]] = [((f,), step(start, f))]
        while stack:
            word, value = stack.pop()
            visit(word, value)
            if len(word) == max_length:
                continue
            last = word[-1]
            for x in reversed(letters):
                if x != -last:
                    stack.append(((*word, x), step(value, x)))
