"""Tests for free-group words, enumeration and finite-index bases."""

import numpy as np
import pytest

from anosov_forge.errors import RankMismatchError, ValidationError
from anosov_forge.freegroup import (
    GeneratorSet,
    abelianize,
    alphabet,
    ball_size,
    commutator,
    concat,
    count_words,
    enumerate_cosets,
    enumerate_words,
    finite_index_generators,
    invert,
    parse_word,
    power,
    product,
    random_word,
    reduce_word,
    walk_words,
    word_to_str,
)


class TestWords:
    """Tests for reduction and word arithmetic."""

    def test_reduce_cancels_adjacent_inverses(self) -> None:
        """Test free reduction of a letter sequence."""
        assert reduce_word([1, 2, -2, -1, 1]) == (1,)
        assert reduce_word([]) == ()

    def test_concat_cancels_at_the_seam(self) -> None:
        """Test that concatenation reduces across the join."""
        assert concat((1, 2), (-2, -1, 2)) == (2,)

    def test_invert_and_power(self) -> None:
        """Test inverse words and integer powers."""
        w = (1, -2)
        assert invert(w) == (2, -1)
        assert power(w, 3) == (1, -2, 1, -2, 1, -2)
        assert power(w, -1) == (2, -1)
        assert power(w, 0) == ()

    def test_commutator_is_reduced(self) -> None:
        """Test [a, b] = a b A B and [a, a] = 1."""
        assert commutator((1,), (2,)) == (1, 2, -1, -2)
        assert commutator((1,), (1,)) == ()

    def test_product_of_many(self) -> None:
        """Test product over several words."""
        assert product((1,), (2,), (-2,), (-1,)) == ()

    def test_zero_letter_rejected(self) -> None:
        """Test that 0 is not a letter."""
        with pytest.raises(ValidationError):
            reduce_word([1, 0])

    def test_letter_outside_rank_rejected(self) -> None:
        """Test rank checking."""
        with pytest.raises(RankMismatchError):
            reduce_word([3], rank=2)

    def test_abelianize(self) -> None:
        """Test signed letter counts."""
        assert abelianize((1, 2, 1, -2, -2), 2) == (2, -1)

    def test_string_round_trip(self) -> None:
        """Test that word_to_str and parse_word agree."""
        names = ("a", "b")
        w = (1, -2, -1, 2)
        assert word_to_str(w, names) == "a B A b"
        assert parse_word("a B A b", names) == w
        assert parse_word("1", names) == ()

    def test_parse_unknown_generator(self) -> None:
        """Test that parse_word rejects unknown names."""
        with pytest.raises(ValidationError):
            parse_word("a z", ("a", "b"))


class TestGeneratorSet:
    """Tests for generator naming."""

    def test_default_names(self) -> None:
        """Test default names a, b, c."""
        assert GeneratorSet(3).names == ("a", "b", "c")

    def test_rank_one_rejected(self) -> None:
        """Test that free groups need rank >= 2."""
        with pytest.raises(ValidationError):
            GeneratorSet(1)

    def test_duplicate_names_rejected(self) -> None:
        """Test unique names."""
        with pytest.raises(ValidationError):
            GeneratorSet(2, ("a", "a"))


class TestEnumeration:
    """Tests for reduced word enumeration."""

    def test_alphabet_order(self) -> None:
        """Test the signed letter order."""
        assert alphabet(2) == (-2, -1, 1, 2)

    @pytest.mark.parametrize(("rank", "length"), [(2, 1), (2, 4), (3, 3)])
    def test_counts_match_formula(self, rank: int, length: int) -> None:
        """Test that enumeration yields 2k(2k-1)^(n-1) distinct reduced words."""
        words = list(enumerate_words(rank, length))
        assert len(words) == count_words(rank, length)
        assert len(set(words)) == len(words)
        assert all(reduce_word(w) == w for w in words)

    def test_first_letter_partitions_sphere(self) -> None:
        """Test that first-letter subsets partition the sphere."""
        parts = [list(enumerate_words(2, 3, first=x)) for x in alphabet(2)]
        assert sum(len(p) for p in parts) == count_words(2, 3)
        assert all(w[0] == x for x, p in zip(alphabet(2), parts, strict=True) for w in p)

    def test_walk_visits_the_ball(self) -> None:
        """Test that walk_words visits every nontrivial word once with its product."""
        seen: list[tuple[int, ...]] = []
        sums: dict[tuple[int, ...], int] = {}

        def visit(w: tuple[int, ...], value: int) -> None:
            seen.append(w)
            sums[w] = value

        walk_words(2, 3, lambda acc, x: acc + x, 0, visit)
        assert len(seen) == ball_size(2, 3)
        assert all(sums[w] == sum(w) for w in seen)

    def test_random_word_is_reduced(self) -> None:
        """Test random reduced words of fixed length."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            w = random_word(2, 8, rng)
            assert len(w) == 8
            assert reduce_word(w) == w


class TestFiniteIndex:
    """Tests for finite-index subgroup bases."""

    def test_k3_basis(self) -> None:
        """Test k = 3: {a, b^2, b a b^-1}, p = 1, index 2."""
        result = finite_index_generators(3)
        assert result.generators == [[1], [2, 2], [2, 1, -2]]
        assert result.p == 1
        assert result.index == 2
        assert result.coset_index == 2

    def test_k4_basis(self) -> None:
        """Test k = 4: p = 2 and index 3."""
        result = finite_index_generators(4)
        assert result.p == 2
        assert result.coset_index == 3
        assert result.generators[2] == [2, 1, 1, -2]

    @pytest.mark.parametrize("k", [3, 4, 5, 6])
    def test_nielsen_schreier(self, k: int) -> None:
        """Test rank k = 1 + (k - 1) and membership of every generator."""
        result = finite_index_generators(k)
        assert len(result.generators) == k
        assert result.nielsen_schreier is True
        assert result.members_verified is True
        assert result.coset_index == k - 1

    def test_small_k_rejected(self) -> None:
        """Test that k < 3 is rejected."""
        with pytest.raises(ValidationError):
            finite_index_generators(2)

    def test_infinite_index_is_incomplete(self) -> None:
        """Test that <a> has no finite index."""
        table = enumerate_cosets(2, [(1,)])
        assert table.index() is None

    def test_index_two_membership(self) -> None:
        """Test membership in the index-2 subgroup <a, b^2, b a b^-1>."""
        table = enumerate_cosets(2, [(1,), (2, 2), (2, 1, -2)])
        assert table.contains((2, 1, 1, -2))
        assert not table.contains((2,))

    def test_subgroup_rank_from_table(self) -> None:
        """Test rank 1 + 2 (2 - 1) = 3 at index 2, whatever words generate it."""
        basis = [(1,), (2, 2), (2, 1, -2)]
        assert enumerate_cosets(2, basis).subgroup_rank() == 3
        redundant = enumerate_cosets(2, [*basis, (1, 1), (2, 2, 1)])
        assert redundant.index() == 2
        assert redundant.subgroup_rank() == 3
        assert enumerate_cosets(2, [(1,)]).subgroup_rank() is None
