"""Tests for exact rational matrices, spectra and the float helpers."""

import math
from fractions import Fraction

import numpy as np
import pytest

from anosov_forge.catalog import G
from anosov_forge.errors import (
    NotLoxodromicError,
    ParityError,
    SingularMatrixError,
    ValidationError,
)
from anosov_forge.exactlinalg import (
    RatMat,
    charpoly3,
    classify_sl2,
    commutator_differential_rank,
    cross,
    det3,
    discriminant,
    dot,
    eigen_structure,
    float_loxodromic,
    has_modulus_tie,
    inv3,
    is_loxodromic,
    is_unipotent,
    matrix_rank,
    mul3,
    nilpotent_cube,
    nth_root,
    nullspace,
    rat_str,
    rational_roots,
    rational_rotation,
    rationalize,
    scalar_plane,
    singular_values,
    spectrum3,
    sturm_real_root_count,
    to_rat,
)

F = RatMat.of(
    [
        [6, 2, -2],
        [Fraction(-1, 2), Fraction(-1, 4), Fraction(1, 2)],
        [Fraction(9, 2), Fraction(3, 4), Fraction(-1, 2)],
    ]
)


class TestRatMat:
    """Tests for exact matrix arithmetic."""

    def test_inverse_and_identity(self) -> None:
        """Test that M M^-1 = I exactly."""
        assert (F @ F.inv()).is_identity()
        assert (G.inv() @ G).is_identity()

    def test_identity_helpers(self) -> None:
        """Test det3, mul3, inv3 and charpoly3 on the identity."""
        identity = RatMat.identity(3)
        assert det3(identity) == 1
        assert inv3(identity) == identity
        assert mul3(identity, F) == F
        assert charpoly3(identity) == (1, -3, 3, -1)

    def test_det_of_g(self) -> None:
        """Test det(g) = 1 exactly."""
        assert G.det == 1
        assert G.is_special

    def test_power_matches_repeated_product(self) -> None:
        """Test fast exponentiation, including negative powers."""
        assert G**3 == G @ G @ G
        assert (G**-2 @ G**2).is_identity()

    def test_singular_inverse_raises(self) -> None:
        """Test that singular matrices have no inverse."""
        with pytest.raises(SingularMatrixError):
            RatMat.diag(1, 0, 1).inv()

    def test_floats_rejected(self) -> None:
        """Test that floats are not silently rationalized."""
        with pytest.raises(ValidationError):
            to_rat(0.5)  # type: ignore[arg-type]

    def test_only_small_sizes(self) -> None:
        """Test that only 2x2 and 3x3 matrices exist."""
        with pytest.raises(ValidationError):
            RatMat.of([[1]])

    def test_json_form(self) -> None:
        """Test rationals serialize as p/q strings."""
        assert G.to_json()[2] == ["0/1", "0/1", "1/8"]
        assert RatMat.from_json(G.to_json()) == G
        assert rat_str(Fraction(-3, 4)) == "-3/4"

    def test_block(self) -> None:
        """Test the block upper-triangular constructor."""
        m = RatMat.block(RatMat.of([[2, 0], [0, 1]]), Fraction(1, 2), (1, 1))
        assert m.det == 1
        assert m[0, 2] == 1
        assert m.upper_block() == RatMat.of([[2, 0], [0, 1]])


class TestSpectrum:
    """Tests for characteristic polynomials and spectra."""

    def test_g_has_one_real_eigenvalue(self) -> None:
        """Test the spectrum of g: 1/8 exactly and a pair of modulus 2 sqrt 2."""
        spec = spectrum3(G)
        assert spec.disc_sign < 0
        assert spec.exact_roots == (Fraction(1, 8),)
        assert abs(spec.lambda_u - 2 * math.sqrt(2)) <= 1e-9
        assert abs(spec.lambda_c - 2 * math.sqrt(2)) <= 1e-9
        assert spec.lambda_s == pytest.approx(1 / 8)
        assert spec.real_flags == (False, False, True)
        assert discriminant(G.charpoly()) < 0

    @pytest.mark.parametrize("j", range(1, 17))
    def test_gap_of_g_powers_is_flat(self, j: int) -> None:
        """Test lambda_1 / lambda_2 = 1 for every power of g."""
        spec = spectrum3(G**j)
        assert abs(spec.moduli[0] / spec.moduli[1] - 1) <= 1e-9

    def test_f_is_loxodromic_with_rational_spectrum(self) -> None:
        """Test the stored partner has eigenvalues 4, 1, 1/4."""
        assert is_loxodromic(F)
        assert sorted(rational_roots(F.charpoly())) == [Fraction(1, 4), 1, 4]

    def test_g_is_not_loxodromic(self) -> None:
        """Test the complex pair rules out loxodromy."""
        assert not is_loxodromic(G)

    def test_modulus_tie(self) -> None:
        """Test exact detection of eigenvalues r and -r."""
        tie = RatMat.diag(2, -2, Fraction(1, 4))
        assert has_modulus_tie(tie.charpoly())
        assert not is_loxodromic(tie)

    def test_sturm_count(self) -> None:
        """Test Sturm counts for x^3 - x and x^3 + x."""
        one, zero = Fraction(1), Fraction(0)
        assert sturm_real_root_count((one, zero, -one, zero)) == 3
        assert sturm_real_root_count((one, zero, one, zero)) == 1

    def test_unipotent_checks(self) -> None:
        """Test both exact unipotence tests."""
        jordan = RatMat.of([[1, 1, 0], [0, 1, 1], [0, 0, 1]])
        assert is_unipotent(jordan)
        assert nilpotent_cube(jordan)
        assert not is_unipotent(G)


class TestEigenStructure:
    """Tests for eigenlines and invariant planes."""

    def test_exact_lines_of_f(self) -> None:
        """Test E^u = (1,0,1), E^c = (2,2,7), E^s = (0,1,1) up to scale."""
        structure = eigen_structure(F)
        assert structure.exact_lines is not None
        eu, ec, es = structure.exact_lines
        assert cross(eu, (1, 0, 1)) == (0, 0, 0)
        assert cross(ec, (2, 2, 7)) == (0, 0, 0)
        assert cross(es, (0, 1, 1)) == (0, 0, 0)
        assert structure.ecu_exact is not None
        assert dot(structure.ecu_exact, eu) == 0

    def test_float_structure_agrees(self) -> None:
        """Test the float path matches the exact one."""
        exact = eigen_structure(F)
        approx = eigen_structure(F.to_float())
        assert np.allclose(exact.eu, approx.eu, atol=1e-9)
        assert np.allclose(exact.ecs, approx.ecs, atol=1e-9)

    def test_non_loxodromic_rejected(self) -> None:
        """Test that g has no eigen structure."""
        with pytest.raises(NotLoxodromicError):
            eigen_structure(G)

    def test_scalar_plane_of_g8(self) -> None:
        """Test g^8 = 4096 on P0 and 4096^-2 on L0."""
        sp = scalar_plane(G**8)
        assert sp is not None
        assert sp.mu == 4096
        assert sp.nu == Fraction(1, 4096**2)
        assert cross(sp.line, (0, 0, 1)) == (0, 0, 0)
        assert scalar_plane(G) is None

    def test_nullspace_and_rank(self) -> None:
        """Test kernel basis and rank of a rank-2 matrix."""
        rows = [[Fraction(x) for x in r] for r in ((1, 2, 3), (2, 4, 6), (0, 1, 1))]
        assert matrix_rank(rows) == 2
        (v,) = nullspace(rows)
        assert all(dot(r, v) == 0 for r in rows)


class TestSL2:
    """Tests for SL2 classification and the commutator differential."""

    def test_canonical_classes(self) -> None:
        """Test the three canonical representatives."""
        assert classify_sl2(RatMat.of([[2, 0], [0, Fraction(1, 2)]])) == "hyperbolic"
        assert classify_sl2(RatMat.of([[0, -1], [1, 0]])) == "elliptic"
        assert classify_sl2(RatMat.of([[1, 1], [0, 1]])) == "parabolic"
        assert classify_sl2(RatMat.identity(2)) == "plus_minus_identity"
        assert classify_sl2(RatMat.of([[1, 0], [0, -1]])) == "glide"

    def test_commutator_rank_at_identity(self) -> None:
        """Test the differential vanishes at (I, I)."""
        eye = RatMat.identity(2)
        assert commutator_differential_rank(eye, eye) == 0

    def test_commutator_rank_on_hyperbolic_pairs(self) -> None:
        """Test rank 3 on 1000 random non-commuting hyperbolic pairs."""
        rng = np.random.default_rng(12)
        checked = 0
        while checked < 1000:
            a, b, c, d = (int(x) for x in rng.integers(1, 6, size=4))
            g = RatMat.of([[1 + a * b, a], [b, 1]])
            h = RatMat.of([[1, c], [d, 1 + c * d]])
            if g @ h == h @ g:
                continue
            assert classify_sl2(g) == "hyperbolic"
            assert commutator_differential_rank(g, h) == 3
            checked += 1


class TestFloatHelpers:
    """Tests for roots, rotations and rationalization."""

    def test_cube_root(self) -> None:
        """Test the real cube root of diag(8, 1, 1/8)."""
        r = nth_root(np.diag([8.0, 1.0, 0.125]), 3)
        assert np.allclose(r, np.diag([2.0, 1.0, 0.5]))

    def test_even_root_of_negative_spectrum(self) -> None:
        """Test that even roots need positive eigenvalues."""
        with pytest.raises(ParityError):
            nth_root(np.diag([-4.0, 1.0, -0.25]), 2)

    def test_root_of_rotation_rejected(self) -> None:
        """Test that non-loxodromic matrices have no root here."""
        with pytest.raises(NotLoxodromicError):
            nth_root(G.to_float(), 3)

    def test_rational_rotation(self) -> None:
        """Test rational rotations are orthogonal with det 1."""
        r = rational_rotation(Fraction(7, 65))
        assert r.det == 1
        assert (r @ r.transpose()).is_identity()
        assert r[0, 0] == Fraction(2088, 2137)

    def test_rationalize(self) -> None:
        """Test snapping floats to nearby rationals."""
        m = rationalize(np.array([[0.5, 0.25], [1 / 3, 2.0]]))
        assert m == RatMat.of([[Fraction(1, 2), Fraction(1, 4)], [Fraction(1, 3), 2]])
        assert rationalize(np.array([[math.pi, 0.0], [0.0, 1.0]]), max_denominator=10) is None

    def test_singular_values_and_loxodromy(self) -> None:
        """Test SVD ordering and the float loxodromy test."""
        s = singular_values(RatMat.diag(4, 1, Fraction(1, 4)))
        assert s == pytest.approx((4.0, 1.0, 0.25))
        assert float_loxodromic(np.diag([4.0, 1.0, 0.25]))
        assert not float_loxodromic(G.to_float())

