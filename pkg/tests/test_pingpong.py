"""Tests for ping-pong certificates and the power construction."""

from fractions import Fraction

import numpy as np
import pytest

from anosov_forge.catalog import G, partner
from anosov_forge.errors import HypothesisError, ValidationError
from anosov_forge.exactlinalg import RatMat
from anosov_forge.models import ConeBall
from anosov_forge.pingpong import (
    ball_net,
    certify_condition_star,
    check_fabricaqi,
    chordal_distance,
    find_power,
    prepared_neighborhood,
    projective_lipschitz_bound,
    qi_bound_check,
    schottky_family,
)
from anosov_forge.represent import Representation

# g-invariant lines of P0: g turns the xy-plane by 45 degrees
P0_ORBIT = [
    tuple(Fraction(x) for x in v) for v in ((1, 0, 0), (1, 1, 0), (0, 1, 0), (-1, 1, 0))
]


class TestProjectiveGeometry:
    """Tests for chordal distances, nets and Lipschitz bounds."""

    def test_chordal_distance(self) -> None:
        """Test orthogonal lines at distance 1 and sign invariance."""
        assert chordal_distance((1, 0, 0), (0, 1, 0)) == pytest.approx(1.0)
        assert chordal_distance((1, 2, 3), (-2, -4, -6)) == 0.0

    def test_lipschitz_bound_is_sound(self) -> None:
        """Test d(gL, gL') <= K d(L, L') on 10^4 random triples."""
        rng = np.random.default_rng(2024)
        for _ in range(100):
            g = rng.normal(size=(3, 3))
            bound = projective_lipschitz_bound(g)
            for _ in range(100):
                u, v = rng.normal(size=3), rng.normal(size=3)
                assert chordal_distance(g @ u, g @ v) <= bound * chordal_distance(u, v) + 1e-12

    def test_lipschitz_needs_invertible(self) -> None:
        """Test that singular matrices have no projective action."""
        with pytest.raises(ValidationError):
            projective_lipschitz_bound(np.diag([1.0, 1.0, 0.0]))

    def test_ball_net_covers_the_ball(self) -> None:
        """Test that random lines in the ball are within the resolution of the net."""
        center = np.array([1.0, 2.0, 2.0]) / 3.0
        radius, h = 0.2, 0.02
        net = ball_net(center, radius, h)
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 200:
            p = center + rng.uniform(-0.25, 0.25, size=3)
            if chordal_distance(p, center) >= radius:
                continue
            p = p / np.linalg.norm(p)
            assert min(chordal_distance(p, q) for q in net) <= h
            checked += 1

    def test_ball_net_validation(self) -> None:
        """Test radius and resolution ranges."""
        with pytest.raises(ValidationError):
            ball_net((1, 0, 0), 1.0, 0.01)
        with pytest.raises(ValidationError):
            ball_net((1, 0, 0), 0.1, 0.0)


class TestConditionStar:
    """Tests for the five ping-pong conditions."""

    def test_schottky_family_certifies(self) -> None:
        """Test that the stored Schottky cones pass at c = 2."""
        family = schottky_family()
        result = certify_condition_star(
            family.labels, family.matrices, family.cones, 2.0, family.base_line
        )
        assert result.success
        assert result.certificate is not None
        assert result.certificate.margins["containment"] > 0
        assert result.certificate.margins["expansion"] >= 0
        assert len(result.certificate.lipschitz) == 4

    def test_overlapping_cones(self) -> None:
        """Test that disjointness is the first condition to fail."""
        family = schottky_family(radius=0.9)
        result = certify_condition_star(
            family.labels, family.matrices, family.cones, 2.0, family.base_line
        )
        assert not result.success
        assert result.failed_condition == "disjointness"
        assert result.witness is not None

    def test_base_line_inside_a_cone(self) -> None:
        """Test the base_outside condition."""
        family = schottky_family()
        result = certify_condition_star(
            family.labels, family.matrices, family.cones, 2.0, (1.0, 0.0, 0.0)
        )
        assert result.failed_condition == "base_outside"

    def test_expansion_must_exceed_one(self) -> None:
        """Test the expansion constant range."""
        family = schottky_family()
        with pytest.raises(ValidationError):
            certify_condition_star(
                family.labels, family.matrices, family.cones, 1.0, family.base_line
            )

    def test_family_must_be_symmetric(self) -> None:
        """Test that every element needs its inverse in the family."""
        family = schottky_family()
        mats = list(family.matrices)
        mats[1] = RatMat.diag(2, 1, Fraction(1, 2))
        with pytest.raises(ValidationError):
            certify_condition_star(family.labels, mats, family.cones, 2.0, family.base_line)

    def test_cones_must_be_nonempty(self) -> None:
        """Test that an empty cone is refused."""
        family = schottky_family()
        cones: list[list[ConeBall]] = [list(c) for c in family.cones]
        cones[0] = []
        with pytest.raises(ValidationError):
            certify_condition_star(family.labels, family.matrices, cones, 2.0, family.base_line)


class TestFabricaqi:
    """Tests for the hypotheses of the power construction."""

    def test_stored_partner_passes(self) -> None:
        """Test m = 8 and mu = 4096 for the frozen partner."""
        f, _ = partner()
        report = check_fabricaqi(f, G)
        assert report.passed
        assert report.m == 8
        assert report.mu == "4096/1"
        assert report.base_line == ["0/1", "0/1", "1/1"]

    def test_scalar_plane_is_exact(self) -> None:
        """Test g^8 = 4096 on P0 and 4096^-2 on L0."""
        g8 = G**8
        assert g8.apply((1, 0, 0)) == (4096, 0, 0)
        assert g8.apply((0, 1, 0)) == (0, 4096, 0)
        assert g8.apply((0, 0, 1)) == (0, 0, Fraction(1, 4096**2))

    def test_non_loxodromic_partner(self) -> None:
        """Test that f = g fails f_loxodromic instead of raising."""
        report = check_fabricaqi(G, G)
        assert not report.passed
        assert report.checks[0].name == "f_loxodromic"

    def test_no_scalar_power(self) -> None:
        """Test that g without a scalar power is rejected."""
        f, _ = partner()
        with pytest.raises(HypothesisError) as exc_info:
            check_fabricaqi(f, RatMat.identity(3), m_max=4)
        assert exc_info.value.check == "g_power_scalar_plane"


class TestPreparedNeighborhood:
    """Tests for arcs in P0 permuted by g."""

    def test_exact_arcs(self) -> None:
        """Test arcs around a g-invariant set of four lines."""
        report = prepared_neighborhood(G, 8, Fraction(4096), P0_ORBIT, 0.1)
        assert report.exact
        assert report.m == 8
        assert len(report.centers) == 4
        assert len(report.arcs) % 2 == 0
        assert report.epsilon0 == 1.0

    def test_lines_outside_p0(self) -> None:
        """Test that X must lie in P0."""
        with pytest.raises(ValidationError):
            prepared_neighborhood(G, 8, Fraction(4096), [(0, 0, 1)], 0.1)

    def test_non_invariant_lines(self) -> None:
        """Test that X must be g-invariant."""
        with pytest.raises(ValidationError):
            prepared_neighborhood(G, 8, Fraction(4096), P0_ORBIT[:1], 0.1)

    def test_arc_meeting_an_avoided_plane(self) -> None:
        """Test that an arc containing a forbidden trace is refused."""
        avoid = [(Fraction(0), Fraction(1), Fraction(0))]
        with pytest.raises(HypothesisError) as exc_info:
            prepared_neighborhood(G, 8, Fraction(4096), P0_ORBIT, 0.1, avoid=avoid)
        assert exc_info.value.check == "arc_collision"


class TestFindPower:
    """Tests for the power search and the quasi-isometry bound."""

    @pytest.mark.slow
    def test_odd_power_and_qi_bound(self) -> None:
        """Test an odd certified n <= 64 and s_1 >= 2^(|w|-1) up to length 6."""
        f, _ = partner()
        result = find_power(f, G, parity="odd")
        assert result.n % 2 == 1
        assert result.n <= 64
        assert result.certificate.expansion == 2.0
        n = result.n
        rho = Representation([f**n, G**n])
        bound = qi_bound_check(rho, result.certificate, 6)
        assert bound.passed
        assert bound.words_checked == 4 + 12 + 36 + 108 + 324 + 972
        assert bound.worst_ratio >= 1 - 1e-9

    def test_qi_bound_needs_certified_generators(self) -> None:
        """Test that generators outside the certificate are refused."""
        family = schottky_family()
        result = certify_condition_star(
            family.labels, family.matrices, family.cones, 2.0, family.base_line
        )
        assert result.certificate is not None
        rho = Representation([G, RatMat.diag(2, 1, Fraction(1, 2))])
        with pytest.raises(ValidationError):
            qi_bound_check(rho, result.certificate, 3)

    def test_qi_bound_on_schottky(self) -> None:
        """Test the bound on the certified Schottky family."""
        family = schottky_family()
        result = certify_condition_star(
            family.labels, family.matrices, family.cones, 2.0, family.base_line
        )
        assert result.certificate is not None
        bound = qi_bound_check(family.representation(), result.certificate, 4)
        assert bound.passed
        assert bound.violation is None
