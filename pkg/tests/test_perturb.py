"""Tests for compensated deformations, incidence solving and unipotent witnesses."""

import math
from fractions import Fraction

import numpy as np
import pytest

from anosov_forge.catalog import CatalogEntry, rho_k
from anosov_forge.config import Settings
from anosov_forge.errors import (
    HypothesisError,
    SearchExhaustedError,
    ValidationError,
)
from anosov_forge.exactlinalg import RatMat
from anosov_forge.perturb import (
    CommutatorSetup,
    commutator_at,
    commutator_word,
    compensated_path,
    exact_commutator_witness,
    exact_unipotent_instance,
    genericity_adjust,
    rho_k_destabilize,
    solve_incidence,
    unipotent_commutator,
)
from anosov_forge.represent import Representation, unipotent_scan

# E^u = e1, E^c = e3 = L0, E^s = (1, 1, 1); rho(ab) = diag(2, 2, 1/4)
CENTER_ON_L0 = RatMat.of(
    [[4, Fraction(-15, 4), 0], [0, Fraction(1, 4), 0], [0, Fraction(-3, 4), 1]]
)
OMEGA = RatMat.diag(2, 2, Fraction(1, 4))

CROSSING = math.atan(1 / (4 * math.sqrt(2)))


def _center_on_l0() -> Representation:
    return Representation([CENTER_ON_L0, CENTER_ON_L0.inv() @ OMEGA])


class TestWords:
    """Tests for the commutator word."""

    def test_commutator_word(self) -> None:
        """Test [ab, a ab a^-1] after free reduction."""
        assert commutator_word((1, 2), 1, 1) == (1, 2, 1, 1, 2, -1, -2, -2, -1, -1)

    def test_zero_exponents_rejected(self) -> None:
        """Test that q = 0 and p = 0 are refused."""
        with pytest.raises(ValidationError):
            commutator_word((1, 2), 0, 1)
        with pytest.raises(ValidationError):
            commutator_word((1, 2), 1, 0)

    def test_setup_description(self, planted: CommutatorSetup) -> None:
        """Test omega = a b for the planted instance."""
        assert planted.omega == (1, 2)
        assert planted.describe()["omega"] == [1, 2]


class TestGenericity:
    """Tests for the genericity pre-perturbation."""

    def test_planted_is_already_generic(self, planted: CommutatorSetup) -> None:
        """Test that nothing moves when the margins are large."""
        images, result = genericity_adjust(planted.rho, 1, 2, 1, 1)
        assert not result.changed
        assert result.center_margin > 0.5
        assert np.allclose(images[0], planted.rho.images[0].to_float())

    def test_center_on_l0_is_moved(self, test_settings: Settings) -> None:
        """Test that E^c leaves L0 while rho(omega) is kept."""
        images, result = genericity_adjust(_center_on_l0(), 1, 2, 1, 1)
        assert result.changed
        assert result.center_margin >= test_settings.genericity_eta / 10
        assert result.drift <= 1e-12
        assert result.perturbation > 0
        assert np.allclose(images[0] @ images[1], OMEGA.to_float())

    def test_path_needs_center_off_l0(self) -> None:
        """Test that the path refuses E^c = L0."""
        with pytest.raises(HypothesisError) as exc_info:
            compensated_path(_center_on_l0(), 1, 2, 1, 1)
        assert exc_info.value.check == "center_off_l0"

    def test_eta_range(self, planted: CommutatorSetup) -> None:
        """Test that eta must lie in (0, 1)."""
        with pytest.raises(ValidationError):
            genericity_adjust(planted.rho, 1, 2, 1, 1, eta=1.5)


class TestPath:
    """Tests for compensated deformation paths."""

    def test_omega_is_constant(self, planted: CommutatorSetup) -> None:
        """Test that rho_t(omega) does not move along the path."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        assert path.sign == 1
        assert path.drift() <= 1e-10
        assert path.mu == pytest.approx(2.0)

    def test_theta_changes_sign(self, planted: CommutatorSetup) -> None:
        """Test transversality at t = 0."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        lo, hi = path.domain
        assert path.theta(lo) * path.theta(hi) < 0
        assert path.theta(0.0) == pytest.approx(0.0, abs=1e-12)

    def test_amplitude_range(self, planted: CommutatorSetup) -> None:
        """Test that the amplitude must lie in (0, pi/2)."""
        with pytest.raises(ValidationError):
            compensated_path(planted.rho, 1, 2, 1, 1, amplitude=2.0)

    def test_distinct_generators(self, planted: CommutatorSetup) -> None:
        """Test that a and b must differ."""
        with pytest.raises(ValidationError):
            compensated_path(planted.rho, 1, 1, 1, 1)


class TestIncidence:
    """Tests for the incidence solver and the commutator witness."""

    def test_planted_crossing(self, planted: CommutatorSetup) -> None:
        """Test p = 1 at tan t = 1 / (4 sqrt 2) within 60 bisection steps."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        result = solve_incidence(path)
        assert result.p == 1
        assert abs(result.theta) <= 1e-12
        assert result.steps <= 60
        assert result.t0 == pytest.approx(CROSSING, abs=1e-9)
        assert result.trace[-1] == abs(result.theta)

    def test_parallel_solver_agrees(
        self, planted: CommutatorSetup, test_settings: Settings
    ) -> None:
        """Test that the worker count does not change the solution."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        serial = solve_incidence(path)
        test_settings.workers = 4
        assert solve_incidence(path) == serial

    def test_small_amplitude_skips_p1(self, planted: CommutatorSetup) -> None:
        """Test that a one-signed p = 1 is skipped, not reported."""
        path = compensated_path(planted.rho, 1, 2, 1, 1, amplitude=0.05)
        result = solve_incidence(path)
        assert result.p > 1
        assert 1 in result.skipped

    def test_exhausted(self, planted: CommutatorSetup) -> None:
        """Test that no bracket up to p_max raises with the endpoint trace."""
        path = compensated_path(planted.rho, 1, 2, 1, 1, amplitude=0.05)
        with pytest.raises(SearchExhaustedError) as exc_info:
            solve_incidence(path, p_max=1)
        assert exc_info.value.trace[0]["p"] == 1

    def test_tolerance_must_be_positive(self, planted: CommutatorSetup) -> None:
        """Test parameter validation."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        with pytest.raises(ValidationError):
            solve_incidence(path, tol=0.0)

    def test_unipotent_witness(self, planted: CommutatorSetup) -> None:
        """Test ||(M - I)^3|| / ||M||^3 <= 1e-8 at the crossing."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        witness = unipotent_commutator(path, solve_incidence(path))
        assert witness.accepted
        assert witness.residual <= 1e-8
        assert witness.charpoly_distance <= 1e-6
        assert witness.word == list(commutator_word((1, 2), 1, 1))
        assert "theta" in witness.parameters

    def test_no_witness_before_perturbing(self, planted: CommutatorSetup) -> None:
        """Test that the commutator is far from unipotent at t = 0."""
        path = compensated_path(planted.rho, 1, 2, 1, 1)
        witness = commutator_at(path, 0.0, 1)
        assert not witness.accepted
        assert witness.residual > 1e-6

    @pytest.mark.slow
    def test_unperturbed_scan_is_empty(self, planted: CommutatorSetup) -> None:
        """Test the exhaustive scan at the witness length finds nothing."""
        length = len(commutator_word((1, 2), 1, 1))
        assert not unipotent_scan(planted.rho, length).found


class TestExactWitnesses:
    """Tests for witnesses confirmed in rational arithmetic."""

    def test_exact_instance(self) -> None:
        """Test that the exact instance is unipotent without perturbation."""
        setup = exact_unipotent_instance()
        assert setup.p is not None
        witness = exact_commutator_witness(setup.rho, setup.omega, setup.q, setup.p)
        assert witness.exact_confirmed
        assert witness.residual == 0.0

    def test_destabilize_needs_rank_three(self, rho2_entry: CatalogEntry) -> None:
        """Test that rank 2 is refused."""
        with pytest.raises(ValidationError):
            rho_k_destabilize(rho2_entry.representation())

    @pytest.mark.slow
    def test_destabilize_rho3(self) -> None:
        """Test the two-step witness [c3^q, gamma c1 gamma^-1] on rho3.

        The witness is exact for any transversal plane, so the approach gate
        is lifted here and only the reported sizes depend on it.
        """
        result = rho_k_destabilize(rho_k(3).representation(), approach_tol=math.inf)
        assert result.q == 4
        assert result.witness.exact_confirmed
        assert result.witness.residual <= 1e-6
        assert result.witness.word[:4] == [3, 3, 3, 3]
        assert result.correction > 0

    def test_destabilize_gate_reports_sizes(self) -> None:
        """Test that a short search misses 1e-6 and reports approach and correction."""
        with pytest.raises(SearchExhaustedError) as exc_info:
            rho_k_destabilize(rho_k(3).representation(), n_max=2)
        approach, correction = exc_info.value.trace
        assert approach > 1e-6
        assert correction > 0

    @pytest.mark.slow
    def test_destabilize_sizes_shrink_with_n_max(self) -> None:
        """Test approach and correction never grow as n_max grows."""
        rho = rho_k(3).representation()
        sizes = []
        for n_max in range(2, 6):
            try:
                result = rho_k_destabilize(rho, n_max=n_max)
                sizes.append((result.approach, result.correction))
            except SearchExhaustedError as exc:
                sizes.append((exc.trace[0], exc.trace[1]))
        approaches = [a for a, _ in sizes]
        assert approaches == sorted(approaches, reverse=True)
        assert sizes[-1][1] <= sizes[0][1]
