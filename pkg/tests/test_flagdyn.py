"""Tests for flags, limit set samples and grid coverage."""

from fractions import Fraction

import numpy as np
import pytest

from anosov_forge.catalog import G, CatalogEntry, rho2_minimal
from anosov_forge.config import Settings
from anosov_forge.errors import NotLoxodromicError, ValidationError
from anosov_forge.exactlinalg import RatMat
from anosov_forge.flagdyn import (
    Flag,
    act_flag,
    attracting_flag,
    coverage,
    coverage_schedule,
    flag_distance,
    flag_grid,
    limit_set_sample,
    sample_tsv,
    standard_flag,
)

DIAG = RatMat.diag(4, 1, Fraction(1, 4))


def _grid_flags(eta: float) -> list[Flag]:
    return [
        Flag(line, normal)
        for lines, normals in flag_grid(eta)
        for line, normal in zip(lines, normals, strict=True)
    ]


class TestFlags:
    """Tests for flags and the SL3 action."""

    def test_of_projects_line_into_plane(self) -> None:
        """Test that Flag.of makes the line incident to the plane."""
        fl = Flag.of((1.0, 0.0, 1.0), (0.0, 0.0, 2.0))
        assert np.allclose(fl.line, [1.0, 0.0, 0.0])
        assert np.allclose(fl.normal, [0.0, 0.0, 1.0])

    def test_non_incident_flag_rejected(self) -> None:
        """Test that a line outside its plane is refused."""
        with pytest.raises(ValidationError):
            Flag(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0]))

    def test_distance_ignores_signs(self) -> None:
        """Test d(F, F) = 0 for opposite representatives."""
        f1 = Flag.of((1.0, 2.0, 0.0), (0.0, 0.0, 1.0))
        f2 = Flag.of((-1.0, -2.0, 0.0), (0.0, 0.0, -1.0))
        assert flag_distance(f1, f2) == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(f1.embedding(), f2.embedding())

    def test_distance_to_transverse_flag(self) -> None:
        """Test that orthogonal lines and normals are at distance 1."""
        f1 = standard_flag()
        f2 = Flag.of((0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
        assert flag_distance(f1, f2) == pytest.approx(1.0)

    def test_action_round_trip(self) -> None:
        """Test that M and M^-1 undo each other on flags."""
        fl = Flag.of((1.0, 1.0, 0.0), (1.0, -1.0, 1.0))
        moved = act_flag(G, fl)
        back = act_flag(G.inv(), moved)
        assert flag_distance(back, fl) <= 1e-12

    def test_action_needs_invertible(self) -> None:
        """Test that singular matrices do not act."""
        with pytest.raises(ValidationError):
            act_flag(np.diag([1.0, 1.0, 0.0]), standard_flag())

    def test_attracting_flag(self) -> None:
        """Test (E^u, E^cu) = (e1, e1 ^ e2) for diag(4, 1, 1/4)."""
        fl = attracting_flag(DIAG)
        assert flag_distance(fl, standard_flag()) <= 1e-12
        assert flag_distance(act_flag(DIAG, fl), fl) <= 1e-12

    def test_attracting_flag_needs_loxodromic(self) -> None:
        """Test that g has no attracting flag."""
        with pytest.raises(NotLoxodromicError):
            attracting_flag(G)


class TestLimitSetSample:
    """Tests for sampled limit sets."""

    def test_sample_lengths(self, schottky_entry: CatalogEntry) -> None:
        """Test that every flag carries the length of its shortest word."""
        sample = limit_set_sample(schottky_entry.representation(), 3)
        assert len(sample) > 1
        assert sample.max_length == 3
        assert min(sample.lengths) == 0
        assert max(sample.lengths) <= 3
        assert len(sample.upto(0)) == 1

    def test_samples_are_nested(self, schottky_entry: CatalogEntry) -> None:
        """Test upto(n) grows with n."""
        sample = limit_set_sample(schottky_entry.representation(), 3)
        sizes = [len(sample.upto(n)) for n in range(4)]
        assert sizes == sorted(sizes)
        assert sizes[-1] == len(sample)

    def test_sample_tsv(self, schottky_entry: CatalogEntry) -> None:
        """Test one row per flag and seven columns."""
        sample = limit_set_sample(schottky_entry.representation(), 2)
        lines = sample_tsv(sample).splitlines()
        assert lines[0].startswith("# l0")
        assert len(lines) == len(sample) + 1
        assert len(lines[1].split("\t")) == 7

    @pytest.mark.parametrize("n", [5, 6])
    def test_rho2_long_words(self, rho2_entry: CatalogEntry, n: int) -> None:
        """Test rho2 samples stay finite once products are far from invertible."""
        sample = limit_set_sample(rho2_entry.representation(), n)
        assert len(sample) > 1
        assert max(sample.lengths) <= n
        assert len(sample.upto(0)) == 1
        assert all(
            np.isfinite(f.line).all() and np.isfinite(f.normal).all() for f in sample.flags
        )

    def test_orbit_flags_match_exact_action(self, rho2_entry: CatalogEntry) -> None:
        """Test that a length-2 orbit flag agrees with the exact image of the base flag."""
        rho = rho2_entry.representation()
        base = standard_flag()
        image = rho.evaluate((2, 1))
        line = image.apply((1, 0, 0))
        normal = image.inv().transpose().apply((0, 0, 1))
        expected = Flag.of([float(x) for x in line], [float(x) for x in normal])
        sample = limit_set_sample(rho, 2, base=base, resolution=1e-9)
        assert min(flag_distance(expected, f) for f in sample.flags) <= 1e-6


class TestCoverage:
    """Tests for the flag grid and coverage fractions."""

    def test_grid_size(self) -> None:
        """Test the cell count at eta = 1: (1 + 6) lines times 4 planes."""
        grid = flag_grid(1.0)
        assert sum(len(lines) for lines, _ in grid) == 28

    def test_grid_validation(self) -> None:
        """Test that eta must be positive."""
        with pytest.raises(ValidationError):
            flag_grid(0.0)

    def test_grid_covers_itself(self) -> None:
        """Test coverage 1 when the sample is the grid."""
        report = coverage(_grid_flags(0.5), eta=0.5, delta=0.01)
        assert report.fraction == 1.0
        assert report.sample_size == report.grid_size

    def test_empty_sample(self) -> None:
        """Test coverage 0 for no flags."""
        assert coverage([], eta=0.5, delta=0.1).fraction == 0.0

    def test_monotone_in_delta(self, schottky_entry: CatalogEntry) -> None:
        """Test that a larger delta never covers less."""
        sample = limit_set_sample(schottky_entry.representation(), 3)
        small = coverage(sample, eta=0.2, delta=0.05)
        large = coverage(sample, eta=0.2, delta=0.2)
        assert large.fraction >= small.fraction

    def test_parallel_coverage_agrees(
        self, schottky_entry: CatalogEntry, test_settings: Settings
    ) -> None:
        """Test that the worker count does not change the fraction."""
        sample = limit_set_sample(schottky_entry.representation(), 3)
        serial = coverage(sample, eta=0.2, delta=0.1)
        test_settings.workers = 4
        assert coverage(sample, eta=0.2, delta=0.1) == serial

    def test_schedule(self, schottky_entry: CatalogEntry) -> None:
        """Test nondecreasing coverage along nested samples."""
        report = coverage_schedule(schottky_entry.representation(), [3, 1, 2], eta=0.2)
        assert report.lengths == [1, 2, 3]
        assert report.fractions == sorted(report.fractions)
        assert report.fraction == report.fractions[-1]

    def test_schedule_needs_lengths(self, schottky_entry: CatalogEntry) -> None:
        """Test that an empty schedule is refused."""
        with pytest.raises(ValidationError):
            coverage_schedule(schottky_entry.representation(), [])

    @pytest.mark.slow
    def test_minimal_rotation_covers_more(self, rho2_entry: CatalogEntry) -> None:
        """Test coverage of rho2_minimal exceeds rho2 at N = 5, eta = 0.05, delta = 0.1."""
        plain = limit_set_sample(rho2_entry.representation(), 5)
        minimal = limit_set_sample(rho2_minimal().representation(), 5)
        before = coverage(plain, 0.05, 0.1)
        after = coverage(minimal, 0.05, 0.1)
        assert after.fraction > before.fraction
