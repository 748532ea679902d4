"""Flags in R^3 and the action of SL3 on them.

A flag is a line inside a plane, stored as a unit line vector and a unit
plane normal. Distances are the maximum of the chordal distances of the
lines and of the normals. Samples of the limit set are compared with a
deterministic grid of flags to measure how much of flag space they reach.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.spatial import cKDTree

from .config import settings
from .errors import EnumerationLimitError, NotLoxodromicError, ValidationError
from .exactlinalg import RatMat, eigen_structure, float_loxodromic, normalize_line
from .freegroup import Word, alphabet, walk_words
from .models import CoverageReport
from .represent import Representation, check_cap, map_first_letters

logger = structlog.get_logger(__name__)

_INCIDENCE_TOL = 1e-10
_GRID_CAP = 10**7
_Pair = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class Flag:
    """A line L inside a plane P, with P given by its unit normal."""

    line: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        if abs(float(self.line @ self.normal)) > _INCIDENCE_TOL:
            raise ValidationError("flag line does not lie in its plane")

    @classmethod
    def of(
        cls, line: Sequence[float] | np.ndarray, normal: Sequence[float] | np.ndarray
    ) -> "Flag":
        n = normalize_line(normal)
        v = np.asarray(line, dtype=float)
        v = v - (v @ n) * n
        return cls(normalize_line(v), n)

    def embedding(self) -> np.ndarray:
        return _embed(self.line[None, :], self.normal[None, :])[0]


def _embed(lines: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Sign-free coordinates: the projectors v v^T of line and normal."""
    ll = np.einsum("ki,kj->kij", lines, lines).reshape(len(lines), 9)
    nn = np.einsum("ki,kj->kij", normals, normals).reshape(len(normals), 9)
    return np.hstack([ll, nn])


def flag_distance(f1: Flag, f2: Flag) -> float:
    """max(d(L1, L2), d(P1, P2)) in the chordal metric."""
    dl = float(np.linalg.norm(np.cross(f1.line, f2.line)))
    dn = float(np.linalg.norm(np.cross(f1.normal, f2.normal)))
    return max(dl, dn)


def act_flag(m: RatMat | np.ndarray, fl: Flag) -> Flag:
    """(M L, M P); the plane normal moves by M^-T."""
    arr = m.to_float() if isinstance(m, RatMat) else np.asarray(m, dtype=float)
    try:
        normal = np.linalg.solve(arr.T, fl.normal)
    except np.linalg.LinAlgError as e:
        raise ValidationError("act_flag needs an invertible matrix") from e
    return Flag.of(arr @ fl.line, normal)


def attracting_flag(m: RatMat | np.ndarray) -> Flag:
    """(E^u, E^cu) of a loxodromic matrix."""
    structure = eigen_structure(m)
    return Flag.of(structure.eu, structure.ecu)


def standard_flag() -> Flag:
    return Flag(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))


def _base_flag(rho: Representation) -> Flag:
    for i, image in enumerate(rho.images):
        try:
            return attracting_flag(image)
        except NotLoxodromicError:
            logger.debug("base_flag_skipped", generator=rho.names[i])
    logger.warning("no_loxodromic_generator", fallback="standard_flag")
    return standard_flag()


# Limit set samples


@dataclass(frozen=True)
class FlagSample:
    """Deduplicated flags with the shortest word length that produced each."""

    flags: tuple[Flag, ...]
    lengths: tuple[int, ...]
    max_length: int

    def __len__(self) -> int:
        return len(self.flags)

    def upto(self, n: int) -> list[Flag]:
        return [f for f, k in zip(self.flags, self.lengths, strict=True) if k <= n]


def _top_eigenline(m: np.ndarray) -> np.ndarray:
    # E^u of M, or the normal of E^cu(M) when M is the inverse-transpose product
    values, vectors = np.linalg.eig(m)
    return normalize_line(vectors[:, int(np.argmax(np.abs(values)))].real)


def _dedup_key(fl: Flag, resolution: float) -> tuple[int, ...]:
    return tuple(int(x) for x in np.round(fl.embedding() / resolution))


def limit_set_sample(
    rho: Representation,
    max_length: int,
    base: Flag | None = None,
    resolution: float | None = None,
) -> FlagSample:
    """Attracting flags of loxodromic rho(w) and orbit points rho(w).base, |w| <= N.

    Lines move by the forward product and plane normals by a second product of
    inverse-transpose letters, both renormalized at every step, so no long
    product is ever inverted.
    """
    check_cap(rho.rank, max_length)
    resolution = settings.dedup_resolution if resolution is None else resolution
    base = _base_flag(rho) if base is None else base
    forward = {x: rho.letter(x).to_float() for x in alphabet(rho.rank)}
    dual = {x: rho.letter(-x).to_float().T for x in alphabet(rho.rank)}

    def step(v: _Pair, x: int) -> _Pair:
        m, n = v[0] @ forward[x], v[1] @ dual[x]
        return m / float(np.linalg.norm(m)), n / float(np.linalg.norm(n))

    def task(first: int) -> list[tuple[Flag, int]]:
        found: list[tuple[Flag, int]] = []

        def visit(w: Word, v: _Pair) -> None:
            m, n = v
            if float_loxodromic(m):
                found.append((Flag.of(_top_eigenline(m), _top_eigenline(n)), len(w)))
            found.append((Flag.of(m @ base.line, n @ base.normal), len(w)))

        walk_words(rho.rank, max_length, step, (np.eye(3), np.eye(3)), visit, first=first)
        return found

    kept: dict[tuple[int, ...], tuple[Flag, int]] = {_dedup_key(base, resolution): (base, 0)}
    for part in map_first_letters(rho.rank, task):
        for fl, n in part:
            key = _dedup_key(fl, resolution)
            if key not in kept or n < kept[key][1]:
                kept[key] = (fl, n)
    entries = list(kept.values())
    logger.info("limit_set_sampled", max_length=max_length, flags=len(entries))
    return FlagSample(
        flags=tuple(e[0] for e in entries),
        lengths=tuple(e[1] for e in entries),
        max_length=max_length,
    )


def sample_tsv(sample: FlagSample) -> str:
    """Point cloud: line (3 columns), plane normal (3 columns), word length."""
    rows = ["# l0\tl1\tl2\tn0\tn1\tn2\tlength"]
    for fl, n in zip(sample.flags, sample.lengths, strict=True):
        coords = "\t".join(f"{x:.9f}" for x in (*fl.line, *fl.normal))
        rows.append(f"{coords}\t{n}")
    return "\n".join(rows) + "\n"


# Grid coverage


def _grid_rows(eta: float) -> list[tuple[float, list[float]]]:
    thetas = np.arange(0.0, math.pi / 2 + 1e-12, eta)
    rows = []
    for theta in thetas:
        if theta == 0:
            rows.append((0.0, [0.0]))
            continue
        count = max(1, math.ceil(2 * math.pi * math.sin(theta) / eta))
        phis = [2 * math.pi * j / count for j in range(count)]
        if abs(theta - math.pi / 2) < 1e-12:
            phis = [p for p in phis if p < math.pi]
        rows.append((float(theta), phis))
    return rows


def flag_grid(eta: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Incident grid: a latitude grid of lines on the hemisphere, and for each
    line the planes through it at angle step eta. One (lines, normals) pair
    per latitude row.
    """
    if eta <= 0:
        raise ValidationError("grid resolution must be positive")
    rows = _grid_rows(eta)
    turns = math.ceil(math.pi / eta)
    size = sum(len(phis) for _, phis in rows) * turns
    if size > _GRID_CAP:
        raise EnumerationLimitError(f"flag grid of {size} cells exceeds {_GRID_CAP}")
    psis = np.pi * np.arange(turns) / turns
    out = []
    for theta, phis in rows:
        lines, normals = [], []
        st, ct = math.sin(theta), math.cos(theta)
        for phi in phis:
            sp, cp = math.sin(phi), math.cos(phi)
            line = np.array([st * cp, st * sp, ct])
            u1 = np.array([ct * cp, ct * sp, -st])
            u2 = np.array([-sp, cp, 0.0])
            for psi in psis:
                lines.append(line)
                normals.append(math.cos(psi) * u1 + math.sin(psi) * u2)
        out.append((np.array(lines), np.array(normals)))
    return out


def coverage(
    sample: Sequence[Flag] | FlagSample,
    eta: float | None = None,
    delta: float | None = None,
) -> CoverageReport:
    """Fraction of grid flags within flag distance delta of the sample."""
    eta = settings.coverage_eta if eta is None else eta
    delta = settings.coverage_delta if delta is None else delta
    if eta <= 0 or delta <= 0:
        raise ValidationError("eta and delta must be positive")
    flags = list(sample.flags) if isinstance(sample, FlagSample) else list(sample)
    grid = flag_grid(eta)
    size = sum(len(lines) for lines, _ in grid)
    covered = _covered(flags, grid, delta)
    fraction = covered / size if size else 0.0
    logger.info("coverage_computed", eta=eta, delta=delta, grid=size, fraction=fraction)
    return CoverageReport(
        eta=eta, delta=delta, grid_size=size, sample_size=len(flags), fraction=fraction
    )


def _covered(
    flags: Sequence[Flag], grid: list[tuple[np.ndarray, np.ndarray]], delta: float
) -> int:
    if not flags:
        return 0
    sample_lines = np.array([f.line for f in flags])
    sample_normals = np.array([f.normal for f in flags])
    # |vv^T - ww^T|_F = sqrt(2) d(v, w), so a flag distance <= delta is within 2 delta
    tree = cKDTree(_embed(sample_lines, sample_normals))

    def row_task(row: tuple[np.ndarray, np.ndarray]) -> int:
        lines, normals = row
        hits = tree.query_ball_point(_embed(lines, normals), r=2 * delta)
        count = 0
        for i, cand in enumerate(hits):
            if not cand:
                continue
            idx = np.asarray(cand)
            dl = np.linalg.norm(np.cross(sample_lines[idx], lines[i]), axis=1)
            dn = np.linalg.norm(np.cross(sample_normals[idx], normals[i]), axis=1)
            if np.any(np.maximum(dl, dn) <= delta):
                count += 1
        return count

    workers = min(settings.worker_count(), len(grid))
    if workers <= 1:
        return sum(row_task(row) for row in grid)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(row_task, grid))


def coverage_schedule(
    rho: Representation,
    lengths: Sequence[int],
    eta: float | None = None,
    delta: float | None = None,
    base: Flag | None = None,
) -> CoverageReport:
    """Coverage of the nested samples at each word length."""
    if not lengths:
        raise ValidationError("lengths must be non-empty")
    eta = settings.coverage_eta if eta is None else eta
    delta = settings.coverage_delta if delta is None else delta
    if eta <= 0 or delta <= 0:
        raise ValidationError("eta and delta must be positive")
    ordered = sorted(set(lengths))
    sample = limit_set_sample(rho, ordered[-1], base)
    grid = flag_grid(eta)
    size = sum(len(lines) for lines, _ in grid)
    fractions = [_covered(sample.upto(n), grid, delta) / size for n in ordered]
    logger.info("coverage_schedule", lengths=ordered, fractions=fractions)
    return CoverageReport(
        eta=eta,
        delta=delta,
        grid_size=size,
        sample_size=len(sample),
        fraction=fractions[-1],
        lengths=ordered,
        fractions=fractions,
    )
