"""Reproducible example families, each with the checks it is expected to pass.

Constructors are pure functions of frozen data. The only matrix that came
out of a search, the partner f of g, ships as the package fixture
``fixtures/rho2_partner.json``.
"""

import json
import math
import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from importlib import resources
from typing import Any

import numpy as np
import structlog

from .config import settings
from .errors import SearchExhaustedError, SuspensionError, ValidationError
from .exactlinalg import RatMat, Scalar, rat_str, rational_rotation, rational_sqrt, to_rat
from .freegroup import Word, alphabet, finite_index_generators, walk_words
from .models import CatalogEntryModel, CheckItem, ConeBall, EvidenceReport
from .pingpong import certify_condition_star, check_fabricaqi, schottky_family
from .represent import (
    Representation,
    anosov_gap_profile,
    nonreal_spectrum_witness,
    qi_profile,
    unipotent_scan,
)
from .suspension import (
    Suspension,
    assemble,
    dfb_evidence,
    hyperbolicity_scan,
    lahn_ratio,
    tau_iteration,
)

logger = structlog.get_logger(__name__)

Subject = Representation | Suspension

G = RatMat.of([[2, -2, 0], [2, 2, 0], [0, 0, Fraction(1, 8)]])
PLANE_CONJUGATOR = RatMat.of([[1, 1], [1, 2]])
MINIMAL_ROTATION = Fraction(7, 65)  # total block angle pi/4 + 2 atan(7/65) ~ 1 rad
LAHN_BOUND = 1.5

_ZARISKI_PRIME = 1_000_003
_ZARISKI_FULL = 64
_RANK3_DEPTH = 4


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    """A named representation or suspension and the checks it should pass."""

    name: str
    subject: Subject
    expected: tuple[str, ...]
    provenance: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = [c for c in self.expected if c not in CHECKS]
        if unknown:
            raise ValidationError(f"unknown expected checks: {', '.join(unknown)}")

    @property
    def kind(self) -> str:
        return "suspension" if isinstance(self.subject, Suspension) else "representation"

    def representation(self) -> Representation:
        """The subject as a representation; suspensions are assembled."""
        if isinstance(self.subject, Suspension):
            return assemble(self.subject)
        return self.subject

    def suspension(self) -> Suspension:
        if not isinstance(self.subject, Suspension):
            raise ValidationError(f"catalog entry {self.name} is not a suspension")
        return self.subject

    def to_model(self) -> CatalogEntryModel:
        data = self.subject.to_json()
        if self.params:
            data["params"] = self.params
        return CatalogEntryModel(
            name=self.name,
            kind=self.kind,  # type: ignore[arg-type]
            data=data,
            expected=list(self.expected),
            provenance=self.provenance,
        )

    @classmethod
    def from_model(cls, model: CatalogEntryModel) -> "CatalogEntry":
        subject: Subject
        if model.kind == "suspension":
            subject = Suspension.from_json(model.data)
        else:
            subject = Representation.from_json(model.data)
        return cls(
            name=model.name,
            subject=subject,
            expected=tuple(model.expected),
            provenance=model.provenance,
            params=dict(model.data.get("params", {})),
        )


# Fixtures


@cache
def _partner() -> dict[str, Any]:
    text = resources.files("anosov_forge").joinpath("fixtures/rho2_partner.json").read_text()
    data: dict[str, Any] = json.loads(text)
    return data


def partner() -> tuple[RatMat, int]:
    """The frozen partner f of g and the certified odd power n."""
    data = _partner()
    return RatMat.from_json(data["f"]), int(data["n"])


def search_partner(
    g: RatMat, seed: int | None = None, attempts: int = 200, entry_bound: int = 3
) -> tuple[RatMat, RatMat]:
    """Random integer conjugates Q diag(4, 1, 1/4) Q^-1 until check_fabricaqi passes.

    Returns (f, Q).
    """
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    spectrum = RatMat.diag(4, 1, Fraction(1, 4))
    rejected: list[str] = []
    for attempt in range(attempts):
        q = RatMat.of(rng.integers(-entry_bound, entry_bound + 1, size=(3, 3)).tolist())
        if q.det == 0:
            rejected.append("singular")
            continue
        f = q @ spectrum @ q.inv()
        report = check_fabricaqi(f, g)
        if report.passed:
            logger.info("partner_found", attempt=attempt, seed=seed)
            return f, q
        rejected.append(next(c.name for c in report.checks if not c.passed))
    raise SearchExhaustedError(f"no partner within {attempts} attempts", rejected)


# Zariski density heuristic


def _mod_p(m: RatMat) -> np.ndarray:
    p = _ZARISKI_PRIME
    return np.array(
        [[x.numerator * pow(x.denominator, -1, p) % p for x in row] for row in m.rows],
        dtype=np.int64,
    )


def _sl3_basis() -> list[np.ndarray]:
    basis = []
    for i in range(3):
        for j in range(3):
            if i != j:
                e = np.zeros((3, 3), dtype=np.int64)
                e[i, j] = 1
                basis.append(e)
    basis.append(np.diag([1, -1, 0]).astype(np.int64))
    basis.append(np.diag([0, 1, -1]).astype(np.int64))
    return basis


def _sl3_coords(x: np.ndarray) -> list[int]:
    off = [int(x[i, j]) for i in range(3) for j in range(3) if i != j]
    return [*off, int(x[0, 0]), int(x[1, 1])]


def _adjoint(m: np.ndarray, m_inv: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    p = _ZARISKI_PRIME
    cols = [_sl3_coords(((m @ e) % p) @ m_inv % p) for e in basis]
    return np.array(cols, dtype=np.int64).reshape(-1)


def zariski_rank(mats: Sequence[RatMat], depth: int = 4) -> int:
    """Dimension of the span of Ad(w) on sl3 over words of length <= depth.

    The span is computed over the integers modulo a large prime, which
    bounds the rational rank from below; 64 means the adjoint actions share
    no invariant subspace.
    """
    if depth < 0:
        raise ValidationError("depth must be nonnegative")
    p = _ZARISKI_PRIME
    rank = len(mats)
    letters = {x: _mod_p(mats[x - 1]) for x in range(1, rank + 1)}
    letters.update({-x: _mod_p(mats[x - 1].inv()) for x in range(1, rank + 1)})
    basis = _sl3_basis()
    echelon: list[tuple[int, np.ndarray]] = []

    def insert(v: np.ndarray) -> None:
        v = v % p
        for col, row in echelon:
            if v[col]:
                v = (v - int(v[col]) * row) % p
        nonzero = np.flatnonzero(v)
        if nonzero.size:
            col = int(nonzero[0])
            echelon.append((col, v * pow(int(v[col]), -1, p) % p))

    insert(_adjoint(np.eye(3, dtype=np.int64), np.eye(3, dtype=np.int64), basis))

    def visit(w: Word, value: tuple[np.ndarray, np.ndarray]) -> None:
        if len(echelon) < _ZARISKI_FULL:
            insert(_adjoint(value[0], value[1], basis))

    if depth:
        walk_words(
            rank,
            depth,
            lambda m, x: ((m[0] @ letters[x]) % p, (letters[-x] @ m[1]) % p),
            (np.eye(3, dtype=np.int64), np.eye(3, dtype=np.int64)),
            visit,
        )
    logger.info("zariski_rank", depth=depth, rank=len(echelon))
    return len(echelon)


# Constructors


def _plane_pair(gap: Fraction) -> tuple[RatMat, RatMat]:
    d = RatMat.diag(gap, 1 / gap)
    q = PLANE_CONJUGATOR
    return d, q @ d @ q.inv()


def barbot_anosov(gap: Scalar = 4, multiplier: Scalar = Fraction(16, 9)) -> CatalogEntry:
    """Schottky plane parts diag(gap, 1/gap) and a conjugate, equal multipliers."""
    s, t = to_rat(gap), to_rat(multiplier)
    if s <= 1:
        raise ValidationError("gap must exceed 1")
    if t <= 0:
        raise ValidationError("multiplier must be positive")
    # t = 1: phi vanishes on every word and the generator ratio is unbounded
    ratio = None if t == 1 else math.log(s) / abs(math.log(t))
    if ratio is not None and ratio <= LAHN_BOUND:
        raise ValidationError(f"generator Lahn ratio {ratio:.6g} does not exceed 3/2")
    susp = Suspension.of(_plane_pair(s), [t, t], names=("a", "b"))
    if not hyperbolicity_scan(susp, 2).passed:
        raise ValidationError(f"plane parts for gap {s} are not Schottky")
    expected = ["hyperbolicity", "lahn_above_bound"]
    if rational_sqrt(t) is not None:
        expected.append("anosov_gap_slope_positive")
    return CatalogEntry(
        name="barbot",
        subject=susp,
        expected=tuple(expected),
        provenance="Barbot's reducible suspensions: Schottky plane parts with small multipliers",
        params={"gap": rat_str(s), "multiplier": rat_str(t), "generator_ratio": ratio},
    )


def lahn_qi_non_anosov() -> CatalogEntry:
    """Derived from Barbot, with a generator of Lahn ratio 2/3."""
    susp = Suspension.of(_plane_pair(Fraction(4)), [8, 4], names=("a", "b"))
    return CatalogEntry(
        name="lahn",
        subject=susp,
        expected=("hyperbolicity", "dfb_evidence", "lahn_at_most_bound", "tau_terminates"),
        provenance="quasi-isometric reducible suspension not accumulated by Anosov ones",
        params={"a": [1], "b": [2]},
    )


def rho2() -> CatalogEntry:
    """a -> g^n, b -> f^n with g the rotation-scaling matrix and f the frozen partner."""
    f, n = partner()
    data = _partner()
    rho = Representation([G**n, f**n], ["a", "b"])
    return CatalogEntry(
        name="rho2",
        subject=rho,
        expected=("nonreal_spectrum_c1", "zariski_rank_full", "fabricaqi"),
        provenance=data["provenance"],
        params={
            "g": G.to_json(),
            "f": f.to_json(),
            "n": n,
            "conjugator": data["conjugator"],
        },
    )


def rho_k(k: int) -> CatalogEntry:
    """Restriction of rho2 to the index k-1 subgroup with basis c_1..c_k."""
    if k < 3:
        raise ValidationError(f"rho_k needs k >= 3, got {k}")
    base = rho2()
    rho = base.representation()
    basis = finite_index_generators(k)
    images = [rho.evaluate(tuple(w)) for w in basis.generators]
    return CatalogEntry(
        name=f"rho{k}",
        subject=Representation(images, [f"c{i + 1}" for i in range(k)]),
        expected=("nonreal_spectrum_c1", "qi_slope_positive"),
        provenance=f"rho2 restricted to an index {basis.index} subgroup, c1 -> g^n",
        params={
            "k": k,
            "words": basis.generators,
            "g": G.to_json(),
            "n": base.params["n"],
        },
    )


def rho2_minimal() -> CatalogEntry:
    """rho2 with the P_0 block of g turned by an angle with no scalar power."""
    f, n = partner()
    block = RatMat.of([[2, -2], [2, 2]]) @ rational_rotation(MINIMAL_ROTATION)
    g_prime = RatMat.block(block, Fraction(1, 8))
    return CatalogEntry(
        name="rho2_minimal",
        subject=Representation([g_prime**n, f**n], ["a", "b"]),
        expected=("nonreal_spectrum_c1", "no_scalar_power"),
        provenance="rho2 with g replaced by 2 sqrt 2 times a rotation by about 1 radian on P_0",
        params={
            "g": g_prime.to_json(),
            "rotation": rat_str(MINIMAL_ROTATION),
            "n": n,
        },
    )


def schottky() -> CatalogEntry:
    """Two conjugate diagonal matrices with cones around their eigenlines."""
    family = schottky_family()
    return CatalogEntry(
        name="schottky",
        subject=family.representation(),
        expected=(
            "qi_slope_positive",
            "anosov_gap_slope_positive",
            "unipotent_free",
            "condition_star",
        ),
        provenance="ping-pong family a = diag(64, 1, 1/64), b = Q a Q^-1",
        params={
            "labels": list(family.labels),
            "cones": [[b.model_dump() for b in cone] for cone in family.cones],
            "base_line": list(family.base_line),
        },
    )


# Checks


Check = Callable[[CatalogEntry, int], CheckItem]


def _check_hyperbolicity(entry: CatalogEntry, depth: int) -> CheckItem:
    scan = hyperbolicity_scan(entry.suspension(), depth)
    return CheckItem(
        name="hyperbolicity", passed=scan.passed, detail=f"{scan.words_checked} words"
    )


def _check_lahn(above: bool) -> Check:
    def check(entry: CatalogEntry, depth: int) -> CheckItem:
        name = "lahn_above_bound" if above else "lahn_at_most_bound"
        result = lahn_ratio(entry.suspension(), depth)
        if result.inf_ratio is None:
            return CheckItem(name=name, passed=above, detail="phi vanishes on the ball")
        ok = result.inf_ratio > LAHN_BOUND if above else result.inf_ratio <= LAHN_BOUND
        return CheckItem(
            name=name,
            passed=ok,
            detail=f"witness {result.witness}",
            margin=result.inf_ratio - LAHN_BOUND,
        )

    return check


def _check_dfb(entry: CatalogEntry, depth: int) -> CheckItem:
    report = dfb_evidence(entry.suspension(), depth)
    failed = [c.name for c in report.checks if not c.passed]
    return CheckItem(name="dfb_evidence", passed=report.passed, detail=", ".join(failed))


def _check_tau(entry: CatalogEntry, depth: int) -> CheckItem:
    a = tuple(entry.params.get("a", [1]))
    b = tuple(entry.params.get("b", [2]))
    result = tau_iteration(entry.suspension(), a, b)
    return CheckItem(
        name="tau_terminates",
        passed=result.final_class_b == "neither",
        detail=f"{result.iterations} iterations",
    )


def _profile_depth(rho: Representation, depth: int) -> int:
    return min(depth, _RANK3_DEPTH) if rho.rank > 2 else depth


def _check_qi(entry: CatalogEntry, depth: int) -> CheckItem:
    rho = entry.representation()
    profile = qi_profile(rho, _profile_depth(rho, depth))
    return CheckItem(name="qi_slope_positive", passed=profile.slope > 0, margin=profile.slope)


def _check_gap(entry: CatalogEntry, depth: int) -> CheckItem:
    try:
        rho = entry.representation()
    except SuspensionError as exc:
        return CheckItem(name="anosov_gap_slope_positive", passed=False, detail=str(exc))
    profile = anosov_gap_profile(rho, _profile_depth(rho, depth))
    return CheckItem(
        name="anosov_gap_slope_positive", passed=profile.slope > 0, margin=profile.slope
    )


def _check_unipotent_free(entry: CatalogEntry, depth: int) -> CheckItem:
    rho = entry.representation()
    scan = unipotent_scan(rho, _profile_depth(rho, depth))
    return CheckItem(
        name="unipotent_free",
        passed=not scan.witnesses,
        detail=f"{scan.words_checked} words",
    )


def _check_nonreal(entry: CatalogEntry, depth: int) -> CheckItem:
    ok = nonreal_spectrum_witness(entry.representation(), (1,))
    return CheckItem(name="nonreal_spectrum_c1", passed=ok)


def _check_zariski(entry: CatalogEntry, depth: int) -> CheckItem:
    rank = zariski_rank(entry.representation().images)
    return CheckItem(
        name="zariski_rank_full",
        passed=rank == _ZARISKI_FULL,
        detail=f"rank {rank} of {_ZARISKI_FULL}",
    )


def _check_fabricaqi(entry: CatalogEntry, depth: int) -> CheckItem:
    report = check_fabricaqi(
        RatMat.from_json(entry.params["f"]), RatMat.from_json(entry.params["g"])
    )
    return CheckItem(
        name="fabricaqi", passed=report.passed, detail=f"m={report.m} mu={report.mu}"
    )


def rotation_clearance(block: RatMat, n_max: int = 100) -> float:
    """min over 1 <= n <= n_max of the distance from n * angle to pi Z."""
    values = np.linalg.eigvals(block.to_float())
    angle = abs(float(np.angle(values[0])))
    return min(
        abs(n * angle - math.pi * round(n * angle / math.pi)) for n in range(1, n_max + 1)
    )


def _check_no_scalar_power(entry: CatalogEntry, depth: int) -> CheckItem:
    clearance = rotation_clearance(RatMat.from_json(entry.params["g"]).upper_block())
    return CheckItem(
        name="no_scalar_power", passed=clearance > 1e-6, margin=clearance
    )


def _check_condition_star(entry: CatalogEntry, depth: int) -> CheckItem:
    rho = entry.representation()
    mats: list[RatMat] = []
    for x in alphabet(rho.rank):
        if x > 0:
            mats += [rho.letter(x), rho.letter(-x)]
    cones = [[ConeBall(**b) for b in cone] for cone in entry.params["cones"]]
    result = certify_condition_star(
        entry.params["labels"], mats, cones, settings.expansion, entry.params["base_line"]
    )
    return CheckItem(
        name="condition_star",
        passed=result.success,
        detail=result.failed_condition or "",
    )


CHECKS: dict[str, Check] = {
    "hyperbolicity": _check_hyperbolicity,
    "lahn_above_bound": _check_lahn(above=True),
    "lahn_at_most_bound": _check_lahn(above=False),
    "dfb_evidence": _check_dfb,
    "tau_terminates": _check_tau,
    "qi_slope_positive": _check_qi,
    "anosov_gap_slope_positive": _check_gap,
    "unipotent_free": _check_unipotent_free,
    "nonreal_spectrum_c1": _check_nonreal,
    "zariski_rank_full": _check_zariski,
    "fabricaqi": _check_fabricaqi,
    "no_scalar_power": _check_no_scalar_power,
    "condition_star": _check_condition_star,
}


def verify_entry(entry: CatalogEntry, max_length: int | None = None) -> EvidenceReport:
    """Run every expected check of an entry at the given depth."""
    depth = settings.max_length if max_length is None else max_length
    checks = [CHECKS[name](entry, depth) for name in entry.expected]
    passed = all(c.passed for c in checks)
    logger.info("catalog_entry_verified", entry=entry.name, passed=passed)
    return EvidenceReport(subject=entry.name, checks=checks, passed=passed)


# Registry


_BUILDERS: dict[str, Callable[[], CatalogEntry]] = {
    "barbot": barbot_anosov,
    "lahn": lahn_qi_non_anosov,
    "rho2": rho2,
    "rho2_minimal": rho2_minimal,
    "rho3": lambda: rho_k(3),
    "schottky": schottky,
}
_RHO_K = re.compile(r"rho(\d+)$")


def names() -> list[str]:
    return sorted(_BUILDERS)


def load_entry(name: str) -> CatalogEntry:
    """Build a catalog entry by name; rho<k> works for every k >= 3."""
    if name in _BUILDERS:
        return _BUILDERS[name]()
    match = _RHO_K.match(name)
    if match:
        return rho_k(int(match.group(1)))
    raise ValidationError(f"unknown catalog entry {name!r}; known: {', '.join(names())}")


def dump_entry(entry: CatalogEntry) -> str:
    """Entry JSON with sorted keys; equal entries give identical text."""
    return json.dumps(entry.to_model().model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def entry_from_json(text: str) -> CatalogEntry:
    return CatalogEntry.from_model(CatalogEntryModel.model_validate_json(text))
