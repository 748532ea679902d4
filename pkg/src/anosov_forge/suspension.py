"""Reducible suspensions preserving the plane P = span(e1, e2).

A suspension stores, per generator c, an SL2+- plane part rho_P(c), a
positive rational multiplier t(c) = e^phi(c), a sign s(c) = det rho_P(c)
and a translation part kappa(c). Its image is

    [[t^(-1/2) rho_P(c), kappa(c)],
     [0,                 s(c) t(c)]]

so lambda_perp = t is exact and multiplicative, while lambda_1, lambda_2
are t^(-1/2) times the eigenvalue moduli of the plane part. Exact 3x3
images exist only when every multiplier is a rational square; all
invariants are computed from the plane part and the multiplier instead.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Literal

import numpy as np
import structlog

from .config import settings
from .errors import (
    BoundaryError,
    HypothesisError,
    SearchExhaustedError,
    SuspensionError,
    ValidationError,
)
from .exactlinalg import (
    RatMat,
    classify_sl2,
    eigen_structure,
    normalize_line,
    nullspace,
    rat_str,
    rational_sqrt,
    sl2_top_modulus,
    to_rat,
)
from .freegroup import (
    Word,
    abelianize,
    check_letters,
    concat,
    invert,
    power,
    walk_words,
    word_to_str,
)
from .models import (
    BalanceResult,
    CheckItem,
    EvidenceReport,
    HyperbolicityResult,
    LahnResult,
    LambdaTriple,
    TauResult,
    TauStep,
)
from .represent import Representation, qi_profile, unipotent_scan

logger = structlog.get_logger(__name__)

VClass = Literal["V", "V_inverse", "neither"]


@dataclass(frozen=True)
class Lambdas:
    """lambda_1 >= lambda_2 and lambda_perp of one element, kept as logs."""

    log_lambda1: float
    log_lambda2: float
    log_perp: float
    perp_exact: Fraction | None = None

    @property
    def lambda1(self) -> float:
        return math.exp(self.log_lambda1)

    @property
    def lambda2(self) -> float:
        return math.exp(self.log_lambda2)

    @property
    def lambda_perp(self) -> float:
        return math.exp(self.log_perp)

    def to_model(self) -> LambdaTriple:
        perp: str | float = (
            rat_str(self.perp_exact) if self.perp_exact is not None else self.lambda_perp
        )
        return LambdaTriple(lambda1=self.lambda1, lambda2=self.lambda2, lambda_perp=perp)


def _log_top(plane: RatMat) -> float:
    """log of the largest eigenvalue modulus of a det +-1 plane part."""
    if plane.trace**2 - 4 * plane.det < 0:
        return 0.0
    return math.log(sl2_top_modulus(plane))


@dataclass(frozen=True)
class Suspension:
    """Normal-form data of a representation preserving P = span(e1, e2)."""

    plane_parts: tuple[RatMat, ...]
    multipliers: tuple[Fraction, ...]
    signs: tuple[int, ...]
    kappas: tuple[tuple[Fraction, Fraction], ...]
    names: tuple[str, ...] = ()
    _plane_inverses: tuple[RatMat, ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        k = len(self.plane_parts)
        if k < 2:
            raise ValidationError("a suspension needs at least two generators")
        if not (len(self.multipliers) == len(self.signs) == len(self.kappas) == k):
            raise ValidationError("plane parts, multipliers, signs and kappas differ in length")
        for i, (p, t, s) in enumerate(
            zip(self.plane_parts, self.multipliers, self.signs, strict=True)
        ):
            if p.n != 2 or abs(p.det) != 1:
                raise ValidationError(f"plane part {i} must be 2x2 with det +-1")
            if t <= 0:
                raise ValidationError(f"multiplier {i} must be positive")
            if s not in (1, -1):
                raise ValidationError(f"sign {i} must be +-1")
        object.__setattr__(
            self, "_plane_inverses", tuple(p.inv() for p in self.plane_parts)
        )
        if not self.names:
            object.__setattr__(
                self, "names", tuple(chr(ord("a") + i) for i in range(k))
            )

    @classmethod
    def of(
        cls,
        plane_parts: Sequence[RatMat],
        multipliers: Sequence[Any],
        signs: Sequence[int] | None = None,
        kappas: Sequence[Sequence[Any]] | None = None,
        names: Sequence[str] = (),
    ) -> "Suspension":
        """Build from loose data; signs default to det rho_P, kappas to 0."""
        k = len(plane_parts)
        return cls(
            plane_parts=tuple(plane_parts),
            multipliers=tuple(to_rat(t) for t in multipliers),
            signs=tuple(signs) if signs is not None else tuple(int(p.det) for p in plane_parts),
            kappas=tuple(
                (to_rat(x[0]), to_rat(x[1])) for x in (kappas or [(0, 0)] * k)
            ),
            names=tuple(names),
        )

    @property
    def rank(self) -> int:
        return len(self.plane_parts)

    def plane_letter(self, x: int) -> RatMat:
        return self.plane_parts[x - 1] if x > 0 else self._plane_inverses[-x - 1]

    def multiplier_letter(self, x: int) -> Fraction:
        t = self.multipliers[abs(x) - 1]
        return t if x > 0 else 1 / t

    def plane(self, w: Word) -> RatMat:
        """Exact plane part rho_P(w)."""
        check_letters(w, self.rank)
        m = RatMat.identity(2)
        for x in w:
            m = m @ self.plane_letter(x)
        return m

    def multiplier(self, w: Word) -> Fraction:
        """lambda_perp(w) = t(w), exact."""
        check_letters(w, self.rank)
        t = Fraction(1)
        for x in w:
            t *= self.multiplier_letter(x)
        return t

    def phi(self, w: Word) -> float:
        return math.log(self.multiplier(w))

    def lambdas(self, w: Word) -> Lambdas:
        return self._lambdas(self.plane(w), self.multiplier(w))

    @staticmethod
    def _lambdas(plane: RatMat, t: Fraction) -> Lambdas:
        log_t = math.log(t)
        top = _log_top(plane)
        return Lambdas(
            log_lambda1=top - log_t / 2,
            log_lambda2=-top - log_t / 2,
            log_perp=log_t,
            perp_exact=t,
        )

    def letter_float(self, x: int) -> np.ndarray:
        i = abs(x) - 1
        m = _block_float(
            self.plane_parts[i].to_float(),
            float(self.multipliers[i]),
            self.signs[i],
            [float(v) for v in self.kappas[i]],
        )
        return m if x > 0 else np.linalg.inv(m)

    def float_image(self, w: Word) -> np.ndarray:
        """Float 3x3 image; exists for any positive multipliers."""
        check_letters(w, self.rank)
        m = np.eye(3)
        for x in w:
            m = m @ self.letter_float(x)
        return m

    def to_json(self) -> dict[str, Any]:
        return {
            "rank": self.rank,
            "names": list(self.names),
            "plane_parts": [p.to_json() for p in self.plane_parts],
            "multipliers": [rat_str(t) for t in self.multipliers],
            "signs": list(self.signs),
            "kappas": [[rat_str(x) for x in k] for k in self.kappas],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Suspension":
        planes = [RatMat.from_json(p) for p in data["plane_parts"]]
        if "rank" in data and data["rank"] != len(planes):
            raise ValidationError("rank does not match the number of plane parts")
        return cls.of(
            planes,
            data["multipliers"],
            data.get("signs"),
            data.get("kappas"),
            data.get("names", ()),
        )


def _block_float(
    plane: np.ndarray, t: float, sign: int, kappa: Sequence[float]
) -> np.ndarray:
    m = np.zeros((3, 3))
    m[:2, :2] = plane / math.sqrt(t)
    m[0, 2], m[1, 2] = kappa
    m[2, 2] = sign * t
    return m


@dataclass(frozen=True)
class ScaledSuspension:
    """Float overlay t(c) -> t(c) e^eps(c) on top of an exact suspension.

    Invariants of a scaled suspension are recomputed from float 3x3 block
    products, never from the scaling laws.
    """

    base: Suspension
    epsilons: tuple[float, ...]

    @property
    def rank(self) -> int:
        return self.base.rank

    @property
    def names(self) -> tuple[str, ...]:
        return self.base.names

    def letter_float(self, x: int) -> np.ndarray:
        i = abs(x) - 1
        m = _block_float(
            self.base.plane_parts[i].to_float(),
            float(self.base.multipliers[i]) * math.exp(self.epsilons[i]),
            self.base.signs[i],
            [float(v) for v in self.base.kappas[i]],
        )
        return m if x > 0 else np.linalg.inv(m)

    def float_image(self, w: Word) -> np.ndarray:
        check_letters(w, self.rank)
        m = np.eye(3)
        for x in w:
            m = m @ self.letter_float(x)
        return m

    def lambdas(self, w: Word) -> Lambdas:
        m = self.float_image(w)
        block = m[:2, :2]
        top = float(np.max(np.abs(np.linalg.eigvals(block))))
        det = abs(float(np.linalg.det(block)))
        return Lambdas(
            log_lambda1=math.log(top),
            log_lambda2=math.log(det) - math.log(top),
            log_perp=math.log(abs(float(m[2, 2]))),
        )


AnySuspension = Suspension | ScaledSuspension


def scale_generator(susp: AnySuspension, c0: int, epsilon: float) -> AnySuspension:
    """Scale the action of generator c0 (1-based) on P by e^epsilon."""
    if not 1 <= c0 <= susp.rank:
        raise ValidationError(f"generator {c0} outside rank {susp.rank}")
    if epsilon == 0:
        return susp
    if isinstance(susp, ScaledSuspension):
        base, eps = susp.base, list(susp.epsilons)
    else:
        base, eps = susp, [0.0] * susp.rank
    eps[c0 - 1] += epsilon
    return ScaledSuspension(base=base, epsilons=tuple(eps))


# Assembly and extraction


def _half_power(t: Fraction) -> Fraction:
    root = rational_sqrt(t)
    if root is None:
        raise SuspensionError(
            f"multiplier {t} is not a rational square; exact images need t^(1/2)"
        )
    return 1 / root


def assemble(susp: Suspension) -> Representation:
    """Exact block upper-triangular generator images."""
    images = []
    for i, (p, t, s, k) in enumerate(
        zip(susp.plane_parts, susp.multipliers, susp.signs, susp.kappas, strict=True)
    ):
        if s != p.det:
            raise SuspensionError(
                f"generator {i}: sign {s} and det rho_P {p.det} give det != 1"
            )
        images.append(RatMat.block(p.scale(_half_power(t)), s * t, k))
    return Representation(images, susp.names)


def _coordinate_frame(normal: Sequence[Fraction]) -> RatMat:
    """Columns: a rational basis of the plane, then the normal."""
    basis = nullspace([list(normal)])
    if len(basis) != 2:
        raise SuspensionError("plane normal must be nonzero")
    cols = [basis[0], basis[1], tuple(normal)]
    return RatMat(tuple(tuple(cols[j][i] for j in range(3)) for i in range(3)))


def extract(
    rho: Representation, normal: Sequence[Fraction | float | int | str]
) -> Suspension:
    """Normal form of a representation preserving the plane with this normal."""
    exact_normal: list[Fraction] = []
    for x in normal:
        if isinstance(x, float):
            q = Fraction(x).limit_denominator(10**6)
            if abs(float(q) - x) > 1e-10:
                raise SuspensionError("plane normal is not close to a rational vector")
            exact_normal.append(q)
        else:
            exact_normal.append(to_rat(x))
    frame = _coordinate_frame(exact_normal)
    frame_inv = frame.inv()
    planes, mults, signs, kappas = [], [], [], []
    for i, m in enumerate(rho.images):
        c = frame_inv @ m @ frame
        if c[2, 0] != 0 or c[2, 1] != 0:
            raise SuspensionError(f"generator {i} does not preserve the plane")
        q = c.upper_block()
        t = 1 / abs(q.det)
        planes.append(q.scale(1 / _half_power(t)))
        mults.append(t)
        signs.append(1 if q.det > 0 else -1)
        kappas.append((c[0, 2], c[1, 2]))
    logger.info("suspension_extracted", rank=rho.rank)
    return Suspension.of(planes, mults, signs, kappas, rho.names)


def rebase(susp: Suspension, basis: Sequence[Word]) -> Suspension:
    """Suspension of the representation precomposed with a substitution.

    Generator i of the result acts as the word ``basis[i]``.
    """
    planes = [susp.plane(w) for w in basis]
    mults = [susp.multiplier(w) for w in basis]
    signs = [int(p.det) for p in planes]
    if all(k == (0, 0) for k in susp.kappas):
        kappas: list[tuple[Fraction, Fraction]] = [(Fraction(0), Fraction(0))] * len(basis)
    else:
        rho = assemble(susp)
        kappas = []
        for w in basis:
            m = rho.evaluate(w)
            kappas.append((m[0, 2], m[1, 2]))
    names = [word_to_str(w, susp.names) for w in basis]
    return Suspension.of(planes, mults, signs, kappas, names)


def lambda_triple(susp: AnySuspension, w: Word) -> Lambdas:
    return susp.lambdas(w)


# Scans


def lahn_ratio(susp: Suspension, max_length: int) -> LahnResult:
    """Infimum of log lambda_u(rho_P(w)) / |phi(w)| over 1 <= |w| <= N, phi(w) != 0.

    Words with phi(w) = 0 are skipped; when all are, the infimum is empty.
    """
    best: list[tuple[float, int, Word]] = []

    def visit(w: Word, value: tuple[RatMat, Fraction]) -> None:
        plane, t = value
        if t == 1:
            return
        ratio = _log_top(plane) / abs(math.log(t))
        key = (ratio, len(w), w)
        if not best or key < best[0]:
            best[:] = [key]

    walk_words(
        susp.rank,
        max_length,
        lambda v, x: (v[0] @ susp.plane_letter(x), v[1] * susp.multiplier_letter(x)),
        (RatMat.identity(2), Fraction(1)),
        visit,
    )
    if not best:
        logger.info("lahn_ratio_empty", max_length=max_length)
        return LahnResult(max_length=max_length, verdict="anosov_consistent")
    ratio, _, witness = best[0]
    verdict = "anosov_consistent" if ratio > 1.5 else "non_anosov_evidence"
    logger.info("lahn_ratio", inf_ratio=ratio, witness=list(witness), verdict=verdict)
    return LahnResult(
        inf_ratio=ratio, witness=list(witness), max_length=max_length, verdict=verdict
    )


def _non_hyperbolic(plane: RatMat) -> bool:
    if plane.det == 1:
        return plane.trace**2 <= 4
    return plane.trace == 0


def hyperbolicity_scan(susp: Suspension, max_length: int) -> HyperbolicityResult:
    """Exact trace test on the plane part of every word up to max_length.

    The first violating word in length-then-lexicographic order is returned.
    """
    count = 0
    worst: list[tuple[int, Word, RatMat]] = []

    def visit(w: Word, plane: RatMat) -> None:
        nonlocal count
        count += 1
        if _non_hyperbolic(plane) and (not worst or (len(w), w) < worst[0][:2]):
            worst[:] = [(len(w), w, plane)]

    walk_words(
        susp.rank,
        max_length,
        lambda m, x: m @ susp.plane_letter(x),
        RatMat.identity(2),
        visit,
    )
    if not worst:
        return HyperbolicityResult(
            passed=True, max_length=max_length, words_checked=count
        )
    _, w, plane = worst[0]
    logger.info("hyperbolicity_witness", word=list(w), trace=str(plane.trace))
    return HyperbolicityResult(
        passed=False,
        max_length=max_length,
        words_checked=count,
        witness=list(w),
        witness_trace=rat_str(plane.trace),
    )


def embedded_plane_representation(susp: Suspension) -> Representation:
    """rho_P embedded in SL3 as block(rho_P, det rho_P)."""
    return Representation(
        [RatMat.block(p, p.det) for p in susp.plane_parts], susp.names
    )


def dfb_evidence(susp: Suspension, max_length: int) -> EvidenceReport:
    """Finite-depth evidence that the suspension is derived from Barbot."""
    checks: list[CheckItem] = []
    hyper = hyperbolicity_scan(susp, max_length)
    checks.append(
        CheckItem(
            name="plane_parts_hyperbolic",
            passed=hyper.passed,
            detail=f"{hyper.words_checked} words",
        )
    )
    embedded = embedded_plane_representation(susp)
    profile = qi_profile(embedded, max_length)
    checks.append(
        CheckItem(
            name="plane_qi_slope_positive",
            passed=profile.slope > 0,
            margin=profile.slope,
        )
    )
    scan = unipotent_scan(embedded, max_length)
    checks.append(
        CheckItem(
            name="no_unipotent_plane_words",
            passed=not scan.witnesses,
            detail=f"{len(scan.witnesses)} witnesses",
        )
    )
    witness = hyper.witness
    if witness is None and scan.witnesses:
        witness = scan.witnesses[0]
    passed = all(c.passed for c in checks)
    logger.info("dfb_evidence", passed=passed, max_length=max_length)
    return EvidenceReport(
        subject="derived_from_barbot", checks=checks, passed=passed, witness=witness
    )


# V classes and the tau iteration


def v_class(susp: AnySuspension, w: Word, tol: float | None = None) -> VClass:
    """V iff lambda_1 < lambda_perp; V_inverse iff lambda_perp < lambda_2."""
    tol = settings.tolerance if tol is None else tol
    lam = susp.lambdas(w)
    gap1 = lam.log_perp - lam.log_lambda1
    gap2 = lam.log_lambda2 - lam.log_perp
    if abs(gap1) <= tol or abs(gap2) <= tol:
        raise BoundaryError(f"word {list(w)} lies on the boundary of V (gap {min(abs(gap1), abs(gap2)):.3g})")
    if gap1 > 0:
        return "V"
    if gap2 > 0:
        return "V_inverse"
    return "neither"


def _abelian_det(susp: Suspension, a: Word, b: Word) -> int | None:
    if susp.rank != 2:
        return None
    va, vb = abelianize(a, 2), abelianize(b, 2)
    return va[0] * vb[1] - va[1] * vb[0]


def tau_iteration(
    susp: Suspension, a: Word, b: Word, max_iter: int | None = None
) -> TauResult:
    """Steer the pair (a, b) until b leaves V and V^-1.

    Each step replaces (a, b) by (b, a b^-p) with the least p >= 1 such that
    tau(b) < tau(a b^-p) <= 1, where tau = 1 / lambda_perp.
    """
    max_iter = settings.tau_max_iter if max_iter is None else max_iter
    if v_class(susp, a) != "V":
        raise ValidationError("tau_iteration needs a in V")
    cls_b = v_class(susp, b)

    def tau(w: Word) -> Fraction:
        return 1 / susp.multiplier(w)

    if cls_b == "neither":
        return TauResult(
            iterations=0, steps=[], final_a=list(a), final_b=list(b),
            final_class_b=cls_b, tau_trace=[rat_str(tau(b))], cumulative_det=1,
        )
    if cls_b == "V_inverse":
        b = invert(b)
    if tau(b) < tau(a):
        a, b = b, a
    trace: list[Fraction] = [tau(b)]
    steps: list[TauStep] = []
    cumulative = 1
    for _ in range(max_iter):
        ta, tb = tau(a), tau(b)
        p = 1
        while not (tb < ta / tb**p <= 1):
            p += 1
            if p > settings.tau_p_cap:
                raise SearchExhaustedError(
                    "no admissible exponent p", [rat_str(t) for t in trace]
                )
        new_a, new_b = b, concat(a, power(b, -p))
        step_det = -1  # det [[0, 1], [1, -p]]
        before, after = _abelian_det(susp, a, b), _abelian_det(susp, new_a, new_b)
        if before is not None and after != step_det * before:
            raise SuspensionError("substitution is not invertible over Z")
        cumulative *= step_det
        a, b = new_a, new_b
        trace.append(tau(b))
        steps.append(
            TauStep(
                p=p, a=list(a), b=list(b), tau_a=rat_str(tau(a)),
                tau_b=rat_str(tau(b)), abelian_det=step_det,
            )
        )
        logger.debug("tau_step", p=p, tau_b=str(tau(b)))
        cls_b = v_class(susp, b)
        if cls_b == "neither":
            logger.info("tau_iteration_done", iterations=len(steps))
            return TauResult(
                iterations=len(steps), steps=steps, final_a=list(a), final_b=list(b),
                final_class_b=cls_b, tau_trace=[rat_str(t) for t in trace],
                cumulative_det=cumulative,
            )
    raise SearchExhaustedError(
        f"tau iteration did not leave V within {max_iter} steps",
        [rat_str(t) for t in trace],
    )


# Balancing


def balancing_epsilon(log_ratio: float, p: int) -> float:
    """eps with e^(-3 eps p / 2) * ratio = 1."""
    if p == 0:
        raise ValidationError("the scaled generator does not occur in the word")
    return 2.0 * log_ratio / (3.0 * p)


def balance_scaling(
    susp: Suspension, a: Word, b: Word, m: int, n: int
) -> tuple[BalanceResult, AnySuspension]:
    """Scale generator a so that lambda_1 = lambda_perp on a^m b^n."""
    if len(a) != 1 or a[0] < 0:
        raise ValidationError("balance_scaling scales a single positive generator")
    c0 = a[0]
    word = concat(power(a, m), power(b, n))
    lam = susp.lambdas(word)
    log_ratio = lam.log_lambda1 - lam.log_perp
    p = abelianize(word, susp.rank)[c0 - 1]
    eps = 0.0 if log_ratio == 0 else balancing_epsilon(log_ratio, p)
    scaled = scale_generator(susp, c0, eps)
    after = scaled.lambdas(word)
    residual = abs(after.log_lambda1 - after.log_perp)
    if abs(after.log_lambda1) <= settings.tolerance:
        raise BoundaryError("lambda_1 = 1 at the balanced point")

    image = scaled.float_image(word)
    values, vectors = np.linalg.eig(image)
    idx = int(np.argmin(np.abs(values)))
    base_line = normalize_line(vectors[:, idx].real)
    gen = scaled.float_image(a)
    structure = eigen_structure(gen)
    cs_residual = abs(float(np.dot(base_line, structure.ecs)))
    if cs_residual > settings.cs_tol:
        raise HypothesisError(
            "base_line_in_ecs",
            f"base line leaves E^cs of the scaled generator (residual {cs_residual:.3g})",
        )
    logger.info(
        "balance_scaling", epsilon=eps, m=m, n=n, residual=residual,
        cs_residual=cs_residual,
    )
    result = BalanceResult(
        epsilon=eps,
        m=m,
        n=n,
        ratio_before=math.exp(log_ratio),
        residual=residual,
        lambda1=after.lambda1,
        base_line=[float(x) for x in base_line],
        cs_residual=cs_residual,
    )
    return result, scaled


def _check_balance_pair(susp: AnySuspension, a: Word, b: Word) -> None:
    base = susp.base if isinstance(susp, ScaledSuspension) else susp
    for name, w in (("a", a), ("b", b)):
        if _non_hyperbolic(base.plane(w)):
            raise HypothesisError(
                "plane_parts_hyperbolic",
                f"plane part of {name} = {word_to_str(w)} is not hyperbolic",
            )
    if v_class(susp, a) != "V":
        raise HypothesisError("a_in_V", f"{word_to_str(a)} is not in V")
    if v_class(susp, b) == "V":
        raise HypothesisError("b_outside_V", f"{word_to_str(b)} is still in V")


def find_balanced_word(
    susp: AnySuspension,
    a: Word,
    b: Word,
    bound: float | None = None,
    m_max: int | None = None,
    n_max: int | None = None,
) -> tuple[int, int]:
    """Smallest m + n (then smallest m) with lambda_1 / lambda_perp in [1/C, C].

    Needs a in V, b outside V and hyperbolic plane parts for a and b.
    """
    _check_balance_pair(susp, a, b)
    bound = settings.balance_bound if bound is None else bound
    m_max = settings.balance_max if m_max is None else m_max
    n_max = settings.balance_max if n_max is None else n_max
    log_c = math.log(bound)
    trajectory: list[tuple[int, int, float]] = []
    for total in range(2, m_max + n_max + 1):
        for m in range(1, min(m_max, total - 1) + 1):
            n = total - m
            if n > n_max:
                continue
            lam = susp.lambdas(concat(power(a, m), power(b, n)))
            log_ratio = lam.log_lambda1 - lam.log_perp
            trajectory.append((m, n, math.exp(log_ratio)))
            if abs(log_ratio) <= log_c:
                logger.info("balanced_word_found", m=m, n=n, ratio=math.exp(log_ratio))
                return m, n
    raise SearchExhaustedError("no balanced word within bounds", trajectory)


def plane_classes(susp: Suspension) -> list[str]:
    """SL2 class of each generator's plane part."""
    return [classify_sl2(p) for p in susp.plane_parts]
