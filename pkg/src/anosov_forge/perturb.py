"""Deformations that turn a quasi-isometric representation non-robust.

Setup: generators a, b, a word omega = a^m b^n and q >= 1 such that
rho(omega^q) is mu on a plane P0 and mu^-2 on a line L0, with L0 inside the
attracting plane E^cu(rho(a)) (sign +1) or the repelling plane E^cs(rho(a))
(sign -1; everything is then read for a^-1).

The path moves the top eigenline of rho(a)^sign off its attracting plane
and recomputes rho_t(b) as an n-th root so that rho_t(omega) never changes.
Along it, the planes rho_t(a^(sign p)).P0 sweep across L0; at the crossing
the commutator [omega^q, a^p omega^q a^-p] is the identity on a plane and
therefore unipotent.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import structlog

from .config import settings
from .errors import (
    HypothesisError,
    NotLoxodromicError,
    ParityError,
    SearchExhaustedError,
    ValidationError,
)
from .exactlinalg import (
    EigenStructure,
    RatMat,
    Vec,
    dot,
    eigen_structure,
    float_loxodromic,
    is_unipotent,
    nth_root,
    nullspace,
    rat_str,
    rational_roots,
    rational_rotation,
    rationalize,
    scalar_plane,
    sturm_real_root_count,
)
from .freegroup import (
    Word,
    commutator,
    concat,
    invert,
    power,
    product,
    walk_words,
    word_to_str,
)
from .models import (
    DestabilizeResult,
    GenericityResult,
    IncidenceResult,
    UnipotentWitness,
)
from .represent import Representation, check_cap

logger = structlog.get_logger(__name__)

Images = Representation | Sequence[np.ndarray]

_PLANE_TOL = 1e-8
_EIGEN_TOL = 1e-6
_BRANCH_TOL = 1e-6
_SAMPLES = 21
_MAX_SHRINK = 20
_UNIPOTENT_CHARPOLY = np.array([1.0, -3.0, 3.0, -1.0])


# Words and float evaluation


def commutator_word(omega: Word, q: int, p: int, a: int = 1) -> Word:
    """[omega^q, a^p omega^q a^-p], freely reduced."""
    if q == 0 or p == 0:
        raise ValidationError("q and p must be non-zero")
    base = power(omega, q)
    return commutator(base, product(power((a,), p), base, power((a,), -p)))


def _float_images(rho: Images) -> list[np.ndarray]:
    if isinstance(rho, Representation):
        return rho.float_images()
    return [np.asarray(m, dtype=float) for m in rho]


def _word_float(images: Sequence[np.ndarray], w: Word) -> np.ndarray:
    inverses: dict[int, np.ndarray] = {}
    out = np.eye(3)
    for x in w:
        if x > 0:
            out = out @ images[x - 1]
        else:
            if x not in inverses:
                inverses[x] = np.linalg.inv(images[-x - 1])
            out = out @ inverses[x]
    return out


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / float(np.linalg.norm(v))


def _line_distance(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.linalg.norm(np.cross(_unit(u), _unit(v))))


def _omega_structure(w: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """(mu, unit normal of P0, unit L0) for a matrix scalar on a plane."""
    vals = np.linalg.eigvals(w)
    scale = float(np.max(np.abs(vals)))
    for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        if np.any(np.abs(vals[[i, j, k]].imag) > _EIGEN_TOL * scale):
            continue
        mu = 0.5 * float(vals[i].real + vals[j].real)
        nu = float(vals[k].real)
        if abs(vals[i].real - vals[j].real) > _EIGEN_TOL * scale:
            continue
        if abs(abs(mu) - 1.0) <= _EIGEN_TOL or abs(nu * mu * mu - 1.0) > _EIGEN_TOL:
            continue
        _, s, vt = np.linalg.svd(w - mu * np.eye(3))
        if s[1] > _EIGEN_TOL * s[0]:
            continue
        _, _, vt_line = np.linalg.svd(w - nu * np.eye(3))
        return mu, _unit(vt[0]), _unit(vt_line[-1])
    raise HypothesisError(
        "omega_scalar_plane", "rho(omega^q) is not mu on a plane and mu^-2 on a line"
    )


def _attracting_side(structure: EigenStructure, line: np.ndarray) -> int:
    if abs(float(structure.ecu @ line)) <= _PLANE_TOL:
        return 1
    if abs(float(structure.ecs @ line)) <= _PLANE_TOL:
        return -1
    raise HypothesisError("l0_in_attracting_plane", "L0 lies in neither E^cu nor E^cs of rho(a)")


def _compensate(a_image: np.ndarray, omega: np.ndarray, m: int, n: int) -> np.ndarray:
    """rho(b) with rho(a)^m rho(b)^n = omega."""
    target = np.linalg.matrix_power(a_image, -m) @ omega
    root = nth_root(target, abs(n))
    return root if n > 0 else np.linalg.inv(root)


def _check_exponents(a: int, b: int, m: int, n: int, rank: int) -> None:
    if a == b or not (1 <= a <= rank and 1 <= b <= rank):
        raise ValidationError("a and b must be distinct generator indices")
    if m == 0 or n == 0:
        raise ValidationError("m and n must be non-zero")


# Genericity


def _frame(structure: EigenStructure) -> np.ndarray:
    return np.column_stack([structure.eu, structure.ec, structure.es])


def _margins(
    structure: EigenStructure, sign: int, normal: np.ndarray, line: np.ndarray
) -> tuple[float, float]:
    bottom = structure.es if sign > 0 else structure.eu
    return _line_distance(structure.ec, line), abs(float(_unit(bottom) @ normal))


def genericity_adjust(
    rho: Images,
    a: int,
    b: int,
    m: int,
    n: int,
    eta: float | None = None,
    q: int = 1,
) -> tuple[list[np.ndarray], GenericityResult]:
    """Move E^c(rho(a)) off L0 and E^s(rho(a)) off P0, keeping rho(omega).

    The attracting plane containing L0 is kept, so the hypotheses survive.
    """
    eta = settings.genericity_eta if eta is None else eta
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    images = _float_images(rho)
    _check_exponents(a, b, m, n, len(images))
    a_img, b_img = images[a - 1], images[b - 1]
    if n % 2 == 0 and np.any(np.linalg.eigvals(b_img).real < 0):
        raise ParityError(f"even n={n} and rho(b) has a negative eigenvalue")
    structure = eigen_structure(a_img)
    if not float_loxodromic(b_img):
        raise NotLoxodromicError("rho(b) is not loxodromic")
    omega = np.linalg.matrix_power(a_img, m) @ np.linalg.matrix_power(b_img, n)
    _, normal, line = _omega_structure(np.linalg.matrix_power(omega, q))
    sign = _attracting_side(structure, line)
    center, stable = _margins(structure, sign, normal, line)
    floor = eta / 10
    if center >= floor and stable >= floor:
        logger.info("genericity_unchanged", center=center, stable=stable)
        return images, GenericityResult(
            changed=False, center_margin=center, stable_margin=stable, drift=0.0
        )

    frame = _frame(structure)
    bottom = 2 if sign > 0 else 0
    if center < floor:
        plane_normal = structure.ecu if sign > 0 else structure.ecs
        away = _unit(np.cross(plane_normal, line))
        ec = frame[:, 1]
        if float(away @ (ec - (ec @ line) * line)) < 0:
            away = -away
        frame[:, 1] = math.cos(eta) * ec + math.sin(eta) * away
    if stable < floor:
        tilt = normal if float(frame[:, bottom] @ normal) >= 0 else -normal
        frame[:, bottom] = math.cos(eta) * frame[:, bottom] + math.sin(eta) * tilt
    new_a = frame @ np.diag(structure.values) @ np.linalg.inv(frame)
    new_b = _compensate(new_a, omega, m, n)
    if not float_loxodromic(new_b):
        raise HypothesisError("b_loxodromic", "compensated rho(b) is not loxodromic")
    adjusted = eigen_structure(new_a)
    center, stable = _margins(adjusted, sign, normal, line)
    if center < floor or stable < floor:
        raise HypothesisError(
            "genericity_margin", f"margins {center:.3g}, {stable:.3g} below {floor:.3g}"
        )
    out = list(images)
    out[a - 1], out[b - 1] = new_a, new_b
    drift = _relative(
        np.linalg.matrix_power(new_a, m) @ np.linalg.matrix_power(new_b, n), omega
    )
    result = GenericityResult(
        changed=True,
        center_margin=center,
        stable_margin=stable,
        drift=drift,
        perturbation=_relative(new_a, a_img),
    )
    logger.info("genericity_adjusted", center=center, stable=stable, drift=drift)
    return out, result


# Compensated paths


@dataclass(frozen=True, eq=False)
class DeformationPath:
    """rho_t for t in [t_minus, t_plus]; rho_t(omega) is constant."""

    images: tuple[np.ndarray, ...]
    a: int
    b: int
    m: int
    n: int
    q: int
    sign: int
    values: tuple[float, float, float]
    frame: np.ndarray  # columns E^u, E^c, E^s of rho(a)
    direction: np.ndarray
    omega_matrix: np.ndarray
    mu: float
    plane_normal: np.ndarray
    base_line: np.ndarray
    domain: tuple[float, float]
    omega: Word = field(init=False)

    def __post_init__(self) -> None:
        word = concat(power((self.a,), self.m), power((self.b,), self.n))
        object.__setattr__(self, "omega", word)

    @property
    def moving(self) -> int:
        return 0 if self.sign > 0 else 2

    def moving_line(self, t: float) -> np.ndarray:
        k = self.moving
        return math.cos(t) * self.frame[:, k] + math.sin(t) * self.direction

    def a_image(self, t: float) -> np.ndarray:
        frame = self.frame.copy()
        frame[:, self.moving] = self.moving_line(t)
        return frame @ np.diag(self.values) @ np.linalg.inv(frame)

    def b_image(self, t: float) -> np.ndarray:
        return _compensate(self.a_image(t), self.omega_matrix, self.m, self.n)

    def at(self, t: float) -> list[np.ndarray]:
        a_img = self.a_image(t)
        out = list(self.images)
        out[self.a - 1] = a_img
        out[self.b - 1] = _compensate(a_img, self.omega_matrix, self.m, self.n)
        return out

    def omega_image(self, t: float) -> np.ndarray:
        return _word_float(self.at(t), self.omega)

    def theta(self, t: float) -> float:
        """Functional vanishing on the attracting plane of rho_t(a)^sign, at L0."""
        normal = np.cross(self.moving_line(t), self.frame[:, 1])
        return float(_unit(normal) @ self.base_line)

    def theta_p(self, t: float, p: int) -> float:
        """Functional vanishing on rho_t(a^(sign p)).P0, at L0."""
        inv_t = np.linalg.matrix_power(self.a_image(t), -self.sign * p).T
        return float(_unit(inv_t @ self.plane_normal) @ self.base_line)

    def samples(self, count: int = _SAMPLES) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], count)

    def drift(self, count: int = _SAMPLES) -> float:
        """Largest relative change of rho_t(omega) over the sample grid."""
        return max(
            _relative(self.omega_image(float(t)), self.omega_matrix)
            for t in self.samples(count)
        )


def compensated_path(
    rho: Images,
    a: int,
    b: int,
    m: int,
    n: int,
    amplitude: float | None = None,
    q: int = 1,
) -> DeformationPath:
    """Rotate the top eigenline of rho(a)^sign off its attracting plane.

    The rotation is toward the plane normal, so it crosses the plane
    transversally at t = 0 only. The domain halves until rho_t(b) is
    loxodromic at every sample.
    """
    amplitude = settings.amplitude if amplitude is None else amplitude
    if not 0 < amplitude < math.pi / 2:
        raise ValidationError("amplitude must lie in (0, pi/2)")
    if q < 1:
        raise ValidationError("q must be >= 1")
    images = _float_images(rho)
    _check_exponents(a, b, m, n, len(images))
    a_img, b_img = images[a - 1], images[b - 1]
    structure = eigen_structure(a_img)
    if not float_loxodromic(b_img):
        raise NotLoxodromicError("rho(b) is not loxodromic")
    omega = np.linalg.matrix_power(a_img, m) @ np.linalg.matrix_power(b_img, n)
    mu, normal, line = _omega_structure(np.linalg.matrix_power(omega, q))
    sign = _attracting_side(structure, line)
    if _line_distance(structure.ec, line) <= _PLANE_TOL:
        raise HypothesisError("center_off_l0", "E^c(rho(a)) = L0; run genericity_adjust first")

    base = DeformationPath(
        images=tuple(images),
        a=a,
        b=b,
        m=m,
        n=n,
        q=q,
        sign=sign,
        values=structure.values,
        frame=_frame(structure),
        direction=structure.ecu if sign > 0 else structure.ecs,
        omega_matrix=omega,
        mu=mu,
        plane_normal=normal,
        base_line=line,
        domain=(-amplitude, amplitude),
    )
    if _relative(base.b_image(0.0), b_img) > _BRANCH_TOL:
        raise HypothesisError("root_branch", "the real n-th root does not recover rho(b)")

    path = base
    for _ in range(_MAX_SHRINK):
        lost = [
            float(t) for t in path.samples()
            if not float_loxodromic(path.b_image(float(t)))
        ]
        if not lost:
            break
        half = path.domain[1] / 2
        logger.warning("path_domain_shrunk", lost_at=lost[0], amplitude=half)
        path = _with_domain(base, half)
    else:
        raise NotLoxodromicError("rho_t(b) loses loxodromy at every amplitude tried")

    lo, hi = path.domain
    if path.theta(lo) * path.theta(hi) >= 0:
        raise HypothesisError("transversality", "theta_t(L0) keeps its sign on the domain")
    logger.info("path_built", sign=sign, amplitude=path.domain[1], mu=mu)
    return path


def _with_domain(path: DeformationPath, amplitude: float) -> DeformationPath:
    return DeformationPath(
        images=path.images,
        a=path.a,
        b=path.b,
        m=path.m,
        n=path.n,
        q=path.q,
        sign=path.sign,
        values=path.values,
        frame=path.frame,
        direction=path.direction,
        omega_matrix=path.omega_matrix,
        mu=path.mu,
        plane_normal=path.plane_normal,
        base_line=path.base_line,
        domain=(-amplitude, amplitude),
    )


# Incidence


@dataclass
class _Bisection:
    p: int
    endpoints: tuple[float, float]
    t0: float = 0.0
    theta: float = math.inf
    steps: int = 0
    trace: list[float] = field(default_factory=list)
    bracketed: bool = False


def _bisect(path: DeformationPath, p: int, tol: float, max_steps: int) -> _Bisection:
    lo, hi = path.domain
    f_lo, f_hi = path.theta_p(lo, p), path.theta_p(hi, p)
    run = _Bisection(p=p, endpoints=(f_lo, f_hi))
    if f_lo * f_hi > 0:
        return run
    run.bracketed = True
    run.t0, run.theta = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    run.trace.append(abs(run.theta))
    while abs(run.theta) > tol and run.steps < max_steps:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = path.theta_p(mid, p)
        run.steps += 1
        if abs(f_mid) < abs(run.theta):
            run.t0, run.theta = mid, f_mid
        run.trace.append(abs(run.theta))
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return run


def solve_incidence(
    path: DeformationPath,
    p_max: int | None = None,
    tol: float | None = None,
    max_steps: int | None = None,
) -> IncidenceResult:
    """Least p <= p_max whose plane rho_t(a^p).P0 crosses L0, and the crossing t0.

    Every p is bracketed and bisected in parallel; the least bracketed p wins.
    """
    p_max = settings.p_max if p_max is None else p_max
    tol = settings.incidence_tol if tol is None else tol
    max_steps = settings.bisection_max_steps if max_steps is None else max_steps
    if tol <= 0:
        raise ValidationError("incidence tolerance must be positive")
    if p_max < 1 or max_steps < 1:
        raise ValidationError("p_max and max_steps must be >= 1")

    ps = list(range(1, p_max + 1))
    workers = min(settings.worker_count(), len(ps))
    if workers <= 1:
        runs = [_bisect(path, p, tol, max_steps) for p in ps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda p: _bisect(path, p, tol, max_steps), ps))

    skipped: dict[int, list[float]] = {}
    for run in runs:
        if not run.bracketed:
            skipped[run.p] = list(run.endpoints)
            logger.debug("incidence_one_signed", p=run.p, endpoints=run.endpoints)
            continue
        if abs(run.theta) > tol:
            raise SearchExhaustedError(
                f"bisection at p={run.p} stalled at |theta|={abs(run.theta):.3g}",
                trace=run.trace,
            )
        logger.info("incidence_solved", p=run.p, t0=run.t0, theta=run.theta, steps=run.steps)
        return IncidenceResult(
            t0=run.t0, p=run.p, theta=run.theta, steps=run.steps, trace=run.trace,
            skipped=skipped,
        )
    raise SearchExhaustedError(
        f"theta_(t,p)(L0) keeps its sign for every p <= {p_max}",
        trace=[{"p": p, "endpoints": v} for p, v in skipped.items()],
    )


# Witnesses


def _residual(m: np.ndarray) -> float:
    nil = m - np.eye(3)
    return float(np.linalg.norm(nil @ nil @ nil) / np.linalg.norm(m) ** 3)


def _charpoly_distance(m: np.ndarray) -> float:
    return float(np.max(np.abs(np.poly(m) - _UNIPOTENT_CHARPOLY)))


def _exact_confirm(images: Sequence[np.ndarray], w: Word) -> bool:
    exact = [rationalize(m, settings.rational_tol) for m in images]
    if any(x is None or x.det != 1 for x in exact):
        return False
    image = Representation([x for x in exact if x is not None]).evaluate(w)
    return is_unipotent(image) and not image.is_identity()


def commutator_at(path: DeformationPath, t: float, p: int) -> UnipotentWitness:
    """The commutator witness of exponent p evaluated at rho_t."""
    images = path.at(t)
    word = commutator_word(path.omega, path.q, path.sign * p, path.a)
    matrix = _word_float(images, word)
    residual = _residual(matrix)
    accepted = residual <= settings.residual_tol
    return UnipotentWitness(
        word=list(word),
        omega=list(path.omega),
        q=path.q,
        p=path.sign * p,
        t=t,
        images=[m.tolist() for m in images],
        matrix=matrix.tolist(),
        residual=residual,
        charpoly_distance=_charpoly_distance(matrix),
        accepted=accepted,
        exact_confirmed=accepted and _exact_confirm(images, word),
        parameters={
            "a": path.a,
            "b": path.b,
            "m": path.m,
            "n": path.n,
            "sign": path.sign,
            "domain": list(path.domain),
        },
    )


def unipotent_commutator(path: DeformationPath, incidence: IncidenceResult) -> UnipotentWitness:
    """rho_t0([omega^q, a^p omega^q a^-p]) at a solved incidence."""
    witness = commutator_at(path, incidence.t0, incidence.p)
    witness.parameters["theta"] = incidence.theta
    if witness.accepted:
        logger.info("unipotent_witness", residual=witness.residual, p=incidence.p)
    else:
        logger.warning("unipotent_rejected", residual=witness.residual, p=incidence.p)
    return witness


def _exact_witness(
    rho: Representation, word: Word, omega: Word, q: int, p: int
) -> UnipotentWitness:
    image = rho.evaluate(word)
    nil = image - RatMat.identity(3)
    matrix = image.to_float()
    residual = float(np.linalg.norm((nil @ nil @ nil).to_float()) / np.linalg.norm(matrix) ** 3)
    return UnipotentWitness(
        word=list(word),
        omega=list(omega),
        q=q,
        p=p,
        t=0.0,
        images=[m.tolist() for m in rho.float_images()],
        matrix=matrix.tolist(),
        residual=residual,
        charpoly_distance=_charpoly_distance(matrix),
        accepted=residual <= settings.residual_tol,
        exact_confirmed=is_unipotent(image) and not image.is_identity(),
        parameters={"exact": True},
    )


def exact_commutator_witness(
    rho: Representation, omega: Word, q: int, p: int, a: int = 1
) -> UnipotentWitness:
    """Commutator witness of an exact representation, in rational arithmetic."""
    witness = _exact_witness(rho, commutator_word(omega, q, p, a), omega, q, p)
    witness.parameters["a"] = a
    return witness


# Destabilizing finite-index restrictions


def _invariant_flag(g: RatMat) -> tuple[Fraction, RatMat, Vec]:
    """(nu, frame T, normal of P0) with T^-1 g T = block(plane, nu)."""
    cp = g.charpoly()
    roots = rational_roots(cp)
    if sturm_real_root_count(cp) != 1 or len(roots) != 1:
        raise HypothesisError(
            "c1_invariant_flag", "rho(c1) needs one rational real eigenvalue and a rotating plane"
        )
    nu = roots[0]
    shifted = g - RatMat.identity(3).scale(nu)
    line = nullspace(shifted.rows)[0]
    normal = nullspace(shifted.transpose().rows)[0]
    u1, u2 = nullspace([list(normal)])
    frame = RatMat.of([[u1[i], u2[i], line[i]] for i in range(3)])
    return nu, frame, normal


def _least_scalar_power(x: RatMat, q_max: int) -> int:
    for q in range(1, q_max + 1):
        if scalar_plane(x**q) is not None:
            return q
    raise HypothesisError("c3_scalar_plane", f"no power of rho(c3) up to {q_max} is scalar on a plane")


def _transvection(line: Vec, source: Vec, target: Vec) -> RatMat:
    """Det-1 map fixing ``line`` and sending the plane ``source``^perp to ``target``^perp."""
    s = dot(target, line)
    if s == 0:
        raise HypothesisError("plane_transversal", "the target plane contains the eigenline")
    ratio = s / dot(source, line)
    w = [(t - ratio * u) / s for t, u in zip(target, source, strict=True)]
    return RatMat.identity(3) - RatMat.of([[li * wj for wj in w] for li in line])


def rho_k_destabilize(
    rho_k: Representation,
    q: int | None = None,
    n_max: int | None = None,
    rotation: Fraction = Fraction(1, 100),
    approach_tol: float | None = None,
) -> DestabilizeResult:
    """Two-step unipotent witness for a restriction with generators c1, c2, c3, ...

    Step one twists the P0-block of rho(c1) by a rotation of irrational
    angle. Step two picks gamma in <c1, c2> whose plane gamma.P0 is closest
    to the scalar plane of rho(c3^q) and conjugates rho(c3) by the
    transvection fixing its eigenline that carries one plane to the other.
    The closest plane must lie within approach_tol; the correction reported
    is the Frobenius norm of the transvection minus the identity.
    """
    n_max = settings.max_length if n_max is None else n_max
    approach_tol = settings.approach_tol if approach_tol is None else approach_tol
    if rho_k.rank <= 2:
        raise ValidationError("destabilization needs rank k > 2")
    check_cap(2, n_max)
    g = rho_k.images[0]
    nu, frame, normal0 = _invariant_flag(g)
    inside = frame.inv() @ g @ frame
    plane_part = inside.upper_block() @ rational_rotation(rotation)
    twisted = frame @ RatMat.block(plane_part, nu) @ frame.inv()
    images = list(rho_k.images)
    images[0] = twisted
    rho1 = Representation(images, rho_k.names)

    c3 = rho_k.images[2]
    q = _least_scalar_power(c3, settings.power_max) if q is None else q
    plane = scalar_plane(c3**q)
    if plane is None:
        raise HypothesisError("c3_scalar_plane", f"rho(c3^{q}) is not scalar on a plane")
    target_normal = np.array([float(x) for x in plane.normal])
    line = np.array([float(x) for x in plane.line])
    start_normal = np.array([float(x) for x in normal0])

    inv_t = {x: np.linalg.inv(rho1.letter(x).to_float()).T for x in (1, -1, 2, -2)}
    best: list[tuple[float, int, Word]] = []

    def step(state: np.ndarray, x: int) -> np.ndarray:
        nxt = state @ inv_t[x]
        return nxt / float(np.linalg.norm(nxt))

    def visit(w: Word, state: np.ndarray) -> None:
        normal = _unit(state @ start_normal)
        if abs(float(normal @ line)) <= _PLANE_TOL * float(np.linalg.norm(line)):
            return
        key = (_line_distance(normal, target_normal), len(w), w)
        if not best or key < best[0]:
            best[:] = [key]

    walk_words(2, n_max, step, np.eye(3), visit)
    if not best:
        raise SearchExhaustedError(
            f"no plane within length {n_max} is transversal to L0", trace=[math.inf]
        )
    approach, _, gamma = best[0]

    moved_normal = rho1.evaluate(gamma).inv().transpose().apply(normal0)
    h = _transvection(plane.line, plane.normal, moved_normal)
    correction = float(np.linalg.norm((h - RatMat.identity(3)).to_float()))
    if approach > approach_tol:
        raise SearchExhaustedError(
            f"closest plane within length {n_max} is {approach:.3g} away"
            f" (correction {correction:.3g})",
            trace=[approach, correction],
        )
    images[2] = h @ c3 @ h.inv()
    rho2 = Representation(images, rho_k.names)
    word = commutator(power((3,), q), product(gamma, (1,), invert(gamma)))
    witness = _exact_witness(rho2, word, (3,), q, 1)
    witness.parameters.update(
        {"rotation": rat_str(rotation), "gamma": word_to_str(gamma, rho_k.names), "n_max": n_max}
    )
    logger.info(
        "rho_k_destabilized", k=rho_k.rank, q=q, gamma=list(gamma), approach=approach,
        correction=correction, exact=witness.exact_confirmed,
    )
    return DestabilizeResult(
        witness=witness, gamma=list(gamma), approach=approach, correction=correction, q=q
    )



# Instances


@dataclass(frozen=True)
class CommutatorSetup:
    """A representation with the data (a, b, m, n, q) of a commutator witness."""

    rho: Representation
    a: int = 1
    b: int = 2
    m: int = 1
    n: int = 1
    q: int = 1
    p: int | None = None

    @property
    def omega(self) -> Word:
        return concat(power((self.a,), self.m), power((self.b,), self.n))

    def describe(self) -> dict[str, Any]:
        return {
            "a": self.a, "b": self.b, "m": self.m, "n": self.n, "q": self.q,
            "omega": list(self.omega),
        }


_OMEGA = RatMat.diag(2, 2, Fraction(1, 4))


def planted_instance() -> CommutatorSetup:
    """E^u = (1,0,1), E^c = (1,0,-1), E^s = (1,1,1) with eigenvalues 4, 1, 1/4.

    rho(ab) = diag(2, 2, 1/4), so P0 is the xy-plane and L0 = e3 lies in
    E^cu(rho(a)). The p = 1 crossing sits at tan t = 1/(4 sqrt 2).
    """
    a = RatMat.of(
        [
            [Fraction(5, 2), Fraction(-15, 4), Fraction(3, 2)],
            [0, Fraction(1, 4), 0],
            [Fraction(3, 2), Fraction(-15, 4), Fraction(5, 2)],
        ]
    )
    return CommutatorSetup(rho=Representation([a, a.inv() @ _OMEGA], ("a", "b")))


def exact_unipotent_instance() -> CommutatorSetup:
    """rho(a).P0 contains L0 already, so [ab, a ab a^-1] is exactly unipotent."""
    a = RatMat.of([[0, 1, 0], [0, 1, 1], [1, 0, 1]])
    return CommutatorSetup(rho=Representation([a, a.inv() @ _OMEGA], ("a", "b")), p=1)
