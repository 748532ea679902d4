"""Ping-pong certificates for symmetric families in SL3.

Cones are finite unions of open chordal balls in RP^2, with the chordal
metric d(L, L') = |v x w| for unit representatives. Containments g.C_h in C_g
and expansion bounds |g v| >= c are checked on gnomonic nets whose covering
radius is the net resolution h. Each net verdict is padded by a Lipschitz
slack valid on the whole h-cell, so a passing net check covers the ball.

Balls centered on an invariant plane P0 (or on its perpendicular line L0)
under a matrix that is conformal on P0 are mapped into balls of the same
radius. That containment is tight, so it is closed by the exact block test
in ``_block_action`` rather than by a net.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np
import structlog

from .config import settings
from .errors import (
    HypothesisError,
    NotLoxodromicError,
    SearchExhaustedError,
    ValidationError,
)
from .exactlinalg import (
    EigenStructure,
    RatMat,
    Vec,
    cross,
    dot,
    eigen_structure,
    matrix_rank,
    nullspace,
    rat_str,
    rational_sqrt,
    scalar_plane,
    singular_values,
)
from .freegroup import Word, walk_words
from .models import (
    Certificate,
    CertificateResult,
    CheckItem,
    ConeBall,
    FabricaqiReport,
    PowerSearchResult,
    PreparedNbhdReport,
    QIBoundResult,
)
from .represent import Representation, check_cap

logger = structlog.get_logger(__name__)

Line = Vec | np.ndarray
Parity = Literal["any", "odd"]

_SQRT2 = math.sqrt(2.0)


# Projective geometry


def _as_array(v: Sequence[float | Fraction] | np.ndarray) -> np.ndarray:
    return np.array([float(x) for x in v], dtype=float)


def _unit(v: Sequence[float | Fraction] | np.ndarray) -> np.ndarray:
    w = _as_array(v)
    norm = float(np.linalg.norm(w))
    if norm == 0:
        raise ValidationError("zero vector does not define a line")
    return w / norm


def _is_exact(v: Line) -> bool:
    return isinstance(v, tuple) and all(isinstance(x, Fraction) for x in v)


def _is_zero(v: Line) -> bool:
    if _is_exact(v):
        return all(x == 0 for x in v)
    return float(np.linalg.norm(_as_array(v))) <= 1e-12


def _cross_any(u: Line, v: Line) -> Line:
    if _is_exact(u) and _is_exact(v):
        return cross(u, v)
    return np.cross(_as_array(u), _as_array(v))


def _apply(g: RatMat, v: Line) -> Line:
    if _is_exact(v):
        return g.apply(v)
    return g.to_float() @ _as_array(v)


def _same_line(u: Line, v: Line) -> bool:
    if _is_exact(u) and _is_exact(v):
        return _is_zero(cross(u, v))
    return chordal_distance(u, v) <= 1e-10


def chordal_distance(
    u: Sequence[float | Fraction] | np.ndarray, v: Sequence[float | Fraction] | np.ndarray
) -> float:
    """Sine of the angle between two lines."""
    d = float(np.linalg.norm(np.cross(_unit(u), _unit(v))))
    if d < 1e-14:
        return 0.0
    return min(d, 1.0)


def _chordal_rows(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.cross(points, center), axis=1)


def projective_lipschitz_bound(g: RatMat | np.ndarray) -> float:
    """s1 s2 / s3^2, a Lipschitz constant of L -> g.L in the chordal metric."""
    s = singular_values(g)
    if s[2] == 0:
        raise ValidationError("projective action needs an invertible matrix")
    return s[0] * s[1] / s[2] ** 2


def ball_net(
    center: Sequence[float] | np.ndarray, radius: float, resolution: float
) -> np.ndarray:
    """Unit vectors whose lines come within ``resolution`` of every line in the ball.

    Points live on a square grid in the tangent plane at the center; the
    gnomonic chart is 1-Lipschitz onto RP^2, so a grid step of resolution*sqrt(2)
    has covering radius ``resolution``.
    """
    if not 0 < radius < 1:
        raise ValidationError("ball radius must lie in (0, 1)")
    if resolution <= 0:
        raise ValidationError("net resolution must be positive")
    c = _unit(center)
    axis = np.eye(3)[int(np.argmin(np.abs(c)))]
    u1 = _unit(np.cross(c, axis))
    u2 = np.cross(c, u1)
    step = resolution * _SQRT2
    reach = math.tan(math.asin(radius)) + resolution
    k = math.ceil(reach / step)
    grid = np.arange(-k, k + 1) * step
    q1, q2 = np.meshgrid(grid, grid)
    keep = q1**2 + q2**2 <= reach**2
    pts = c + q1[keep][:, None] * u1 + q2[keep][:, None] * u2
    return pts / np.linalg.norm(pts, axis=1)[:, None]


# Invariant frames


@dataclass(frozen=True)
class InvariantFrame:
    """A rational plane P0 (by its normal) and a rational line L0."""

    normal: Vec
    line: Vec


def _block_action(m: RatMat, frame: InvariantFrame) -> tuple[bool, bool]:
    """Whether balls centered on P0, resp. on L0, keep their radius under m.

    Requires L0 perpendicular to P0, both invariant, m conformal on P0 with
    factor s and scaling L0 by t. Plane balls do not grow when t^2 <= s^2,
    the ball around L0 does not grow when t^2 >= s^2.
    """
    n, line = frame.normal, frame.line
    if not _is_zero(cross(n, line)):
        return False, False
    moved = m.apply(line)
    if not _is_zero(cross(moved, line)):
        return False, False
    basis = nullspace([list(n)])
    images = [m.apply(u) for u in basis]
    if any(dot(n, v) != 0 for v in images):
        return False, False
    gram = RatMat(tuple(tuple(dot(a, b) for b in basis) for a in basis))
    coords = gram.inv() @ RatMat(tuple(tuple(dot(a, v) for v in images) for a in basis))
    pulled = coords.transpose() @ gram @ coords
    s2 = pulled[0, 0] / gram[0, 0]
    if pulled != gram.scale(s2):
        return False, False
    k = next(i for i, x in enumerate(line) if x != 0)
    t2 = (moved[k] / line[k]) ** 2
    return t2 <= s2, t2 >= s2


# Condition (*)


def _inverse_index(matrices: Sequence[RatMat]) -> list[int]:
    index = []
    for i, m in enumerate(matrices):
        inv = m.inv()
        j = next((j for j, other in enumerate(matrices) if other == inv), None)
        if j is None:
            raise ValidationError(f"family is not symmetric: element {i} has no inverse")
        index.append(j)
    return index


@dataclass
class _ElementCheck:
    lipschitz: float
    containment: float = math.inf
    containment_witness: np.ndarray | None = None
    containment_source: str = ""
    expansion: float = math.inf
    expansion_witness: np.ndarray | None = None
    local_slack: float = 0.0
    exact: list[str] = field(default_factory=list)


def certify_condition_star(
    labels: Sequence[str],
    matrices: Sequence[RatMat],
    cones: Sequence[Sequence[ConeBall]],
    expansion: float,
    base_line: Sequence[float] | np.ndarray,
    net_resolution: float | None = None,
    frame: InvariantFrame | None = None,
) -> CertificateResult:
    """Verify the five ping-pong conditions or return the first failing one."""
    h = settings.net_resolution if net_resolution is None else net_resolution
    k = len(matrices)
    if len(labels) != k or len(cones) != k:
        raise ValidationError("labels, matrices and cones differ in length")
    if expansion <= 1:
        raise ValidationError("expansion constant must exceed 1")
    if any(not cone for cone in cones):
        raise ValidationError("every element needs a nonempty cone")
    inverse = _inverse_index(matrices)
    floats = [m.to_float() for m in matrices]
    balls = [[(_unit(b.center), b.radius) for b in cone] for cone in cones]
    base = _unit(base_line)
    margins: dict[str, float] = {}

    def fail(condition: str, witness: np.ndarray, message: str) -> CertificateResult:
        logger.info("condition_star_failed", condition=condition, message=message)
        return CertificateResult(
            success=False,
            failed_condition=condition,
            witness=[float(x) for x in witness],
            message=message,
        )

    worst = math.inf
    for i in range(k):
        for j in range(i + 1, k):
            for c1, r1 in balls[i]:
                for c2, r2 in balls[j]:
                    gap = chordal_distance(c1, c2) - r1 - r2
                    if gap <= 0:
                        return fail(
                            "disjointness", c1, f"cones {labels[i]} and {labels[j]} overlap"
                        )
                    worst = min(worst, gap)
    margins["disjointness"] = worst

    worst = math.inf
    for i, balls_i in enumerate(balls):
        for c, r in balls_i:
            gap = chordal_distance(base, c) - r
            if gap < 0:
                return fail("base_outside", base, f"base line lies in cone {labels[i]}")
            worst = min(worst, gap)
    margins["base_outside"] = worst

    worst = math.inf
    for i, m in enumerate(floats):
        image = _unit(m @ base)
        gap = max(r - chordal_distance(image, c) for c, r in balls[i])
        if gap <= 0:
            return fail("base_image", image, f"{labels[i]} maps the base line outside its cone")
        worst = min(worst, gap)
    margins["base_image"] = worst

    plane_normal = _unit(frame.normal) if frame is not None else None
    frame_line = _unit(frame.line) if frame is not None else None

    def check_element(i: int) -> _ElementCheck:
        m = floats[i]
        s = singular_values(m)
        out = _ElementCheck(lipschitz=s[0] * s[1] / s[2] ** 2)
        plane_ok, line_ok = (
            _block_action(matrices[i], frame) if frame is not None else (False, False)
        )
        for j in range(k):
            if j == inverse[i]:
                continue
            for c, r in balls[j]:
                net = ball_net(c, r, h)
                images = net @ m.T
                norms = np.linalg.norm(images, axis=1)
                lower = norms - _SQRT2 * s[0] * h
                idx = int(np.argmin(lower))
                if lower[idx] - expansion < out.expansion:
                    out.expansion = float(lower[idx] - expansion)
                    out.expansion_witness = net[idx]

                on_plane = (
                    plane_ok and plane_normal is not None and abs(float(plane_normal @ c)) <= 1e-12
                )
                on_line = (
                    line_ok and frame_line is not None and chordal_distance(c, frame_line) <= 1e-12
                )
                if on_plane or on_line:
                    image_center = _unit(m @ c)
                    gap = max(rt - r - chordal_distance(image_center, ct) for ct, rt in balls[i])
                    if gap >= -1e-12:
                        out.exact.append(f"{labels[i]}.{labels[j]}")
                        continue

                units = images / norms[:, None]
                denom = norms * lower
                local = np.full(len(net), math.inf)
                positive = denom > 0
                local[positive] = s[0] * s[1] * h / denom[positive]
                slack = np.minimum(out.lipschitz * h, local)
                inside = np.full(len(net), -math.inf)
                for ct, rt in balls[i]:
                    inside = np.maximum(inside, rt - _chordal_rows(units, ct))
                gaps = inside - slack
                idx = int(np.argmin(gaps))
                out.local_slack = max(out.local_slack, float(np.max(slack)))
                if gaps[idx] < out.containment:
                    out.containment = float(gaps[idx])
                    out.containment_witness = net[idx]
                    out.containment_source = labels[j]
        return out

    workers = min(settings.worker_count(), k)
    if workers <= 1:
        checks = [check_element(i) for i in range(k)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(check_element, range(k)))

    for i, chk in enumerate(checks):
        if chk.containment <= 0 and chk.containment_witness is not None:
            return fail(
                "containment",
                chk.containment_witness,
                f"{labels[i]} does not map cone {chk.containment_source} into its cone "
                f"(margin {chk.containment:.3g})",
            )
    for i, chk in enumerate(checks):
        if chk.expansion < 0 and chk.expansion_witness is not None:
            return fail(
                "expansion",
                chk.expansion_witness,
                f"{labels[i]} expands by less than {expansion} (margin {chk.expansion:.3g})",
            )
    margins["containment"] = min(c.containment for c in checks)
    margins["expansion"] = min(c.expansion for c in checks)
    margins["local_slack"] = max(c.local_slack for c in checks)

    certificate = Certificate(
        labels=list(labels),
        matrices=[m.to_json() for m in matrices],
        cones=[list(cone) for cone in cones],
        expansion=expansion,
        base_line=[float(x) for x in base],
        net_resolution=h,
        lipschitz=[c.lipschitz for c in checks],
        margins=margins,
        exact_containments=[e for c in checks for e in c.exact],
    )
    logger.info("condition_star_certified", family=list(labels), margins=margins)
    return CertificateResult(success=True, certificate=certificate)


# Hypotheses of the power construction


def _separated(normal: Line, v: Line) -> tuple[bool, float]:
    """Whether the line v avoids the plane with this normal, with its margin."""
    if _is_zero(normal) or _is_zero(v):
        return False, 0.0
    margin = abs(float(_unit(_as_array(normal)) @ _unit(_as_array(v))))
    if _is_exact(normal) and _is_exact(v):
        return dot(normal, v) != 0, margin
    return margin > settings.tolerance, margin


@dataclass(frozen=True)
class FabricaqiSetup:
    """Exact data behind a fabricaqi report."""

    report: FabricaqiReport
    m: int
    mu: Fraction
    normal: Vec
    line: Vec
    structure: EigenStructure | None = None
    ecu_normal: Line | None = None
    ecs_normal: Line | None = None
    orbit: tuple[Line, ...] = ()


def _power_plane(g: RatMat, m_max: int) -> tuple[int, Fraction, Vec, Vec]:
    for m in range(1, m_max + 1):
        sp = scalar_plane(g**m)
        if sp is not None and sp.mu > 1 and sp.nu == 1 / sp.mu**2:
            return m, sp.mu, sp.normal, sp.line
    raise HypothesisError(
        "g_power_scalar_plane",
        f"no m <= {m_max} with g^m = mu on a plane and mu^-2 on a line",
    )


def _fabricaqi(f: RatMat, g: RatMat, m_max: int | None = None) -> FabricaqiSetup:
    m_max = settings.power_max if m_max is None else m_max
    m, mu, normal, line = _power_plane(g, m_max)

    def report(checks: list[CheckItem]) -> FabricaqiReport:
        return FabricaqiReport(
            m=m,
            mu=rat_str(mu),
            plane_normal=[rat_str(x) for x in normal],
            base_line=[rat_str(x) for x in line],
            checks=checks,
            passed=all(c.passed for c in checks),
        )

    try:
        structure = eigen_structure(f)
    except NotLoxodromicError:
        item = CheckItem(
            name="f_loxodromic",
            passed=False,
            detail="f needs three real eigenvalues of distinct moduli",
        )
        return FabricaqiSetup(report([item]), m, mu, normal, line)

    checks = [CheckItem(name="f_loxodromic", passed=True)]
    if structure.exact_lines is not None:
        eu, ec, es = structure.exact_lines
        ecu: Line = structure.ecu_exact or structure.ecu
        ecs: Line = structure.ecs_exact or structure.ecs
    else:
        eu, ec, es = structure.eu, structure.ec, structure.es
        ecu, ecs = structure.ecu, structure.ecs

    for name, v in (("eu", eu), ("ec", ec), ("es", es)):
        ok, margin = _separated(normal, v)
        checks.append(CheckItem(name=f"{name}_not_in_p0", passed=ok, margin=margin))
    for name, n in (("ecu", ecu), ("ecs", ecs)):
        ok, margin = _separated(n, line)
        checks.append(CheckItem(name=f"l0_not_in_{name}", passed=ok, margin=margin))

    orbit: list[Line] = []
    for tag, e in (("u", eu), ("s", es)):
        x = _cross_any(normal, _cross_any(e, line))
        for k in range(m):
            ok_cs, margin_cs = _separated(ecs, x)
            ok_cu, margin_cu = _separated(ecu, x)
            checks.append(
                CheckItem(
                    name=f"orbit_{tag}_{k}",
                    passed=ok_cs and ok_cu,
                    margin=min(margin_cs, margin_cu),
                )
            )
            if not _is_zero(x) and not any(_same_line(x, y) for y in orbit):
                orbit.append(x)
            x = _apply(g, x)

    rep = report(checks)
    logger.info("fabricaqi_checked", m=m, mu=str(mu), passed=rep.passed)
    return FabricaqiSetup(
        report=rep,
        m=m,
        mu=mu,
        normal=normal,
        line=line,
        structure=structure,
        ecu_normal=ecu,
        ecs_normal=ecs,
        orbit=tuple(orbit),
    )


def check_fabricaqi(f: RatMat, g: RatMat, m_max: int | None = None) -> FabricaqiReport:
    """Hypotheses under which {f^n, f^-n, g^n, g^-n} play ping-pong for large n."""
    return _fabricaqi(f, g, m_max).report


# Prepared neighborhoods


def prepared_neighborhood(
    g: RatMat,
    m: int,
    mu: Fraction,
    lines: Sequence[Line],
    radius: float,
    avoid: Sequence[Line] = (),
) -> PreparedNbhdReport:
    """Arcs around a g-invariant set of lines in P0, closed under g.

    ``avoid`` lists normals of planes whose traces in P0 the arcs must miss.
    """
    if not 0 < radius < 1:
        raise ValidationError("arc radius must lie in (0, 1)")
    shifted = g**m - RatMat.identity(3).scale(mu)
    if matrix_rank(shifted.rows) != 1:
        raise ValidationError(f"g^{m} is not {mu} times the identity on a plane")
    normal: Vec = next(row for row in shifted.rows if any(x != 0 for x in row))
    for x in lines:
        ok, _ = _separated(normal, x)
        if ok:
            raise ValidationError("every line of X must lie in P0")
    for x in lines:
        if not any(_same_line(_apply(g, x), y) for y in lines):
            raise ValidationError("X is not g-invariant")

    n_hat = _unit(normal)
    b1 = _unit(nullspace([list(normal)])[0])
    b2 = np.cross(n_hat, b1)

    def angle(v: Line) -> float:
        w = _as_array(v)
        return math.atan2(float(w @ b2), float(w @ b1)) % math.pi

    norm = rational_sqrt(dot(normal, normal))
    exact = norm is not None and all(_is_exact(x) for x in lines)
    tangent = math.tan(math.asin(radius))
    tau = Fraction(tangent).limit_denominator(10**6)

    endpoints: list[Line] = []
    arcs: dict[tuple[float, float], tuple[float, float]] = {}
    for x in lines:
        if exact:
            assert norm is not None
            w = cross(normal, x)
            step = tuple(tau * c / norm for c in w)
            pair: tuple[Line, Line] = (
                tuple(a - b for a, b in zip(x, step, strict=True)),
                tuple(a + b for a, b in zip(x, step, strict=True)),
            )
        else:
            xf = _unit(_as_array(x))
            wf = np.cross(n_hat, xf)
            pair = (xf - tangent * wf, xf + tangent * wf)
        for _ in range(m):
            lo, hi = angle(pair[0]), angle(pair[1])
            width = (hi - lo) % math.pi
            if width > math.pi / 2:
                lo, width = hi, math.pi - width
            key = (round(lo, 9), round(width, 9))
            arcs.setdefault(key, (lo, width))
            for e in pair:
                if not any(_same_line(e, y) for y in endpoints):
                    endpoints.append(e)
            pair = (_apply(g, pair[0]), _apply(g, pair[1]))

    for e in endpoints:
        if not any(_same_line(_apply(g, e), y) for y in endpoints):
            raise ValidationError("arc set is not g-invariant")

    epsilon0 = 1.0
    for n_avoid in avoid:
        trace = _cross_any(n_avoid, normal)
        if _is_zero(trace):
            raise HypothesisError("arc_collision", "an avoided plane coincides with P0")
        theta = angle(trace)
        for lo, width in arcs.values():
            if (theta - lo) % math.pi < width:
                raise HypothesisError(
                    "arc_collision", f"arc at {lo:.4f} rad meets a trace at {theta:.4f} rad"
                )
        n_unit = _unit(_as_array(n_avoid))
        for e in endpoints:
            epsilon0 = min(epsilon0, abs(float(n_unit @ _unit(_as_array(e)))))

    circle = sorted(
        (lo + shift, lo + shift + width)
        for lo, width in arcs.values()
        for shift in (0.0, math.pi)
    )
    logger.info(
        "prepared_neighborhood", arcs=len(circle), exact=exact, epsilon0=epsilon0
    )
    return PreparedNbhdReport(
        m=m,
        mu=rat_str(mu),
        arcs=circle,
        centers=[[float(c) for c in _unit(_as_array(x))] for x in lines],
        radius=radius,
        epsilon0=epsilon0,
        exact=exact,
    )


# Power search


def find_power(
    f: RatMat,
    g: RatMat,
    parity: Parity = "odd",
    n_max: int | None = None,
    net_resolution: float | None = None,
) -> PowerSearchResult:
    """Least n of the given parity for which {f^n, f^-n, g^n, g^-n} is certified."""
    n_max = settings.power_max if n_max is None else n_max
    setup = _fabricaqi(f, g)
    if not setup.report.passed:
        failed = next(c for c in setup.report.checks if not c.passed)
        raise HypothesisError(failed.name, "check_fabricaqi failed")
    assert setup.structure is not None
    assert setup.ecu_normal is not None and setup.ecs_normal is not None
    prepared = prepared_neighborhood(
        g,
        setup.m,
        setup.mu,
        setup.orbit,
        settings.arc_radius,
        avoid=(setup.ecu_normal, setup.ecs_normal),
    )
    frame = InvariantFrame(normal=setup.normal, line=setup.line)
    line = _unit(setup.line)
    x0 = _unit(_as_array(setup.orbit[0]))
    toward = _unit(x0 - float(x0 @ line) * line)
    eu = [float(x) for x in setup.structure.eu]
    es = [float(x) for x in setup.structure.es]
    plane_cone = [ConeBall(center=c, radius=prepared.radius) for c in prepared.centers]
    start_eps = min(settings.epsilon0, prepared.epsilon0)

    trace: list[dict[str, object]] = []
    for n in range(1, n_max + 1, 2 if parity == "odd" else 1):
        fn, gn = f**n, g**n
        mats = [fn, fn.inv(), gn, gn.inv()]
        labels = [f"f^{n}", f"f^-{n}", f"g^{n}", f"g^-{n}"]
        for j in range(settings.epsilon_halvings):
            eps = start_eps / 2**j
            base = math.sqrt(1.0 - eps * eps) * line + eps * toward
            cones = [
                [ConeBall(center=eu, radius=eps)],
                [ConeBall(center=es, radius=eps)],
                plane_cone,
                [ConeBall(center=list(line), radius=chordal_distance(base, line))],
            ]
            result = certify_condition_star(
                labels, mats, cones, settings.expansion, base, net_resolution, frame
            )
            if result.success and result.certificate is not None:
                logger.info("power_found", n=n, epsilon=eps, attempts=len(trace) + 1)
                return PowerSearchResult(
                    n=n, epsilon=eps, certificate=result.certificate, trace=trace
                )
            trace.append(
                {
                    "n": n,
                    "epsilon": eps,
                    "failed_condition": result.failed_condition,
                    "message": result.message,
                }
            )
        logger.debug("power_rejected", n=n, condition=trace[-1]["failed_condition"])
    raise SearchExhaustedError(f"no certified power n <= {n_max}", trace)


# Quasi-isometry bound


def qi_bound_check(
    rho: Representation,
    certificate: Certificate,
    max_length: int,
    expansion: float | None = None,
) -> QIBoundResult:
    """Check s_1(rho(w)) >= c^(|w|-1) for every reduced word up to max_length."""
    c = certificate.expansion if expansion is None else expansion
    listed = {tuple(tuple(row) for row in m) for m in certificate.matrices}
    for i, m in enumerate(rho.images):
        for mat in (m, m.inv()):
            if tuple(tuple(row) for row in mat.to_json()) not in listed:
                raise ValidationError(f"generator {i} is not in the certified alphabet")
    check_cap(rho.rank, max_length)
    letters = {x: rho.letter(x).to_float() for x in range(-rho.rank, rho.rank + 1) if x}
    count = 0
    worst = math.inf
    violation: Word | None = None

    def visit(w: Word, m: np.ndarray) -> None:
        nonlocal count, worst, violation
        count += 1
        ratio = float(np.linalg.norm(m, 2)) / c ** (len(w) - 1)
        worst = min(worst, ratio)
        if ratio < 1 - 1e-9 and (violation is None or (len(w), w) < (len(violation), violation)):
            violation = w

    walk_words(rho.rank, max_length, lambda m, x: m @ letters[x], np.eye(3), visit)
    logger.info("qi_bound_checked", max_length=max_length, words=count, worst=worst)
    return QIBoundResult(
        passed=violation is None,
        max_length=max_length,
        words_checked=count,
        worst_ratio=worst,
        violation=list(violation) if violation is not None else None,
    )


# Schottky family


@dataclass(frozen=True)
class PingPongFamily:
    """A labeled symmetric family with its cones and base line."""

    labels: tuple[str, ...]
    matrices: tuple[RatMat, ...]
    cones: tuple[tuple[ConeBall, ...], ...]
    base_line: tuple[float, ...]

    def representation(self) -> Representation:
        """Free group on the elements at even positions."""
        return Representation(list(self.matrices[::2]), [self.labels[0], self.labels[2]])


def schottky_family(radius: float = 0.1) -> PingPongFamily:
    """a = diag(64, 1, 1/64) and its conjugate b = Q a Q^-1 with cones at eigenlines."""
    a = RatMat.diag(64, 1, Fraction(1, 64))
    q = RatMat.of([[1, 1, 1], [1, 0, -1], [1, -1, 1]])
    b = q @ a @ q.inv()

    def ball(v: Sequence[float]) -> ConeBall:
        return ConeBall(center=[float(x) for x in _unit(v)], radius=radius)

    return PingPongFamily(
        labels=("a", "a^-1", "b", "b^-1"),
        matrices=(a, a.inv(), b, b.inv()),
        cones=(
            (ball((1, 0, 0)),),
            (ball((0, 0, 1)),),
            (ball((1, 1, 1)),),
            (ball((1, -1, 1)),),
        ),
        base_line=tuple(float(x) for x in _unit((2, 1, 3))),
    )
