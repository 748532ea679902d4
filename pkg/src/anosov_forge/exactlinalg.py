"""Exact rational 2x2/3x3 matrix arithmetic and spectral analysis.

Matrices hold ``fractions.Fraction`` entries; every decision that can be made
exactly (determinants, discriminant signs, modulus ties, unipotence, ranks)
is made in rational arithmetic. Root moduli, eigenlines of irrational
eigenvalues, singular values and n-th roots are computed with numpy.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Literal

import numpy as np
import structlog

from .errors import (
    NotLoxodromicError,
    ParityError,
    SingularMatrixError,
    ValidationError,
)

logger = structlog.get_logger(__name__)

Scalar = int | str | Fraction
Vec = tuple[Fraction, ...]
Poly = tuple[Fraction, ...]  # coefficients, highest degree first

SL2Class = Literal["plus_minus_identity", "elliptic", "parabolic", "hyperbolic", "glide"]


def to_rat(x: Scalar) -> Fraction:
    if isinstance(x, float):
        raise ValidationError("floats are not exact rationals; pass 'p/q' strings")
    return Fraction(x)


def rat_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def rational_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, if it is rational."""
    if x < 0:
        return None
    num, den = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if num * num == x.numerator and den * den == x.denominator:
        return Fraction(num, den)
    return None


@dataclass(frozen=True)
class RatMat:
    """Square 2x2 or 3x3 matrix of exact rationals."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rows)
        if n not in (2, 3) or any(len(r) != n for r in self.rows):
            raise ValidationError("RatMat supports 2x2 and 3x3 matrices only")

    # Construction

    @classmethod
    def of(cls, rows: Sequence[Sequence[Scalar]]) -> "RatMat":
        return cls(tuple(tuple(to_rat(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, n: int = 3) -> "RatMat":
        return cls.diag(*([1] * n))

    @classmethod
    def diag(cls, *entries: Scalar) -> "RatMat":
        n = len(entries)
        return cls(
            tuple(
                tuple(to_rat(entries[i]) if i == j else Fraction(0) for j in range(n))
                for i in range(n)
            )
        )

    @classmethod
    def block(
        cls,
        plane: "RatMat",
        corner: Scalar,
        kappa: Sequence[Scalar] = (0, 0),
    ) -> "RatMat":
        """3x3 matrix [[plane, kappa], [0, corner]] preserving span(e1, e2)."""
        if plane.n != 2:
            raise ValidationError("block needs a 2x2 plane part")
        k0, k1 = (to_rat(x) for x in kappa)
        zero = Fraction(0)
        return cls(
            (
                (plane[0, 0], plane[0, 1], k0),
                (plane[1, 0], plane[1, 1], k1),
                (zero, zero, to_rat(corner)),
            )
        )

    @classmethod
    def from_json(cls, data: Sequence[Sequence[Scalar]]) -> "RatMat":
        return cls.of(data)

    def to_json(self) -> list[list[str]]:
        return [[rat_str(x) for x in row] for row in self.rows]

    # Access

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> Vec:
        return tuple(row[j] for row in self.rows)

    def upper_block(self) -> "RatMat":
        """Top-left 2x2 block of a 3x3 matrix."""
        return RatMat((self.rows[0][:2], self.rows[1][:2]))

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.rows])

    # Arithmetic

    def __matmul__(self, other: "RatMat") -> "RatMat":
        n = self.n
        if other.n != n:
            raise ValidationError("matrix size mismatch")
        cols = [other.column(j) for j in range(n)]
        return RatMat(
            tuple(
                tuple(sum((a * b for a, b in zip(row, col, strict=True)), Fraction(0)) for col in cols)
                for row in self.rows
            )
        )

    def __add__(self, other: "RatMat") -> "RatMat":
        return RatMat(
            tuple(
                tuple(a + b for a, b in zip(r1, r2, strict=True))
                for r1, r2 in zip(self.rows, other.rows, strict=True)
            )
        )

    def __sub__(self, other: "RatMat") -> "RatMat":
        return self + other.scale(-1)

    def __neg__(self) -> "RatMat":
        return self.scale(-1)

    def scale(self, c: Scalar) -> "RatMat":
        c = to_rat(c)
        return RatMat(tuple(tuple(c * x for x in row) for row in self.rows))

    def __pow__(self, k: int) -> "RatMat":
        base = self if k >= 0 else self.inv()
        result = RatMat.identity(self.n)
        e = abs(k)
        while e:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result

    def apply(self, v: Sequence[Scalar]) -> Vec:
        w = [to_rat(x) for x in v]
        return tuple(
            sum((a * b for a, b in zip(row, w, strict=True)), Fraction(0))
            for row in self.rows
        )

    def transpose(self) -> "RatMat":
        return RatMat(tuple(self.column(j) for j in range(self.n)))

    @cached_property
    def det(self) -> Fraction:
        m = self.rows
        if self.n == 2:
            return m[0][0] * m[1][1] - m[0][1] * m[1][0]
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    @property
    def is_special(self) -> bool:
        return self.det == 1

    @property
    def trace(self) -> Fraction:
        return sum((self.rows[i][i] for i in range(self.n)), Fraction(0))

    def inv(self) -> "RatMat":
        d = self.det
        if d == 0:
            raise SingularMatrixError("matrix is not invertible")
        m = self.rows
        if self.n == 2:
            return RatMat(((m[1][1] / d, -m[0][1] / d), (-m[1][0] / d, m[0][0] / d)))
        cof = [
            [
                (m[(i + 1) % 3][(j + 1) % 3] * m[(i + 2) % 3][(j + 2) % 3])
                - (m[(i + 1) % 3][(j + 2) % 3] * m[(i + 2) % 3][(j + 1) % 3])
                for j in range(3)
            ]
            for i in range(3)
        ]
        # inverse = adjugate / det, adjugate = cofactor transpose
        return RatMat(tuple(tuple(cof[j][i] / d for j in range(3)) for i in range(3)))

    def charpoly(self) -> Poly:
        """Monic characteristic polynomial, highest degree first."""
        one = Fraction(1)
        if self.n == 2:
            return (one, -self.trace, self.det)
        m = self.rows
        minors = (
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
            + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2] - m[1][2] * m[2][1]
        )
        return (one, -self.trace, minors, -self.det)

    def is_identity(self) -> bool:
        return self == RatMat.identity(self.n)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in row) for row in self.rows)
        return f"RatMat[{body}]"


RatMat2 = RatMat
RatMat3 = RatMat


def det3(m: RatMat) -> Fraction:
    return m.det


def mul3(a: RatMat, b: RatMat) -> RatMat:
    return a @ b


def inv3(m: RatMat) -> RatMat:
    return m.inv()


def charpoly3(m: RatMat) -> Poly:
    return m.charpoly()


# Polynomials over Q


def _trim(p: Sequence[Fraction]) -> Poly:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return tuple(p[i:])


def poly_eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in p:
        acc = acc * x + c
    return acc


def poly_deriv(p: Sequence[Fraction]) -> Poly:
    deg = len(p) - 1
    if deg == 0:
        return (Fraction(0),)
    return tuple(c * (deg - i) for i, c in enumerate(p[:-1]))


def poly_divmod(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Poly, Poly]:
    a, b = list(_trim(a)), _trim(b)
    if b == (0,):
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return (Fraction(0),), tuple(a)
    quotient = []
    while len(a) >= len(b):
        coeff = a[0] / b[0]
        quotient.append(coeff)
        for i in range(len(b)):
            a[i] -= coeff * b[i]
        a.pop(0)
    return tuple(quotient), _trim(a) if a else (Fraction(0),)


def poly_gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> Poly:
    """Monic gcd."""
    a, b = _trim(a), _trim(b)
    while b != (0,):
        a, b = b, poly_divmod(a, b)[1]
    return tuple(c / a[0] for c in a)


def poly_neg_arg(p: Sequence[Fraction]) -> Poly:
    """Coefficients of p(-x)."""
    deg = len(p) - 1
    return tuple(c if (deg - i) % 2 == 0 else -c for i, c in enumerate(p))


def discriminant(p: Sequence[Fraction]) -> Fraction:
    p = _trim(p)
    if len(p) == 3:
        a, b, c = p
        return b * b - 4 * a * c
    if len(p) == 4:
        a, b, c, d = p
        return (
            18 * a * b * c * d
            - 4 * b**3 * d
            + b * b * c * c
            - 4 * a * c**3
            - 27 * a * a * d * d
        )
    raise ValidationError("discriminant implemented for degrees 2 and 3")


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def sturm_real_root_count(p: Sequence[Fraction]) -> int:
    """Number of distinct real roots, by Sturm's theorem."""
    p = _trim(p)
    if len(p) == 1:
        return 0
    chain = [p, poly_deriv(p)]
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        rem = poly_divmod(chain[-2], chain[-1])[1]
        if rem == (0,):
            break
        chain.append(tuple(-c for c in rem))

    def changes(signs: list[int]) -> int:
        signs = [s for s in signs if s != 0]
        return sum(1 for s, t in zip(signs, signs[1:], strict=False) if s != t)

    at_pos = [_sign(q[0]) for q in chain]
    at_neg = [_sign(q[0]) * (-1) ** (len(q) - 1) for q in chain]
    return changes(at_neg) - changes(at_pos)


def rational_roots(p: Sequence[Fraction]) -> list[Fraction]:
    """All rational roots of a degree <= 3 polynomial, with multiplicity.

    Candidates come from float roots snapped with ``limit_denominator`` and
    are confirmed by exact evaluation; each confirmed root is divided out so
    the last quadratic is solved exactly.
    """
    p = _trim(p)
    roots: list[Fraction] = []
    while len(p) > 3:
        found = None
        for r in np.roots([float(c) for c in p]):
            if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
                continue
            for bound in (10**3, 10**6, 10**12):
                cand = Fraction(float(r.real)).limit_denominator(bound)
                if poly_eval(p, cand) == 0:
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            return roots
        roots.append(found)
        p = poly_divmod(p, (Fraction(1), -found))[0]
    if len(p) == 3:
        a, b, c = p
        s = rational_sqrt(b * b - 4 * a * c)
        if s is not None:
            roots.extend(sorted(((-b - s) / (2 * a), (-b + s) / (2 * a))))
    elif len(p) == 2:
        roots.append(-p[1] / p[0])
    return roots


def _repeated_roots(p: Poly) -> list[Fraction]:
    """Roots of a cubic with zero discriminant; they are all rational."""
    g = poly_gcd(p, poly_deriv(p))
    if len(g) == 3:  # triple root
        r = -g[1] / 2
        return [r, r, r]
    r = -g[1]
    other = -p[1] / p[0] - 2 * r
    return [r, r, other]


# Spectra


@dataclass(frozen=True)
class Spectrum3:
    """Eigenvalue data of a 3x3 rational matrix."""

    charpoly: Poly
    discriminant: Fraction
    roots: tuple[complex, complex, complex]
    moduli: tuple[float, float, float]
    real_flags: tuple[bool, bool, bool]
    exact_roots: tuple[Fraction, ...]

    @property
    def disc_sign(self) -> int:
        return _sign(self.discriminant)

    @property
    def real_eigenvalues(self) -> tuple[float, float, float] | None:
        """(mu_u, mu_c, mu_s) when the spectrum is real."""
        if not all(self.real_flags):
            return None
        r = self.roots
        return (r[0].real, r[1].real, r[2].real)

    @property
    def lambda_u(self) -> float:
        return self.moduli[0]

    @property
    def lambda_c(self) -> float:
        return self.moduli[1]

    @property
    def lambda_s(self) -> float:
        return self.moduli[2]


def spectrum3(m: RatMat) -> Spectrum3:
    if m.n != 3:
        raise ValidationError("spectrum3 needs a 3x3 matrix")
    cp = m.charpoly()
    disc = discriminant(cp)
    exact: list[Fraction]
    if disc == 0:
        exact = _repeated_roots(cp)
        roots = [complex(float(r)) for r in exact]
        flags = [True, True, True]
    else:
        exact = rational_roots(cp)
        raw = list(np.roots([float(c) for c in cp]))
        if disc > 0:
            roots = [complex(r.real) for r in raw]
            flags = [True, True, True]
        else:
            real_idx = min(range(3), key=lambda i: abs(raw[i].imag))
            roots = [complex(raw[i]) for i in range(3)]
            roots[real_idx] = complex(raw[real_idx].real)
            flags = [i == real_idx for i in range(3)]
    order = sorted(range(3), key=lambda i: -abs(roots[i]))
    roots = [roots[i] for i in order]
    flags = [flags[i] for i in order]
    return Spectrum3(
        charpoly=cp,
        discriminant=disc,
        roots=(roots[0], roots[1], roots[2]),
        moduli=(abs(roots[0]), abs(roots[1]), abs(roots[2])),
        real_flags=(flags[0], flags[1], flags[2]),
        exact_roots=tuple(exact),
    )


def has_modulus_tie(p: Sequence[Fraction]) -> bool:
    """True when two distinct nonzero roots r, -r exist.

    Decided exactly from gcd(p(x), p(-x)) after removing the root 0.
    """
    g = poly_gcd(p, poly_neg_arg(p))
    while len(g) > 1 and g[-1] == 0:
        g = g[:-1]
    return len(g) > 1


def is_loxodromic(m: RatMat) -> bool:
    """Three real eigenvalues with pairwise distinct moduli."""
    cp = m.charpoly()
    if discriminant(cp) <= 0:
        return False
    return not has_modulus_tie(cp)


def is_unipotent(m: RatMat) -> bool:
    """All eigenvalues equal to 1 (the identity included)."""
    one = Fraction(1)
    if m.n == 2:
        return m.charpoly() == (one, Fraction(-2), one)
    return m.charpoly() == (one, Fraction(-3), Fraction(3), -one)


def nilpotent_cube(m: RatMat) -> bool:
    """(M - I)^n == 0, the second exact unipotence test."""
    shifted = m - RatMat.identity(m.n)
    return (shifted**m.n) == RatMat.diag(*([0] * m.n))


# Exact row reduction


def row_reduce(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = [list(r) for r in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        lead = a[r][c]
        a[r] = [x / lead for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                factor = a[i][c]
                a[i] = [x - factor * y for x, y in zip(a[i], a[r], strict=True)]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def matrix_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(row_reduce(rows)[1])


def nullspace(rows: Sequence[Sequence[Fraction]]) -> list[Vec]:
    """Basis of the kernel of a rational matrix."""
    if not rows:
        return []
    ncols = len(rows[0])
    reduced, pivots = row_reduce(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -reduced[i][f]
        basis.append(tuple(v))
    return basis


def eigenline_exact(m: RatMat, mu: Fraction) -> Vec:
    """Rational eigenvector for a rational simple eigenvalue."""
    kernel = nullspace((m - RatMat.identity(m.n).scale(mu)).rows)
    if len(kernel) != 1:
        raise ValidationError(f"eigenvalue {mu} does not have a one-dimensional eigenspace")
    return kernel[0]


def cross(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v, strict=True)), Fraction(0))


# Lines and planes (float layer)


def normalize_line(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Unit vector with first nonzero coordinate positive."""
    w = np.asarray([float(x) for x in v], dtype=float)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValidationError("zero vector does not define a line")
    w = w / norm
    for x in w:
        if abs(x) > 1e-14:
            if x < 0:
                w = -w
            break
    return w


@dataclass(frozen=True)
class EigenStructure:
    """Eigenlines of a loxodromic matrix sorted by modulus, plus planes."""

    values: tuple[float, float, float]
    eu: np.ndarray
    ec: np.ndarray
    es: np.ndarray
    ecu: np.ndarray  # unit normal
    ecs: np.ndarray  # unit normal
    exact_values: tuple[Fraction, Fraction, Fraction] | None = None
    exact_lines: tuple[Vec, Vec, Vec] | None = None

    @property
    def ecu_exact(self) -> Vec | None:
        if self.exact_lines is None:
            return None
        return cross(self.exact_lines[0], self.exact_lines[1])

    @property
    def ecs_exact(self) -> Vec | None:
        if self.exact_lines is None:
            return None
        return cross(self.exact_lines[1], self.exact_lines[2])


def eigen_structure(m: RatMat | np.ndarray) -> EigenStructure:
    """E^u, E^c, E^s and the planes E^cu, E^cs of a loxodromic matrix."""
    if isinstance(m, RatMat):
        if not is_loxodromic(m):
            raise NotLoxodromicError("eigen_structure needs a loxodromic matrix")
        exact = rational_roots(m.charpoly())
        if len(exact) == 3:
            ordered = sorted(exact, key=lambda r: -abs(r))
            lines = tuple(eigenline_exact(m, mu) for mu in ordered)
            eu, ec, es = (normalize_line(v) for v in lines)
            return EigenStructure(
                values=(float(ordered[0]), float(ordered[1]), float(ordered[2])),
                eu=eu,
                ec=ec,
                es=es,
                ecu=normalize_line(np.cross(eu, ec)),
                ecs=normalize_line(np.cross(ec, es)),
                exact_values=(ordered[0], ordered[1], ordered[2]),
                exact_lines=(lines[0], lines[1], lines[2]),
            )
        arr = m.to_float()
    else:
        arr = np.asarray(m, dtype=float)
        if not float_loxodromic(arr):
            raise NotLoxodromicError("eigen_structure needs a loxodromic matrix")
    w, v = np.linalg.eig(arr)
    order = np.argsort(-np.abs(w))
    vals = [float(w[i].real) for i in order]
    vecs = [normalize_line(v[:, i].real) for i in order]
    return EigenStructure(
        values=(vals[0], vals[1], vals[2]),
        eu=vecs[0],
        ec=vecs[1],
        es=vecs[2],
        ecu=normalize_line(np.cross(vecs[0], vecs[1])),
        ecs=normalize_line(np.cross(vecs[1], vecs[2])),
    )


def float_loxodromic(m: np.ndarray, tol: float = 1e-9) -> bool:
    """Float test: real spectrum with relatively separated moduli."""
    w = np.linalg.eigvals(np.asarray(m, dtype=float))
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if np.any(np.abs(w.imag) > tol * scale):
        return False
    mods = np.sort(np.abs(w.real))
    return bool(np.all(np.diff(mods) > tol * mods[1:]))


def singular_values(m: RatMat | np.ndarray) -> tuple[float, ...]:
    """s_1 >= s_2 >= ... via the SVD of the float matrix."""
    arr = m.to_float() if isinstance(m, RatMat) else np.asarray(m, dtype=float)
    s = np.linalg.svd(arr, compute_uv=False)
    return tuple(float(x) for x in s)


# SL2


def classify_sl2(m: RatMat) -> SL2Class:
    if m.n != 2:
        raise ValidationError("classify_sl2 needs a 2x2 matrix")
    d = m.det
    if d == -1:
        return "glide"
    if d != 1:
        raise ValidationError(f"classify_sl2 needs det = +-1, got {d}")
    t2 = m.trace**2
    if t2 > 4:
        return "hyperbolic"
    if t2 < 4:
        return "elliptic"
    if m == RatMat.identity(2) or m == -RatMat.identity(2):
        return "plus_minus_identity"
    return "parabolic"


def sl2_top_modulus(m: RatMat) -> float:
    """Largest eigenvalue modulus (|tr| + sqrt(tr^2 - 4 det)) / 2."""
    disc = m.trace**2 - 4 * m.det
    if disc < 0:
        raise ValidationError("elliptic matrix has no real top eigenvalue")
    return (abs(float(m.trace)) + math.sqrt(float(disc))) / 2


_SL2_BASIS = (
    RatMat.of([[1, 0], [0, -1]]),
    RatMat.of([[0, 1], [0, 0]]),
    RatMat.of([[0, 0], [1, 0]]),
)


def _sl2_coords(x: RatMat) -> Vec:
    return (x[0, 0], x[0, 1], x[1, 0])


def commutator_differential_rank(g: RatMat, h: RatMat) -> int:
    """Rank of (X, Y) -> Ad_g(Ad_{h^-1} X - X) + (Ad_g Y - Y) on sl2 x sl2."""
    if g.det != 1 or h.det != 1:
        raise ValidationError("commutator_differential_rank needs det 1 inputs")
    g_inv, h_inv = g.inv(), h.inv()

    def ad(k: RatMat, k_inv: RatMat, x: RatMat) -> RatMat:
        return k @ x @ k_inv

    images = []
    for x in _SL2_BASIS:
        images.append(_sl2_coords(ad(g, g_inv, ad(h_inv, h, x) - x)))
    for y in _SL2_BASIS:
        images.append(_sl2_coords(ad(g, g_inv, y) - y))
    return matrix_rank(images)


# Float helpers: roots, rationalization, rotations


def nth_root(m: np.ndarray, n: int, tol: float = 1e-9) -> np.ndarray:
    """Real n-th root of a float matrix with real, distinct-moduli spectrum."""
    if n < 1:
        raise ValidationError("root order must be positive")
    arr = np.asarray(m, dtype=float)
    if n == 1:
        return arr.copy()
    if not float_loxodromic(arr, tol):
        raise NotLoxodromicError("n-th roots are taken of loxodromic matrices only")
    w, v = np.linalg.eig(arr)
    w, v = w.real, v.real
    if n % 2 == 0 and np.any(w < 0):
        raise ParityError(f"even root n={n} of a matrix with a negative eigenvalue")
    roots = np.sign(w) * np.abs(w) ** (1.0 / n)
    r = v @ np.diag(roots) @ np.linalg.inv(v)
    residual = np.linalg.norm(np.linalg.matrix_power(r, n) - arr) / np.linalg.norm(arr)
    if residual > tol:
        logger.warning("nth_root_residual", n=n, residual=float(residual))
    return r


def nth_root_loxodromic(m: RatMat | np.ndarray, n: int) -> np.ndarray:
    if isinstance(m, RatMat):
        if not is_loxodromic(m):
            raise NotLoxodromicError("nth_root_loxodromic needs a loxodromic matrix")
        if n % 2 == 0:
            spec = spectrum3(m)
            real = spec.real_eigenvalues
            if real is not None and min(real) < 0:
                raise ParityError(f"even root n={n} of a matrix with a negative eigenvalue")
        return nth_root(m.to_float(), n)
    return nth_root(m, n)


def rationalize(
    m: np.ndarray, tol: float = 1e-12, max_denominator: int = 10**6
) -> RatMat | None:
    """Snap a float matrix to nearby small-denominator rationals, if close."""
    arr = np.asarray(m, dtype=float)
    rows = []
    for row in arr:
        out = []
        for x in row:
            q = Fraction(float(x)).limit_denominator(max_denominator)
            if abs(float(q) - x) > tol * max(1.0, abs(x)):
                return None
            out.append(q)
        rows.append(out)
    return RatMat.of(rows)


def rational_rotation(t: Scalar) -> RatMat:
    """Rotation with cos = (1-t^2)/(1+t^2), sin = 2t/(1+t^2)."""
    t = to_rat(t)
    c = (1 - t * t) / (1 + t * t)
    s = 2 * t / (1 + t * t)
    return RatMat(((c, -s), (s, c)))


@dataclass(frozen=True)
class ScalarPlane:
    """A plane on which a 3x3 matrix acts as mu times the identity."""

    mu: Fraction
    nu: Fraction  # eigenvalue on the complementary line
    normal: Vec
    line: Vec


def scalar_plane(m: RatMat) -> ScalarPlane | None:
    """Plane where m is scalar with the complementary eigenline, if any."""
    cp = m.charpoly()
    if discriminant(cp) != 0:
        return None
    roots = _repeated_roots(cp)
    mu, nu = roots[0], roots[2]
    if mu == nu:
        return None
    shifted = m - RatMat.identity(3).scale(mu)
    if matrix_rank(shifted.rows) != 1:
        return None
    normal = next(row for row in shifted.rows if any(x != 0 for x in row))
    return ScalarPlane(mu=mu, nu=nu, normal=tuple(normal), line=eigenline_exact(m, nu))
