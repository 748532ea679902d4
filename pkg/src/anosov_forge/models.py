"""Pydantic models for anosov-forge.

Report and file models for profiles, suspensions, certificates, witnesses
and catalog entries. Rationals travel as "p/q" strings, words as lists of
signed generator indices.
"""

from typing import Any, Literal

from pydantic import BaseModel, Field

RatStr = str
MatrixStr = list[list[RatStr]]
MatrixFloat = list[list[float]]
WordList = list[int]


# Free groups


class FiniteIndexResult(BaseModel):
    """Free basis of a finite-index subgroup of the rank-2 free group."""

    rank: int = Field(description="Rank k of the subgroup")
    generators: list[WordList] = Field(description="Basis words c_1..c_k over {a, b}")
    generator_names: list[str] = Field(default_factory=list)
    p: int = Field(description="Exponent in c_3 = b a^p b^-1")
    index: int = Field(description="Index of the subgroup (number of sheets)")
    coset_index: int | None = Field(
        default=None, description="Index recomputed by coset enumeration"
    )
    members_verified: bool = Field(
        default=False, description="Each generator traced to a closed loop"
    )
    nielsen_schreier: bool = Field(
        default=False, description="rank == 1 + index * (2 - 1)"
    )
    tree: list[str] = Field(
        default_factory=list, description="Spanning tree edges used for extraction"
    )


# Growth profiles


class GrowthProfile(BaseModel):
    """Per-length minima of a singular-value functional over reduced words."""

    kind: Literal["qi", "anosov_gap"]
    max_length: int
    lengths: list[int]
    minima: list[float]
    witnesses: list[WordList]
    words_per_length: list[int]
    slope: float = Field(description="Least-squares slope over lengths 2..N")
    intercept: float
    exhaustive: bool = Field(
        default=True, description="False when produced by sample mode"
    )


class ScanResult(BaseModel):
    """Words whose image is unipotent and not the identity."""

    max_length: int
    words_checked: int
    witnesses: list[WordList] = Field(default_factory=list)
    images: list[MatrixStr] = Field(default_factory=list)

    @property
    def found(self) -> bool:
        return bool(self.witnesses)


# Suspensions


class LambdaTriple(BaseModel):
    """Eigenvalue moduli on the invariant plane and the transverse character."""

    lambda1: float
    lambda2: float
    lambda_perp: RatStr | float = Field(
        description="Exact for rational multipliers, float on scaled overlays"
    )


class LahnResult(BaseModel):
    """Infimum of log lambda_u(rho_P(w)) / |phi(w)| over a finite ball.

    inf_ratio and witness are None when phi vanishes on every word of the ball;
    the infimum over no words is +inf.
    """

    inf_ratio: float | None = None
    witness: WordList | None = None
    max_length: int
    verdict: Literal["anosov_consistent", "non_anosov_evidence"]


class HyperbolicityResult(BaseModel):
    """Exhaustive trace test on plane parts."""

    passed: bool
    max_length: int
    words_checked: int
    witness: WordList | None = None
    witness_trace: RatStr | None = None


class TauStep(BaseModel):
    """One substitution (a, b) -> (b, a b^-p) of the tau iteration."""

    p: int
    a: WordList
    b: WordList
    tau_a: RatStr
    tau_b: RatStr
    abelian_det: int


class TauResult(BaseModel):
    """History and final pair of a tau iteration."""

    iterations: int
    steps: list[TauStep]
    final_a: WordList
    final_b: WordList
    final_class_b: str
    tau_trace: list[RatStr] = Field(description="tau of the b slot after each step")
    cumulative_det: int


class BalanceResult(BaseModel):
    """Scaling that balances lambda_1 against lambda_perp on a^m b^n."""

    epsilon: float
    m: int
    n: int
    ratio_before: float
    residual: float = Field(description="|log(lambda_1 / lambda_perp)| after scaling")
    lambda1: float
    base_line: list[float] = Field(description="Eigenline L_0 of lambda_2")
    cs_residual: float = Field(description="Distance of L_0 from E^cs(rho'(a))")


class CheckItem(BaseModel):
    """A single named check inside a report."""

    name: str
    passed: bool
    detail: str = ""
    margin: float | None = None


class EvidenceReport(BaseModel):
    """Finite-depth evidence bundle; never a proof."""

    subject: str
    checks: list[CheckItem]
    passed: bool
    witness: WordList | None = None


# Ping-pong


class ConeBall(BaseModel):
    """Open chordal ball in the projective plane."""

    center: list[float]
    radius: float


class FabricaqiReport(BaseModel):
    """Hypothesis checks for the power construction."""

    m: int
    mu: RatStr
    plane_normal: list[RatStr]
    base_line: list[RatStr]
    checks: list[CheckItem]
    passed: bool


class PreparedNbhdReport(BaseModel):
    """Arcs in P_0 permuted by g with exact period m."""

    m: int
    mu: RatStr
    arcs: list[tuple[float, float]] = Field(description="Arc endpoints as angles")
    centers: list[list[float]]
    radius: float
    epsilon0: float = Field(description="Clearance from E^cs and E^cu traces")
    exact: bool


class Certificate(BaseModel):
    """Cones, expansion constant and margins verifying condition (*)."""

    labels: list[str]
    matrices: list[MatrixStr]
    cones: list[list[ConeBall]]
    expansion: float
    base_line: list[float]
    net_resolution: float
    lipschitz: list[float]
    margins: dict[str, float]
    exact_containments: list[str] = Field(
        default_factory=list,
        description="Containments closed by the invariant-ball argument instead of nets",
    )


class CertificateResult(BaseModel):
    """Either a certificate or the failing condition with a witness."""

    success: bool
    certificate: Certificate | None = None
    failed_condition: str | None = None
    witness: list[float] | None = None
    message: str | None = None


class PowerSearchResult(BaseModel):
    """Least admissible power with its certificate."""

    n: int
    epsilon: float
    certificate: Certificate
    trace: list[dict[str, Any]] = Field(default_factory=list)


class QIBoundResult(BaseModel):
    """Exhaustive check of s_1 >= c^(|w|-1)."""

    passed: bool
    max_length: int
    words_checked: int
    worst_ratio: float
    violation: WordList | None = None


# Perturbations


class IncidenceResult(BaseModel):
    """Root of the incidence functional along a deformation path."""

    t0: float
    p: int
    theta: float
    steps: int
    trace: list[float] = Field(description="min |theta| of the bracket per step")
    skipped: dict[int, list[float]] = Field(
        default_factory=dict, description="Endpoint values of one-signed p"
    )


class UnipotentWitness(BaseModel):
    """A word whose perturbed image is (numerically) unipotent."""

    word: WordList
    omega: WordList
    q: int
    p: int
    t: float
    images: list[MatrixFloat] = Field(description="Generator images after perturbation")
    matrix: MatrixFloat
    residual: float
    charpoly_distance: float
    accepted: bool
    exact_confirmed: bool = False
    parameters: dict[str, Any] = Field(default_factory=dict)


class GenericityResult(BaseModel):
    """Pre-perturbation margins."""

    changed: bool
    center_margin: float
    stable_margin: float
    drift: float
    perturbation: float = Field(default=0.0, description="Relative change of the a-image")


class DestabilizeResult(BaseModel):
    """Two-step destabilization of a finite-index restriction."""

    witness: UnipotentWitness
    gamma: WordList
    approach: float
    correction: float
    q: int


# Flags


class CoverageReport(BaseModel):
    """Fraction of a flag grid within delta of a sample."""

    eta: float
    delta: float
    grid_size: int
    sample_size: int
    fraction: float = Field(ge=0.0, le=1.0)
    lengths: list[int] = Field(default_factory=list)
    fractions: list[float] = Field(
        default_factory=list, description="Coverage at each word length in lengths"
    )


# Catalog


class CatalogEntryModel(BaseModel):
    """Serialized catalog entry."""

    name: str
    kind: Literal["representation", "suspension"]
    data: dict[str, Any]
    expected: list[str]
    provenance: str


# Command line


class RunEnvelope(BaseModel):
    """Wrapper embedding version, seed and configuration in every output."""

    tool: str = "anosov-forge"
    version: str
    command: str
    seed: int
    config: dict[str, Any]
    success: bool
    result: Any = None
    message: str | None = None


class CommandSummary(BaseModel):
    """Summary of an available command."""

    name: str
    description: str
    category: str


class CommandSpec(BaseModel):
    """Full specification for a command."""

    name: str
    description: str
    category: str
    parameters: dict[str, Any]
    examples: list[str] = Field(default_factory=list)
