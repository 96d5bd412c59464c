"""Seeded property checks for kernel metrics, geodesics and means.

Each catalog entry is a handler that draws its samples from a generator owned by
the check, records measurements per named criterion, and keeps the worst value
of every criterion together with the inputs that produced it. A check passes
when every criterion stays within its tolerance.
"""

import asyncio
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from spdgeo.core.config import numerics, settings
from spdgeo.core.errors import (
    DomainError,
    NumericalFailureError,
    PreconditionError,
    SpdGeoError,
    UnknownCheckError,
)
from spdgeo.core.matcore import (
    HermitianMatrix,
    ScalarMap,
    SpdMatrix,
    apply_scalar_function,
    commutator,
    i_commutator,
    random_hermitian,
    random_spd,
    random_unitary,
    spectrum_of,
    spd_function,
    ui_norm,
)
from spdgeo.models.schemas import (
    CheckReport,
    CheckSpec,
    DominanceVerdict,
    GeodesicFamily,
    KernelSpec,
    MatrixFile,
    MeanSpec,
    NormSpec,
    PathSearchConfig,
    StandardFunctionSpec,
)
from spdgeo.services.geodesic_service import (
    Curve,
    closed_form_distance,
    curve_length,
    directional_distance_slope,
    family_kernel,
    fisher_rao_distance,
    numeric_shortest_distance,
)
from spdgeo.services.mean_service import (
    KernelLike,
    default_grid,
    kernel_matrix,
    loewner_search,
    mean_eval_array,
    mean_scalar_map,
    pointwise_dominates,
    ratio_positive_definite,
)
from spdgeo.services.metric_service import (
    kernel_speed,
    measure_wyd_constant,
    metric_eval,
    skew_information,
    tangent_split,
    wyd_direct,
    wyd_metric_ratio,
)

logger = logging.getLogger(__name__)

PATH_SPREAD = 0.5
PATH_SAMPLE_CAP = 10
STRICT_GAP = 1e-8
MAX_DRAWS = 100

THETA_PULLBACK = (-2.0, 0.0, 1.0, 2.0, 3.0, 4.0)
ALPHA_LADDER = tuple(2.0 ** -k for k in range(-1, 7))
PROP54_THETAS = (-4.0, -2.0, 0.0, 1.0, 1.9, 2.1, 3.0, 4.0, 6.0)
WYD_PARAMETERS = tuple(np.round(np.arange(1, 11) * 0.05, 2))

# mean -> Stolarsky parameter where M^theta and phi_theta swap order
CROSSOVERS: Dict[str, Tuple[MeanSpec, float]] = {
    "arithmetic": (MeanSpec.arithmetic(), -2.0),
    "root": (MeanSpec.root(), 1.0),
    "logarithmic": (MeanSpec.logarithmic(), 2.0),
    "geometric": (MeanSpec.geometric(), 4.0),
    "harmonic": (MeanSpec.harmonic(), 10.0),
}
TABLE_THETAS = (-3.0, -2.0, -1.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0)

FINSLER_NORMS = (NormSpec.schatten(1.0), NormSpec.operator(), NormSpec.kyfan(2))

# smaller mean first: (M1 / M2)(e^t, 1) is a positive definite function
ORDERED_MEANS = (
    (MeanSpec.harmonic(), MeanSpec.geometric()),
    (MeanSpec.geometric(), MeanSpec.logarithmic()),
    (MeanSpec.logarithmic(), MeanSpec.root()),
    (MeanSpec.root(), MeanSpec.arithmetic()),
    (MeanSpec.alpha(2.0), MeanSpec.alpha(1.0)),
    (MeanSpec.alpha(2.0), MeanSpec.alpha(0.5)),
    (MeanSpec.alpha(1.0), MeanSpec.alpha(0.5)),
    (MeanSpec.alpha(1.0), MeanSpec.alpha(0.25)),
    (MeanSpec.alpha(0.5), MeanSpec.alpha(0.25)),
)

COMMUTING_MEANS = (
    MeanSpec.harmonic(),
    MeanSpec.geometric(),
    MeanSpec.logarithmic(),
    MeanSpec.root(),
    MeanSpec.arithmetic(),
)


@dataclass
class Measurement:
    """Worst value seen for one criterion and the inputs behind it."""
    criterion: str
    value: float
    witness: Dict[str, Any] = field(default_factory=dict)


@dataclass
class CheckDefinition:
    """Catalog entry."""
    name: str
    description: str
    tolerances: Dict[str, float]
    handler: Callable[["CheckContext"], None]
    sample_cap: Optional[int] = None


def _serialize(value: Any) -> Any:
    if isinstance(value, HermitianMatrix):
        value = value.data
    if isinstance(value, np.ndarray):
        if value.ndim == 2 and value.shape[0] == value.shape[1]:
            return MatrixFile.from_array(value).model_dump()
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, BaseModel):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_serialize(v) for v in value]
    return value


def _log(A: SpdMatrix) -> np.ndarray:
    return apply_scalar_function(A, ScalarMap.log()).data


def _relative(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), np.finfo(float).tiny)


class CheckContext:
    """Generator, sampling helpers and the measurement ledger of one check run."""

    def __init__(self, spec: CheckSpec, index: int, tolerances: Dict[str, float], sample_cap: Optional[int]):
        self.spec = spec
        self.n = spec.dimension
        self.samples = spec.samples if sample_cap is None else min(spec.samples, sample_cap)
        self.rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(index,)))
        self.tolerances = tolerances
        self.measurements: Dict[str, Measurement] = {}
        self.info: Dict[str, Any] = {}

    def record(self, criterion: str, value: float, **witness: Any) -> None:
        if criterion not in self.tolerances:
            raise KeyError(f"criterion {criterion!r} has no tolerance")
        value = float(value)
        if np.isnan(value):
            value = float("inf")
        current = self.measurements.get(criterion)
        if current is None or value > current.value:
            self.measurements[criterion] = Measurement(criterion, value, witness)

    def spd(self, spread: float = numerics.SAMPLE_LOG_SPREAD, real: bool = False) -> SpdMatrix:
        return random_spd(self.n, self.rng, spread, complex_entries=not real)

    def hermitian(self, scale: float = 1.0, real: bool = False) -> HermitianMatrix:
        return random_hermitian(self.n, self.rng, scale, complex_entries=not real)

    def noncommuting_pair(
        self, spread: float = numerics.SAMPLE_LOG_SPREAD, real: bool = False
    ) -> Tuple[SpdMatrix, SpdMatrix]:
        for _ in range(MAX_DRAWS):
            A, B = self.spd(spread, real), self.spd(spread, real)
            if np.linalg.norm(commutator(A, B)) >= numerics.COMMUTATOR_FLOOR:
                return A, B
        raise NumericalFailureError(f"No non-commuting pair in {MAX_DRAWS} draws", dimension=self.n)

    def commuting_pair(
        self, spread: float = numerics.SAMPLE_LOG_SPREAD, real: bool = False
    ) -> Tuple[SpdMatrix, SpdMatrix]:
        frame = random_unitary(self.n, self.rng, complex_entries=not real)
        values = np.exp(self.rng.uniform(-spread, spread, size=(2, self.n)))
        return SpdMatrix.from_spectrum(values[0], frame), SpdMatrix.from_spectrum(values[1], frame)

    def path_config(self) -> PathSearchConfig:
        """Coarse-to-fine search ending at 32 segments."""
        return PathSearchConfig(
            segments=4,
            refinements=3,
            max_iterations=100,
            step_tol=1e-8,
            seed=int(self.rng.integers(2**32)),
        )


def _table_relation(name: str, theta: float) -> Optional[str]:
    """Order of delta_{M^theta} against delta_{phi_theta}: 'ge', 'le', 'eq' or None."""
    _, crossover = CROSSOVERS[name]
    if theta == 0:
        return "eq"
    if name == "harmonic" and theta > crossover:
        return None
    if theta == crossover and name != "harmonic":
        return "eq"
    if min(0.0, crossover) < theta <= max(0.0, crossover):
        return "ge"
    return "le"


def _speed_lengths(phi: KernelLike, curves: Sequence[Curve], norm: Optional[NormSpec] = None) -> List[float]:
    return [curve_length(phi, curve, norm) for curve in curves]


class VerificationService:
    """Named, seeded checks over the metric library."""

    def __init__(self):
        self.checks: Dict[str, CheckDefinition] = {}
        self._register_checks()

    def _register_checks(self):
        """Register the catalog in its reporting order."""
        definitions = [
            CheckDefinition(
                name="lem1_1_tangent_split",
                description="Tangent vectors split orthogonally into a part commuting with D and i[D, K]",
                tolerances={
                    "reconstruction": 1e-10,
                    "commutes": 1e-9,
                    "generator": 1e-9,
                    "orthogonality": 1e-9,
                    "commutator_identity": 1e-9,
                },
                handler=self._check_tangent_split,
            ),
            CheckDefinition(
                name="thm2_1_pullback",
                description="phi_theta lengths equal Euclidean lengths of A^a / a curves",
                tolerances={"integrand": 1e-7, "closed_form": 1e-7},
                handler=self._check_pullback,
            ),
            CheckDefinition(
                name="lem2_2_monotone",
                description="Stolarsky means decrease in theta with max/min limits",
                tolerances={"strict_decrease": 0.0, "limits": 1e-2},
                handler=self._check_stolarsky_monotone,
            ),
            CheckDefinition(
                name="prop2_3_reflection",
                description="A -> A^-1 maps phi_theta lengths to phi_(4-theta) lengths",
                tolerances={"reflection": 1e-7, "self_isometry": 1e-7},
                handler=self._check_reflection,
            ),
            CheckDefinition(
                name="rem2_4_power",
                description="Power maps c A^p are isometries between phi_theta metrics",
                tolerances={"power_isometry": 1e-6, "log_homothety": 1e-6},
                handler=self._check_power_maps,
            ),
            CheckDefinition(
                name="lem2_5_crossover",
                description="M_10 stays above the harmonic mean and M_theta dips below it near 1 for theta > 10",
                tolerances={"above_harmonic": 0.0, "below_harmonic": 0.0},
                handler=self._check_harmonic_crossover,
            ),
            CheckDefinition(
                name="thm3_1_completeness",
                description="Ray lengths along tI match the scalar antiderivative of t^(-theta/2)",
                tolerances={"ray_integral": 1e-8},
                handler=self._check_completeness,
            ),
            CheckDefinition(
                name="lem3_2_distance_to_identity",
                description="Numeric distance from A to I for M^2 kernels equals ||log A||",
                tolerances={"excess": 1e-3, "undershoot": 1e-9},
                handler=self._check_distance_to_identity,
                sample_cap=4,
            ),
            CheckDefinition(
                name="thm3_3_alpha",
                description="Lengths of the alpha-family geodesics equal their closed forms",
                tolerances={"closed_form": 1e-7},
                handler=self._check_alpha_closed_form,
            ),
            CheckDefinition(
                name="lie_trotter",
                description="Alpha-family distances decrease to the log-Euclidean distance as alpha shrinks",
                tolerances={"monotone": 1e-10, "limit_gap": 1e-3, "generalized_emi": 1e-10},
                handler=self._check_lie_trotter,
                sample_cap=50,
            ),
            CheckDefinition(
                name="thm4_1_equivalence",
                description="Pointwise kernel order implies reversed length and distance order",
                tolerances={"pointwise_order": 0.0, "length_order": 1e-10, "distance_order": 1e-10},
                handler=self._check_order_equivalence,
                sample_cap=100,
            ),
            CheckDefinition(
                name="lem4_2_slope",
                description="delta(D, D + eps H) / eps tends to the metric norm of H",
                tolerances={"slope": 1e-3},
                handler=self._check_slope,
                sample_cap=PATH_SAMPLE_CAP,
            ),
            CheckDefinition(
                name="ex4_7_table",
                description="Distances of M^theta against phi_theta for five means, EMI and the theta = 1 chain",
                tolerances={
                    "inequality": 1e-10,
                    "equality": 1e-7,
                    "strict_gap_deficit": 0.0,
                    "emi": 1e-10,
                    "chain_order": 1e-10,
                },
                handler=self._check_distance_table,
            ),
            CheckDefinition(
                name="thm4_8_commuting",
                description="For commuting endpoints every operator monotone M gives 2||A^1/2 - B^1/2||",
                tolerances={
                    "closed_form": 1e-3,
                    "undershoot": 1e-9,
                    "independence": 2e-3,
                    "operator_monotone": settings.pd_tol,
                },
                handler=self._check_commuting,
                sample_cap=PATH_SAMPLE_CAP,
            ),
            CheckDefinition(
                name="prop5_2_pd",
                description="Positive definite mean ratios and the Finsler length order they imply",
                tolerances={"ratio_pd": settings.pd_tol, "reverse_detected": 0.0, "norm_length_order": 1e-10},
                handler=self._check_ratio_pd,
                sample_cap=100,
            ),
            CheckDefinition(
                name="prop5_4_theta_norms",
                description="Finsler phi_theta distances decrease up to theta = 2 and increase after",
                tolerances={"monotone": 1e-10, "geometric_order": 1e-10},
                handler=self._check_theta_norms,
            ),
            CheckDefinition(
                name="skew_ordering",
                description="WYD skew information increases in p on (0, 1/2]",
                tolerances={"monotone": 1e-10, "wyd_agreement": 1e-9, "wyd_constancy": 1e-9},
                handler=self._check_skew_ordering,
            ),
        ]
        for definition in definitions:
            self.checks[definition.name] = definition

    @property
    def catalog(self) -> List[str]:
        return list(self.checks)

    def run_check(self, spec: CheckSpec) -> CheckReport:
        """Run one catalog check; deterministic in (seed, dimension, samples)."""
        definition = self.checks.get(spec.name)
        if definition is None:
            raise UnknownCheckError(f"Unknown check: {spec.name!r}", check=spec.name, available=self.catalog)
        unknown = sorted(set(spec.tolerances) - set(definition.tolerances))
        if unknown:
            raise DomainError(f"Check {spec.name} has no criteria named {unknown}", criteria=unknown)
        tolerances = {**definition.tolerances, **spec.tolerances}
        tolerances["error"] = 0.0

        ctx = CheckContext(spec, self.catalog.index(spec.name), tolerances, definition.sample_cap)
        started = time.perf_counter()
        try:
            definition.handler(ctx)
        except SpdGeoError as e:
            logger.error(f"Check {spec.name} raised {type(e).__name__}: {e}")
            ctx.info["error"] = e.to_dict()
            ctx.record("error", float("inf"))
        elapsed = time.perf_counter() - started

        report = self._build_report(spec, ctx, tolerances, elapsed)
        logger.info(
            f"Check {spec.name}: {'pass' if report.passed else 'FAIL'} "
            f"({report.criterion} = {report.worst_margin:.3e}, tol {report.tolerance:.1e}) in {elapsed:.2f}s"
        )
        return report

    @staticmethod
    def _build_report(spec: CheckSpec, ctx: CheckContext, tolerances: Dict[str, float], elapsed: float) -> CheckReport:
        if not ctx.measurements:
            raise NumericalFailureError(f"Check {spec.name} recorded no measurements")
        worst = max(ctx.measurements.values(), key=lambda m: m.value - tolerances[m.criterion])
        passed = all(m.value <= tolerances[m.criterion] for m in ctx.measurements.values())
        reported = {k: v for k, v in tolerances.items() if k != "error"}
        return CheckReport(
            name=spec.name,
            passed=passed,
            worst_margin=worst.value,
            criterion=worst.criterion,
            tolerance=tolerances[worst.criterion],
            witness={key: _serialize(value) for key, value in worst.witness.items()},
            elapsed=elapsed,
            seed=spec.seed,
            dimension=spec.dimension,
            samples=ctx.samples,
            tolerances=reported,
            info={key: _serialize(value) for key, value in ctx.info.items()},
        )

    async def run_all_async(self, seed: int, dimension: int, samples: int = 200) -> List[CheckReport]:
        """Run the catalog on worker threads; reports come back in catalog order."""
        if dimension < 2:
            raise PreconditionError(f"verification needs dimension >= 2, got {dimension}", dimension=dimension)
        specs = [CheckSpec(name=name, seed=seed, dimension=dimension, samples=samples) for name in self.catalog]
        semaphore = asyncio.Semaphore(settings.threads or os.cpu_count() or 1)

        async def run(spec: CheckSpec) -> CheckReport:
            async with semaphore:
                return await asyncio.to_thread(self.run_check, spec)

        reports = list(await asyncio.gather(*(run(spec) for spec in specs)))
        failed = [report.name for report in reports if not report.passed]
        if failed:
            logger.warning(f"Verification failed for {len(failed)} checks: {', '.join(failed)}")
        else:
            logger.info(f"All {len(reports)} checks passed (seed {seed}, dimension {dimension})")
        return reports

    def run_all(self, seed: int, dimension: int, samples: int = 200) -> List[CheckReport]:
        return asyncio.run(self.run_all_async(seed, dimension, samples))

    # Tangent space

    def _check_tangent_split(self, ctx: CheckContext) -> None:
        kernels = (
            KernelSpec.of(MeanSpec.geometric(), 2.0),
            KernelSpec.of(MeanSpec.logarithmic(), 1.0),
            KernelSpec.stolarsky(3.0),
        )
        for _ in range(ctx.samples):
            D, H, K = ctx.spd(), ctx.hermitian(), ctx.hermitian()
            split = tangent_split(D, H)
            h_norm = np.linalg.norm(H.data)
            ctx.record(
                "reconstruction",
                np.linalg.norm(split.commuting_part.data + split.commutator_part.data - H.data) / h_norm,
                D=D, H=H,
            )
            ctx.record(
                "commutes",
                np.linalg.norm(commutator(D, split.commuting_part)) / (np.linalg.norm(D.data) * h_norm),
                D=D, H=H,
            )
            ctx.record(
                "generator",
                np.linalg.norm(i_commutator(D, split.generator).data - split.commutator_part.data) / h_norm,
                D=D, H=H,
            )

            spectrum = spectrum_of(D)
            lam = spectrum.eigenvalues
            rotated = spectrum.to_eigenframe(K.data)
            tangent = i_commutator(D, K)
            for phi in kernels:
                full = metric_eval(phi, D, H, H)
                cross = metric_eval(phi, D, split.commuting_part, split.commutator_part)
                ctx.record("orthogonality", abs(cross) / full, D=D, H=H, kernel=phi)

                expected = float(np.sum((lam[:, None] - lam[None, :]) ** 2 / kernel_matrix(phi, lam) * np.abs(rotated) ** 2))
                if expected > 0:
                    ctx.record(
                        "commutator_identity",
                        _relative(metric_eval(phi, D, tangent, tangent), expected),
                        D=D, K=K, kernel=phi,
                    )

    # Pull-back structure

    def _check_pullback(self, ctx: CheckContext) -> None:
        ts = np.linspace(0.0, 1.0, 17)
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            base = Curve.closed_form(GeodesicFamily.alpha(1.0), A, B)
            points, tangents = base.sample(ts)
            for theta in THETA_PULLBACK:
                phi = KernelSpec.stolarsky(theta)
                a = (2 - theta) / 2
                if theta == 2:
                    euclidean = Curve.mapped(base, ScalarMap.log())
                else:
                    euclidean = Curve.mapped(base, ScalarMap.power(a), scale=1 / a)
                _, images = euclidean.sample(ts)
                speeds = kernel_speed(phi, points, tangents, NormSpec.hs())
                flat = np.linalg.norm(images, axis=(-2, -1))
                ctx.record("integrand", float(np.max(np.abs(speeds - flat) / flat)), A=A, B=B, theta=theta)

                geodesic = Curve.closed_form(GeodesicFamily.theta(theta), A, B)
                length = curve_length(phi, geodesic, NormSpec.hs(), quadrature_points=256)
                distance = closed_form_distance(GeodesicFamily.theta(theta), NormSpec.hs(), A, B)
                ctx.record("closed_form", _relative(length, distance), A=A, B=B, theta=theta)

    def _check_stolarsky_monotone(self, ctx: CheckContext) -> None:
        thetas = np.linspace(-20.0, 20.0, 161)
        count = min(ctx.samples, 64)
        u = ctx.rng.choice([-1.0, 1.0], size=count) * ctx.rng.uniform(0.05, 2.0, size=count)
        x, ones = np.exp(u), np.ones(count)
        values = np.stack([mean_eval_array(MeanSpec.stolarsky(theta), x, ones) for theta in thetas])
        increase = (values[1:] - values[:-1]) / values[:-1]
        k, j = np.unravel_index(np.argmax(increase), increase.shape)
        ctx.record("strict_decrease", increase[k, j], x=x[j], theta_low=thetas[k], theta_high=thetas[k + 1])

        for theta, limit in ((-2000.0, np.maximum(x, 1.0)), (2000.0, np.minimum(x, 1.0))):
            near = mean_eval_array(MeanSpec.stolarsky(theta), x, ones)
            deviation = np.abs(near - limit) / limit
            j = int(np.argmax(deviation))
            ctx.record("limits", deviation[j], x=x[j], theta=theta)

    def _check_reflection(self, ctx: CheckContext) -> None:
        inverse = ScalarMap.power(-1.0)
        squares = (MeanSpec.arithmetic(), MeanSpec.logarithmic(), MeanSpec.harmonic(), MeanSpec.root())
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            for base in (
                Curve.closed_form(GeodesicFamily.alpha(1.0), A, B),
                Curve.closed_form(GeodesicFamily.theta(0.0), A, B),
            ):
                reflected = Curve.mapped(base, inverse)
                for theta in (0.0, 1.0, 2.0, 3.0):
                    length = curve_length(KernelSpec.stolarsky(theta), base)
                    image = curve_length(KernelSpec.stolarsky(4 - theta), reflected)
                    ctx.record("reflection", _relative(image, length), A=A, B=B, theta=theta)
                for mean in squares:
                    phi = KernelSpec.of(mean, 2.0)
                    ctx.record(
                        "self_isometry",
                        _relative(curve_length(phi, reflected), curve_length(phi, base)),
                        A=A, B=B, kernel=phi,
                    )

    def _check_power_maps(self, ctx: CheckContext) -> None:
        pairs = ((0.0, 4.0), (1.0, 3.0), (0.0, 1.0), (-2.0, 3.0))
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            for base in (
                Curve.closed_form(GeodesicFamily.alpha(1.0), A, B),
                Curve.closed_form(GeodesicFamily.theta(0.0), A, B),
            ):
                for theta, target in pairs:
                    p = (2 - theta) / (2 - target)
                    c = abs((2 - target) / (2 - theta)) ** (2 / (2 - target))
                    image = Curve.mapped(base, ScalarMap.power(p), scale=c)
                    ctx.record(
                        "power_isometry",
                        _relative(
                            curve_length(KernelSpec.stolarsky(target), image),
                            curve_length(KernelSpec.stolarsky(theta), base),
                        ),
                        A=A, B=B, theta=theta, target=target,
                    )
                log_length = curve_length(KernelSpec.stolarsky(2.0), base)
                for alpha in (0.5, 2.0, -1.0):
                    image = Curve.mapped(base, ScalarMap.power(alpha))
                    ctx.record(
                        "log_homothety",
                        _relative(curve_length(KernelSpec.stolarsky(2.0), image), abs(alpha) * log_length),
                        A=A, B=B, alpha=alpha,
                    )

    def _check_harmonic_crossover(self, ctx: CheckContext) -> None:
        grid = default_grid()
        grid = grid[grid != 1.0]
        ones = np.ones_like(grid)
        harmonic = mean_eval_array(MeanSpec.harmonic(), grid, ones)
        stolarsky = mean_eval_array(MeanSpec.stolarsky(10.0), grid, ones)
        gap = (harmonic - stolarsky) / harmonic
        j = int(np.argmax(gap))
        ctx.record("above_harmonic", gap[j], x=grid[j], theta=10.0)

        near = np.exp(np.array([-0.05, -0.01, 0.01, 0.05]))
        scan = np.exp(np.geomspace(1e-3, 20.0, 2000))
        crossings: Dict[str, Optional[float]] = {}
        for theta in (12.0, 14.0, 20.0):
            ones = np.ones_like(near)
            excess = (mean_eval_array(MeanSpec.stolarsky(theta), near, ones) - mean_eval_array(MeanSpec.harmonic(), near, ones))
            excess = excess / mean_eval_array(MeanSpec.harmonic(), near, ones)
            j = int(np.argmax(excess))
            ctx.record("below_harmonic", excess[j], x=near[j], theta=theta)

            ones = np.ones_like(scan)
            above = mean_eval_array(MeanSpec.stolarsky(theta), scan, ones) >= mean_eval_array(MeanSpec.harmonic(), scan, ones)
            crossings[f"{theta:g}"] = float(scan[np.argmax(above)] - 1) if np.any(above) else None
        ctx.info["crossover_delta"] = crossings

    # Completeness and closed forms

    def _check_completeness(self, ctx: CheckContext) -> None:
        n = ctx.n
        identity = np.eye(n)
        means = (MeanSpec.geometric(), MeanSpec.arithmetic(), MeanSpec.logarithmic())
        rays = {
            -2.0: (1e-6, 1.0), 0.0: (1e-6, 1.0), 1.0: (1e-6, 1.0),
            2.0: (1e-6, 1.0),
            3.0: (1.0, 1e6), 4.0: (1.0, 1e6), 6.0: (1.0, 1e6),
        }
        limits = {}
        for theta, (low, high) in rays.items():
            nodes = [SpdMatrix(t * identity) for t in np.geomspace(low, high, 121)]
            ray = Curve.polyline(nodes)
            if theta == 2:
                expected = np.sqrt(n) * np.log(high / low)
            else:
                power = 1 - theta / 2
                expected = np.sqrt(n) * (high**power - low**power) / power
                limits[f"{theta:g}"] = float(np.sqrt(n) / abs(power))
            for mean in means:
                length = curve_length(KernelSpec.of(mean, theta), ray)
                ctx.record("ray_integral", _relative(length, expected), theta=theta, mean=mean, low=low, high=high)
        ctx.info["finite_ray_lengths"] = limits

    def _check_distance_to_identity(self, ctx: CheckContext) -> None:
        identity = SpdMatrix(np.eye(ctx.n))
        means = (MeanSpec.geometric(), MeanSpec.logarithmic(), MeanSpec.arithmetic())
        for _ in range(ctx.samples):
            A = ctx.spd(spread=1.0, real=True)
            exact = float(np.linalg.norm(np.log(A.spectrum.eigenvalues)))
            for mean in means:
                phi = KernelSpec.of(mean, 2.0)
                result = numeric_shortest_distance(phi, A, identity, ctx.path_config())
                ctx.record("excess", (result.distance - exact) / exact, A=A, kernel=phi)
                ctx.record("undershoot", (exact - result.distance) / exact, A=A, kernel=phi)

    def _check_alpha_closed_form(self, ctx: CheckContext) -> None:
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            for alpha in (2.0, 1.0, 0.5, 0.25):
                family = GeodesicFamily.alpha(alpha)
                length = curve_length(KernelSpec.alpha(alpha), Curve.closed_form(family, A, B), quadrature_points=256)
                distance = closed_form_distance(family, NormSpec.hs(), A, B)
                ctx.record("closed_form", _relative(length, distance), A=A, B=B, alpha=alpha)

    def _check_lie_trotter(self, ctx: CheckContext) -> None:
        norms = (NormSpec.hs(),) + FINSLER_NORMS
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair(spread=1.0)
            difference = _log(A) - _log(B)
            for norm in norms:
                floor = ui_norm(difference, norm)
                distances = [closed_form_distance(GeodesicFamily.alpha(a), norm, A, B) for a in ALPHA_LADDER]
                for k in range(len(distances) - 1):
                    ctx.record(
                        "monotone",
                        (distances[k + 1] - distances[k]) / distances[k],
                        A=A, B=B, norm=norm, alpha=ALPHA_LADDER[k + 1],
                    )
                for alpha, distance in zip(ALPHA_LADDER, distances):
                    ctx.record("generalized_emi", (floor - distance) / floor, A=A, B=B, norm=norm, alpha=alpha)
                if norm == NormSpec.hs():
                    ctx.record("limit_gap", _relative(distances[-1], floor), A=A, B=B)

    # Comparison of metrics

    def _check_order_equivalence(self, ctx: CheckContext) -> None:
        # (phi1, phi2) with phi1 <= phi2 pointwise
        length_pairs: List[Tuple[KernelSpec, KernelSpec]] = []
        for theta in (1.0, 2.0):
            for small, large in ORDERED_MEANS[:4]:
                length_pairs.append((KernelSpec.of(small, theta), KernelSpec.of(large, theta)))
        for small, large in ORDERED_MEANS[:2]:
            length_pairs.append((KernelSpec.of(large, -1.0), KernelSpec.of(small, -1.0)))
        distance_pairs = (
            (GeodesicFamily.alpha(2.0), GeodesicFamily.alpha(1.0)),
            (GeodesicFamily.alpha(1.0), GeodesicFamily.theta(2.0)),
            (GeodesicFamily.alpha(0.5), GeodesicFamily.theta(2.0)),
            (GeodesicFamily.alpha(2.0), GeodesicFamily.alpha(0.25)),
        )
        for phi1, phi2 in length_pairs + [(family_kernel(f1), family_kernel(f2)) for f1, f2 in distance_pairs]:
            verdict = pointwise_dominates(phi1, phi2)
            ctx.record(
                "pointwise_order",
                0.0 if verdict in (DominanceVerdict.DOMINATED, DominanceVerdict.EQUAL) else 1.0,
                kernel1=phi1, kernel2=phi2, verdict=verdict.value,
            )

        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            C = ctx.spd()
            curves = (
                Curve.closed_form(GeodesicFamily.alpha(1.0), A, B),
                Curve.closed_form(GeodesicFamily.theta(0.0), A, B),
                Curve.polyline([A, C, B]),
            )
            for phi1, phi2 in length_pairs:
                for curve, l1, l2 in zip(curves, _speed_lengths(phi1, curves), _speed_lengths(phi2, curves)):
                    ctx.record("length_order", (l2 - l1) / l2, A=A, B=B, C=C, kernel1=phi1, kernel2=phi2)
            for f1, f2 in distance_pairs:
                d1 = closed_form_distance(f1, NormSpec.hs(), A, B)
                d2 = closed_form_distance(f2, NormSpec.hs(), A, B)
                ctx.record("distance_order", (d2 - d1) / d2, A=A, B=B, family1=f1, family2=f2)
                # certified: delta_phi2 <= L_phi2(gamma_1) <= L_phi1(gamma_1) = delta_phi1
                along = curve_length(family_kernel(f2), Curve.closed_form(f1, A, B))
                ctx.record("length_order", (along - d1) / d1, A=A, B=B, family1=f1, family2=f2)

    def _check_slope(self, ctx: CheckContext) -> None:
        phi = KernelSpec.of(MeanSpec.geometric(), 2.0)
        ratios = []
        for _ in range(ctx.samples):
            D = ctx.spd(spread=1.0)
            H = ctx.hermitian(scale=1.0 / ctx.n)
            expected = float(np.sqrt(metric_eval(phi, D, H, H)))
            slope = directional_distance_slope(phi, D, H)
            ctx.record("slope", _relative(slope, expected), D=D, H=H)

            eps = 2.5e-3
            operator = numeric_shortest_distance(
                phi, D, D.data + eps * H.data, PathSearchConfig(segments=4), norm=NormSpec.operator()
            ).distance / eps
            reference = float(kernel_speed(phi, D.data[None], H.data[None], NormSpec.operator())[0])
            ratios.append(operator / reference)
        ctx.info["operator_slope_ratio"] = {"min": float(np.min(ratios)), "max": float(np.max(ratios))}

    def _check_distance_table(self, ctx: CheckContext) -> None:
        counts = {"ge": 0, "le": 0, "eq": 0}
        smallest_gap = float("inf")
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            fisher = Curve.closed_form(GeodesicFamily.fisher_rao(), A, B)
            for theta in TABLE_THETAS:
                family = GeodesicFamily.theta(theta)
                geodesic = Curve.closed_form(family, A, B)
                distance = closed_form_distance(family, NormSpec.hs(), A, B)
                for name, (mean, _) in CROSSOVERS.items():
                    relation = _table_relation(name, theta)
                    if relation is None:
                        continue
                    counts[relation] += 1
                    phi = KernelSpec.of(mean, theta)
                    along = curve_length(phi, geodesic)
                    if relation == "eq":
                        ctx.record("equality", _relative(along, distance), A=A, B=B, mean=name, theta=theta)
                        continue
                    gap = along - distance if relation == "ge" else distance - along
                    ctx.record("inequality", -gap / distance, A=A, B=B, mean=name, theta=theta)
                    ctx.record("strict_gap_deficit", STRICT_GAP - gap, A=A, B=B, mean=name, theta=theta)
                    smallest_gap = min(smallest_gap, gap)
                    if relation == "ge":
                        other = curve_length(phi, fisher)
                        ctx.record("inequality", (distance - other) / distance, A=A, B=B, mean=name, theta=theta)

            log_difference = ui_norm(_log(A) - _log(B), NormSpec.hs())
            ctx.record("emi", (log_difference - fisher_rao_distance(A, B)) / log_difference, A=A, B=B)

            root_distance = closed_form_distance(GeodesicFamily.commuting_sqrt(), NormSpec.hs(), A, B)
            root_geodesic = Curve.closed_form(GeodesicFamily.commuting_sqrt(), A, B)
            for curve in (root_geodesic, fisher):
                harmonic, geometric, logarithmic = (
                    curve_length(KernelSpec.of(mean, 1.0), curve)
                    for mean in (MeanSpec.harmonic(), MeanSpec.geometric(), MeanSpec.logarithmic())
                )
                worst = max(
                    (geometric - harmonic) / harmonic,
                    (logarithmic - geometric) / geometric,
                    (root_distance - logarithmic) / root_distance,
                )
                ctx.record("chain_order", worst, A=A, B=B)
            arithmetic = curve_length(KernelSpec.of(MeanSpec.arithmetic(), 1.0), root_geodesic)
            ctx.record("chain_order", (arithmetic - root_distance) / root_distance, A=A, B=B)
        ctx.info["relations"] = counts
        ctx.info["smallest_strict_gap"] = smallest_gap

    def _check_commuting(self, ctx: CheckContext) -> None:
        for mean in COMMUTING_MEANS:
            verdict = loewner_search(mean_scalar_map(mean), n_points=5, trials=20, seed=ctx.rng)
            ctx.record(
                "operator_monotone",
                max(0.0, -verdict.min_eigenvalue / verdict.max_eigenvalue),
                mean=mean, points=verdict.witness_points,
            )
        for _ in range(ctx.samples):
            A, B = ctx.commuting_pair(spread=PATH_SPREAD, real=True)
            exact = 2 * float(np.linalg.norm(spd_function(A, ScalarMap.power(0.5)).data - spd_function(B, ScalarMap.power(0.5)).data))
            cfg = ctx.path_config()
            distances = []
            for mean in COMMUTING_MEANS:
                distance = numeric_shortest_distance(KernelSpec.of(mean, 1.0), A, B, cfg).distance
                distances.append(distance)
                ctx.record("closed_form", (distance - exact) / exact, A=A, B=B, mean=mean)
                ctx.record("undershoot", (exact - distance) / exact, A=A, B=B, mean=mean)
            spread = (max(distances) - min(distances)) / min(distances)
            ctx.record("independence", spread, A=A, B=B)

    def _check_ratio_pd(self, ctx: CheckContext) -> None:
        points = np.sort(ctx.rng.uniform(-6.0, 6.0, size=24))
        trials = ctx.samples
        seed = int(ctx.rng.integers(2**32))
        for small, large in ORDERED_MEANS:
            for r in (1.0, 2.0):
                verdict = ratio_positive_definite(small, large, r, points, trials, seed=seed)
                ctx.record(
                    "ratio_pd",
                    max(0.0, -verdict.min_eigenvalue / verdict.max_eigenvalue),
                    small=small, large=large, r=r, points=verdict.witness_points,
                )
        reverse = ratio_positive_definite(MeanSpec.arithmetic(), MeanSpec.geometric(), 1.0, points, trials, seed=seed)
        ctx.record("reverse_detected", 0.0 if not reverse.passed else 1.0, points=points)
        ctx.info["reverse_witness"] = {
            "points": reverse.witness_points,
            "min_eigenvalue": reverse.min_eigenvalue,
            "trials": reverse.trials,
        }

        for _ in range(min(ctx.samples, 20)):
            A, B = ctx.noncommuting_pair()
            curves = (
                Curve.closed_form(GeodesicFamily.alpha(1.0), A, B),
                Curve.closed_form(GeodesicFamily.theta(0.0), A, B),
            )
            for small, large in ORDERED_MEANS:
                for theta in (2.0, 4.0):
                    phi1, phi2 = KernelSpec.of(small, theta), KernelSpec.of(large, theta)
                    for norm in FINSLER_NORMS:
                        for l1, l2 in zip(_speed_lengths(phi1, curves, norm), _speed_lengths(phi2, curves, norm)):
                            ctx.record("norm_length_order", (l2 - l1) / l2, A=A, B=B, kernel1=phi1, kernel2=phi2, norm=norm)

    def _check_theta_norms(self, ctx: CheckContext) -> None:
        norms = (NormSpec.schatten(1.0), NormSpec.hs(), NormSpec.operator(), NormSpec.kyfan(2))
        below = [t for t in PROP54_THETAS if t < 2]
        above = [t for t in PROP54_THETAS if t > 2]
        geometric_thetas = (-2.0, 1.0, 3.0, 6.0)
        for _ in range(ctx.samples):
            A, B = ctx.noncommuting_pair()
            fisher = Curve.closed_form(GeodesicFamily.fisher_rao(), A, B)
            for norm in norms:
                for side, sign in ((below, 1.0), (above, -1.0)):
                    values = [closed_form_distance(GeodesicFamily.theta(t), norm, A, B) for t in side]
                    for k in range(len(values) - 1):
                        ctx.record(
                            "monotone",
                            sign * (values[k + 1] - values[k]) / values[k],
                            A=A, B=B, norm=norm, theta=side[k + 1],
                        )
                for theta in geometric_thetas:
                    family = GeodesicFamily.theta(theta)
                    distance = closed_form_distance(family, norm, A, B)
                    phi = KernelSpec.of(MeanSpec.geometric(), theta)
                    along = curve_length(phi, Curve.closed_form(family, A, B), norm)
                    if 0 < theta < 4:
                        other = curve_length(phi, fisher, norm)
                        value = (distance - min(along, other)) / distance
                    else:
                        value = (along - distance) / distance
                    ctx.record("geometric_order", value, A=A, B=B, norm=norm, theta=theta)

    def _check_skew_ordering(self, ctx: CheckContext) -> None:
        constants = {float(p): measure_wyd_constant(float(p)) for p in WYD_PARAMETERS}
        ctx.info["wyd_constant"] = {f"{p:g}": value for p, value in constants.items()}

        for _ in range(ctx.samples):
            D, K = ctx.spd(), ctx.hermitian()
            values = []
            for p in WYD_PARAMETERS:
                ratio = wyd_metric_ratio(float(p), D, K)
                ctx.record("wyd_constancy", _relative(ratio, constants[float(p)]), D=D, K=K, p=p)
                information = skew_information(StandardFunctionSpec.wyd(float(p)), D, K)
                direct = wyd_direct(float(p), D, K)
                ctx.record("wyd_agreement", _relative(information, direct), D=D, K=K, p=p)
                values.append(information)
            for k in range(len(values) - 1):
                ctx.record("monotone", (values[k] - values[k + 1]) / values[k + 1], D=D, K=K, p=WYD_PARAMETERS[k + 1])
