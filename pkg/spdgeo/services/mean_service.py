"""Scalar means, kernel functions and their comparisons.

Every mean is evaluated through its log-excess

    h(u) = log M(e^u, 1) - u / 2,

an even function of u, so that by homogeneity

    log M(x, y) = (log x + log y) / 2 + h(log x - log y).

The excess is assembled from ``log(sinh(z) / z)`` and ``log(cosh(z))``, which
removes the removable singularities at x = y and at the Stolarsky parameter 2.
Near Stolarsky parameter 0 a second-order expansion in the parameter is used.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from spdgeo.core.config import numerics, settings
from spdgeo.core.errors import DomainError
from spdgeo.core.matcore import ScalarMap, divided_difference_matrix, make_rng, SeedLike
from spdgeo.models.schemas import (
    AxiomViolation,
    DominanceVerdict,
    KernelSpec,
    MeanAxiomReport,
    MeanSpec,
    MeanTag,
    PdVerdict,
    StandardFunctionSpec,
    StandardFunctionTag,
)

logger = logging.getLogger(__name__)

SERIES_CUTOFF = 1e-2
LARGE_CUTOFF = 20.0


@dataclass(frozen=True)
class CustomKernel:
    """Kernel given by an arbitrary positive symmetric evaluator."""

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __str__(self) -> str:
        return self.name


KernelLike = Union[KernelSpec, CustomKernel]
MeanLike = Union[MeanSpec, Callable[[np.ndarray, np.ndarray], np.ndarray]]


# Elementary even functions

def log_sinhc(z: np.ndarray) -> np.ndarray:
    """log(sinh(z) / z), even, zero at the origin."""
    az = np.abs(np.asarray(z, dtype=float))
    small = az < SERIES_CUTOFF
    large = az >= LARGE_CUTOFF
    z2 = az * az
    series = z2 * (1 / 6 - z2 * (1 / 180 - z2 / 2835))
    moderate_arg = np.where(small | large, 1.0, az)
    moderate = np.log(np.sinh(moderate_arg) / moderate_arg)
    large_arg = np.where(large, az, 1.0)
    asymptotic = large_arg - np.log(2 * large_arg) + np.log(-np.expm1(-2 * large_arg))
    return np.where(small, series, np.where(large, asymptotic, moderate))


def log_cosh(z: np.ndarray) -> np.ndarray:
    """log(cosh(z)), even, zero at the origin."""
    az = np.abs(np.asarray(z, dtype=float))
    return az + np.log1p(np.exp(-2 * az)) - np.log(2.0)


def _x_dlog_sinhc(z: np.ndarray) -> np.ndarray:
    """z * d/dz log(sinh(z)/z) = z coth z - 1."""
    az = np.abs(np.asarray(z, dtype=float))
    z2 = az * az
    series = z2 * (1 / 3 - z2 * (1 / 45 - 2 * z2 / 945))
    arg = np.where(az < SERIES_CUTOFF, 1.0, az)
    return np.where(az < SERIES_CUTOFF, series, arg / np.tanh(arg) - 1)


def _x2_d2log_sinhc(z: np.ndarray) -> np.ndarray:
    """z^2 * second derivative of log(sinh(z)/z) = 1 - (z / sinh z)^2."""
    az = np.abs(np.asarray(z, dtype=float))
    z2 = az * az
    series = z2 * (1 / 3 - z2 * (1 / 15 - 2 * z2 / 189))
    arg = np.where(az < SERIES_CUTOFF, 1.0, az)
    with np.errstate(over="ignore"):
        ratio = arg / np.sinh(arg)
    return np.where(az < SERIES_CUTOFF, series, 1 - ratio**2)


def _x3_d3log_sinhc(z: np.ndarray) -> np.ndarray:
    """z^3 * third derivative of log(sinh(z)/z), an even function."""
    az = np.abs(np.asarray(z, dtype=float))
    z2 = az * az
    series = z2 * z2 * (-2 / 15 + 8 * z2 / 189)
    arg = np.where(az < SERIES_CUTOFF, 1.0, az)
    with np.errstate(over="ignore"):
        ratio = arg / np.sinh(arg)
    return np.where(az < SERIES_CUTOFF, series, 2 * ratio**2 * (arg / np.tanh(arg)) - 2)


# Log-excess of every mean

def _stolarsky_excess(theta: float, u: np.ndarray) -> np.ndarray:
    z = u / 2
    if abs(theta) <= numerics.THETA_SERIES_RADIUS:
        return (
            _x_dlog_sinhc(z)
            - theta / 4 * _x2_d2log_sinhc(z)
            + theta**2 / 24 * _x3_d3log_sinhc(z)
        )
    a = (2 - theta) / 2
    return (2 / theta) * (log_sinhc(z) - log_sinhc(a * z))


def _function_excess(f: StandardFunctionSpec, u: np.ndarray) -> np.ndarray:
    if f.tag == StandardFunctionTag.WYD:
        p, q = f.p, 1 - f.p
        return 2 * log_sinhc(u / 2) - log_sinhc(p * u / 2) - log_sinhc(q * u / 2)
    if f.tag == StandardFunctionTag.SQRT_BINOMIAL:
        return 2 * log_cosh(u / 4)
    if f.tag == StandardFunctionTag.LOG_MEAN:
        return log_sinhc(u / 2)
    if f.tag == StandardFunctionTag.ARITHMETIC:
        return log_cosh(u / 2)
    if f.tag == StandardFunctionTag.HARMONIC:
        return -log_cosh(u / 2)
    values = np.vectorize(f.func, otypes=[float])(np.exp(u))
    if np.any(values <= 0):
        raise DomainError(f"standard function {f.name} is not positive on the probed points")
    return np.log(values) - u / 2


def log_excess(M: MeanSpec, u: np.ndarray) -> np.ndarray:
    """h(u) = log M(e^u, 1) - u/2 for an array of log-ratios."""
    u = np.asarray(u, dtype=float)
    if M.tag == MeanTag.ARITHMETIC:
        h = log_cosh(u / 2)
    elif M.tag == MeanTag.GEOMETRIC:
        h = np.zeros_like(u)
    elif M.tag == MeanTag.HARMONIC:
        h = -log_cosh(u / 2)
    elif M.tag == MeanTag.ROOT:
        h = 2 * log_cosh(u / 4)
    elif M.tag == MeanTag.LOGARITHMIC:
        h = log_sinhc(u / 2)
    elif M.tag == MeanTag.IDENTRIC:
        h = _x_dlog_sinhc(u / 2)
    elif M.tag == MeanTag.STOLARSKY:
        h = _stolarsky_excess(M.param, u)
    elif M.tag == MeanTag.ALPHA:
        if M.param <= settings.alpha_log_cutoff:
            h = log_sinhc(u / 2)
        else:
            h = log_sinhc(u / 2) - log_sinhc(M.param * u / 2)
    else:
        h = _function_excess(M.function, u)
    return np.where(u == 0, 0.0, h)


def log_mean_ratio(M: MeanSpec, u: np.ndarray) -> np.ndarray:
    """log M(e^u, 1)."""
    u = np.asarray(u, dtype=float)
    return u / 2 + log_excess(M, u)


def _check_positive(*values: np.ndarray) -> None:
    for value in values:
        arr = np.asarray(value, dtype=float)
        bad = arr[~(arr > 0) | ~np.isfinite(arr)]
        if bad.size:
            raise DomainError(f"Means are defined for positive finite inputs, got {float(bad[0])!r}")


def log_mean(M: MeanSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log M(x, y) elementwise."""
    _check_positive(x, y)
    lx, ly = np.log(x), np.log(y)
    return (lx + ly) / 2 + log_excess(M, lx - ly)


# Scalar evaluators

def mean_eval(M: MeanSpec, x: float, y: float) -> float:
    """M(x, y) for positive scalars."""
    _check_positive(x, y)
    excess = float(log_excess(M, np.log(x) - np.log(y)))
    with np.errstate(over="ignore"):
        geometric = np.sqrt(float(x) * float(y))
    if not np.isfinite(geometric) or geometric == 0:
        return float(np.exp((np.log(x) + np.log(y)) / 2 + excess))
    return float(geometric * np.exp(excess))


def mean_eval_array(M: MeanSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.exp(log_mean(M, np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


def kernel_log_matrix(kernel: KernelSpec, log_values: np.ndarray) -> np.ndarray:
    """log phi(lambda_i, lambda_j) from log-eigenvalues (last axis)."""
    li = log_values[..., :, None]
    lj = log_values[..., None, :]
    return kernel.theta * ((li + lj) / 2 + log_excess(kernel.mean, li - lj))


def kernel_eval_array(kernel: KernelLike, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_positive(x, y)
    if isinstance(kernel, CustomKernel):
        return np.asarray(kernel.evaluator(x, y), dtype=float)
    return np.exp(kernel.theta * log_mean(kernel.mean, x, y))


def kernel_eval(kernel: KernelLike, x: float, y: float) -> float:
    """phi(x, y) = M(x, y)^theta; phi(x, x) = exp(theta log x)."""
    return float(kernel_eval_array(kernel, x, y))


def kernel_matrix(kernel: KernelLike, eigenvalues: np.ndarray) -> np.ndarray:
    """[phi(lambda_i, lambda_j)] for one spectrum or a stack of spectra."""
    lam = np.asarray(eigenvalues, dtype=float)
    _check_positive(lam)
    if isinstance(kernel, CustomKernel):
        return np.asarray(kernel.evaluator(lam[..., :, None], lam[..., None, :]), dtype=float)
    return np.exp(kernel_log_matrix(kernel, np.log(lam)))


def f_wyd(p: float, x: float) -> float:
    """f_p(x) = p(1-p)(x-1)^2 / ((x^p - 1)(x^(1-p) - 1)), with f_p(1) = 1."""
    if not 0 < p < 1:
        raise DomainError(f"WYD parameter must lie in (0, 1), got {p!r}", p=p)
    return standard_function_eval(StandardFunctionSpec.wyd(p), x)


def standard_function_eval(f: StandardFunctionSpec, x: float) -> float:
    _check_positive(x)
    if f.tag == StandardFunctionTag.CUSTOM:
        return float(f.func(float(x)))
    u = np.log(float(x))
    return float(np.exp(u / 2 + (_function_excess(f, np.array(u)) if u != 0 else 0.0)))


def standard_function_at_zero(f: StandardFunctionSpec) -> float:
    """f(0) = lim f(x) as x -> 0."""
    closed_forms = {
        StandardFunctionTag.SQRT_BINOMIAL: 0.25,
        StandardFunctionTag.LOG_MEAN: 0.0,
        StandardFunctionTag.ARITHMETIC: 0.5,
        StandardFunctionTag.HARMONIC: 0.0,
    }
    if f.tag == StandardFunctionTag.WYD:
        return f.p * (1 - f.p)
    if f.tag in closed_forms:
        return closed_forms[f.tag]
    h = numerics.ZERO_PROBE
    return 2 * f.func(h) - f.func(2 * h)


def mean_scalar_map(M: MeanSpec) -> ScalarMap:
    """x -> M(x, 1) as a scalar map for Loewner matrices."""
    return ScalarMap.custom(
        name=f"{M}(x,1)",
        f=lambda x: mean_eval_array(M, x, np.ones_like(x)),
    )


def default_grid() -> np.ndarray:
    return np.logspace(np.log10(settings.grid_min), np.log10(settings.grid_max), settings.grid_size)


# Axioms and comparisons

def _mean_callable(M: MeanLike) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if isinstance(M, MeanSpec):
        return lambda x, y: mean_eval_array(M, x, y)
    return lambda x, y: np.asarray(M(x, y), dtype=float)


def check_mean_axioms(
    M: MeanLike,
    grid: Sequence[float],
    scalings: Sequence[float] = (0.5, 2.0, 10.0),
    max_reported: int = 100,
) -> MeanAxiomReport:
    """Sweep symmetry, homogeneity, monotonicity and betweenness over grid x grid."""
    points = np.sort(np.asarray(grid, dtype=float))
    if points.size == 0:
        raise DomainError("grid must be nonempty")
    evaluate = _mean_callable(M)
    X, Y = np.meshgrid(points, points, indexing="ij")
    V = evaluate(X, Y)

    failures = []

    def record(axiom: str, mask: np.ndarray, detail: str) -> None:
        for i, j in zip(*np.nonzero(mask)):
            failures.append(
                AxiomViolation(axiom=axiom, x=float(X[i, j]), y=float(Y[i, j]), detail=detail)
            )

    record("symmetry", np.abs(V - V.T) > 1e-12 * np.maximum(np.abs(V), np.abs(V.T)), "M(x,y) != M(y,x)")
    for alpha in scalings:
        scaled = evaluate(alpha * X, alpha * Y)
        record(
            "homogeneity",
            np.abs(scaled - alpha * V) > 1e-10 * np.abs(alpha * V),
            f"M({alpha:g}x,{alpha:g}y) != {alpha:g}M(x,y)",
        )
    step_x = np.zeros_like(V, dtype=bool)
    step_x[:-1, :] = V[1:, :] < V[:-1, :] - 1e-12 * np.abs(V[:-1, :])
    step_y = np.zeros_like(V, dtype=bool)
    step_y[:, :-1] = V[:, 1:] < V[:, :-1] - 1e-12 * np.abs(V[:, :-1])
    record("monotonicity", step_x | step_y, "decreases along the grid")
    low, high = np.minimum(X, Y), np.maximum(X, Y)
    record(
        "betweenness",
        (V < low * (1 - 1e-12)) | (V > high * (1 + 1e-12)),
        "outside [min(x,y), max(x,y)]",
    )

    if failures:
        logger.debug(f"Mean axiom sweep found {len(failures)} violations")
    return MeanAxiomReport(
        violations=failures[:max_reported],
        total_violations=len(failures),
        checked_pairs=int(V.size),
    )


def _compare(v1: np.ndarray, v2: np.ndarray, slack: float) -> DominanceVerdict:
    tol = slack * np.maximum(np.abs(v1), np.abs(v2))
    below = v1 <= v2 + tol
    above = v1 >= v2 - tol
    if np.all(below & above):
        return DominanceVerdict.EQUAL
    if np.all(below):
        return DominanceVerdict.DOMINATED
    if np.all(above):
        return DominanceVerdict.DOMINATES
    return DominanceVerdict.INCOMPARABLE


_REVERSED = {
    DominanceVerdict.DOMINATES: DominanceVerdict.DOMINATED,
    DominanceVerdict.DOMINATED: DominanceVerdict.DOMINATES,
    DominanceVerdict.EQUAL: DominanceVerdict.EQUAL,
    DominanceVerdict.INCOMPARABLE: DominanceVerdict.INCOMPARABLE,
}


def pointwise_dominates(
    phi1: KernelLike,
    phi2: KernelLike,
    grid: Optional[Sequence[float]] = None,
    slack: Optional[float] = None,
) -> DominanceVerdict:
    """Compare phi1(x, 1) with phi2(x, 1) over the grid.

    ``dominated`` means phi1 <= phi2 everywhere on the grid.
    """
    points = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if points.size == 0:
        raise DomainError("grid must be nonempty")
    slack = settings.domination_slack if slack is None else slack
    ones = np.ones_like(points)
    verdict = _compare(kernel_eval_array(phi1, points, ones), kernel_eval_array(phi2, points, ones), slack)

    if (
        isinstance(phi1, KernelSpec)
        and isinstance(phi2, KernelSpec)
        and phi1.theta == phi2.theta
        and phi1.theta != 0
    ):
        mean_verdict = _compare(
            mean_eval_array(phi1.mean, points, ones),
            mean_eval_array(phi2.mean, points, ones),
            slack,
        )
        expected = mean_verdict if phi1.theta > 0 else _REVERSED[mean_verdict]
        if expected != verdict:
            logger.warning(
                f"Kernel verdict {verdict.value} for {phi1} vs {phi2} disagrees with "
                f"the mean comparison {mean_verdict.value}"
            )
    return verdict


def ratio_positive_definite(
    M1: MeanSpec,
    M2: MeanSpec,
    r: float,
    sample_points: Sequence[float],
    trials: int,
    seed: SeedLike = 0,
    subset_size: int = 8,
) -> PdVerdict:
    """Sampled test that g(t) = (M1(e^t,1) / M2(e^t,1))^r is a positive definite function.

    Trial 0 uses the first ``subset_size`` sample points as given; later trials
    draw a seeded subset and dilate it by a log-uniform factor in [1/4, 4].
    """
    points = np.asarray(sample_points, dtype=float)
    if np.unique(points).size != points.size:
        raise DomainError("sample points must be distinct")
    if r <= 0:
        raise DomainError(f"r must be positive, got {r!r}")
    rng = make_rng(seed)
    size = min(subset_size, points.size)
    lowest, highest = np.inf, 0.0

    for trial in range(trials):
        if trial == 0:
            t = points[:size]
        else:
            subset = np.sort(rng.choice(points.size, size=size, replace=False))
            t = points[subset] * np.exp(rng.uniform(np.log(0.25), np.log(4.0)))
        diff = t[:, None] - t[None, :]
        gram = np.exp(r * (log_mean_ratio(M1, diff) - log_mean_ratio(M2, diff)))
        eigenvalues = np.linalg.eigvalsh(gram)
        lowest, highest = min(lowest, eigenvalues[0]), max(highest, eigenvalues[-1])
        if eigenvalues[0] < -settings.pd_tol * eigenvalues[-1]:
            logger.debug(f"Ratio {M1}/{M2} fails positive definiteness in trial {trial}")
            return PdVerdict(
                passed=False,
                min_eigenvalue=float(eigenvalues[0]),
                max_eigenvalue=float(eigenvalues[-1]),
                trials=trial + 1,
                witness_points=[float(v) for v in t],
            )
    return PdVerdict(passed=True, min_eigenvalue=float(lowest), max_eigenvalue=float(highest), trials=trials)


def loewner_psd(f: ScalarMap, points: Sequence[float]) -> PdVerdict:
    """PSD verdict of the Loewner matrix [f^[1](x_i, x_j)]."""
    x = np.asarray(points, dtype=float)
    if np.unique(x).size != x.size:
        raise DomainError("Loewner points must be distinct")
    if np.any(x <= 0):
        raise DomainError("Loewner points must be positive")
    loewner = divided_difference_matrix(f, x)
    eigenvalues = np.linalg.eigvalsh((loewner + loewner.T) / 2)
    passed = bool(eigenvalues[0] >= -settings.pd_tol * max(eigenvalues[-1], 0.0))
    return PdVerdict(
        passed=passed,
        min_eigenvalue=float(eigenvalues[0]),
        max_eigenvalue=float(eigenvalues[-1]),
        trials=1,
        witness_points=None if passed else [float(v) for v in x],
    )


def loewner_search(
    f: ScalarMap,
    n_points: int,
    trials: int,
    seed: SeedLike = 0,
    low: float = 1e-3,
    high: float = 1e3,
) -> PdVerdict:
    """Seeded search over log-uniform point sets for a non-PSD Loewner matrix."""
    rng = make_rng(seed)
    lowest, highest = np.inf, 0.0
    for trial in range(trials):
        x = np.sort(np.exp(rng.uniform(np.log(low), np.log(high), size=n_points)))
        verdict = loewner_psd(f, x)
        if not verdict.passed:
            return verdict.model_copy(update={"trials": trial + 1})
        lowest = min(lowest, verdict.min_eigenvalue)
        highest = max(highest, verdict.max_eigenvalue)
    return PdVerdict(passed=True, min_eigenvalue=float(lowest), max_eigenvalue=float(highest), trials=trials)
