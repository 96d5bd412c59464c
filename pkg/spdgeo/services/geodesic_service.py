"""Geodesics, curve lengths, path search and multi-matrix means on positive definite matrices.

Curves are sampled in batches: a curve returns stacks of points and velocities
for an array of parameters, and lengths are composite Gauss-Legendre sums of
``kernel_speed`` over those stacks.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spdgeo.core.config import numerics, settings
from spdgeo.core.errors import DomainError, NonConvergenceError, SpdGeoError
from spdgeo.core.matcore import (
    MatrixLike,
    ScalarMap,
    SpdMatrix,
    apply_scalar_function,
    as_array,
    check_dimensions,
    divided_difference_matrix,
    from_frame,
    geometric_mean_pair,
    random_unitary,
    spd_function,
    ui_norm,
)
from spdgeo.models.schemas import (
    GeodesicFamily,
    GeodesicTag,
    KernelSpec,
    MeanSpec,
    NormSpec,
    PathSearchConfig,
)
from spdgeo.services.mean_service import KernelLike
from spdgeo.services.metric_service import kernel_speed

logger = logging.getLogger(__name__)

DEFAULT_EPS_SCHEDULE = (1e-2, 5e-3, 2.5e-3)


# Batched spectral helpers

def _adjoint(stack: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(stack, -1, -2))


def _hermitian_part(stack: np.ndarray) -> np.ndarray:
    return (stack + _adjoint(stack)) / 2


def _function_and_derivative(f: ScalarMap, points: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """f(P) and Df(P)[X] for stacks of Hermitian P and directions X."""
    values, frames = np.linalg.eigh(_hermitian_part(points))
    f.check_domain(values)
    image = from_frame(frames, np.asarray(f(values), dtype=float))
    loewner = divided_difference_matrix(f, values)
    rotated = _adjoint(frames) @ directions @ frames
    derivative = frames @ (loewner * rotated) @ _adjoint(frames)
    return _hermitian_part(image), _hermitian_part(derivative)


def _power_array(A: SpdMatrix, r: float) -> np.ndarray:
    return spd_function(A, ScalarMap.power(r)).data


def _log_array(A: SpdMatrix) -> np.ndarray:
    return apply_scalar_function(A, ScalarMap.log()).data


def _is_log_branch(theta: float) -> bool:
    return abs(2 - theta) / 2 <= settings.branch_tol


def _quadrature(points: int, panels_of: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    panel_size = min(points, panels_of)
    panels = max(1, math.ceil(points / panel_size))
    x, w = np.polynomial.legendre.leggauss(panel_size)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2
    centers = (edges[:-1] + edges[1:]) / 2
    ts = (centers[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return ts, weights


def family_kernel(family: GeodesicFamily) -> KernelSpec:
    """The kernel whose geodesics the closed-form family traces."""
    if family.tag == GeodesicTag.THETA:
        return KernelSpec.stolarsky(family.param)
    if family.tag == GeodesicTag.ALPHA:
        return KernelSpec.alpha(family.param)
    if family.tag == GeodesicTag.FISHER_RAO:
        return KernelSpec.of(MeanSpec.geometric(), 2.0)
    return KernelSpec.stolarsky(1.0)


def _effective_family(family: GeodesicFamily) -> GeodesicFamily:
    if family.tag == GeodesicTag.FISHER_RAO:
        return GeodesicFamily.alpha(1.0)
    if family.tag == GeodesicTag.COMMUTING_SQRT:
        return GeodesicFamily.theta(1.0)
    return family


# Curves

class Curve:
    """A parametrized curve t -> gamma(t) in the positive definite cone, t in [0, 1]."""

    def sample(self, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Stacks of gamma(t) and gamma'(t)."""
        raise NotImplementedError

    def point(self, t: float) -> SpdMatrix:
        if not 0 <= t <= 1:
            raise DomainError(f"curve parameter must lie in [0, 1], got {t!r}", t=t)
        points, _ = self.sample(np.array([float(t)]))
        return SpdMatrix.symmetrized(points[0])

    @staticmethod
    def closed_form(family: GeodesicFamily, A: MatrixLike, B: MatrixLike) -> "ClosedFormCurve":
        check_dimensions(A, B)
        return ClosedFormCurve(family, SpdMatrix.coerce(A), SpdMatrix.coerce(B))

    @staticmethod
    def polyline(nodes: Sequence[MatrixLike], params: Optional[Sequence[float]] = None) -> "PolylineCurve":
        return PolylineCurve.build(nodes, params)

    @staticmethod
    def mapped(base: "Curve", f: ScalarMap, scale: float = 1.0) -> "MappedCurve":
        return MappedCurve(base, f, float(scale))


@dataclass(frozen=True, eq=False)
class ClosedFormCurve(Curve):
    family: GeodesicFamily
    A: SpdMatrix
    B: SpdMatrix

    @property
    def n(self) -> int:
        return self.A.n

    def sample(self, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=float)
        family = _effective_family(self.family)
        if family.tag == GeodesicTag.THETA:
            return self._sample_theta(family.param, ts)
        return self._sample_alpha(family.param, ts)

    def _sample_theta(self, theta: float, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        t = ts[:, None, None]
        if _is_log_branch(theta):
            log_a, log_b = _log_array(self.A), _log_array(self.B)
            chord = np.broadcast_to(log_b - log_a, (ts.size,) + log_a.shape)
            return _function_and_derivative(ScalarMap.exp(), (1 - t) * log_a + t * log_b, chord)
        a = (2 - theta) / 2
        start, end = _power_array(self.A, a), _power_array(self.B, a)
        chord = np.broadcast_to(end - start, (ts.size,) + start.shape)
        interior = (1 - t) * start + t * end
        if a == 1:
            return interior, np.array(chord)
        return _function_and_derivative(ScalarMap.power(1 / a), interior, chord)

    def _sample_alpha(self, alpha: float, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        root = _power_array(self.A, alpha / 2)
        inv_root = _power_array(self.A, -alpha / 2)
        inner = _hermitian_part(inv_root @ _power_array(self.B, alpha) @ inv_root)
        c, frame = np.linalg.eigh(inner)
        powers = c[None, :] ** ts[:, None]
        scaled = frame @ (powers[..., None] * _adjoint(frame)[None])
        points = root @ scaled @ root
        tangents = root @ (frame @ ((powers * np.log(c))[..., None] * _adjoint(frame)[None])) @ root
        if alpha == 1:
            return _hermitian_part(points), _hermitian_part(tangents)
        return _function_and_derivative(ScalarMap.power(1 / alpha), points, tangents)


@dataclass(frozen=True, eq=False)
class PolylineCurve(Curve):
    """Piecewise linear curve through SPD nodes; each segment has a constant velocity."""

    nodes: Tuple[SpdMatrix, ...]
    params: np.ndarray

    @classmethod
    def build(cls, nodes: Sequence[MatrixLike], params: Optional[Sequence[float]] = None) -> "PolylineCurve":
        if len(nodes) < 2:
            raise DomainError(f"a polyline needs at least two nodes, got {len(nodes)}")
        spd_nodes = tuple(SpdMatrix.coerce(node) for node in nodes)
        check_dimensions(*spd_nodes)
        grid = np.linspace(0.0, 1.0, len(nodes)) if params is None else np.asarray(params, dtype=float)
        if grid.shape != (len(nodes),) or grid[0] != 0 or grid[-1] != 1 or np.any(np.diff(grid) <= 0):
            raise DomainError("polyline parameters must increase strictly from 0 to 1")
        return cls(spd_nodes, grid)

    @property
    def n(self) -> int:
        return self.nodes[0].n

    @property
    def segments(self) -> int:
        return len(self.nodes) - 1

    def node_stack(self) -> np.ndarray:
        return np.stack([node.data for node in self.nodes])

    def sample(self, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=float)
        stack = self.node_stack()
        index = np.clip(np.searchsorted(self.params, ts, side="right") - 1, 0, self.segments - 1)
        width = self.params[index + 1] - self.params[index]
        local = ((ts - self.params[index]) / width)[:, None, None]
        chord = stack[index + 1] - stack[index]
        return stack[index] + local * chord, chord / width[:, None, None]


@dataclass(frozen=True, eq=False)
class MappedCurve(Curve):
    """t -> scale * f(base(t)), with velocity from the Frechet derivative of f."""

    base: Curve
    f: ScalarMap
    scale: float = 1.0

    @property
    def n(self) -> int:
        return self.base.n

    def sample(self, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points, tangents = self.base.sample(ts)
        image, derivative = _function_and_derivative(self.f, points, tangents)
        return self.scale * image, self.scale * derivative


@dataclass
class ShortestPathResult:
    """Outcome of the discretized shortest-path search."""

    distance: float
    path: PolylineCurve
    converged: bool
    iterations: int
    history: List[float] = field(default_factory=list)


# Closed forms

def geodesic_point(family: GeodesicFamily, A: MatrixLike, B: MatrixLike, t: float) -> SpdMatrix:
    """gamma(t) on the closed-form geodesic of the family from A to B."""
    check_dimensions(A, B)
    if not 0 <= t <= 1:
        raise DomainError(f"geodesic parameter must lie in [0, 1], got {t!r}", t=t)
    A, B = SpdMatrix.coerce(A), SpdMatrix.coerce(B)
    if t == 0:
        return A
    if t == 1:
        return B
    effective = _effective_family(family)
    if effective.tag == GeodesicTag.ALPHA and effective.param == 1:
        return geometric_mean_pair(A, B, t)
    if effective.tag == GeodesicTag.THETA and _is_log_branch(effective.param):
        log_mix = (1 - t) * _log_array(A) + t * _log_array(B)
        return _exp_spd(log_mix)
    return Curve.closed_form(family, A, B).point(t)


def _exp_spd(X: np.ndarray) -> SpdMatrix:
    values, frame = np.linalg.eigh(_hermitian_part(X))
    return SpdMatrix.from_spectrum(np.exp(values), frame)


def geometric_mean(A: MatrixLike, B: MatrixLike, t: float = 0.5) -> SpdMatrix:
    """Fisher-Rao geodesic point A #_t B."""
    return geometric_mean_pair(A, B, t)


def closed_form_distance(family: GeodesicFamily, norm: NormSpec, A: MatrixLike, B: MatrixLike) -> float:
    """Geodesic distance of the family's kernel metric, measured in the given norm."""
    check_dimensions(A, B)
    A, B = SpdMatrix.coerce(A), SpdMatrix.coerce(B)
    effective = _effective_family(family)
    if effective.tag == GeodesicTag.THETA:
        if _is_log_branch(effective.param):
            return ui_norm(_log_array(A) - _log_array(B), norm)
        a = (2 - effective.param) / 2
        return ui_norm(_power_array(A, a) - _power_array(B, a), norm) / abs(a)
    alpha = effective.param
    inv_root = _power_array(A, -alpha / 2)
    inner = SpdMatrix.symmetrized(inv_root @ _power_array(B, alpha) @ inv_root)
    return ui_norm(_log_array(inner), norm) / alpha


def fisher_rao_distance(A: MatrixLike, B: MatrixLike) -> float:
    return closed_form_distance(GeodesicFamily.fisher_rao(), NormSpec.hs(), A, B)


# Lengths

def curve_length(
    phi: KernelLike,
    curve: Curve,
    norm: Optional[NormSpec] = None,
    quadrature_points: Optional[int] = None,
) -> float:
    """Length of the curve under the kernel metric (Finsler for non-HS norms).

    For polylines ``quadrature_points`` counts points per segment; otherwise it
    counts points on [0, 1].
    """
    norm = norm or NormSpec.hs()
    if isinstance(curve, PolylineCurve):
        points = quadrature_points or settings.polyline_quadrature
        stack = curve.node_stack()
        return float(np.sum(_segment_lengths(phi, stack[:-1], stack[1:], norm, points)))
    points = quadrature_points or settings.closed_form_quadrature
    if points < 1:
        raise DomainError(f"quadrature_points must be positive, got {points}")
    ts, weights = _quadrature(points, numerics.GAUSS_PANEL_POINTS)
    positions, velocities = curve.sample(ts)
    return float(np.dot(weights, kernel_speed(phi, positions, velocities, norm, ts)))


def _segment_lengths(
    phi: KernelLike,
    starts: np.ndarray,
    ends: np.ndarray,
    norm: NormSpec,
    points: int,
) -> np.ndarray:
    """Lengths of the straight segments starts[k] -> ends[k] (stacks of matching shape)."""
    x, w = np.polynomial.legendre.leggauss(points)
    tau = (x + 1) / 2
    chords = ends - starts
    positions = starts[..., None, :, :] + tau[:, None, None] * chords[..., None, :, :]
    velocities = np.broadcast_to(chords[..., None, :, :], positions.shape)
    n = starts.shape[-1]
    speeds = kernel_speed(
        phi,
        positions.reshape(-1, n, n),
        velocities.reshape(-1, n, n),
        norm,
    )
    return speeds.reshape(positions.shape[:-2]) @ (w / 2)


# Path search

def _hermitian_basis(n: int, real: bool, seed: int) -> np.ndarray:
    """Seeded rotation of the standard HS-orthonormal basis of Hermitian matrices."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[i, i] = 1
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
            if not real:
                e = np.zeros((n, n), dtype=np.complex128)
                e[i, j], e[j, i] = 1j / np.sqrt(2), -1j / np.sqrt(2)
                basis.append(e)
    rotation = random_unitary(n, seed, complex_entries=not real)
    if real:
        rotation = rotation.real.astype(np.complex128)
    stack = np.stack(basis)
    return rotation @ stack @ rotation.conj().T


def _exp_chart(roots: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """R exp(S) R for stacks of square roots R and Hermitian steps S."""
    values, frames = np.linalg.eigh(_hermitian_part(steps))
    return _hermitian_part(roots @ from_frame(frames, np.exp(values)) @ roots)


def _floor_spectrum(stack: np.ndarray) -> np.ndarray:
    values, frames = np.linalg.eigh(_hermitian_part(stack))
    floor = settings.spd_floor * np.max(np.abs(values), axis=-1, keepdims=True)
    return from_frame(frames, np.maximum(values, floor))


def _local_lengths(
    phi: KernelLike,
    left: np.ndarray,
    candidates: np.ndarray,
    right: np.ndarray,
    norm: NormSpec,
    points: int,
) -> np.ndarray:
    """Length of left -> candidate -> right for stacks of candidates (..., n, n)."""
    left = np.broadcast_to(left, candidates.shape)
    right = np.broadcast_to(right, candidates.shape)
    return (
        _segment_lengths(phi, left, candidates, norm, points)
        + _segment_lengths(phi, candidates, right, norm, points)
    )


def _descent_sweep(
    phi: KernelLike,
    nodes: np.ndarray,
    radii: np.ndarray,
    basis: np.ndarray,
    norm: NormSpec,
    points: int,
    step_tol: float,
) -> float:
    """One red-black sweep of trust-region gradient steps; returns the largest accepted radius."""
    m = nodes.shape[0] - 1
    h = numerics.GRADIENT_STEP
    largest = 0.0
    for parity in (1, 2):
        index = np.arange(parity, m, 2)
        if index.size == 0:
            continue
        left, right = nodes[index - 1], nodes[index + 1]
        values, frames = np.linalg.eigh(_hermitian_part(nodes[index]))
        roots = from_frame(frames, np.sqrt(values))

        offsets = np.concatenate([h * basis, -h * basis])
        trial = _exp_chart(roots[:, None], offsets[None])
        trial_lengths = _local_lengths(phi, left[:, None], trial, right[:, None], norm, points)
        gradient = (trial_lengths[:, : len(basis)] - trial_lengths[:, len(basis):]) / (2 * h)
        size = np.linalg.norm(gradient, axis=1)
        direction = np.einsum("kj,jab->kab", gradient / np.where(size > 0, size, 1.0)[:, None], basis)

        current = _local_lengths(phi, left, nodes[index], right, norm, points)
        pending = size > 0
        initial = radii[index].copy()
        radius = initial.copy()
        while np.any(pending):
            active = np.nonzero(pending)[0]
            steps = -radius[active, None, None] * direction[active]
            candidates = _exp_chart(roots[active], steps)
            lengths = _local_lengths(phi, left[active], candidates, right[active], norm, points)
            improved = lengths < current[active]
            for slot, k in enumerate(active):
                if improved[slot]:
                    nodes[index[k]] = _floor_spectrum(candidates[slot])
                    largest = max(largest, float(radius[k]))
                    radius[k] = min(radius[k] * numerics.TRUST_GROW, 1.0)
                    pending[k] = False
                else:
                    radius[k] *= numerics.TRUST_SHRINK
                    if radius[k] < step_tol:
                        # stationary at this resolution; retry from a halved radius next sweep
                        radius[k] = max(initial[k] * numerics.TRUST_SHRINK, step_tol)
                        pending[k] = False
        radii[index] = radius
    return largest


def numeric_shortest_distance(
    phi: KernelLike,
    A: MatrixLike,
    B: MatrixLike,
    cfg: Optional[PathSearchConfig] = None,
    norm: Optional[NormSpec] = None,
) -> ShortestPathResult:
    """Upper bound for the geodesic distance by descent on a polyline between A and B.

    Interior nodes start on the log-Euclidean geodesic and move in the chart
    X = R exp(S) R, R = N^{1/2}, along finite-difference gradients of the local
    length taken in a seeded Hermitian basis. Nodes of equal parity share no
    segment and are updated together.
    """
    cfg = cfg or PathSearchConfig()
    norm = norm or NormSpec.hs()
    check_dimensions(A, B)
    A, B = SpdMatrix.coerce(A), SpdMatrix.coerce(B)

    if np.array_equal(A.data, B.data):
        path = PolylineCurve.build([A] * (cfg.segments + 1))
        return ShortestPathResult(distance=0.0, path=path, converged=True, iterations=0, history=[0.0])

    start = Curve.closed_form(GeodesicFamily.theta(2.0), A, B)
    nodes, _ = start.sample(np.linspace(0.0, 1.0, cfg.segments + 1))
    nodes = np.array(nodes)
    nodes[0], nodes[-1] = A.data, B.data
    basis = _hermitian_basis(A.n, A.is_real and B.is_real, cfg.seed)
    points = cfg.quadrature_points_per_segment

    def total(stack: np.ndarray) -> float:
        return float(np.sum(_segment_lengths(phi, stack[:-1], stack[1:], norm, points)))

    history = [total(nodes)]
    iterations = 0
    converged = False
    try:
        for level in range(cfg.refinements + 1):
            if level:
                midpoints = (nodes[:-1] + nodes[1:]) / 2
                refined = np.empty((2 * nodes.shape[0] - 1,) + nodes.shape[1:], dtype=nodes.dtype)
                refined[0::2], refined[1::2] = nodes, midpoints
                nodes = refined
            radii = np.full(nodes.shape[0], numerics.TRUST_RADIUS_INITIAL)
            converged = False
            for _ in range(cfg.max_iterations):
                largest = _descent_sweep(phi, nodes, radii, basis, norm, points, cfg.step_tol)
                iterations += 1
                length = total(nodes)
                gain = history[-1] - length
                history.append(min(length, history[-1]))
                logger.debug(f"Path search sweep {iterations}: length {length:.12g}, radius {largest:.3e}")
                if largest < cfg.step_tol or gain <= cfg.step_tol * length:
                    converged = True
                    break
    except SpdGeoError as e:
        logger.error(f"Path search failed between matrices of dimension {A.n}: {e}")
        raise

    if not converged:
        logger.warning(f"Path search hit {cfg.max_iterations} sweeps without converging; returning best length")
    path = PolylineCurve.build([SpdMatrix.symmetrized(node) for node in nodes])
    distance = total(nodes)
    logger.info(f"Path search for {phi}: distance {distance:.12g} after {iterations} sweeps")
    return ShortestPathResult(distance=distance, path=path, converged=converged, iterations=iterations, history=history)


def _extrapolate_to_zero(eps: np.ndarray, values: np.ndarray) -> float:
    """Value at eps = 0 of the interpolating polynomial (Richardson extrapolation)."""
    coefficients = np.polynomial.polynomial.polyfit(eps, values, len(eps) - 1)
    return float(coefficients[0])


def directional_distance_slope(
    phi: KernelLike,
    D: MatrixLike,
    H: MatrixLike,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    cfg: Optional[PathSearchConfig] = None,
) -> float:
    """lim delta(D, D + eps H) / eps estimated from a decreasing eps schedule."""
    check_dimensions(D, H)
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DomainError("eps schedule must be a nonempty strictly decreasing list of positive reals")
    D = SpdMatrix.coerce(D)
    h = as_array(H)
    try:
        SpdMatrix(D.data + eps[0] * h)
    except DomainError as e:
        raise DomainError(f"D + eps H is not positive definite for eps={eps[0]!r}", eps=float(eps[0])) from e
    if not np.any(h):
        return 0.0
    cfg = cfg or PathSearchConfig(segments=4)
    slopes = np.array(
        [numeric_shortest_distance(phi, D, D.data + e * h, cfg).distance / e for e in eps]
    )
    logger.debug(f"Distance slopes {slopes.tolist()} at eps {eps.tolist()}")
    if eps.size == 1:
        return float(slopes[0])
    return _extrapolate_to_zero(eps, slopes)


# Multi-matrix means

def _check_weights(weights: Optional[Sequence[float]], k: int) -> np.ndarray:
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise DomainError("weights must be nonnegative, one per matrix, and sum to one")
    return w


def _check_family(matrices: Sequence[MatrixLike]) -> List[SpdMatrix]:
    if not matrices:
        raise DomainError("at least one matrix is required")
    check_dimensions(*matrices)
    return [SpdMatrix.coerce(M) for M in matrices]


def power_mean_multi(theta: float, matrices: Sequence[MatrixLike], weights: Optional[Sequence[float]] = None) -> SpdMatrix:
    """((1/k) sum A_j^a)^(1/a) with a = (2 - theta)/2; the log-Euclidean mean at theta = 2."""
    family = _check_family(matrices)
    w = _check_weights(weights, len(family))
    if len(family) == 1:
        return family[0]
    if _is_log_branch(theta):
        return _exp_spd(sum(wj * _log_array(M) for wj, M in zip(w, family)))
    a = (2 - theta) / 2
    average = SpdMatrix.symmetrized(sum(wj * _power_array(M, a) for wj, M in zip(w, family)))
    return spd_function(average, ScalarMap.power(1 / a))


def karcher_mean(
    matrices: Sequence[MatrixLike],
    alpha: float = 1.0,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    weights: Optional[Sequence[float]] = None,
) -> SpdMatrix:
    """G(A_1^alpha, ..., A_k^alpha)^(1/alpha) with G the Fisher-Rao Karcher mean."""
    if not 0 < alpha <= 2:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha!r}", alpha=alpha)
    family = _check_family(matrices)
    w = _check_weights(weights, len(family))
    if len(family) == 1:
        return family[0]
    tol = numerics.KARCHER_TOL if tol is None else tol
    max_iter = numerics.KARCHER_MAX_ITERATIONS if max_iter is None else max_iter

    powered = [spd_function(M, ScalarMap.power(alpha)) for M in family]
    X = power_mean_multi(2.0, powered, w)

    def tangent_logs(X: SpdMatrix) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        root = _power_array(X, 0.5)
        inv_root = _power_array(X, -0.5)
        logs = [_log_array(SpdMatrix.symmetrized(inv_root @ M.data @ inv_root)) for M in powered]
        return root, inv_root, logs

    def objective(logs: List[np.ndarray]) -> float:
        return float(sum(wj * np.linalg.norm(L) ** 2 for wj, L in zip(w, logs)))

    residual = float("inf")
    for iteration in range(max_iter):
        root, _, logs = tangent_logs(X)
        step = sum(wj * L for wj, L in zip(w, logs))
        residual = float(np.linalg.norm(step))
        logger.debug(f"Karcher iteration {iteration}: gradient norm {residual:.3e}")
        if residual <= tol:
            logger.debug(f"Karcher mean converged after {iteration} iterations")
            return spd_function(X, ScalarMap.power(1 / alpha))
        candidate = _exp_chart(root, step)
        if objective(tangent_logs(SpdMatrix.symmetrized(candidate))[2]) > objective(logs):
            candidate = _exp_chart(root, step / 2)
        X = SpdMatrix.symmetrized(candidate)

    logger.error(f"Karcher mean did not converge in {max_iter} iterations (gradient norm {residual:.3e})")
    raise NonConvergenceError(
        f"Karcher mean did not converge in {max_iter} iterations",
        iterations=max_iter,
        residual=residual,
    )


def alm_3mean(A: MatrixLike, B: MatrixLike, C: MatrixLike, tol: float = 1e-10) -> SpdMatrix:
    """Limit of the triangle recursion (A, B, C) <- (B#C, C#A, A#B)."""
    check_dimensions(A, B, C)
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    A, B, C = SpdMatrix.coerce(A), SpdMatrix.coerce(B), SpdMatrix.coerce(C)

    def diameter(A: SpdMatrix, B: SpdMatrix, C: SpdMatrix) -> float:
        return max(fisher_rao_distance(A, B), fisher_rao_distance(B, C), fisher_rao_distance(C, A))

    spread = diameter(A, B, C)
    for iteration in range(numerics.ALM_MAX_ITERATIONS):
        if spread <= tol:
            logger.debug(f"ALM recursion converged after {iteration} steps")
            return A
        A, B, C = geometric_mean_pair(B, C), geometric_mean_pair(C, A), geometric_mean_pair(A, B)
        spread = diameter(A, B, C)
        logger.debug(f"ALM step {iteration + 1}: diameter {spread:.3e}")

    raise NonConvergenceError(
        "ALM recursion did not converge",
        iterations=numerics.ALM_MAX_ITERATIONS,
        residual=spread,
    )
