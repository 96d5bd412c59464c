"""Kernel metrics K^phi on positive definite matrices.

phi(L_D, R_D) acts on X by the Schur product with [phi(lambda_i, lambda_j)] in
the eigenframe of D.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from spdgeo.core.config import numerics
from spdgeo.core.errors import (
    DimensionMismatchError,
    DomainError,
    NumericalFailureError,
    PreconditionError,
)
from spdgeo.core.matcore import (
    HermitianMatrix,
    MatrixLike,
    ScalarMap,
    SpdMatrix,
    Spectrum,
    as_array,
    check_dimensions,
    divided_difference_pairs,
    hs_inner,
    i_commutator,
    norm_from_singular_values,
    spd_function,
    spectrum_of,
)
from spdgeo.models.schemas import KernelSpec, MeanSpec, NormSpec, NormTag, StandardFunctionSpec
from spdgeo.services.mean_service import (
    CustomKernel,
    KernelLike,
    kernel_eval_array,
    kernel_matrix,
    standard_function_at_zero,
)

logger = logging.getLogger(__name__)

ALLOWED_POWERS = (-1.0, -0.5, 0.5, 1.0)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """phi(L_D, R_D) cached for one foot point D."""

    spectrum: Spectrum
    kernel: KernelLike
    coefficients: np.ndarray

    @classmethod
    def build(cls, kernel: KernelLike, D: MatrixLike) -> "KernelOperator":
        spectrum = spectrum_of(SpdMatrix.coerce(D))
        coefficients = kernel_matrix(kernel, spectrum.eigenvalues)
        if not np.all(np.isfinite(coefficients)) or not np.all(coefficients > 0):
            raise NumericalFailureError(
                f"Kernel {kernel} has non-positive or non-finite coefficients on the spectrum",
                dimension=spectrum.n,
                condition=float(spectrum.eigenvalues[-1] / spectrum.eigenvalues[0]),
            )
        return cls(spectrum=spectrum, kernel=kernel, coefficients=coefficients)

    def apply_array(self, X: MatrixLike, p: float) -> np.ndarray:
        arr = as_array(X)
        if arr.shape != (self.spectrum.n, self.spectrum.n):
            raise DimensionMismatchError(self.spectrum.n, arr.shape[0])
        schur = self.coefficients**p * self.spectrum.to_eigenframe(arr)
        return self.spectrum.from_eigenframe(schur)

    def apply(self, X: MatrixLike, p: float) -> HermitianMatrix:
        return HermitianMatrix.symmetrized(self.apply_array(X, p))


@dataclass(frozen=True, eq=False)
class TangentSplit:
    """H = H_c + H_q with H_c commuting with D and H_q = i[D, K]."""

    commuting_part: HermitianMatrix
    commutator_part: HermitianMatrix
    generator: HermitianMatrix


def _check_power(p: float) -> float:
    if float(p) not in ALLOWED_POWERS:
        raise DomainError(f"kernel power must be one of {ALLOWED_POWERS}, got {p!r}", p=p)
    return float(p)


def kernel_apply(phi: KernelLike, D: MatrixLike, X: MatrixLike, p: float) -> HermitianMatrix:
    """phi(L_D, R_D)^p X."""
    check_dimensions(D, X)
    return KernelOperator.build(phi, D).apply(X, _check_power(p))


def metric_eval(phi: KernelLike, D: MatrixLike, H: MatrixLike, K: MatrixLike) -> float:
    """K_D^phi(H, K) = <H, phi(L_D, R_D)^{-1} K>_HS."""
    check_dimensions(D, H, K)
    operator = KernelOperator.build(phi, D)
    h = as_array(H)
    image = operator.apply_array(K, -1.0)
    raw = np.vdot(h, image)
    scale = np.linalg.norm(h) * np.linalg.norm(image)
    if abs(raw.imag) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise NumericalFailureError(
            f"Metric value has imaginary residue {raw.imag:.3e}",
            dimension=operator.spectrum.n,
        )
    return float(((raw + np.conj(raw)) / 2).real)


def tangent_split(D: MatrixLike, H: MatrixLike, cluster_tol: Optional[float] = None) -> TangentSplit:
    """Orthogonal decomposition of a tangent vector at D."""
    check_dimensions(D, H)
    spectrum = spectrum_of(SpdMatrix.coerce(D), cluster_tol)
    same = spectrum.same_cluster_mask()
    rotated = spectrum.to_eigenframe(as_array(H))
    commuting = np.where(same, rotated, 0)
    commutator = rotated - commuting
    lam = spectrum.eigenvalues
    gaps = lam[:, None] - lam[None, :]
    generator = np.where(same, 0, commutator / (1j * np.where(same, 1.0, gaps)))
    return TangentSplit(
        commuting_part=HermitianMatrix.symmetrized(spectrum.from_eigenframe(commuting)),
        commutator_part=HermitianMatrix.symmetrized(spectrum.from_eigenframe(commutator)),
        generator=HermitianMatrix.symmetrized(spectrum.from_eigenframe(generator)),
    )


def pullback_kernel(phi: KernelLike, G: ScalarMap) -> CustomKernel:
    """psi(x, y) = phi(G(x), G(y)) / G^[1](x, y)^2."""

    def evaluator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        slope = divided_difference_pairs(G, x, y)
        if np.any(slope == 0) or not np.all(np.isfinite(slope)):
            where = x[(slope == 0) | ~np.isfinite(slope)]
            raise DomainError(
                f"derivative of {G.name} vanishes near {float(where[0])!r}",
                point=float(where[0]),
            )
        return kernel_eval_array(phi, G(x), G(y)) / slope**2

    return CustomKernel(name=f"pullback({phi}, {G.name})", evaluator=evaluator)


def kernel_speed(
    phi: KernelLike,
    points: np.ndarray,
    tangents: np.ndarray,
    norm: NormSpec,
    ts: Optional[np.ndarray] = None,
) -> np.ndarray:
    """|||phi(L_P, R_P)^{-1/2} X||| over stacks of foot points P and tangents X."""
    eigenvalues, frames = np.linalg.eigh(points)
    bad = np.nonzero(eigenvalues[:, 0] <= 0)[0]
    if bad.size:
        where = float(ts[bad[0]]) if ts is not None else int(bad[0])
        raise DomainError(f"curve leaves the positive definite cone at t={where!r}", t=where)
    coefficients = kernel_matrix(phi, eigenvalues)
    adjoint = np.conj(np.swapaxes(frames, -1, -2))
    rotated = adjoint @ tangents @ frames / np.sqrt(coefficients)
    if norm.tag == NormTag.HILBERT_SCHMIDT:
        return np.sqrt(np.sum(np.abs(rotated) ** 2, axis=(-2, -1)))
    rotated = (rotated + np.conj(np.swapaxes(rotated, -1, -2))) / 2
    return norm_from_singular_values(np.abs(np.linalg.eigvalsh(rotated)), norm)


def _function_kernel(f: StandardFunctionSpec) -> KernelSpec:
    return KernelSpec(mean=MeanSpec.from_function(f), theta=1.0)


def skew_information(f: StandardFunctionSpec, D: MatrixLike, K: MatrixLike) -> float:
    """Metric adjusted skew information (f(0)/2) K_D^f(i[D,K], i[D,K])."""
    f0 = standard_function_at_zero(f)
    if not f0 > numerics.REGULARITY_FLOOR:
        raise PreconditionError(f"standard function {f} is not regular: f(0) = {f0!r}", function=str(f))
    tangent = i_commutator(D, K)
    return f0 / 2 * metric_eval(_function_kernel(f), D, tangent, tangent)


def wyd_direct(p: float, D: MatrixLike, K: MatrixLike) -> float:
    """-(1/2) Tr [D^p, K][D^(1-p), K]."""
    if not 0 < p < 1:
        raise DomainError(f"WYD parameter must lie in (0, 1), got {p!r}", p=p)
    check_dimensions(D, K)
    D = SpdMatrix.coerce(D)
    k = as_array(K)
    left = spd_function(D, ScalarMap.power(p)).data
    right = spd_function(D, ScalarMap.power(1 - p)).data
    trace = np.trace((left @ k - k @ left) @ (right @ k - k @ right))
    return float(-trace.real / 2)


def generalized_variance(f: StandardFunctionSpec, D: MatrixLike, K: MatrixLike) -> float:
    """<K, J_D^f K>_HS."""
    check_dimensions(D, K)
    return hs_inner(K, kernel_apply(_function_kernel(f), D, K, 1.0))


def wyd_metric_ratio(p: float, D: MatrixLike, K: MatrixLike) -> float:
    """wyd_direct(p, D, K) over the f_p kernel metric on i[D, K]."""
    tangent = i_commutator(D, K)
    metric = metric_eval(_function_kernel(StandardFunctionSpec.wyd(p)), D, tangent, tangent)
    if not metric > 0:
        raise PreconditionError("i[D, K] vanishes, the ratio is undefined", p=p)
    return wyd_direct(p, D, K) / metric


def measure_wyd_constant(p: float) -> float:
    """wyd_metric_ratio on a diagonal 2x2 case."""
    D = SpdMatrix.from_spectrum(np.array([1 / 3, 2 / 3]), np.eye(2))
    K = HermitianMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    return wyd_metric_ratio(p, D, K)
