"""Dense Hermitian linear algebra: spectra, functional calculus, norms and sampling."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from spdgeo.core.config import settings
from spdgeo.core.errors import DimensionMismatchError, DomainError, NumericalFailureError
from spdgeo.models.schemas import NormSpec, NormTag

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator]


# Value types

@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Immutable dense complex Hermitian matrix."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DomainError(f"Expected a nonempty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Matrix has non-finite entries")
        asymmetry = float(np.max(np.abs(arr - arr.conj().T)))
        if asymmetry > settings.hermitian_atol:
            raise DomainError(
                f"Matrix is not Hermitian (max asymmetry {asymmetry:.3e})",
                asymmetry=asymmetry,
            )
        arr = (arr + arr.conj().T) / 2
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.data.imag == 0))

    @classmethod
    def symmetrized(cls, arr: np.ndarray) -> "HermitianMatrix":
        """Hermitian part of an array that is Hermitian up to roundoff."""
        arr = np.asarray(arr, dtype=np.complex128)
        return cls((arr + arr.conj().T) / 2)

    @classmethod
    def identity(cls, n: int) -> "HermitianMatrix":
        return cls(np.eye(n))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        check_dimensions(self, other)
        return HermitianMatrix.symmetrized(self.data + other.data)

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        check_dimensions(self, other)
        return HermitianMatrix.symmetrized(self.data - other.data)

    def __neg__(self) -> "HermitianMatrix":
        return HermitianMatrix(-self.data)

    def __mul__(self, scalar: float) -> "HermitianMatrix":
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise DomainError("Hermitian matrices only scale by real numbers")
        return HermitianMatrix(self.data * float(np.real(scalar)))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues, an orthonormal eigenframe and eigenvalue clusters."""

    eigenvalues: np.ndarray
    frame: np.ndarray
    clusters: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def labels(self) -> np.ndarray:
        """Cluster index of every eigenvalue."""
        labels = np.empty(self.n, dtype=int)
        for index, cluster in enumerate(self.clusters):
            labels[list(cluster)] = index
        return labels

    def same_cluster_mask(self) -> np.ndarray:
        labels = self.labels
        return labels[:, None] == labels[None, :]

    def projector(self, i: int) -> np.ndarray:
        """Spectral projection onto the i-th cluster."""
        columns = self.frame[:, list(self.clusters[i])]
        return columns @ columns.conj().T

    def reconstruct(self) -> np.ndarray:
        return from_frame(self.frame, self.eigenvalues)

    def to_eigenframe(self, X: np.ndarray) -> np.ndarray:
        return self.frame.conj().T @ X @ self.frame

    def from_eigenframe(self, X: np.ndarray) -> np.ndarray:
        return self.frame @ X @ self.frame.conj().T


@dataclass(frozen=True, eq=False)
class SpdMatrix(HermitianMatrix):
    """Hermitian matrix certified positive definite at construction.

    ``spectrum`` may be supplied by callers that built the matrix from a known
    eigendecomposition; otherwise it is computed here.
    """

    spectrum: Optional[Spectrum] = field(default=None, repr=False)
    min_eigenvalue: float = field(init=False, default=0.0)

    def __post_init__(self):
        super().__post_init__()
        spectrum = self.spectrum if self.spectrum is not None else spectral_decompose(self)
        smallest = float(spectrum.eigenvalues[0])
        if not smallest > 0:
            raise DomainError(
                f"Matrix is not positive definite: smallest eigenvalue {smallest!r}",
                eigenvalue=smallest,
            )
        object.__setattr__(self, "spectrum", spectrum)
        object.__setattr__(self, "min_eigenvalue", smallest)

    @classmethod
    def from_spectrum(cls, eigenvalues: np.ndarray, frame: np.ndarray) -> "SpdMatrix":
        """Build U diag(eigenvalues) U* without a second eigendecomposition."""
        values = np.asarray(eigenvalues, dtype=float)
        order = np.argsort(values, kind="stable")
        values = values[order]
        frame = np.asarray(frame, dtype=np.complex128)[:, order]
        spectrum = Spectrum(values, frame, cluster_eigenvalues(values, settings.cluster_tol))
        arr = from_frame(frame, values)
        return cls((arr + arr.conj().T) / 2, spectrum=spectrum)

    @classmethod
    def coerce(cls, A: Union[HermitianMatrix, np.ndarray]) -> "SpdMatrix":
        if isinstance(A, SpdMatrix):
            return A
        return cls(as_array(A))

    @property
    def max_eigenvalue(self) -> float:
        return float(self.spectrum.eigenvalues[-1])


MatrixLike = Union[HermitianMatrix, np.ndarray]


@dataclass(frozen=True)
class ScalarMap:
    """A scalar function applied through the functional calculus."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d3f: Optional[Callable[[np.ndarray], np.ndarray]] = None
    positive_domain: bool = True

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.df is not None:
            return self.df(x)
        h = 1e-5 * (np.abs(x) if self.positive_domain else np.maximum(1.0, np.abs(x)))
        return (self.f(x + h) - self.f(x - h)) / (2 * h)

    def check_domain(self, values: np.ndarray) -> None:
        if not self.positive_domain:
            return
        bad = np.asarray(values)[np.asarray(values) <= 0]
        if bad.size:
            eigenvalue = float(bad[0])
            raise DomainError(
                f"{self.name} is undefined at eigenvalue {eigenvalue!r}",
                eigenvalue=eigenvalue,
            )

    @classmethod
    def power(cls, r: float) -> "ScalarMap":
        r = float(r)
        return cls(
            name=f"power({r:g})",
            f=lambda x: np.power(x, r),
            df=lambda x: r * np.power(x, r - 1),
            d3f=lambda x: r * (r - 1) * (r - 2) * np.power(x, r - 3),
        )

    @classmethod
    def log(cls) -> "ScalarMap":
        return cls(name="log", f=np.log, df=lambda x: 1 / x, d3f=lambda x: 2 / x**3)

    @classmethod
    def exp(cls) -> "ScalarMap":
        return cls(name="exp", f=np.exp, df=np.exp, d3f=np.exp, positive_domain=False)

    @classmethod
    def custom(
        cls,
        name: str,
        f: Callable[[np.ndarray], np.ndarray],
        df: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        d3f: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        positive_domain: bool = True,
    ) -> "ScalarMap":
        return cls(name=name, f=f, df=df, d3f=d3f, positive_domain=positive_domain)


# Helpers

def as_array(X: MatrixLike) -> np.ndarray:
    if isinstance(X, HermitianMatrix):
        return X.data
    return np.asarray(X, dtype=np.complex128)


def check_dimensions(*matrices: MatrixLike) -> int:
    """Return the common dimension or raise."""
    sizes = [as_array(m).shape[0] for m in matrices]
    for size in sizes[1:]:
        if size != sizes[0]:
            raise DimensionMismatchError(sizes[0], size)
    return sizes[0]


def from_frame(frame: np.ndarray, values: np.ndarray) -> np.ndarray:
    """U diag(values) U* for a single frame or a stack of frames."""
    return (frame * values[..., None, :]) @ np.conj(np.swapaxes(frame, -1, -2))


def cluster_eigenvalues(eigenvalues: np.ndarray, cluster_tol: float) -> Tuple[Tuple[int, ...], ...]:
    """Single-link merge of ascending eigenvalues closer than cluster_tol*max(1,|lambda|)."""
    groups = [[0]]
    for i in range(1, len(eigenvalues)):
        gap = eigenvalues[i] - eigenvalues[i - 1]
        if gap <= cluster_tol * max(1.0, abs(float(eigenvalues[i]))):
            groups[-1].append(i)
        else:
            groups.append([i])
    return tuple(tuple(group) for group in groups)


def _condition_estimate(arr: np.ndarray) -> float:
    try:
        return float(np.linalg.cond(arr))
    except np.linalg.LinAlgError:
        return float("inf")


def _is_hermitian(arr: np.ndarray) -> bool:
    return arr.shape[0] == arr.shape[1] and np.allclose(arr, arr.conj().T, rtol=0, atol=settings.hermitian_atol)


# Spectral calculus

def spectral_decompose(A: MatrixLike, cluster_tol: Optional[float] = None) -> Spectrum:
    """Eigendecomposition with eigenvalue clusters."""
    tol = settings.cluster_tol if cluster_tol is None else cluster_tol
    if not tol > 0:
        raise DomainError(f"cluster_tol must be positive, got {tol!r}")
    arr = as_array(A)
    try:
        eigenvalues, frame = linalg.eigh(arr)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(
            f"Eigensolver failed: {e}",
            dimension=arr.shape[0],
            condition=_condition_estimate(arr),
        ) from e
    return Spectrum(eigenvalues, frame, cluster_eigenvalues(eigenvalues, tol))


def spectrum_of(A: MatrixLike, cluster_tol: Optional[float] = None) -> Spectrum:
    """Cached spectrum of an SpdMatrix when the tolerance matches the default."""
    if isinstance(A, SpdMatrix) and (cluster_tol is None or cluster_tol == settings.cluster_tol):
        return A.spectrum
    return spectral_decompose(A, cluster_tol)


def apply_scalar_function(A: MatrixLike, f: ScalarMap) -> HermitianMatrix:
    """f(A) = U diag(f(lambda_i)) U*."""
    spectrum = spectrum_of(A)
    f.check_domain(spectrum.eigenvalues)
    values = np.asarray(f(spectrum.eigenvalues), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalFailureError(
            f"{f.name} produced non-finite values", dimension=spectrum.n
        )
    return HermitianMatrix.symmetrized(from_frame(spectrum.frame, values))


def spd_function(A: MatrixLike, f: ScalarMap) -> SpdMatrix:
    """f(A) for f mapping the spectrum into the positive reals."""
    spectrum = spectrum_of(A)
    f.check_domain(spectrum.eigenvalues)
    values = np.asarray(f(spectrum.eigenvalues), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalFailureError(f"{f.name} produced non-finite values", dimension=spectrum.n)
    if not np.all(values > 0):
        raise DomainError(f"{f.name} does not map the spectrum into the positive reals")
    return SpdMatrix.from_spectrum(values, spectrum.frame)


def divided_difference(f: ScalarMap, x: float, y: float, dd_switch: Optional[float] = None) -> float:
    """First divided difference f^[1](x, y)."""
    switch = settings.dd_switch if dd_switch is None else dd_switch
    f.check_domain(np.array([x, y]))
    if abs(x - y) > switch * max(abs(x), abs(y)):
        return float((f(x) - f(y)) / (x - y))
    midpoint = (x + y) / 2
    value = f.derivative(midpoint)
    if f.d3f is not None:
        value = value + f.d3f(midpoint) * (x - y) ** 2 / 24
    return float(value)


def divided_difference_pairs(
    f: ScalarMap,
    x: np.ndarray,
    y: np.ndarray,
    near_mask: Optional[np.ndarray] = None,
    dd_switch: Optional[float] = None,
) -> np.ndarray:
    """Elementwise f^[1](x, y) over broadcast arrays.

    Pairs flagged in ``near_mask`` always take the derivative branch.
    """
    switch = settings.dd_switch if dd_switch is None else dd_switch
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    f.check_domain(x)
    f.check_domain(y)
    diff = x - y
    close = np.abs(diff) <= switch * np.maximum(np.abs(x), np.abs(y))
    if near_mask is not None:
        close = close | near_mask
    midpoint = (x + y) / 2
    near = np.asarray(f.derivative(midpoint), dtype=float)
    if f.d3f is not None:
        near = near + f.d3f(midpoint) * diff**2 / 24
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (np.asarray(f(x), dtype=float) - np.asarray(f(y), dtype=float)) / np.where(close, 1.0, diff)
    return np.where(close, near, direct)


def divided_difference_matrix(
    f: ScalarMap,
    eigenvalues: np.ndarray,
    same_cluster: Optional[np.ndarray] = None,
    dd_switch: Optional[float] = None,
) -> np.ndarray:
    """Loewner matrix [f^[1](x_i, x_j)]; also accepts a stack of eigenvalue vectors."""
    lam = np.asarray(eigenvalues, dtype=float)
    return divided_difference_pairs(
        f, lam[..., :, None], lam[..., None, :], near_mask=same_cluster, dd_switch=dd_switch
    )


def frechet_derivative(f: ScalarMap, A: MatrixLike, H: MatrixLike) -> HermitianMatrix:
    """Df(A)[H] = U (f^[1](lambda_i, lambda_j) o U*HU) U*."""
    check_dimensions(A, H)
    spectrum = spectrum_of(A)
    loewner = divided_difference_matrix(f, spectrum.eigenvalues, spectrum.same_cluster_mask())
    return HermitianMatrix.symmetrized(
        spectrum.from_eigenframe(loewner * spectrum.to_eigenframe(as_array(H)))
    )


def commutator(X: MatrixLike, Y: MatrixLike) -> np.ndarray:
    """[X, Y] = XY - YX (skew-Hermitian for Hermitian X, Y)."""
    check_dimensions(X, Y)
    x, y = as_array(X), as_array(Y)
    return x @ y - y @ x


def i_commutator(D: MatrixLike, K: MatrixLike) -> HermitianMatrix:
    """i[D, K], Hermitian for Hermitian D and K."""
    return HermitianMatrix.symmetrized(1j * commutator(D, K))


def geometric_mean_pair(A: MatrixLike, B: MatrixLike, t: float = 0.5) -> SpdMatrix:
    """A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}."""
    check_dimensions(A, B)
    A, B = SpdMatrix.coerce(A), SpdMatrix.coerce(B)
    root = spd_function(A, ScalarMap.power(0.5)).data
    inv_root = spd_function(A, ScalarMap.power(-0.5)).data
    inner = SpdMatrix.symmetrized(inv_root @ B.data @ inv_root)
    middle = spd_function(inner, ScalarMap.power(t)).data
    return SpdMatrix.symmetrized(root @ middle @ root)


# Norms and inner products

def singular_values(X: MatrixLike) -> np.ndarray:
    arr = as_array(X)
    if _is_hermitian(arr):
        return np.abs(np.linalg.eigvalsh(arr))
    return np.linalg.svd(arr, compute_uv=False)


def norm_from_singular_values(s: np.ndarray, spec: NormSpec) -> np.ndarray:
    """Unitarily invariant norm from singular values along the last axis."""
    s = np.abs(np.asarray(s, dtype=float))
    if spec.tag == NormTag.HILBERT_SCHMIDT or (spec.tag == NormTag.SCHATTEN and spec.p == 2):
        return np.sqrt(np.sum(s**2, axis=-1))
    if spec.tag == NormTag.OPERATOR or (spec.tag == NormTag.SCHATTEN and np.isinf(spec.p)):
        return np.max(s, axis=-1)
    if spec.tag == NormTag.SCHATTEN:
        largest = np.max(s, axis=-1)
        safe = np.where(largest > 0, largest, 1.0)
        scaled = np.sum((s / safe[..., None]) ** spec.p, axis=-1) ** (1 / spec.p)
        return np.where(largest > 0, scaled * safe, 0.0)
    if spec.k > s.shape[-1]:
        raise DomainError(f"Ky Fan k={spec.k} exceeds dimension {s.shape[-1]}", k=spec.k)
    return np.sum(-np.sort(-s, axis=-1)[..., : spec.k], axis=-1)


def ui_norm(X: MatrixLike, spec: NormSpec) -> float:
    """Unitarily invariant norm; Hermitian inputs use |eigenvalues|."""
    return float(norm_from_singular_values(singular_values(X), spec))


def hs_inner(X: MatrixLike, Y: MatrixLike) -> float:
    """<X, Y>_HS = Tr X*Y."""
    check_dimensions(X, Y)
    return float(np.vdot(as_array(X), as_array(Y)).real)


def pinch(spectrum: Spectrum, X: MatrixLike) -> HermitianMatrix:
    """Sum of P_i X P_i over the clusters of the spectrum."""
    arr = as_array(X)
    if arr.shape[0] != spectrum.n:
        raise DimensionMismatchError(spectrum.n, arr.shape[0])
    block = spectrum.to_eigenframe(arr) * spectrum.same_cluster_mask()
    return HermitianMatrix.symmetrized(spectrum.from_eigenframe(block))


# Seeded sampling

def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(n: int, seed: SeedLike, complex_entries: bool = True) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a Gaussian matrix."""
    rng = make_rng(seed)
    gaussian = rng.standard_normal((n, n))
    if complex_entries:
        gaussian = gaussian + 1j * rng.standard_normal((n, n))
    q, r = linalg.qr(gaussian)
    phases = np.diag(r) / np.abs(np.diag(r))
    return (q * phases).astype(np.complex128)


def random_spd(n: int, seed: SeedLike, log_spread: float, complex_entries: bool = True) -> SpdMatrix:
    """Seeded SPD matrix with eigenvalues log-uniform in [e^-s, e^s]."""
    if n < 1:
        raise DomainError(f"Dimension must be at least 1, got {n}")
    if log_spread < 0:
        raise DomainError(f"log_spread must be nonnegative, got {log_spread!r}")
    rng = make_rng(seed)
    eigenvalues = np.exp(rng.uniform(-log_spread, log_spread, size=n))
    frame = random_unitary(n, rng, complex_entries)
    if log_spread == 0:
        return SpdMatrix(np.eye(n))
    return SpdMatrix.from_spectrum(eigenvalues, frame)


def random_hermitian(n: int, seed: SeedLike, scale: float = 1.0, complex_entries: bool = True) -> HermitianMatrix:
    """Seeded Hermitian matrix with Gaussian entries."""
    rng = make_rng(seed)
    gaussian = rng.standard_normal((n, n))
    if complex_entries:
        gaussian = gaussian + 1j * rng.standard_normal((n, n))
    return HermitianMatrix.symmetrized(scale * (gaussian + gaussian.conj().T) / 2)
