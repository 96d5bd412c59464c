"""Pydantic schemas for norms, means, kernels, geodesic families and reports."""

import math
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from spdgeo.core.errors import DomainError


def format_float(value: float) -> str:
    """Shortest decimal that round-trips; integral values drop the fraction."""
    value = float(value)
    if value == 0 and math.copysign(1.0, value) < 0:
        return "-0.0"
    if math.isfinite(value) and value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DomainError(f"Invalid number for {what}: {text!r}") from None


class NormTag(str, Enum):
    """Unitarily invariant norm family."""
    HILBERT_SCHMIDT = "hs"
    OPERATOR = "op"
    SCHATTEN = "schatten"
    KYFAN = "kyfan"


class MeanTag(str, Enum):
    """Symmetric homogeneous mean family."""
    ARITHMETIC = "arithmetic"
    GEOMETRIC = "geometric"
    LOGARITHMIC = "logarithmic"
    HARMONIC = "harmonic"
    ROOT = "root"
    IDENTRIC = "identric"
    STOLARSKY = "stolarsky"
    ALPHA = "alpha"
    OPERATOR_MONOTONE = "operator_monotone"


class StandardFunctionTag(str, Enum):
    """Standard operator monotone function family."""
    WYD = "wyd"
    SQRT_BINOMIAL = "sqrt"
    LOG_MEAN = "log"
    ARITHMETIC = "arith"
    HARMONIC = "harm"
    CUSTOM = "custom"


class GeodesicTag(str, Enum):
    """Closed-form geodesic family."""
    THETA = "theta"
    ALPHA = "alpha"
    FISHER_RAO = "fisher"
    COMMUTING_SQRT = "sqrt"


class DominanceVerdict(str, Enum):
    """Pointwise comparison outcome of two kernels."""
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


# Norm schemas
class NormSpec(BaseModel):
    """Choice of unitarily invariant norm."""

    model_config = ConfigDict(frozen=True)

    tag: NormTag
    p: Optional[float] = None
    k: Optional[int] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "NormSpec":
        if self.tag == NormTag.SCHATTEN:
            if self.p is None or not self.p >= 1:
                raise ValueError(f"Schatten norm requires p >= 1, got {self.p!r}")
        elif self.p is not None:
            raise ValueError(f"{self.tag.value} norm takes no p")
        if self.tag == NormTag.KYFAN:
            if self.k is None or self.k < 1:
                raise ValueError(f"Ky Fan norm requires k >= 1, got {self.k!r}")
        elif self.k is not None:
            raise ValueError(f"{self.tag.value} norm takes no k")
        return self

    @classmethod
    def hs(cls) -> "NormSpec":
        return cls(tag=NormTag.HILBERT_SCHMIDT)

    @classmethod
    def operator(cls) -> "NormSpec":
        return cls(tag=NormTag.OPERATOR)

    @classmethod
    def schatten(cls, p: float) -> "NormSpec":
        return cls(tag=NormTag.SCHATTEN, p=p)

    @classmethod
    def kyfan(cls, k: int) -> "NormSpec":
        return cls(tag=NormTag.KYFAN, k=k)

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Parse ``hs``, ``op``, ``schatten:<p>`` or ``kyfan:<k>``."""
        name, _, param = text.strip().partition(":")
        if name == "hs" and not param:
            return cls.hs()
        if name == "op" and not param:
            return cls.operator()
        if name == "schatten" and param:
            return cls.schatten(parse_float(param, "Schatten p"))
        if name == "kyfan" and param:
            try:
                return cls.kyfan(int(param))
            except ValueError:
                raise DomainError(f"Invalid Ky Fan k: {param!r}") from None
        raise DomainError(f"Unknown norm spec: {text!r}")

    def __str__(self) -> str:
        if self.tag == NormTag.SCHATTEN:
            return f"schatten:{format_float(self.p)}"
        if self.tag == NormTag.KYFAN:
            return f"kyfan:{self.k}"
        return self.tag.value


# Mean schemas
class StandardFunctionSpec(BaseModel):
    """Standard operator monotone function f with f(1)=1 and x f(1/x) = f(x)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tag: StandardFunctionTag
    p: Optional[float] = None
    name: Optional[str] = None
    func: Optional[Callable[[float], float]] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def check_parameters(self) -> "StandardFunctionSpec":
        if self.tag == StandardFunctionTag.WYD:
            if self.p is None or not 0 < self.p < 1:
                raise ValueError(f"WYD function requires 0 < p < 1, got {self.p!r}")
        elif self.p is not None:
            raise ValueError(f"{self.tag.value} takes no parameter")
        if self.tag == StandardFunctionTag.CUSTOM:
            if self.func is None:
                raise ValueError("custom standard function requires func")
            self._check_standard(self.func)
        return self

    @staticmethod
    def _check_standard(func: Callable[[float], float]) -> None:
        if abs(func(1.0) - 1.0) > 1e-10:
            raise ValueError(f"standard function must satisfy f(1)=1, got {func(1.0)!r}")
        for x in [10.0 ** (e / 4) for e in range(-12, 13)]:
            lhs, rhs = x * func(1 / x), func(x)
            if abs(lhs - rhs) > 1e-10 * max(1.0, abs(rhs)):
                raise ValueError(f"standard function must satisfy x f(1/x) = f(x); fails at x={x!r}")

    @classmethod
    def wyd(cls, p: float) -> "StandardFunctionSpec":
        return cls(tag=StandardFunctionTag.WYD, p=p)

    @classmethod
    def custom(cls, name: str, func: Callable[[float], float]) -> "StandardFunctionSpec":
        return cls(tag=StandardFunctionTag.CUSTOM, name=name, func=func)

    def __str__(self) -> str:
        if self.tag == StandardFunctionTag.WYD:
            return f"wyd:{format_float(self.p)}"
        if self.tag == StandardFunctionTag.CUSTOM:
            return f"custom:{self.name}"
        return f"om:{self.tag.value}"


class MeanSpec(BaseModel):
    """Tagged symmetric homogeneous mean."""

    model_config = ConfigDict(frozen=True)

    tag: MeanTag
    param: Optional[float] = None
    function: Optional[StandardFunctionSpec] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "MeanSpec":
        if self.tag == MeanTag.STOLARSKY:
            if self.param is None or not math.isfinite(self.param):
                raise ValueError(f"Stolarsky mean requires a finite parameter, got {self.param!r}")
        elif self.tag == MeanTag.ALPHA:
            if self.param is None or not 0 < self.param <= 2:
                raise ValueError(f"alpha family requires 0 < alpha <= 2, got {self.param!r}")
        elif self.param is not None:
            raise ValueError(f"{self.tag.value} mean takes no parameter")
        if (self.tag == MeanTag.OPERATOR_MONOTONE) != (self.function is not None):
            raise ValueError("function is required for, and only for, operator_monotone means")
        return self

    @classmethod
    def arithmetic(cls) -> "MeanSpec":
        return cls(tag=MeanTag.ARITHMETIC)

    @classmethod
    def geometric(cls) -> "MeanSpec":
        return cls(tag=MeanTag.GEOMETRIC)

    @classmethod
    def logarithmic(cls) -> "MeanSpec":
        return cls(tag=MeanTag.LOGARITHMIC)

    @classmethod
    def harmonic(cls) -> "MeanSpec":
        return cls(tag=MeanTag.HARMONIC)

    @classmethod
    def root(cls) -> "MeanSpec":
        return cls(tag=MeanTag.ROOT)

    @classmethod
    def identric(cls) -> "MeanSpec":
        return cls(tag=MeanTag.IDENTRIC)

    @classmethod
    def stolarsky(cls, theta: float) -> "MeanSpec":
        return cls(tag=MeanTag.STOLARSKY, param=theta)

    @classmethod
    def alpha(cls, alpha: float) -> "MeanSpec":
        return cls(tag=MeanTag.ALPHA, param=alpha)

    @classmethod
    def from_function(cls, function: StandardFunctionSpec) -> "MeanSpec":
        return cls(tag=MeanTag.OPERATOR_MONOTONE, function=function)

    @classmethod
    def parse(cls, text: str) -> "MeanSpec":
        """Parse a mean name with an optional ``:param``."""
        name, sep, param = text.strip().partition(":")
        simple = {
            "arithmetic": MeanTag.ARITHMETIC,
            "geometric": MeanTag.GEOMETRIC,
            "logarithmic": MeanTag.LOGARITHMIC,
            "harmonic": MeanTag.HARMONIC,
            "root": MeanTag.ROOT,
            "identric": MeanTag.IDENTRIC,
        }
        try:
            if name in simple and not sep:
                return cls(tag=simple[name])
            if name == "stolarsky" and param:
                return cls.stolarsky(parse_float(param, "Stolarsky parameter"))
            if name == "alpha" and param:
                return cls.alpha(parse_float(param, "alpha"))
            if name == "wyd" and param:
                return cls.from_function(StandardFunctionSpec.wyd(parse_float(param, "WYD p")))
            if name == "om" and param in {"sqrt", "log", "arith", "harm"}:
                return cls.from_function(StandardFunctionSpec(tag=StandardFunctionTag(param)))
        except ValueError as e:
            raise DomainError(f"Invalid mean spec {text!r}: {e}") from None
        raise DomainError(f"Unknown mean spec: {text!r}")

    def __str__(self) -> str:
        if self.tag in (MeanTag.STOLARSKY, MeanTag.ALPHA):
            return f"{self.tag.value}:{format_float(self.param)}"
        if self.tag == MeanTag.OPERATOR_MONOTONE:
            if self.function.tag == StandardFunctionTag.CUSTOM:
                raise DomainError("custom standard functions have no string form")
            return str(self.function)
        return self.tag.value


KERNEL_ALIASES = {
    "bures": "arithmetic^1",
    "bkm": "logarithmic^1",
    "wy": "root^1",
}


class KernelSpec(BaseModel):
    """Kernel phi(x, y) = M(x, y)^theta."""

    model_config = ConfigDict(frozen=True)

    mean: MeanSpec
    theta: float

    @field_validator("theta")
    @classmethod
    def check_theta(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"theta must be finite, got {value!r}")
        return value

    @classmethod
    def of(cls, mean: MeanSpec, theta: float) -> "KernelSpec":
        return cls(mean=mean, theta=theta)

    @classmethod
    def stolarsky(cls, theta: float) -> "KernelSpec":
        """The Euclidean pull-back kernel phi_theta = M_theta^theta."""
        return cls(mean=MeanSpec.stolarsky(theta), theta=theta)

    @classmethod
    def alpha(cls, alpha: float) -> "KernelSpec":
        """psi_alpha = N_alpha^2."""
        return cls(mean=MeanSpec.alpha(alpha), theta=2.0)

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``MEAN[:param]^THETA`` or a named alias."""
        text = KERNEL_ALIASES.get(text.strip(), text.strip())
        mean_text, sep, theta_text = text.rpartition("^")
        if not sep or not mean_text:
            raise DomainError(f"Kernel spec must look like MEAN[:param]^THETA, got {text!r}")
        theta = parse_float(theta_text, "theta")
        try:
            return cls(mean=MeanSpec.parse(mean_text), theta=theta)
        except ValueError as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"Invalid kernel spec {text!r}: {e}") from None

    def __str__(self) -> str:
        return f"{self.mean}^{format_float(self.theta)}"


# Geodesic schemas
class GeodesicFamily(BaseModel):
    """Closed-form geodesic family."""

    model_config = ConfigDict(frozen=True)

    tag: GeodesicTag
    param: Optional[float] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "GeodesicFamily":
        if self.tag == GeodesicTag.THETA:
            if self.param is None or not math.isfinite(self.param):
                raise ValueError(f"theta family requires a finite theta, got {self.param!r}")
        elif self.tag == GeodesicTag.ALPHA:
            if self.param is None or not 0 < self.param <= 2:
                raise ValueError(f"alpha family requires 0 < alpha <= 2, got {self.param!r}")
        elif self.param is not None:
            raise ValueError(f"{self.tag.value} family takes no parameter")
        return self

    @classmethod
    def theta(cls, theta: float) -> "GeodesicFamily":
        return cls(tag=GeodesicTag.THETA, param=theta)

    @classmethod
    def alpha(cls, alpha: float) -> "GeodesicFamily":
        return cls(tag=GeodesicTag.ALPHA, param=alpha)

    @classmethod
    def fisher_rao(cls) -> "GeodesicFamily":
        return cls(tag=GeodesicTag.FISHER_RAO)

    @classmethod
    def commuting_sqrt(cls) -> "GeodesicFamily":
        return cls(tag=GeodesicTag.COMMUTING_SQRT)

    @classmethod
    def parse(cls, text: str) -> "GeodesicFamily":
        """Parse ``theta:<t>``, ``alpha:<a>``, ``fisher`` or ``sqrt``."""
        name, sep, param = text.strip().partition(":")
        try:
            if name == "theta" and param:
                return cls.theta(parse_float(param, "theta"))
            if name == "alpha" and param:
                return cls.alpha(parse_float(param, "alpha"))
            if name == "fisher" and not sep:
                return cls.fisher_rao()
            if name == "sqrt" and not sep:
                return cls.commuting_sqrt()
        except ValueError as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"Invalid geodesic family {text!r}: {e}") from None
        raise DomainError(f"Unknown geodesic family: {text!r}")

    def __str__(self) -> str:
        if self.param is None:
            return self.tag.value
        return f"{self.tag.value}:{format_float(self.param)}"


class PathSearchConfig(BaseModel):
    """Settings of the discretized shortest-path search."""

    segments: int = Field(16, ge=2)
    max_iterations: int = Field(500, ge=1)
    step_tol: float = Field(1e-10, gt=0)
    quadrature_points_per_segment: int = Field(8, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    refinements: int = Field(0, ge=0)


# Scalar comparison reports
class AxiomViolation(BaseModel):
    """One failed mean axiom on the test grid."""
    axiom: str
    x: float
    y: float
    detail: str


class MeanAxiomReport(BaseModel):
    """Outcome of the mean axiom sweep."""
    violations: List[AxiomViolation] = Field(default_factory=list)
    total_violations: int = 0
    checked_pairs: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


class PdVerdict(BaseModel):
    """Positive semidefiniteness verdict of sampled Gram or Loewner matrices."""
    passed: bool
    min_eigenvalue: float
    max_eigenvalue: float
    trials: int
    witness_points: Optional[List[float]] = None


# Verification schemas
class CheckSpec(BaseModel):
    """A seeded run of one catalog check."""
    name: str
    seed: int = Field(0, ge=0, lt=2**64)
    dimension: int = Field(3, ge=2)
    samples: int = Field(200, ge=1)
    tolerances: Dict[str, float] = Field(default_factory=dict)


class CheckReport(BaseModel):
    """Result of one catalog check."""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    passed: bool = Field(..., alias="pass")
    worst_margin: float
    criterion: str
    tolerance: float
    witness: Dict[str, Any] = Field(default_factory=dict)
    elapsed: float
    seed: int
    dimension: int
    samples: int
    tolerances: Dict[str, float] = Field(default_factory=dict)
    info: Dict[str, Any] = Field(default_factory=dict)


# Matrix file schema
class MatrixFile(BaseModel):
    """On-disk matrix: row-major [re, im] pairs."""
    n: int = Field(..., ge=1)
    complex: bool
    data: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_shape(self) -> "MatrixFile":
        if len(self.data) != self.n * self.n:
            raise ValueError(f"data must hold n*n = {self.n * self.n} entries, got {len(self.data)}")
        if not self.complex and any(im != 0 for _, im in self.data):
            raise ValueError("real matrix files must have zero imaginary parts")
        return self

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "MatrixFile":
        arr = np.asarray(arr, dtype=np.complex128)
        flat = arr.reshape(-1)
        is_complex = bool(np.any(flat.imag != 0))
        return cls(
            n=arr.shape[0],
            complex=is_complex,
            data=[(float(v.real), float(v.imag)) for v in flat],
        )

    def to_array(self) -> np.ndarray:
        values = np.array([complex(re, im) for re, im in self.data], dtype=np.complex128)
        return values.reshape(self.n, self.n)
