"""Matrix JSON files: {"n": int, "complex": bool, "data": [[re, im], ...]}."""

import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

from pydantic import ValidationError

from spdgeo.core.errors import DomainError
from spdgeo.core.matcore import HermitianMatrix, MatrixLike, SpdMatrix, as_array
from spdgeo.models.schemas import MatrixFile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_matrix_file(path: PathLike) -> MatrixFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DomainError(f"Cannot read matrix file {str(path)!r}: {e.strerror}", path=str(path)) from None
    try:
        return MatrixFile.model_validate_json(text)
    except ValidationError as e:
        raise DomainError(
            f"Invalid matrix file {str(path)!r}: {e.error_count()} validation errors",
            path=str(path),
            errors=[err["msg"] for err in e.errors()],
        ) from None


def load_hermitian(path: PathLike) -> HermitianMatrix:
    """Load a Hermitian matrix, e.g. a tangent vector."""
    return HermitianMatrix(read_matrix_file(path).to_array())


def load_spd(path: PathLike) -> SpdMatrix:
    """Load a matrix and certify it positive definite."""
    matrix = SpdMatrix(read_matrix_file(path).to_array())
    logger.debug(f"Loaded {matrix.n}x{matrix.n} SPD matrix from {path} (min eigenvalue {matrix.min_eigenvalue:.3e})")
    return matrix


def load_spd_many(paths: Sequence[PathLike]) -> List[SpdMatrix]:
    return [load_spd(path) for path in paths]


def matrix_to_json(matrix: MatrixLike) -> str:
    """Serialize with shortest round-trip floats (json uses repr)."""
    return json.dumps(MatrixFile.from_array(as_array(matrix)).model_dump())


def save_matrix(matrix: MatrixLike, path: PathLike) -> None:
    try:
        Path(path).write_text(matrix_to_json(matrix) + "\n", encoding="utf-8")
    except OSError as e:
        raise DomainError(f"Cannot write matrix file {str(path)!r}: {e.strerror}", path=str(path)) from None
    logger.info(f"Wrote matrix to {path}")


def save_matrices(matrices: Sequence[MatrixLike], path: PathLike) -> None:
    """Write a JSON list of matrix objects."""
    payload = [MatrixFile.from_array(as_array(m)).model_dump() for m in matrices]
    try:
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")
    except OSError as e:
        raise DomainError(f"Cannot write matrix file {str(path)!r}: {e.strerror}", path=str(path)) from None
    logger.info(f"Wrote {len(payload)} matrices to {path}")
