"""Linear subspaces: orthonormal bases, projections and the largest principal angle."""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.linalg import null_space

from src.errors import DimensionMismatch, InvalidOrder, ZeroSpan

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]], Sequence[float]]

GRAM_TOLERANCE = 1e-12
ZERO_NORM = 1e-14
RANK_TOLERANCE = 1e-10
# Below this angle arccos loses digits; the sine form is used instead.
SMALL_ANGLE = 1e-4


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal basis of a k-dimensional linear subspace of R^N.

    ``vectors`` is a (k, N) array whose rows are the basis vectors.
    """

    ambient_dim: int
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.array(self.vectors, dtype=float, ndmin=2)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        k, n = vectors.shape
        if n != self.ambient_dim:
            raise DimensionMismatch(
                f"basis vectors have length {n}, ambient dimension is {self.ambient_dim}"
            )
        if not 1 <= k <= n:
            raise ValueError(f"subspace dimension {k} outside [1, {n}]")
        gram_error = np.max(np.abs(vectors @ vectors.T - np.eye(k)))
        if gram_error > GRAM_TOLERANCE:
            raise ValueError(f"basis is not orthonormal (Gram deviation {gram_error:.3e})")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[0])

    def project(self, v: ArrayLike) -> np.ndarray:
        """Orthogonal projection of a vector onto the subspace."""
        v = _as_vector(v, self.ambient_dim)
        return self.vectors.T @ (self.vectors @ v)

    def coordinates(self, v: ArrayLike) -> np.ndarray:
        """Coordinates of the projection of ``v`` in this basis."""
        return self.vectors @ _as_vector(v, self.ambient_dim)

    def complement(self) -> "SubspaceBasis":
        """Orthogonal complement; for hypersurface tangents this is the normal line."""
        if self.dim == self.ambient_dim:
            raise ValueError("the full space has no nontrivial complement")
        return SubspaceBasis(self.ambient_dim, _fix_signs(null_space(self.vectors).T))


def _as_vector(v: ArrayLike, ambient_dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != ambient_dim:
        raise DimensionMismatch(f"vector of length {v.shape[0]} in R^{ambient_dim}")
    return v


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each row positive."""
    vectors = np.array(vectors, dtype=float)
    pivots = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), pivots])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def orthonormalize(spanning_vectors: ArrayLike) -> SubspaceBasis:
    """Orthonormal basis of the span of ``spanning_vectors``.

    The numerical rank is the number of singular values of the stacked matrix at
    least ``RANK_TOLERANCE`` times the largest one.
    """
    try:
        stacked = np.atleast_2d(np.asarray(spanning_vectors, dtype=float))
    except ValueError as e:
        raise DimensionMismatch("spanning vectors must all have the same length") from e
    if stacked.ndim != 2:
        raise DimensionMismatch("spanning vectors must all have the same length")
    if np.all(np.linalg.norm(stacked, axis=1) <= ZERO_NORM):
        raise ZeroSpan("all spanning vectors are numerically zero")

    _, singular_values, vt = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(singular_values >= RANK_TOLERANCE * singular_values[0]))
    return SubspaceBasis(stacked.shape[1], _fix_signs(vt[:rank]))


def _check_pair(U: SubspaceBasis, V: SubspaceBasis) -> None:
    if U.ambient_dim != V.ambient_dim:
        raise DimensionMismatch(
            f"subspaces live in R^{U.ambient_dim} and R^{V.ambient_dim}"
        )
    if U.dim > V.dim:
        raise InvalidOrder(f"dim(U)={U.dim} exceeds dim(V)={V.dim}")


def sin_angle_between(U: SubspaceBasis, V: SubspaceBasis) -> float:
    """Sine of the largest principal angle, the largest singular value of (I - P_V) Q_U."""
    _check_pair(U, V)
    residual = U.vectors - (U.vectors @ V.vectors.T) @ V.vectors
    return float(np.clip(np.linalg.norm(residual, ord=2), 0.0, 1.0))


def angle_between(U: SubspaceBasis, V: SubspaceBasis) -> float:
    """Largest principal angle between U and V in radians, with dim(U) <= dim(V)."""
    _check_pair(U, V)
    cosines = np.linalg.svd(U.vectors @ V.vectors.T, compute_uv=False)
    angle = float(np.arccos(np.clip(np.min(cosines), 0.0, 1.0)))
    if angle < SMALL_ANGLE:
        return float(np.arcsin(sin_angle_between(U, V)))
    return angle


def distance_to_subspace(
    x: ArrayLike, base_point: ArrayLike, A: SubspaceBasis
) -> float:
    """Distance from ``x`` to the affine subspace ``base_point + span(A)``."""
    offset = _as_vector(x, A.ambient_dim) - _as_vector(base_point, A.ambient_dim)
    return float(np.linalg.norm(offset - A.project(offset)))


def project_to_affine(
    x: ArrayLike, base_point: ArrayLike, A: SubspaceBasis
) -> np.ndarray:
    """Orthogonal projection of ``x`` onto ``base_point + span(A)``."""
    base = _as_vector(base_point, A.ambient_dim)
    return base + A.project(_as_vector(x, A.ambient_dim) - base)
