"""Tangent and local-feature-size estimation from finite samples.

Tangents come from local PCA of the k nearest neighbours. lfs comes from the
shrinking-ball approximation of the medial axis: a ball tangent at the sample is
shrunk along each side of the estimated normal until no other sample lies inside,
and the smaller of the two radii is the estimate.
"""

import logging
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from src.bounds import THM1I_MAX_T, bound_registry
from src.config import settings
from src.errors import (
    CodimensionUnsupported,
    DegenerateNeighborhood,
    DimensionMismatch,
    DomainError,
    NoConvergence,
)
from src.manifolds import Manifold, point_at, sample_positions
from src.reporting import BoundTally, VerificationReport, check_bound
from src.subspace import SubspaceBasis, angle_between, orthonormalize, sin_angle_between

logger = logging.getLogger(__name__)

DIM_HEADER = re.compile(r"^#\s*dim\s+(\d+)\s*$", re.IGNORECASE)
RELIABLE_GAP_RATIO = 10.0
UNRELIABLE_FRACTION = 0.1
SHRINK_MAX_ITERATIONS = 100
DEFAULT_NEIGHBORS = 12

ESTIMATE_COLUMNS = (
    "index",
    "lfs_estimate",
    "gap_ratio",
    "reliable",
    "lfs_exact",
    "lfs_relative_error",
    "tangent_angle_error",
)


class PointCloud:
    """Finite sample of a manifold in R^N with an exact k-nearest-neighbour index.

    The cloud and its index are read-only after construction, so queries may run
    concurrently.
    """

    def __init__(self, points: Any) -> None:
        try:
            array = np.array(points, dtype=float, ndmin=2)
        except ValueError as e:
            raise DimensionMismatch(f"points have inconsistent dimensions: {e}") from e
        if array.ndim != 2:
            raise DimensionMismatch(f"expected an (n, N) array, got shape {array.shape}")
        n, ambient_dim = array.shape
        if ambient_dim < 2:
            raise DomainError(f"ambient dimension must be at least 2, got {ambient_dim}")
        if n < ambient_dim + 1:
            raise DomainError(f"need at least N + 1 = {ambient_dim + 1} points, got {n}")
        array.setflags(write=False)
        self.points = array
        self.tree = cKDTree(array)
        logger.debug("Built k-NN index over %d points in R^%d", n, ambient_dim)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def extent(self) -> float:
        """Diagonal of the bounding box."""
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))

    def _check_index(self, index: int) -> int:
        if not 0 <= index < len(self):
            raise DomainError(f"query index {index} out of range [0, {len(self)})")
        return int(index)

    def knn(self, index: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """Distances and indices of the k nearest samples, the query itself included."""
        index = self._check_index(index)
        if not 1 <= k <= len(self):
            raise DomainError(f"k must lie in [1, {len(self)}], got {k}")
        distances, indices = self.tree.query(self.points[index], k=k)
        return np.atleast_1d(distances), np.atleast_1d(indices)

    def within(self, index: int, radius: float) -> List[int]:
        return sorted(self.tree.query_ball_point(self.points[self._check_index(index)], radius))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PointCloud":
        """One point per line, whitespace-separated, optional "# dim N" header."""
        path = Path(path)
        declared: Optional[int] = None
        with open(path, encoding="utf-8") as f:
            for line in f:
                stripped = line.strip()
                if not stripped:
                    continue
                match = DIM_HEADER.match(stripped)
                if match:
                    declared = int(match.group(1))
                break
        try:
            points = np.loadtxt(path, comments="#", ndmin=2)
        except ValueError as e:
            raise DimensionMismatch(f"{path}: rows have inconsistent lengths ({e})") from e
        if declared is not None and points.shape[1] != declared:
            raise DimensionMismatch(
                f"{path}: header declares dim {declared}, rows have {points.shape[1]} coordinates"
            )
        logger.info("Loaded %d points from %s", points.shape[0], path)
        return cls(points)

    def to_file(self, path: Union[str, Path]) -> None:
        np.savetxt(path, self.points, fmt="%.17g", header=f"dim {self.ambient_dim}", comments="# ")
        logger.info("Wrote %d points to %s", len(self), path)


def sample_cloud(manifold: Manifold, n: int, seed: int = 0) -> PointCloud:
    """n uniform samples of an analytic manifold."""
    return PointCloud(sample_positions(manifold, n, np.random.default_rng(seed)))


@dataclass(frozen=True, eq=False)
class TangentEstimate:
    basis: SubspaceBasis
    eigenvalues: np.ndarray
    gap_ratio: float

    @property
    def reliable(self) -> bool:
        return self.gap_ratio >= RELIABLE_GAP_RATIO


def local_pca(
    cloud: PointCloud, query_index: int, k: int, m: Optional[int] = None
) -> TangentEstimate:
    """Top principal directions of the centred k-NN neighbourhood.

    Without ``m`` the dimension is the first m whose gap lambda_m / lambda_{m+1}
    reaches RELIABLE_GAP_RATIO, or the largest gap when none does.
    """
    n_dims = cloud.ambient_dim
    if m is not None and not 1 <= m < n_dims:
        raise DomainError(f"tangent dimension must lie in [1, {n_dims}), got {m}")
    if k < (m or 1) + 1:
        raise DomainError(f"k must be at least m + 1, got k={k}")
    _, indices = cloud.knn(query_index, k)
    neighbourhood = cloud.points[indices]
    centred = neighbourhood - neighbourhood.mean(axis=0)
    covariance = centred.T @ centred / len(indices)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]

    tiny = max(eigenvalues[0], 1e-300) * 1e-12
    ratios = eigenvalues[:-1] / np.maximum(eigenvalues[1:], tiny)
    if m is None:
        significant = np.flatnonzero(ratios >= RELIABLE_GAP_RATIO)
        m = int(significant[0] if significant.size else np.argmax(ratios)) + 1
    rank = int(np.count_nonzero(eigenvalues > tiny))
    if rank < m:
        raise DegenerateNeighborhood(
            f"neighbourhood of point {query_index} has covariance rank {rank} < {m}"
        )
    basis = orthonormalize(eigenvectors[:, :m].T)
    return TangentEstimate(basis, eigenvalues, float(ratios[m - 1]))


def estimate_tangent(
    cloud: PointCloud, query_index: int, k: int, m: Optional[int] = None
) -> SubspaceBasis:
    return local_pca(cloud, query_index, k, m).basis


def _check_neighbors(cloud: PointCloud, k: int) -> None:
    if not cloud.ambient_dim <= k <= len(cloud):
        raise DomainError(
            f"k must lie in [{cloud.ambient_dim}, {len(cloud)}] for a hypersurface in R^{cloud.ambient_dim}, got {k}"
        )


def intrinsic_dimension(
    cloud: PointCloud, k: int = DEFAULT_NEIGHBORS, n_samples: int = 32, seed: int = 0
) -> int:
    """Most common spectral-gap dimension over a random subset of samples."""
    _check_neighbors(cloud, k)
    picks = np.random.default_rng(seed).choice(len(cloud), size=min(n_samples, len(cloud)), replace=False)
    votes: Dict[int, int] = {}
    for index in picks:
        try:
            dim = local_pca(cloud, int(index), k).basis.dim
        except DegenerateNeighborhood:
            continue
        votes[dim] = votes.get(dim, 0) + 1
    if not votes:
        raise DegenerateNeighborhood("no sampled neighbourhood has a usable covariance")
    return max(sorted(votes), key=lambda dim: votes[dim])


def require_hypersurface(cloud: PointCloud, k: int = DEFAULT_NEIGHBORS) -> None:
    """Raise CodimensionUnsupported unless the cloud looks (N-1)-dimensional."""
    dim = intrinsic_dimension(cloud, k)
    if cloud.ambient_dim - dim != 1:
        raise CodimensionUnsupported(
            f"shrinking-ball lfs needs codimension 1, the cloud looks {dim}-dimensional in R^{cloud.ambient_dim}"
        )


def estimate_normal(
    cloud: PointCloud, query_index: int, k: int = DEFAULT_NEIGHBORS
) -> np.ndarray:
    """Unit normal of a codimension-1 sample, refined by a local quadratic height fit.

    Oriented away from the cloud centroid.
    """
    n_dims = cloud.ambient_dim
    m = n_dims - 1
    estimate = local_pca(cloud, query_index, k, m)
    normal = estimate.basis.complement().vectors[0]
    tangent = estimate.basis.vectors

    _, indices = cloud.knn(query_index, k)
    offsets = cloud.points[indices] - cloud.points[query_index]
    u = offsets @ tangent.T
    height = offsets @ normal
    quadratic = [u[:, a] * u[:, b] for a in range(m) for b in range(a, m)]
    design = np.column_stack([u] + quadratic)
    if design.shape[0] > design.shape[1]:
        coefficients, *_ = np.linalg.lstsq(design, height, rcond=None)
        normal = normal - coefficients[:m] @ tangent
        normal /= np.linalg.norm(normal)

    if float((cloud.points[query_index] - cloud.centroid) @ normal) < 0.0:
        normal = -normal
    return normal


def shrinking_ball_radius(
    cloud: PointCloud, query_index: int, direction: np.ndarray, initial_radius: float
) -> float:
    """Radius of the largest sample-free ball tangent at the query on the side of ``direction``."""
    p = cloud.points[query_index]
    radius = float(initial_radius)
    for _ in range(SHRINK_MAX_ITERATIONS):
        centre = p + radius * direction
        distances, indices = cloud.tree.query(centre, k=min(3, len(cloud)))
        nearest = None
        for distance, index in zip(np.atleast_1d(distances), np.atleast_1d(indices)):
            if index != query_index and np.any(cloud.points[index] != p):
                nearest = (float(distance), int(index))
                break
        if nearest is None or nearest[0] >= radius * (1.0 - 1e-12):
            return radius
        x = cloud.points[nearest[1]]
        lift = float((x - p) @ direction)
        if lift <= 0.0:
            return radius
        updated = float((x - p) @ (x - p)) / (2.0 * lift)
        if updated >= radius:
            return radius
        radius = updated
    raise NoConvergence(f"shrinking ball at point {query_index} did not settle in {SHRINK_MAX_ITERATIONS} steps")


def estimate_lfs(
    cloud: PointCloud,
    query_index: int,
    initial_radius: Optional[float] = None,
    k: int = DEFAULT_NEIGHBORS,
    m: Optional[int] = None,
) -> float:
    """Shrinking-ball estimate of lfs at one sample, the min over both normal sides.

    Without ``m`` the tangent dimension is read off the local spectral gap.
    """
    query_index = cloud._check_index(query_index)
    if m is None:
        m = local_pca(cloud, query_index, k).basis.dim
    if cloud.ambient_dim - m != 1:
        raise CodimensionUnsupported(
            f"shrinking-ball lfs needs codimension 1, got {cloud.ambient_dim - m}"
        )
    normal = estimate_normal(cloud, query_index, k)
    start = initial_radius if initial_radius is not None else cloud.extent
    if not start > 0.0:
        raise DomainError(f"initial radius must be positive, got {start!r}")
    return min(
        shrinking_ball_radius(cloud, query_index, normal, start),
        shrinking_ball_radius(cloud, query_index, -normal, start),
    )


@dataclass
class PointEstimate:
    index: int
    lfs_estimate: Optional[float]
    gap_ratio: float
    reliable: bool
    lfs_exact: Optional[float] = None
    tangent_angle_error: Optional[float] = None

    @property
    def lfs_relative_error(self) -> Optional[float]:
        if self.lfs_estimate is None or not self.lfs_exact:
            return None
        return abs(self.lfs_estimate - self.lfs_exact) / self.lfs_exact

    def row(self) -> Tuple[Any, ...]:
        return (
            self.index,
            self.lfs_estimate,
            self.gap_ratio,
            self.reliable,
            self.lfs_exact,
            self.lfs_relative_error,
            self.tangent_angle_error,
        )


def estimate_point(
    cloud: PointCloud,
    index: int,
    k: int = DEFAULT_NEIGHBORS,
    reference: Optional[Manifold] = None,
) -> PointEstimate:
    """Tangent and lfs estimates at one sample, compared with ``reference`` when given."""
    estimate = local_pca(cloud, index, k, cloud.ambient_dim - 1)
    try:
        lfs = estimate_lfs(cloud, index, k=k, m=cloud.ambient_dim - 1)
    except NoConvergence as e:
        logger.warning("%s", e)
        lfs = None
    result = PointEstimate(index, lfs, estimate.gap_ratio, estimate.reliable)
    if reference is not None:
        exact = point_at(reference, cloud.points[index])
        result.lfs_exact = exact.lfs
        result.tangent_angle_error = angle_between(estimate.basis, exact.tangent)
    return result


def estimate_all(
    cloud: PointCloud,
    k: int = DEFAULT_NEIGHBORS,
    indices: Optional[Sequence[int]] = None,
    reference: Optional[Manifold] = None,
) -> List[PointEstimate]:
    require_hypersurface(cloud, k)
    chosen = range(len(cloud)) if indices is None else indices
    return [estimate_point(cloud, int(i), k, reference) for i in chosen]


class _EstimateCache:
    """Per-sample tangent and lfs, estimated or taken from the exact manifold."""

    def __init__(
        self, cloud: PointCloud, k: int, exact: Optional[Manifold], inject_exact: bool
    ) -> None:
        self.cloud = cloud
        self.k = k
        self.exact = exact
        self.inject_exact = inject_exact
        self._entries: Dict[int, Tuple[SubspaceBasis, float, bool]] = {}

    def get(self, index: int) -> Tuple[SubspaceBasis, float, bool]:
        if index not in self._entries:
            if self.inject_exact and self.exact is not None:
                point = point_at(self.exact, self.cloud.points[index])
                entry = (point.tangent, point.lfs, True)
            else:
                estimate = local_pca(self.cloud, index, self.k, self.cloud.ambient_dim - 1)
                lfs = estimate_lfs(self.cloud, index, k=self.k, m=self.cloud.ambient_dim - 1)
                entry = (estimate.basis, lfs, estimate.reliable)
            self._entries[index] = entry
        return self._entries[index]

    @property
    def unreliable_fraction(self) -> float:
        if not self._entries:
            return 0.0
        return sum(not reliable for _, _, reliable in self._entries.values()) / len(self._entries)


def empirical_bound_audit(
    cloud: PointCloud,
    k: int,
    n_pairs: int,
    seed: int = 0,
    t_range: Tuple[float, float] = (0.05, THM1I_MAX_T),
    exact: Optional[Manifold] = None,
    inject_exact: bool = False,
    bound_id: str = "thm1i",
    tolerance: Optional[float] = None,
    config: Optional[Dict[str, Any]] = None,
) -> VerificationReport:
    """Tangent-variation audit on a cloud with estimated tangents and lfs.

    Violations here are apparent: they measure how estimator error inflates the
    measured variation. With ``inject_exact`` the exact tangents and lfs of
    ``exact`` replace the estimates.
    """
    if n_pairs < 1:
        raise DomainError(f"need at least one pair, got {n_pairs}")
    if inject_exact and exact is None:
        raise DomainError("injecting exact tangents needs the reference manifold")
    low, high = float(t_range[0]), float(t_range[1])
    if not 0.0 <= low < high:
        raise DomainError(f"t range ({low}, {high}] is empty")
    _check_neighbors(cloud, k)
    if not inject_exact:
        require_hypersurface(cloud, k)
    spec = bound_registry.get(bound_id)
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    rtol = tolerance if tolerance is not None else settings.analytic_tolerance
    atol = settings.absolute_floor
    cache = _EstimateCache(cloud, k, exact, inject_exact)
    tally = BoundTally(spec.kind.value, t_domain=str(spec.t_domain), normalization=spec.normalization.value)
    failures = 0
    lipschitz_breaks = 0
    tangent_errors: List[float] = []

    for _ in range(n_pairs):
        i = int(rng.integers(len(cloud)))
        try:
            tangent_p, lfs_p, _ = cache.get(i)
            nearby = cloud.within(i, high * lfs_p)
            distances = np.linalg.norm(cloud.points[nearby] - cloud.points[i], axis=1)
            candidates = [
                j for j, d in zip(nearby, distances) if low * lfs_p < d <= high * lfs_p
            ]
            if not candidates:
                failures += 1
                continue
            j = int(candidates[int(rng.integers(len(candidates)))])
            tangent_q, lfs_q, _ = cache.get(j)
        except (DegenerateNeighborhood, NoConvergence) as e:
            logger.debug("Estimation failed: %s", e)
            failures += 1
            continue
        chord = float(np.linalg.norm(cloud.points[j] - cloud.points[i]))
        t = chord / lfs_p
        if abs(lfs_p - lfs_q) > chord:
            lipschitz_breaks += 1
        if spec.t_domain.contains(t):
            tally.add(check_bound(spec.value(t), sin_angle_between(tangent_p, tangent_q), rtol, atol))
        if exact is not None and not inject_exact:
            tangent_errors.append(angle_between(tangent_p, exact.tangent_basis(cloud.points[i])))

    completed = n_pairs - failures
    unreliable = cache.unreliable_fraction
    within_budget = failures <= settings.max_failure_fraction * n_pairs
    statistics: Dict[str, Optional[float]] = {
        "apparent_violation_rate": tally.violations / tally.in_domain if tally.in_domain else None,
        "unreliable_fraction": unreliable,
        "lipschitz_break_rate": lipschitz_breaks / completed if completed else None,
    }
    if tangent_errors:
        statistics["median_tangent_angle_error"] = float(np.median(tangent_errors))
    report = VerificationReport(
        command="cloud",
        manifold=exact.describe() if exact is not None else {"name": "cloud", "params": {}},
        seed=seed,
        n_pairs=n_pairs,
        n_completed=completed,
        sampling_failures=failures,
        t_range=(low, high),
        tolerance=rtol,
        per_bound={spec.id: tally.summary()},
        flags={
            "estimates_reliable": within_budget and unreliable <= UNRELIABLE_FRACTION,
            "within_failure_budget": within_budget,
        },
        statistics=statistics,
        config=config or {"n_points": len(cloud), "ambient_dim": cloud.ambient_dim, "k": k},
        wall_time_s=time.perf_counter() - started,
    )
    if unreliable > UNRELIABLE_FRACTION:
        report.notes.append(
            f"estimates unreliable: {unreliable:.1%} of samples fail the spectral-gap test"
        )
        logger.warning("Estimates unreliable on %d-point cloud (%.1f%%)", len(cloud), 100 * unreliable)
    if not within_budget:
        report.notes.append(
            f"{failures} of {n_pairs} pairs failed (budget {settings.max_failure_fraction:.0%})"
        )
        logger.warning("Cloud audit over the failure budget: %d of %d pairs failed", failures, n_pairs)
    logger.info(
        "Cloud audit | n=%d pairs=%d apparent violations=%d",
        len(cloud),
        completed,
        tally.violations,
    )
    return report


def audit_convergence(
    manifold: Manifold,
    sizes: Sequence[int],
    k: int = DEFAULT_NEIGHBORS,
    n_pairs: int = 1000,
    seed: int = 0,
    n_lfs_samples: int = 200,
    t_range: Tuple[float, float] = (0.05, THM1I_MAX_T),
) -> List[Dict[str, Optional[float]]]:
    """Apparent-violation rate and median estimator errors per cloud size."""
    rows = []
    for n in sizes:
        cloud = sample_cloud(manifold, n, seed)
        report = empirical_bound_audit(cloud, k, n_pairs, seed, t_range, exact=manifold)
        picks = np.random.default_rng(seed).choice(n, size=min(n, n_lfs_samples), replace=False)
        estimates = estimate_all(cloud, k, picks, reference=manifold)
        lfs_errors = [e.lfs_relative_error for e in estimates if e.lfs_relative_error is not None]
        angle_errors = [e.tangent_angle_error for e in estimates if e.tangent_angle_error is not None]
        rows.append(
            {
                "n": float(n),
                "apparent_violation_rate": report.statistics.get("apparent_violation_rate"),
                "median_lfs_error": float(np.median(lfs_errors)) if lfs_errors else None,
                "median_tangent_angle_error": float(np.median(angle_errors)) if angle_errors else None,
            }
        )
        logger.info("Convergence row | n=%d lfs error=%s", n, rows[-1]["median_lfs_error"])
    return rows

