"""Analytic manifold zoo with exact tangents and local feature size.

Every shape here is a compact hypersurface centred at the origin: circle, round
sphere S^{N-1}, ring torus in R^3 and triaxial ellipsoid in R^3. Local feature size
comes from a closed form where one exists and otherwise from the brute-force
medial-axis oracle.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from src.bounds import sphere_exact_variation  # noqa: F401  (public re-export)
from src.config import settings
from src.errors import (
    DomainError,
    OracleUnavailable,
    Unreachable,
    UnsupportedShape,
)
from src.subspace import SubspaceBasis

logger = logging.getLogger(__name__)

ON_MANIFOLD_TOLERANCE = 1e-12
CHORD_TOLERANCE = 1e-9
ROOT_MAX_ITERATIONS = 80
SCAN_MAX_STEPS = 4096


class LfsSource(str, Enum):
    ANALYTIC = "analytic"
    ORACLE = "oracle"


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A point of M with its exact tangent space and local feature size."""

    position: np.ndarray
    tangent: SubspaceBasis
    lfs: float
    lfs_source: LfsSource

    def __post_init__(self) -> None:
        if not self.lfs > 0.0:
            raise DomainError(f"local feature size must be positive, got {self.lfs!r}")
        if self.tangent.ambient_dim != np.asarray(self.position).shape[0]:
            raise ValueError("tangent basis and position live in different spaces")

    @property
    def ambient_dim(self) -> int:
        return self.tangent.ambient_dim


# Medial axis descriptions used by the oracle


class MedialComponent(ABC):
    """One piece of a medial-axis description."""

    @abstractmethod
    def distance(self, x: np.ndarray) -> float:
        """Distance from ``x`` to this piece (never below the true distance)."""


@dataclass(frozen=True, eq=False)
class MedialPoint(MedialComponent):
    center: np.ndarray

    def distance(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self.center))


@dataclass(frozen=True, eq=False)
class MedialLine(MedialComponent):
    """Full line through ``origin`` with unit ``direction`` (exact distance)."""

    origin: np.ndarray
    direction: np.ndarray

    def distance(self, x: np.ndarray) -> float:
        offset = x - self.origin
        return float(np.linalg.norm(offset - (offset @ self.direction) * self.direction))


class SampledMedialSet(MedialComponent):
    """Finite sample of a medial piece, queried through a k-d tree."""

    def __init__(self, points: np.ndarray) -> None:
        self.points = np.asarray(points, dtype=float)
        self.tree = cKDTree(self.points)

    def distance(self, x: np.ndarray) -> float:
        distance, _ = self.tree.query(x)
        return float(distance)


class MedialDisk(MedialComponent):
    """Filled planar ellipse {x_k = 0, (x_i/alpha)^2 + (x_j/beta)^2 <= 1}.

    Interior points are exact; outside the disk the distance goes to a dense
    sample of the boundary, refined near the ends of the long axis.
    """

    def __init__(
        self,
        plane_axes: Tuple[int, int],
        normal_axis: int,
        semi_axes: Tuple[float, float],
        resolution: float,
    ) -> None:
        self.plane_axes = plane_axes
        self.normal_axis = normal_axis
        self.alpha, self.beta = semi_axes
        longest = max(self.alpha, self.beta)
        count = max(64, int(math.ceil(2.0 * math.pi * longest / resolution)))
        angles = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        # Refine around the vertices of the long axis, where the disk boundary bends most.
        window = 0.1
        fine = np.linspace(-window, window, max(16, count // 8))
        if self.alpha >= self.beta:
            ends = np.concatenate([fine, math.pi + fine])
        else:
            ends = np.concatenate([0.5 * math.pi + fine, 1.5 * math.pi + fine])
        angles = np.concatenate([angles, ends])
        boundary = np.column_stack([self.alpha * np.cos(angles), self.beta * np.sin(angles)])
        self.boundary = SampledMedialSet(boundary)

    def distance(self, x: np.ndarray) -> float:
        i, j = self.plane_axes
        in_plane = np.array([x[i], x[j]])
        height = float(x[self.normal_axis])
        if self.alpha > 0.0 and self.beta > 0.0:
            if (in_plane[0] / self.alpha) ** 2 + (in_plane[1] / self.beta) ** 2 <= 1.0:
                return abs(height)
        return math.hypot(height, self.boundary.distance(in_plane))


class MedialAxis:
    """Union of medial components; distance is the minimum over pieces."""

    def __init__(self, components: Sequence[MedialComponent]) -> None:
        self.components = list(components)

    def distance(self, x: np.ndarray) -> float:
        return min(component.distance(x) for component in self.components)


# Paths used to place q at a prescribed chordal distance from p


@dataclass(frozen=True)
class ManifoldPath:
    """A curve on M starting at p, vectorized over the path parameter."""

    start: np.ndarray
    curve: Callable[[np.ndarray], np.ndarray]
    max_param: float
    exact_param: Optional[Callable[[float], Optional[float]]] = None
    displacement: Optional[Callable[[float], np.ndarray]] = None

    def point(self, s: float) -> np.ndarray:
        return self.curve(np.array([s]))[0]

    def offset(self, s: float) -> np.ndarray:
        """point(s) - start, free of cancellation when the path provides it."""
        if self.displacement is not None:
            return self.displacement(s)
        return self.point(s) - self.start

    def chord(self, s: float) -> float:
        return float(np.linalg.norm(self.point(s) - self.start))

    def solve(self, target: float) -> Optional[float]:
        """Smallest parameter at which the chord from the start equals ``target``."""
        if self.exact_param is not None:
            return self.exact_param(target)
        step = max(target / 8.0, self.max_param / SCAN_MAX_STEPS)
        grid = np.arange(step, self.max_param + step, step)
        chords = np.linalg.norm(self.curve(grid) - self.start, axis=1)
        hits = np.nonzero(chords >= target)[0]
        if hits.size == 0:
            return None
        hi = float(grid[hits[0]])
        lo = float(grid[hits[0] - 1]) if hits[0] > 0 else 0.0
        try:
            return float(
                brentq(
                    lambda s: self.chord(s) - target,
                    lo,
                    hi,
                    xtol=1e-15,
                    maxiter=ROOT_MAX_ITERATIONS,
                )
            )
        except (RuntimeError, ValueError) as e:
            logger.debug("Chord root solve failed on [%g, %g]: %s", lo, hi, e)
            return None


def _random_unit_orthogonal(direction: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    while True:
        w = rng.standard_normal(direction.shape[0])
        w -= (w @ direction) * direction
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            return w / norm


class Manifold(ABC):
    """Compact hypersurface of R^N with analytic geometry."""

    name: str = "manifold"

    @property
    @abstractmethod
    def ambient_dim(self) -> int: ...

    @property
    def intrinsic_dim(self) -> int:
        return self.ambient_dim - 1

    @property
    @abstractmethod
    def parameters(self) -> Dict[str, float]: ...

    @property
    @abstractmethod
    def reach(self) -> Optional[float]:
        """Infimum of lfs over M, when known in closed form."""

    @property
    @abstractmethod
    def diameter(self) -> float: ...

    @property
    def is_sphere(self) -> bool:
        return False

    @property
    def has_analytic_lfs(self) -> bool:
        return True

    @property
    def default_oracle_resolution(self) -> float:
        return settings.oracle_resolution

    @abstractmethod
    def implicit(self, x: np.ndarray) -> float:
        """Implicit equation, zero exactly on M."""

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def sample_position(self, rng: np.random.Generator) -> np.ndarray:
        """Point drawn uniformly with respect to surface area."""

    @abstractmethod
    def tangent_basis(self, x: np.ndarray) -> SubspaceBasis: ...

    @abstractmethod
    def closest_point(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def path_from(self, x: np.ndarray, rng: np.random.Generator) -> ManifoldPath: ...

    def analytic_lfs(self, x: np.ndarray) -> Optional[float]:
        return None

    def medial_axis(self, resolution: float) -> MedialAxis:
        raise OracleUnavailable(f"no medial-axis description registered for {self.name}")

    def unit_normal(self, x: np.ndarray) -> np.ndarray:
        g = self.gradient(x)
        return g / np.linalg.norm(g)

    def distance(self, x: np.ndarray) -> float:
        """Euclidean distance from an ambient point to M."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.closest_point(x)))

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "params": self.parameters}


@dataclass(frozen=True)
class Sphere(Manifold):
    """Round sphere S^{n-1} of the given radius in R^n."""

    n: int = 3
    radius: float = 1.0
    name = "sphere"

    def __post_init__(self) -> None:
        if not 2 <= self.n <= settings.max_ambient_dim:
            raise DomainError(
                f"sphere ambient dimension {self.n} outside [2, {settings.max_ambient_dim}]"
            )
        if not self.radius > 0.0:
            raise DomainError(f"sphere radius must be positive, got {self.radius!r}")

    @property
    def ambient_dim(self) -> int:
        return self.n

    @property
    def parameters(self) -> Dict[str, float]:
        return {"dim": float(self.n), "radius": self.radius}

    @property
    def reach(self) -> Optional[float]:
        return self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def is_sphere(self) -> bool:
        return True

    def implicit(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x) - self.radius)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) / np.linalg.norm(x)

    def sample_position(self, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal(self.n)
        return self.radius * g / np.linalg.norm(g)

    def tangent_basis(self, x: np.ndarray) -> SubspaceBasis:
        return SubspaceBasis(self.n, self.unit_normal(x)).complement()

    def analytic_lfs(self, x: np.ndarray) -> Optional[float]:
        return self.radius

    def medial_axis(self, resolution: float) -> MedialAxis:
        return MedialAxis([MedialPoint(np.zeros(self.n))])

    def closest_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        norm = np.linalg.norm(x)
        if norm == 0.0:
            raise DomainError("the centre has no unique closest point on the sphere")
        return self.radius * x / norm

    def distance(self, x: np.ndarray) -> float:
        return abs(float(np.linalg.norm(x)) - self.radius)

    def path_from(self, x: np.ndarray, rng: np.random.Generator) -> ManifoldPath:
        rho = self.radius
        start = np.asarray(x, dtype=float)
        x_hat = start / np.linalg.norm(start)
        w = _random_unit_orthogonal(x_hat, rng)

        def curve(s: np.ndarray) -> np.ndarray:
            angle = np.asarray(s)[:, None] / rho
            return rho * (np.cos(angle) * x_hat + np.sin(angle) * w)

        def exact(target: float) -> Optional[float]:
            if target > 2.0 * rho:
                return None
            return 2.0 * rho * math.asin(target / (2.0 * rho))

        def displacement(s: float) -> np.ndarray:
            angle = s / rho
            return rho * (-2.0 * math.sin(0.5 * angle) ** 2 * x_hat + math.sin(angle) * w)

        return ManifoldPath(start, curve, math.pi * rho, exact, displacement)


@dataclass(frozen=True)
class Circle(Sphere):
    """Circle of the given radius in R^2."""

    n: int = field(default=2, init=False)
    name = "circle"

    @property
    def parameters(self) -> Dict[str, float]:
        return {"radius": self.radius}

    def tangent_basis(self, x: np.ndarray) -> SubspaceBasis:
        phi = math.atan2(x[1], x[0])
        return SubspaceBasis(2, np.array([[-math.sin(phi), math.cos(phi)]]))


@dataclass(frozen=True)
class Torus(Manifold):
    """Ring torus in R^3 around the z axis with major radius R and minor radius r."""

    R: float = 2.0
    r: float = 0.5
    name = "torus"

    def __post_init__(self) -> None:
        if not self.R > self.r > 0.0:
            raise DomainError(f"torus needs R > r > 0, got R={self.R!r}, r={self.r!r}")
        if self.R <= 2.0 * self.r:
            logger.warning(
                "Torus R=%g <= 2r=%g: lfs is no longer constant near the inner equator",
                self.R,
                2.0 * self.r,
            )

    @property
    def ambient_dim(self) -> int:
        return 3

    @property
    def parameters(self) -> Dict[str, float]:
        return {"R": self.R, "r": self.r}

    @property
    def reach(self) -> Optional[float]:
        return min(self.r, self.R - self.r)

    @property
    def diameter(self) -> float:
        return 2.0 * (self.R + self.r)

    def coordinates(self, x: np.ndarray) -> Tuple[float, float]:
        u = math.atan2(x[1], x[0])
        v = math.atan2(x[2], math.hypot(x[0], x[1]) - self.R)
        return u, v

    def embed(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        ring = self.R + self.r * np.cos(v)
        return np.column_stack([ring * np.cos(u), ring * np.sin(u), self.r * np.sin(v)])

    def implicit(self, x: np.ndarray) -> float:
        return math.hypot(math.hypot(x[0], x[1]) - self.R, x[2]) - self.r

    def gradient(self, x: np.ndarray) -> np.ndarray:
        axis_distance = math.hypot(x[0], x[1])
        offset = axis_distance - self.R
        h = math.hypot(offset, x[2])
        return np.array(
            [
                offset / h * x[0] / axis_distance,
                offset / h * x[1] / axis_distance,
                x[2] / h,
            ]
        )

    def sample_position(self, rng: np.random.Generator) -> np.ndarray:
        # Area element is proportional to R + r cos v.
        while True:
            u, v = rng.uniform(0.0, 2.0 * math.pi, size=2)
            if rng.uniform() * (self.R + self.r) <= self.R + self.r * math.cos(v):
                return self.embed(np.array([u]), np.array([v]))[0]

    def tangent_basis(self, x: np.ndarray) -> SubspaceBasis:
        u, v = self.coordinates(x)
        e_u = [-math.sin(u), math.cos(u), 0.0]
        e_v = [-math.sin(v) * math.cos(u), -math.sin(v) * math.sin(u), math.cos(v)]
        return SubspaceBasis(3, np.array([e_u, e_v]))

    def analytic_lfs(self, x: np.ndarray) -> Optional[float]:
        # Medial axis: spine circle (distance r) and rotation axis.
        return min(self.r, math.hypot(x[0], x[1]))

    def medial_axis(self, resolution: float) -> MedialAxis:
        count = int(math.ceil(2.0 * math.pi * self.R / resolution))
        angles = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        spine = np.column_stack(
            [self.R * np.cos(angles), self.R * np.sin(angles), np.zeros(count)]
        )
        axis = MedialLine(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        return MedialAxis([SampledMedialSet(spine), axis])

    def closest_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        axis_distance = math.hypot(x[0], x[1])
        if axis_distance == 0.0:
            raise DomainError("points on the rotation axis have no unique closest point")
        centre = self.R * np.array([x[0], x[1], 0.0]) / axis_distance
        offset = x - centre
        norm = np.linalg.norm(offset)
        if norm == 0.0:
            raise DomainError("points on the spine circle have no unique closest point")
        return centre + self.r * offset / norm

    def distance(self, x: np.ndarray) -> float:
        return abs(self.implicit(np.asarray(x, dtype=float)))

    def path_from(self, x: np.ndarray, rng: np.random.Generator) -> ManifoldPath:
        u0, v0 = self.coordinates(x)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        # Unit initial speed in the induced metric.
        du = math.cos(heading) / (self.R + self.r * math.cos(v0))
        dv = math.sin(heading) / self.r

        def curve(s: np.ndarray) -> np.ndarray:
            s = np.asarray(s)
            return self.embed(u0 + s * du, v0 + s * dv)

        return ManifoldPath(np.asarray(x, dtype=float), curve, 2.0 * math.pi * (self.R + self.r))


@dataclass(frozen=True)
class Ellipsoid(Manifold):
    """Ellipsoid (x/a)^2 + (y/b)^2 + (z/c)^2 = 1 in R^3."""

    a: float = 1.0
    b: float = 0.8
    c: float = 0.6
    name = "ellipsoid"

    def __post_init__(self) -> None:
        if min(self.a, self.b, self.c) <= 0.0:
            raise DomainError(f"ellipsoid semi-axes must be positive, got {self.semi_axes}")

    @property
    def semi_axes(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def ambient_dim(self) -> int:
        return 3

    @property
    def parameters(self) -> Dict[str, float]:
        return {"a": self.a, "b": self.b, "c": self.c}

    @property
    def reach(self) -> Optional[float]:
        # Smallest principal radius of curvature, attained at the ends of the long axis.
        axes = self.semi_axes
        return float(axes.min() ** 2 / axes.max())

    @property
    def diameter(self) -> float:
        return 2.0 * float(self.semi_axes.max())

    @property
    def has_analytic_lfs(self) -> bool:
        return False

    @property
    def default_oracle_resolution(self) -> float:
        return settings.ellipsoid_oracle_resolution

    def implicit(self, x: np.ndarray) -> float:
        return float(np.sum((np.asarray(x) / self.semi_axes) ** 2) - 1.0)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * np.asarray(x, dtype=float) / self.semi_axes**2

    def sample_position(self, rng: np.random.Generator) -> np.ndarray:
        # Push a uniform sphere sample through diag(a, b, c); accept with the area ratio.
        axes = self.semi_axes
        while True:
            y = rng.standard_normal(3)
            y /= np.linalg.norm(y)
            if rng.uniform() <= np.linalg.norm(y / axes) * axes.min():
                return axes * y

    def tangent_basis(self, x: np.ndarray) -> SubspaceBasis:
        return SubspaceBasis(3, self.unit_normal(x)).complement()

    def medial_axis(self, resolution: float) -> MedialAxis:
        axes = self.semi_axes
        order = np.argsort(-axes, kind="stable")
        i, j, k = (int(order[0]), int(order[1]), int(order[2]))
        c2 = axes[k] ** 2
        # Centres of curvature at the vertices: semi-axes (a_i^2 - c^2) / a_i.
        alpha = max(axes[i] ** 2 - c2, 0.0) / axes[i]
        beta = max(axes[j] ** 2 - c2, 0.0) / axes[j]
        if alpha == 0.0:
            return MedialAxis([MedialPoint(np.zeros(3))])
        return MedialAxis([MedialDisk((i, j), k, (alpha, beta), resolution)])

    def closest_point(self, x: np.ndarray) -> np.ndarray:
        """Nearest point via the secular equation sum (a_i x_i / (a_i^2 + lam))^2 = 1."""
        x = np.asarray(x, dtype=float)
        axes = self.semi_axes
        a2 = axes**2
        c2 = float(a2.min())

        def secular(lam: float) -> float:
            return float(np.sum((axes * x / (a2 + lam)) ** 2) - 1.0)

        lo = -c2 + 1e-14 * c2
        hi = float(axes.max() * np.linalg.norm(x)) + 1e-12
        if secular(lo) > 0.0:
            lam = brentq(secular, lo, hi, xtol=1e-16, maxiter=200)
            return a2 * x / (a2 + lam)

        # The point sits over the medial disk: the multiplier pins to -c^2.
        free = a2 - c2 > 1e-14 * c2
        y = np.zeros(3)
        y[free] = a2[free] * x[free] / (a2[free] - c2)
        remainder = max(0.0, 1.0 - float(np.sum(y[free] ** 2 / a2[free])))
        pinned = np.nonzero(~free)[0]
        weights = x[pinned]
        if np.allclose(weights, 0.0):
            weights = np.zeros(pinned.size)
            weights[0] = 1.0
        weights = weights / np.linalg.norm(weights)
        y[pinned] = math.sqrt(c2 * remainder) * weights
        return y

    def path_from(self, x: np.ndarray, rng: np.random.Generator) -> ManifoldPath:
        axes = self.semi_axes
        start = np.asarray(x, dtype=float)
        y_hat = start / axes
        y_hat /= np.linalg.norm(y_hat)
        w = _random_unit_orthogonal(y_hat, rng)

        def curve(s: np.ndarray) -> np.ndarray:
            s = np.asarray(s)[:, None]
            return axes * (np.cos(s) * y_hat + np.sin(s) * w)

        return ManifoldPath(start, curve, math.pi)


MANIFOLD_TYPES: Dict[str, Type[Manifold]] = {
    "circle": Circle,
    "sphere": Sphere,
    "torus": Torus,
    "ellipsoid": Ellipsoid,
}

_PARAMETER_ALIASES: Dict[str, Dict[str, str]] = {
    "circle": {"radius": "radius"},
    "sphere": {"dim": "n", "n": "n", "N": "n", "radius": "radius"},
    "torus": {"R": "R", "r": "r", "r_major": "R", "r_minor": "r"},
    "ellipsoid": {"a": "a", "b": "b", "c": "c"},
}


def build_manifold(name: str, params: Optional[Dict[str, float]] = None) -> Manifold:
    """Construct a registered shape from its name and a parameter map."""
    if name not in MANIFOLD_TYPES:
        raise UnsupportedShape(
            f"Unsupported shape '{name}'. Must be one of: {', '.join(MANIFOLD_TYPES)}"
        )
    aliases = _PARAMETER_ALIASES[name]
    kwargs: Dict[str, float] = {}
    for key, value in (params or {}).items():
        if key not in aliases:
            raise DomainError(
                f"Unknown parameter '{key}' for {name}. Must be one of: {', '.join(aliases)}"
            )
        target = aliases[key]
        kwargs[target] = int(value) if target == "n" else float(value)
    return MANIFOLD_TYPES[name](**kwargs)  # type: ignore[arg-type]


@lru_cache(maxsize=32)
def _medial_axis(manifold: Manifold, resolution: float) -> MedialAxis:
    logger.debug("Building medial axis for %s at resolution %g", manifold.describe(), resolution)
    return manifold.medial_axis(resolution)


def lfs_oracle(manifold: Manifold, x: np.ndarray, resolution: Optional[float] = None) -> float:
    """Distance from ``x`` on M to a densely sampled medial axis (converges from above)."""
    x = np.asarray(x, dtype=float)
    if manifold.distance(x) > 1e-8:
        raise DomainError("lfs_oracle expects a point on the manifold")
    step = resolution if resolution is not None else manifold.default_oracle_resolution
    return _medial_axis(manifold, float(step)).distance(x)


def point_at(manifold: Manifold, position: np.ndarray) -> ManifoldPoint:
    """Bundle a position on M with its exact tangent and lfs."""
    position = np.asarray(position, dtype=float)
    lfs = manifold.analytic_lfs(position)
    source = LfsSource.ANALYTIC
    if lfs is None:
        lfs = lfs_oracle(manifold, position)
        source = LfsSource.ORACLE
    return ManifoldPoint(position, manifold.tangent_basis(position), float(lfs), source)


def sample_point(manifold: Manifold, rng: np.random.Generator) -> ManifoldPoint:
    """Uniformly distributed point of M."""
    return point_at(manifold, manifold.sample_position(rng))


@dataclass(frozen=True, eq=False)
class PointPair:
    """p, q on M and the offset q - p computed along the construction path."""

    p: ManifoldPoint
    q: ManifoldPoint
    offset: np.ndarray

    @property
    def chord(self) -> float:
        return float(np.linalg.norm(self.offset))

    @property
    def t(self) -> float:
        return self.chord / self.p.lfs


def sample_pair(
    manifold: Manifold,
    p: ManifoldPoint,
    t: float,
    rng: np.random.Generator,
    retry_cap: Optional[int] = None,
) -> PointPair:
    """Pair (p, q) with ||p - q|| = t lfs(p), q found along random paths from p."""
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    target = t * p.lfs
    if target > manifold.diameter:
        raise Unreachable(f"chord {target:g} exceeds the diameter {manifold.diameter:g}")
    attempts = retry_cap if retry_cap is not None else settings.pair_retry_cap
    for attempt in range(attempts):
        path = manifold.path_from(p.position, rng)
        s = path.solve(target)
        if s is None:
            logger.debug("No point at chord %g along direction %d", target, attempt)
            continue
        offset = path.offset(s)
        if abs(np.linalg.norm(offset) - target) <= CHORD_TOLERANCE * p.lfs:
            return PointPair(p, point_at(manifold, path.point(s)), offset)
    raise Unreachable(f"no point at t={t:g} found after {attempts} directions")


def sample_pair_at_t(
    manifold: Manifold,
    p: ManifoldPoint,
    t: float,
    rng: np.random.Generator,
    retry_cap: Optional[int] = None,
) -> ManifoldPoint:
    """Point q on M with ||p - q|| = t lfs(p)."""
    return sample_pair(manifold, p, t, rng, retry_cap).q


def sample_positions(
    manifold: Manifold, count: int, rng: np.random.Generator
) -> np.ndarray:
    """``count`` uniform positions on M as a (count, N) array."""
    return np.array([manifold.sample_position(rng) for _ in range(count)])


def registered_shapes() -> List[str]:
    return list(MANIFOLD_TYPES)
