"""Registry of tangent-variation and local-feature-size bounds.

Every bound is a dimensionless function of the normalized distance t. Distance-type
bounds (lem1, lem2, lem2imp and the intermediate inequalities) are in units of
lfs(p); the caller multiplies by lfs(p) when comparing against lengths.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from src.errors import DomainError, UnknownBound

logger = logging.getLogger(__name__)

THM1I_MAX_T = 0.25
THM1II_MAX_T = 19 / 200
AMENTA_DEY_MAX_T = 1 / 3
REACH_BASELINE_MAX_T = 0.5
SPHERE_MAX_T = 2.0


def _require(t: float, upper: float, upper_closed: bool, name: str) -> float:
    t = float(t)
    inside = t <= upper if upper_closed else t < upper
    if math.isnan(t) or t < 0.0 or not inside:
        bracket = "]" if upper_closed else ")"
        raise DomainError(f"{name}: t={t!r} outside [0, {upper}{bracket}")
    return t


def f_of_t(t: float) -> float:
    """f(t) = ((2 + 3t + 2t^2)^2 + 4t + 5) / (2 - 2t), defined for 0 <= t < 1."""
    t = _require(t, 1.0, False, "f_of_t")
    return ((2.0 + 3.0 * t + 2.0 * t * t) ** 2 + 4.0 * t + 5.0) / (2.0 - 2.0 * t)


def bound_thm1i(t: float) -> float:
    """sin of tangent variation <= t f(t) for t <= 1/4."""
    t = _require(t, THM1I_MAX_T, True, "thm1i")
    return t * f_of_t(t)


def improved_tangent_to_manifold(t: float) -> float:
    """dist(x, M) / lfs(p) <= 1 - sqrt(1 - t^2), evaluated in the cancellation-free form."""
    t = _require(t, THM1II_MAX_T, True, "lem2imp")
    return _improved_height(t)


def _improved_height(t: float) -> float:
    return t * t / (1.0 + math.sqrt(1.0 - t * t))


def _improved_chain_radius(t: float) -> float:
    """Bound on ||p - q'_u|| / lfs(p) when the improved lemma bounds ||q_u - q'_u||."""
    return t + (t + _improved_height(t)) * (1.0 + t)


def bound_thm1ii(t: float) -> float:
    """Closed form behind the 3t + O(t^2) constant, valid for t <= 19/200.

    Obtained by rerunning the thm1i chain with the improved lemma's height
    g(t) = t^2 / (1 + sqrt(1 - t^2)) in place of 2 t^2. See
    docs/THM1II_DERIVATION.md.
    """
    t = _require(t, THM1II_MAX_T, True, "thm1ii")
    if t == 0.0:
        return 0.0
    g = _improved_height(t)
    s = _improved_chain_radius(t)
    return (t * t + s * s + 2.0 * g * (1.0 + t)) / (2.0 * t * (1.0 - t))


def bound_amenta_dey(t: float) -> float:
    """Two-dimensional baseline t / (1 - t) for t <= 1/3."""
    t = _require(t, AMENTA_DEY_MAX_T, True, "ad")
    return t / (1.0 - t)


def bound_nsw(t: float) -> float:
    """Reach-normalized baseline 2 sqrt(t (1 - t)) for t <= 1/2."""
    t = _require(t, REACH_BASELINE_MAX_T, True, "nsw")
    return 2.0 * math.sqrt(t * (1.0 - t))


def bound_bsw(t: float) -> float:
    """Reach-normalized cosine-law baseline 2 t sqrt(1 - t^2) for t <= 1/2."""
    t = _require(t, REACH_BASELINE_MAX_T, True, "bsw")
    return 2.0 * t * math.sqrt(1.0 - t * t)


def lemma1_point_to_tangent(t: float) -> float:
    """dist(q, T_pM) / lfs(p) <= t^2 / 2 for t < 1."""
    t = _require(t, 1.0, False, "lem1")
    return 0.5 * t * t


def lemma2_tangent_to_manifold(t: float) -> float:
    """dist(x, M) / lfs(p) <= 2 t^2 for x in T_pM, t <= 1/4."""
    t = _require(t, THM1I_MAX_T, True, "lem2")
    return 2.0 * t * t


def sphere_exact_variation(t: float) -> float:
    """sin of tangent variation on the unit sphere at chord t: t sqrt(1 - t^2/4)."""
    t = _require(t, SPHERE_MAX_T, True, "sphere_lower")
    return t * math.sqrt(max(0.0, 1.0 - 0.25 * t * t))


# Intermediate inequalities of the thm1i chain. All in units of lfs(p).


def eq4_probe_distance(t: float) -> float:
    """dist(q_u, T_pM) <= (t^2/2)((2 + 3t + 2t^2)^2 + 4(1 + t)) for t <= 1/4."""
    t = _require(t, THM1I_MAX_T, True, "eq4")
    return 0.5 * t * t * ((2.0 + 3.0 * t + 2.0 * t * t) ** 2 + 4.0 * (1.0 + t))


def eq4_improved_probe_distance(t: float) -> float:
    """Same probe distance with the improved lemma: s^2/2 + g(t)(1 + t), t <= 19/200."""
    t = _require(t, THM1II_MAX_T, True, "eq4imp")
    s = _improved_chain_radius(t)
    return 0.5 * s * s + _improved_height(t) * (1.0 + t)


def chain_radius(t: float) -> float:
    """||p - q'_u|| <= t (2 + 3t + 2t^2) for t <= 1/4."""
    t = _require(t, THM1I_MAX_T, True, "eq4chain")
    return t * (2.0 + 3.0 * t + 2.0 * t * t)


def segment_angle_bound(ball_fraction: float = 0.1) -> float:
    """sin of the angle between a chord [x, y] in B(p, r) and T_pM, r = ball_fraction lfs(p).

    Uses sin(T_x, chord) <= r / lfs(x), lfs(x) >= lfs(p) - r, and the f < 6 bound
    on tangent variation.
    """
    rho = float(ball_fraction)
    if not 0.0 < rho <= 0.1:
        raise DomainError(f"segment_angle_bound: ball fraction {rho!r} outside (0, 0.1]")
    return rho / (1.0 - rho) + 6.0 * rho


class BoundKind(str, Enum):
    TANGENT_VARIATION = "tangent_variation"
    POINT_TO_TANGENT = "point_to_tangent"
    TANGENT_TO_MANIFOLD = "tangent_to_manifold"
    LOWER_BOUND = "lower_bound"


class Normalization(str, Enum):
    LFS_LOCAL = "lfs_local"
    REACH_GLOBAL = "reach_global"


@dataclass(frozen=True)
class TDomain:
    """Interval [0, upper] or [0, upper) of admissible t."""

    upper: float
    upper_closed: bool = True

    def contains(self, t: float) -> bool:
        if t < 0.0 or math.isnan(t):
            return False
        return t <= self.upper if self.upper_closed else t < self.upper

    def clip(self, low: float, high: float) -> Optional[Tuple[float, float]]:
        """Intersection of (low, high] with the domain, or None if empty."""
        high = min(high, self.upper)
        if high <= low:
            return None
        return low, high

    def __str__(self) -> str:
        return f"(0, {self.upper:g}{']' if self.upper_closed else ')'}"


@dataclass(frozen=True)
class BoundSpec:
    """A named bound with its validity domain and provenance."""

    id: str
    kind: BoundKind
    t_domain: TDomain
    normalization: Normalization
    evaluate: Callable[[float], float]
    description: str
    source: str
    reconstructed: bool = False
    # (intrinsic, ambient) dimensions the hypothesis is restricted to, if any.
    manifold_dims: Optional[Tuple[int, int]] = None
    # Only valid on round spheres.
    spheres_only: bool = False

    def applies_to(self, intrinsic_dim: int, ambient_dim: int, is_sphere: bool = False) -> bool:
        if self.spheres_only and not is_sphere:
            return False
        if self.manifold_dims is None:
            return True
        return self.manifold_dims == (intrinsic_dim, ambient_dim)

    def value(self, t: float) -> float:
        return self.evaluate(t)

    def value_or_none(self, t: float) -> Optional[float]:
        """Bound value, or None outside the domain."""
        if not self.t_domain.contains(t):
            return None
        return self.evaluate(t)


class BoundRegistry:
    """Registry of every bound the harness can check."""

    def __init__(self) -> None:
        self.bounds: Dict[str, BoundSpec] = {}
        for spec in _builtin_bounds():
            self.register(spec)

    def register(self, spec: BoundSpec) -> None:
        if spec.id in self.bounds:
            raise ValueError(f"Bound with id '{spec.id}' already registered")
        self.bounds[spec.id] = spec
        logger.debug("Registered bound %s (%s, t in %s)", spec.id, spec.kind.value, spec.t_domain)

    def get(self, bound_id: str) -> BoundSpec:
        try:
            return self.bounds[bound_id]
        except KeyError:
            raise UnknownBound(
                f"Unknown bound '{bound_id}'. Known: {', '.join(self.bounds)}"
            ) from None

    def resolve(self, bound_ids: Optional[Iterable[str]]) -> List[BoundSpec]:
        """Specs for ``bound_ids`` in the given order; all bounds when None."""
        if bound_ids is None:
            return list(self.bounds.values())
        return [self.get(bound_id) for bound_id in bound_ids]

    def ids(self) -> List[str]:
        return list(self.bounds)

    def list_bounds(self) -> List[Dict[str, object]]:
        return [
            {
                "id": spec.id,
                "kind": spec.kind.value,
                "t_domain": str(spec.t_domain),
                "normalization": spec.normalization.value,
                "description": spec.description,
                "source": spec.source,
                "reconstructed": spec.reconstructed,
            }
            for spec in self.bounds.values()
        ]


def _builtin_bounds() -> List[BoundSpec]:
    return [
        BoundSpec(
            id="thm1i",
            kind=BoundKind.TANGENT_VARIATION,
            t_domain=TDomain(THM1I_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=bound_thm1i,
            description="sin angle(T_p, T_q) <= t f(t)",
            source="tangent variation theorem, part (i)",
        ),
        BoundSpec(
            id="thm1ii",
            kind=BoundKind.TANGENT_VARIATION,
            t_domain=TDomain(THM1II_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=bound_thm1ii,
            description="sin angle(T_p, T_q) <= 3t + O(t^2), explicit closed form",
            source="tangent variation theorem, part (ii); closed form reconstructed",
            reconstructed=True,
        ),
        BoundSpec(
            id="ad",
            kind=BoundKind.TANGENT_VARIATION,
            t_domain=TDomain(AMENTA_DEY_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=bound_amenta_dey,
            description="sin angle(T_p, T_q) <= t / (1 - t) for surfaces in R^3",
            source="Amenta-Dey two-dimensional case",
            manifold_dims=(2, 3),
        ),
        BoundSpec(
            id="nsw",
            kind=BoundKind.TANGENT_VARIATION,
            t_domain=TDomain(REACH_BASELINE_MAX_T),
            normalization=Normalization.REACH_GLOBAL,
            evaluate=bound_nsw,
            description="sin angle(T_p, T_q) <= 2 sqrt(t (1 - t)), t = |p - q| / reach",
            source="Niyogi-Smale-Weinberger",
        ),
        BoundSpec(
            id="bsw",
            kind=BoundKind.TANGENT_VARIATION,
            t_domain=TDomain(REACH_BASELINE_MAX_T),
            normalization=Normalization.REACH_GLOBAL,
            evaluate=bound_bsw,
            description="sin angle(T_p, T_q) <= 2 t sqrt(1 - t^2), t = |p - q| / reach",
            source="Belkin-Sun-Wang",
        ),
        BoundSpec(
            id="lem1",
            kind=BoundKind.POINT_TO_TANGENT,
            t_domain=TDomain(1.0, upper_closed=False),
            normalization=Normalization.LFS_LOCAL,
            evaluate=lemma1_point_to_tangent,
            description="dist(q, T_pM) <= (t^2 / 2) lfs(p)",
            source="local feature size sampling lemma, part (1)",
        ),
        BoundSpec(
            id="lem2",
            kind=BoundKind.TANGENT_TO_MANIFOLD,
            t_domain=TDomain(THM1I_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=lemma2_tangent_to_manifold,
            description="dist(x, M) <= 2 t^2 lfs(p) for x in T_pM",
            source="local feature size sampling lemma, part (2)",
        ),
        BoundSpec(
            id="lem2imp",
            kind=BoundKind.TANGENT_TO_MANIFOLD,
            t_domain=TDomain(THM1II_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=improved_tangent_to_manifold,
            description="dist(x, M) <= (1 - sqrt(1 - t^2)) lfs(p) for x in T_pM",
            source="improved sampling lemma",
        ),
        BoundSpec(
            id="sphere_lower",
            kind=BoundKind.LOWER_BOUND,
            t_domain=TDomain(SPHERE_MAX_T),
            normalization=Normalization.LFS_LOCAL,
            evaluate=sphere_exact_variation,
            description="sin angle(T_p, T_q) = t sqrt(1 - t^2 / 4) on the unit sphere",
            source="sphere lower-bound construction",
            spheres_only=True,
        ),
    ]


TABLE_COLUMNS = ("thm1i", "thm1ii", "ad", "nsw", "bsw", "sphere_lower")
LEMMA_COLUMNS = ("lem1", "lem2", "lem2imp")


def bounds_table(
    t_grid: Sequence[float], columns: Sequence[str] = TABLE_COLUMNS
) -> List[Dict[str, Optional[float]]]:
    """Tabulate bounds on ``t_grid``; cells outside a bound's domain are None."""
    rows: List[Dict[str, Optional[float]]] = []
    for t in t_grid:
        t = float(t)
        if math.isnan(t) or not 0.0 <= t < 1.0:
            raise DomainError(f"table grid value {t!r} outside [0, 1)")
        row: Dict[str, Optional[float]] = {"t": t}
        for bound_id in columns:
            row[bound_id] = bound_registry.get(bound_id).value_or_none(t)
        rows.append(row)
    return rows


# Global registry instance
bound_registry = BoundRegistry()
