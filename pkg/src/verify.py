"""Monte-Carlo verification harness for the tangent-variation and lfs bounds.

Every check samples pairs on an analytic manifold, measures the true geometric
quantity and compares it with the bound. Work is split into fixed-size chunks
seeded from one ``SeedSequence``, so a report depends only on its inputs and not
on the number of worker threads.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.bounds import (
    THM1I_MAX_T,
    THM1II_MAX_T,
    BoundKind,
    BoundSpec,
    Normalization,
    TDomain,
    bound_registry,
    chain_radius,
    eq4_improved_probe_distance,
    eq4_probe_distance,
    improved_tangent_to_manifold,
    segment_angle_bound,
    sphere_exact_variation,
)
from src.config import settings
from src.errors import DomainError, PreimageNotFound, Unreachable
from src.manifolds import (
    Manifold,
    ManifoldPoint,
    PointPair,
    sample_pair,
    sample_point,
)
from src.reporting import (
    BoundTally,
    PairObservation,
    VerificationReport,
    check_bound,
)
from src.subspace import sin_angle_between

logger = logging.getLogger(__name__)

PREIMAGE_RESIDUAL = 1e-12
NEWTON_MAX_ITERATIONS = 50
FALLBACK_SAMPLES = 513
DOMAIN_MARGIN = 1e-6

RECONSTRUCTED_NOTE = (
    "thm1ii uses a reconstructed closed form of the 3t + O(t^2) bound "
    "(see docs/THM1II_DERIVATION.md)"
)
INJECTIVITY_NOTE = (
    "Injectivity is probed statistically: 'no collapse observed' is not a proof "
    "that the projection is an embedding."
)


@dataclass
class _ChunkResult:
    tallies: Dict[str, BoundTally] = field(default_factory=dict)
    completed: int = 0
    failures: int = 0
    statistics: Dict[str, float] = field(default_factory=dict)
    observations: List[PairObservation] = field(default_factory=list)

    def tally(self, bound_id: str, kind: str, **kwargs: Any) -> BoundTally:
        if bound_id not in self.tallies:
            self.tallies[bound_id] = BoundTally(kind, **kwargs)
        return self.tallies[bound_id]

    def track(self, key: str, value: float) -> None:
        """Keep the running min (``min_*`` keys) or max (``max_*`` keys)."""
        current = self.statistics.get(key)
        if current is None:
            self.statistics[key] = value
        elif key.startswith("min_"):
            self.statistics[key] = min(current, value)
        else:
            self.statistics[key] = max(current, value)

    def merge(self, other: "_ChunkResult") -> "_ChunkResult":
        for bound_id, tally in other.tallies.items():
            if bound_id in self.tallies:
                self.tallies[bound_id].merge(tally)
            else:
                self.tallies[bound_id] = tally
        self.completed += other.completed
        self.failures += other.failures
        for key, value in other.statistics.items():
            self.track(key, value)
        self.observations.extend(other.observations)
        return self


def resolve_tolerance(manifold: Manifold, override: Optional[float] = None) -> float:
    """Relative tolerance: 1e-9 with closed-form lfs, 1e-3 when lfs comes from the oracle."""
    if override is not None:
        return float(override)
    if manifold.has_analytic_lfs:
        return settings.analytic_tolerance
    return settings.oracle_tolerance


def _draw_t(rng: np.random.Generator, t_range: Tuple[float, float]) -> float:
    low, high = t_range
    return low + (high - low) * (1.0 - rng.random())


def _check_range(t_range: Tuple[float, float], upper: float, name: str) -> Tuple[float, float]:
    low, high = float(t_range[0]), float(t_range[1])
    if not 0.0 <= low < high <= upper:
        raise DomainError(f"{name}: t range ({low}, {high}] must lie in (0, {upper}]")
    return low, high


def _t_max(manifold: Manifold) -> float:
    """Largest t reachable from every point: diameter over reach, unbounded if reach is unknown."""
    if manifold.reach is None:
        return math.inf
    return manifold.diameter / manifold.reach


def _run_chunked(
    n: int,
    seed: int,
    threads: Optional[int],
    work: Callable[[np.random.Generator, int], _ChunkResult],
) -> _ChunkResult:
    if n < 1:
        raise DomainError(f"need at least one pair, got {n}")
    chunk = max(1, settings.chunk_size)
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = max(1, threads if threads is not None else settings.threads)
    logger.debug("Running %d pairs in %d chunks on %d workers", n, len(sizes), workers)

    def run(args: Tuple[np.random.SeedSequence, int]) -> _ChunkResult:
        child, size = args
        return work(np.random.default_rng(child), size)

    if workers == 1:
        results = [run(args) for args in zip(children, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, zip(children, sizes)))

    merged = _ChunkResult()
    for result in results:
        merged.merge(result)
    if merged.failures > settings.max_failure_fraction * n:
        raise Unreachable(
            f"{merged.failures} of {n} pairs could not be constructed "
            f"(budget {settings.max_failure_fraction:.0%})"
        )
    if merged.failures:
        logger.warning("%d of %d pairs could not be constructed", merged.failures, n)
    return merged


def _sampling_loop(
    size: int,
    rng: np.random.Generator,
    observe: Callable[[np.random.Generator, _ChunkResult], None],
) -> _ChunkResult:
    result = _ChunkResult()
    for _ in range(size):
        try:
            observe(rng, result)
            result.completed += 1
        except Unreachable as e:
            logger.debug("Pair construction failed: %s", e)
            result.failures += 1
    return result


def _report(
    command: str,
    manifold: Manifold,
    seed: int,
    n: int,
    t_range: Optional[Tuple[float, float]],
    tolerance: float,
    merged: _ChunkResult,
    started: float,
    config: Optional[Dict[str, Any]],
    order: Optional[Sequence[str]] = None,
) -> VerificationReport:
    ids = list(order) if order is not None else sorted(merged.tallies)
    ids += [bound_id for bound_id in merged.tallies if bound_id not in ids]
    return VerificationReport(
        command=command,
        manifold=manifold.describe(),
        seed=seed,
        n_pairs=n,
        n_completed=merged.completed,
        sampling_failures=merged.failures,
        t_range=t_range,
        tolerance=tolerance,
        per_bound={
            bound_id: merged.tallies[bound_id].summary()
            for bound_id in ids
            if bound_id in merged.tallies
        },
        statistics=dict(sorted(merged.statistics.items())),
        config=config or {},
        wall_time_s=time.perf_counter() - started,
    )


def _random_tangent_vector(point: ManifoldPoint, rng: np.random.Generator) -> np.ndarray:
    coefficients = rng.standard_normal(point.tangent.dim)
    coefficients /= np.linalg.norm(coefficients)
    return coefficients @ point.tangent.vectors


def applicable_bounds(manifold: Manifold, specs: Sequence[BoundSpec]) -> List[BoundSpec]:
    """Bounds whose hypotheses cover ``manifold``."""
    chosen = []
    for spec in specs:
        if not spec.applies_to(manifold.intrinsic_dim, manifold.ambient_dim, manifold.is_sphere):
            logger.info("Skipping %s: hypothesis does not cover %s", spec.id, manifold.name)
            continue
        if spec.normalization == Normalization.REACH_GLOBAL and manifold.reach is None:
            logger.info("Skipping %s: reach of %s unknown", spec.id, manifold.name)
            continue
        chosen.append(spec)
    return chosen


def _domain_range(
    spec: BoundSpec, manifold: Manifold, p: ManifoldPoint, t_range: Tuple[float, float]
) -> Optional[Tuple[float, float]]:
    """Part of ``t_range`` (in units of lfs(p)) where ``spec`` applies at p."""
    upper = spec.t_domain.upper
    if spec.normalization == Normalization.REACH_GLOBAL:
        upper *= float(manifold.reach) / p.lfs  # type: ignore[arg-type]
    if upper < t_range[1]:
        # chords are only exact up to the construction tolerance, so stay clear of the edge
        upper *= 1.0 - DOMAIN_MARGIN
    return TDomain(upper).clip(*t_range)


def group_by_domain(
    specs: Sequence[BoundSpec], manifold: Manifold, p: ManifoldPoint, t_range: Tuple[float, float]
) -> List[Tuple[Tuple[float, float], List[BoundSpec]]]:
    """Specs grouped by the t range they share at p, in first-seen order."""
    groups: Dict[Tuple[float, float], List[BoundSpec]] = {}
    for spec in specs:
        clipped = _domain_range(spec, manifold, p, t_range)
        if clipped is not None:
            groups.setdefault(clipped, []).append(spec)
    return list(groups.items())


def observe_pair(
    manifold: Manifold,
    pair: PointPair,
    specs: Sequence[BoundSpec],
    rng: np.random.Generator,
    rtol: float,
    atol: float,
    bound_scale: float = 1.0,
) -> PairObservation:
    """Measure tangent variation and distances on one pair and check every bound."""
    p, q = pair.p, pair.q
    t = pair.t
    normal = manifold.unit_normal(p.position)
    sin_angle = sin_angle_between(p.tangent, q.tangent)
    dist_q_to_Tp = abs(float(pair.offset @ normal))
    observation = PairObservation(
        t=t, sin_angle=sin_angle, dist_q_to_Tp=dist_q_to_Tp, lfs_p=p.lfs, lfs_q=q.lfs
    )

    dist_x_to_M: Optional[float] = None
    for spec in specs:
        t_eval = t
        if spec.normalization == Normalization.REACH_GLOBAL:
            t_eval = pair.chord / float(manifold.reach)  # type: ignore[arg-type]
        if not spec.t_domain.contains(t_eval):
            continue

        if spec.kind in (BoundKind.TANGENT_VARIATION, BoundKind.LOWER_BOUND):
            measured = sin_angle
        elif spec.kind == BoundKind.POINT_TO_TANGENT:
            measured = dist_q_to_Tp / p.lfs
        else:
            if dist_x_to_M is None:
                x = p.position + t * p.lfs * _random_tangent_vector(p, rng)
                dist_x_to_M = manifold.distance(x)
            measured = dist_x_to_M / p.lfs

        lower = spec.kind == BoundKind.LOWER_BOUND
        value = spec.value(t_eval) * (1.0 if lower else bound_scale)
        observation.per_bound[spec.id] = check_bound(value, measured, rtol, atol, lower=lower)
    return observation


def verify_tangent_bounds(
    manifold: Manifold,
    n_pairs: int,
    t_range: Tuple[float, float] = (0.0, THM1I_MAX_T),
    seed: int = 0,
    bound_ids: Optional[Sequence[str]] = None,
    threads: Optional[int] = None,
    tolerance: Optional[float] = None,
    bound_scale: float = 1.0,
    observations: Optional[List[PairObservation]] = None,
    config: Optional[Dict[str, Any]] = None,
) -> VerificationReport:
    """Sample pairs and check every applicable bound.

    Each bound gets its own t drawn uniformly from ``t_range`` intersected with its
    domain, so a bound with a short domain is still checked on every pair. Bounds
    sharing that intersection share the pair.
    """
    started = time.perf_counter()
    t_range = _check_range(t_range, _t_max(manifold), "verify")
    specs = applicable_bounds(manifold, bound_registry.resolve(bound_ids))
    rtol = resolve_tolerance(manifold, tolerance)
    atol = settings.absolute_floor
    keep = observations is not None
    logger.info(
        "Verifying %s on %s | n=%d t=(%g, %g] seed=%d tol=%g",
        ",".join(spec.id for spec in specs),
        manifold.name,
        n_pairs,
        t_range[0],
        t_range[1],
        seed,
        rtol,
    )

    def observe(rng: np.random.Generator, result: _ChunkResult) -> None:
        p = sample_point(manifold, rng)
        observed = []
        for group_range, group in group_by_domain(specs, manifold, p, t_range):
            pair = sample_pair(manifold, p, _draw_t(rng, group_range), rng)
            observed.append(observe_pair(manifold, pair, group, rng, rtol, atol, bound_scale))
        for spec in specs:
            result.tally(
                spec.id,
                spec.kind.value,
                t_domain=str(spec.t_domain),
                normalization=spec.normalization.value,
                reconstructed=spec.reconstructed,
            )
        for observation in observed:
            for bound_id, outcome in observation.per_bound.items():
                result.tallies[bound_id].add(outcome)
            if manifold.is_sphere:
                exact = sphere_exact_variation(observation.t)
                result.track("max_sphere_deviation", abs(observation.sin_angle - exact))
                result.track("min_sin_over_t", observation.sin_angle / observation.t)
            result.track("max_t", observation.t)
            result.track("min_t", observation.t)
        if keep:
            result.observations.extend(observed)

    merged = _run_chunked(
        n_pairs, seed, threads, lambda rng, size: _sampling_loop(size, rng, observe)
    )
    if observations is not None:
        observations.extend(merged.observations)
    report = _report(
        "verify",
        manifold,
        seed,
        n_pairs,
        t_range,
        rtol,
        merged,
        started,
        config,
        order=[spec.id for spec in specs],
    )
    if any(spec.reconstructed for spec in specs):
        report.notes.append(RECONSTRUCTED_NOTE)
    if bound_scale != 1.0:
        report.notes.append(f"upper bounds scaled by {bound_scale:g} (test hook)")
    logger.info(
        "Verification of %s finished | completed=%d violations=%d",
        manifold.name,
        report.n_completed,
        report.total_violations,
    )
    return report


def verify_lipschitz_sandwich(
    manifold: Manifold,
    n_pairs: int,
    seed: int = 0,
    t_range: Tuple[float, float] = (0.0, 0.9),
    threads: Optional[int] = None,
    tolerance: Optional[float] = None,
    config: Optional[Dict[str, Any]] = None,
) -> VerificationReport:
    """Check (1 - t) lfs(p) <= lfs(q) <= (1 + t) lfs(p) and the 1-Lipschitz property."""
    started = time.perf_counter()
    t_range = _check_range(t_range, 1.0, "sandwich")
    if t_range[1] >= 1.0:
        raise DomainError("sandwich needs t < 1")
    rtol = resolve_tolerance(manifold, tolerance)
    # Absolute slack for two independent lfs evaluations, in units of lfs(p).
    atol = 2.0 * rtol

    def observe(rng: np.random.Generator, result: _ChunkResult) -> None:
        p = sample_point(manifold, rng)
        pair = sample_pair(manifold, p, _draw_t(rng, t_range), rng)
        t = pair.t
        ratio = pair.q.lfs / p.lfs
        result.tally("eq3_lower", "sandwich_lower", t_domain="(0, 1)").add(
            check_bound(1.0 - t, ratio, rtol, atol, lower=True)
        )
        result.tally("eq3_upper", "sandwich_upper", t_domain="(0, 1)").add(
            check_bound(1.0 + t, ratio, rtol, atol)
        )
        result.tally("lipschitz", "lipschitz", t_domain="(0, 1)").add(
            check_bound(t, abs(ratio - 1.0), rtol, atol)
        )
        slack_lower = ratio - (1.0 - t)
        slack_upper = (1.0 + t) - ratio
        for key, value in (("lower", slack_lower), ("upper", slack_upper)):
            result.track(f"min_slack_{key}", value)
            result.track(f"max_slack_{key}", value)

    merged = _run_chunked(
        n_pairs, seed, threads, lambda rng, size: _sampling_loop(size, rng, observe)
    )
    report = _report(
        "sandwich",
        manifold,
        seed,
        n_pairs,
        t_range,
        rtol,
        merged,
        started,
        config,
        order=["eq3_lower", "eq3_upper", "lipschitz"],
    )
    logger.info("Sandwich check on %s | violations=%d", manifold.name, report.total_violations)
    return report


def eq4_intermediate_check(
    manifold: Manifold,
    n_pairs: int,
    seed: int = 0,
    t_range: Tuple[float, float] = (0.0, THM1I_MAX_T),
    threads: Optional[int] = None,
    tolerance: Optional[float] = None,
    config: Optional[Dict[str, Any]] = None,
) -> VerificationReport:
    """Check the probe-point inequalities of the tangent-variation argument.

    For a pair at t and a random unit u in T_qM the probe is
    q_u = q + t lfs(q) u and q'_u its nearest point on M.
    """
    started = time.perf_counter()
    t_range = _check_range(t_range, THM1I_MAX_T, "eq4")
    rtol = resolve_tolerance(manifold, tolerance)
    atol = settings.absolute_floor

    def observe(rng: np.random.Generator, result: _ChunkResult) -> None:
        p = sample_point(manifold, rng)
        pair = sample_pair(manifold, p, _draw_t(rng, t_range), rng)
        # chord round-off can push the measured t past the domain edge by ~1e-9
        t = min(pair.t, THM1I_MAX_T)
        step = t * pair.q.lfs * _random_tangent_vector(pair.q, rng)
        probe_offset = pair.offset + step
        normal = manifold.unit_normal(p.position)
        probe_distance = abs(float(probe_offset @ normal)) / p.lfs

        result.tally("eq4", "probe_to_tangent", t_domain=f"(0, {THM1I_MAX_T:g}]").add(
            check_bound(eq4_probe_distance(t), probe_distance, rtol, atol)
        )
        improved = result.tally(
            "eq4imp", "probe_to_tangent", t_domain=f"(0, {THM1II_MAX_T:g}]"
        )
        if t <= THM1II_MAX_T:
            improved.add(check_bound(eq4_improved_probe_distance(t), probe_distance, rtol, atol))
        nearest = manifold.closest_point(p.position + probe_offset)
        chain = float(np.linalg.norm(nearest - p.position)) / p.lfs
        result.tally("eq4chain", "chain_radius", t_domain=f"(0, {THM1I_MAX_T:g}]").add(
            check_bound(chain_radius(t), chain, rtol, atol)
        )
        if t > 0.0:
            result.track("max_probe_ratio", probe_distance / (t * t))

    merged = _run_chunked(
        n_pairs, seed, threads, lambda rng, size: _sampling_loop(size, rng, observe)
    )
    report = _report(
        "eq4",
        manifold,
        seed,
        n_pairs,
        t_range,
        rtol,
        merged,
        started,
        config,
        order=["eq4", "eq4imp", "eq4chain"],
    )
    logger.info("Eq. 4 check on %s | violations=%d", manifold.name, report.total_violations)
    return report


def find_preimage(
    manifold: Manifold, p: ManifoldPoint, z: np.ndarray, radius: float
) -> np.ndarray:
    """Point y of M in the closed ball B(p, radius) whose projection onto T_pM is z.

    Damped Newton on the implicit equation along the normal line through z, with a
    bracketing fallback along the same line.
    """
    normal = manifold.unit_normal(p.position)

    def along(h: float) -> np.ndarray:
        return z + h * normal

    def inside(y: np.ndarray) -> bool:
        return float(np.linalg.norm(y - p.position)) <= radius * (1.0 + 1e-9)

    h = 0.0
    value = manifold.implicit(along(h))
    # iterate until no damped step reduces the residual any further
    for _ in range(NEWTON_MAX_ITERATIONS):
        if value == 0.0:
            break
        slope = float(manifold.gradient(along(h)) @ normal)
        if slope == 0.0:
            break
        step = value / slope
        damping = 1.0
        while damping > 1e-4:
            candidate = h - damping * step
            candidate_value = manifold.implicit(along(candidate))
            if abs(candidate_value) < abs(value):
                break
            damping *= 0.5
        else:
            break
        h, value = candidate, candidate_value
    if abs(value) <= PREIMAGE_RESIDUAL and inside(along(h)):
        return along(h)

    heights = np.linspace(-radius, radius, FALLBACK_SAMPLES)
    values = np.array([manifold.implicit(along(height)) for height in heights])
    crossings = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    for index in sorted(crossings, key=lambda i: abs(heights[i])):
        root = brentq(lambda s: manifold.implicit(along(s)), heights[index], heights[index + 1], xtol=1e-16)
        if inside(along(root)):
            return along(root)
    raise PreimageNotFound(f"no preimage within radius {radius:g} of p")


def verify_projection_lemma(
    manifold: Manifold,
    p: ManifoldPoint,
    n_probe: int,
    seed: int = 0,
    tolerance: Optional[float] = None,
    ball_fraction: float = 0.1,
    coverage_fraction: float = 19.0 / 200.0,
    config: Optional[Dict[str, Any]] = None,
) -> VerificationReport:
    """Probe the projection of M near p onto T_pM.

    (i) no collapse of chords in B_M(p, r), r = ball_fraction lfs(p);
    (ii) every point of the tangent ball of radius coverage_fraction lfs(p) has a
    preimage in B_M(p, r); (iii) that preimage sits at height at most
    t^2 lfs(p) / (1 + sqrt(1 - t^2)) above the tangent point.
    """
    if n_probe < 1:
        raise DomainError(f"need at least one probe, got {n_probe}")
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    rtol = resolve_tolerance(manifold, tolerance)
    atol = settings.absolute_floor
    radius = ball_fraction * p.lfs
    coverage_radius = coverage_fraction * p.lfs
    result = _ChunkResult()

    # (i) chords in the ball must not collapse under projection.
    segment_bound = segment_angle_bound(min(ball_fraction, 0.1))
    min_ratio = 1.0 - segment_bound
    injectivity = result.tally("proj_injectivity", "projection_ratio")
    segment = result.tally("proj_segment", "segment_angle")
    for _ in range(n_probe):
        try:
            x = sample_pair(manifold, p, rng.uniform(1e-6, 1.0) * ball_fraction, rng)
            y = sample_pair(manifold, p, rng.uniform(1e-6, 1.0) * ball_fraction, rng)
        except Unreachable:
            result.failures += 1
            continue
        chord = x.offset - y.offset
        length = float(np.linalg.norm(chord))
        if length == 0.0:
            continue
        ratio = float(np.linalg.norm(p.tangent.project(chord))) / length
        injectivity.add(check_bound(min_ratio, ratio, rtol, atol, lower=True))
        segment.add(check_bound(segment_bound, math.sqrt(max(0.0, 1.0 - ratio * ratio)), rtol, atol))
        result.track("min_projection_ratio", ratio)
        result.completed += 1

    # (ii) coverage of the tangent ball and (iii) height of the preimage.
    coverage = result.tally("proj_coverage", "coverage")
    height = result.tally("proj_height", "height", t_domain=f"(0, {THM1II_MAX_T:g}]")
    for _ in range(n_probe):
        direction = rng.standard_normal(p.tangent.dim)
        direction /= np.linalg.norm(direction)
        distance = coverage_radius * rng.random() ** (1.0 / p.tangent.dim)
        z = p.position + distance * (direction @ p.tangent.vectors)
        try:
            preimage = find_preimage(manifold, p, z, radius)
        except PreimageNotFound as e:
            logger.debug("Coverage probe failed: %s", e)
            coverage.add(check_bound(0.0, 1.0, 0.0, 0.0))
            continue
        reach_out = float(np.linalg.norm(preimage - p.position)) / radius
        coverage.add(check_bound(1.0, reach_out, 0.0, 1e-9))
        result.track("max_preimage_residual", abs(manifold.implicit(preimage)))
        t = distance / p.lfs
        if t <= THM1II_MAX_T:
            lifted = float(np.linalg.norm(preimage - z)) / p.lfs
            height.add(check_bound(improved_tangent_to_manifold(t), lifted, rtol, atol))
            # below t = 0.01 round-off in the lifted height dominates the ratio
            if t >= 0.01:
                result.track("max_height_tightness", lifted / improved_tangent_to_manifold(t))

    report = _report(
        "project",
        manifold,
        seed,
        n_probe,
        None,
        rtol,
        result,
        started,
        config,
        order=["proj_injectivity", "proj_segment", "proj_coverage", "proj_height"],
    )
    report.statistics["ball_radius"] = radius
    report.statistics["coverage_radius"] = coverage_radius
    report.statistics["lfs_p"] = p.lfs
    report.flags = {
        "no_collapse_observed": injectivity.violations == 0,
        "coverage_complete": coverage.violations == 0,
        "height_bound_holds": height.violations == 0,
    }
    report.notes.append(INJECTIVITY_NOTE)
    logger.info("Projection probes around p on %s | flags=%s", manifold.name, report.flags)
    return report
