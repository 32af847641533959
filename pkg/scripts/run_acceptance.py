#!/usr/bin/env python3
"""Run the acceptance-scale checks and print a pass/fail table.

The unit tests run the same properties at reduced sample counts. This script
runs them at full scale:
- analytic anchors of f(t) and the leading slopes of every bound
- sphere exactness in R^2, R^3, R^8 and R^16
- zero violations of every lfs-normalized bound on the zoo
- equality cases, the Lipschitz sandwich, the projection lemma
- the sphere lower-bound certificate and point-cloud convergence
- the negative control, which must fail

Usage:
  python scripts/run_acceptance.py
  python scripts/run_acceptance.py --quick --only 1,2,5

Exits 0 when every selected criterion passes, 1 otherwise.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.bounds import (  # noqa: E402
    bound_amenta_dey,
    bound_bsw,
    bound_thm1i,
    bound_thm1ii,
    f_of_t,
)
from src.errors import LfsGeoError  # noqa: E402
from src.manifolds import Circle, Ellipsoid, Sphere, Torus, sample_point  # noqa: E402
from src.pointcloud import audit_convergence, estimate_all, sample_cloud  # noqa: E402
from src.verify import (  # noqa: E402
    eq4_intermediate_check,
    verify_lipschitz_sandwich,
    verify_projection_lemma,
    verify_tangent_bounds,
)

logger = logging.getLogger("acceptance")

Outcome = Tuple[bool, str]


class Scale:
    """Sample counts; --quick divides the large ones by 100."""

    def __init__(self, quick: bool) -> None:
        divisor = 100 if quick else 1
        self.exactness_pairs = 10_000 // divisor
        self.violation_pairs = 100_000 // divisor
        self.sandwich_pairs = 10_000 // divisor
        self.probes = 10_000 // divisor
        self.cloud_sphere = 50_000 // (10 if quick else 1)


def check_f_anchors(scale: Scale) -> Outcome:
    grid = np.arange(1, 10_001) * 1e-5
    worst = max(f_of_t(t) for t in grid)
    return f_of_t(0.0) == 4.5 and worst < 6.0, f"f(0)={f_of_t(0.0)} max f on (0, 0.1]={worst:.6f}"


def check_slopes(scale: Scale) -> Outcome:
    t = 1e-6
    expected = {"thm1i": 4.5, "thm1ii": 3.0, "bsw": 2.0, "ad": 1.0}
    measured = {
        "thm1i": bound_thm1i(t) / t,
        "thm1ii": bound_thm1ii(t) / t,
        "bsw": bound_bsw(t) / t,
        "ad": bound_amenta_dey(t) / t,
    }
    ok = all(abs(measured[k] - expected[k]) <= 1e-4 for k in expected)
    return ok, " ".join(f"{k}={v:.6f}" for k, v in measured.items())


def check_sphere_exactness(scale: Scale) -> Outcome:
    deviations = {}
    for n in (2, 3, 8, 16):
        report = verify_tangent_bounds(Sphere(n=n), scale.exactness_pairs, seed=n, bound_ids=["thm1i"])
        deviations[n] = report.statistics["max_sphere_deviation"]
    ok = all(d is not None and d <= 1e-9 for d in deviations.values())
    return ok, " ".join(f"N={n}:{d!r}" for n, d in deviations.items())


def check_zero_violations(scale: Scale) -> Outcome:
    details = []
    total = 0
    for manifold in (Sphere(), Torus(), Ellipsoid()):
        short = verify_tangent_bounds(
            manifold,
            scale.violation_pairs,
            t_range=(0.0, 0.25),
            seed=1,
            bound_ids=["thm1i", "thm1ii", "lem2", "lem2imp"],
        )
        lemma1 = verify_tangent_bounds(
            manifold, scale.violation_pairs, t_range=(0.0, 0.9), seed=2, bound_ids=["lem1"]
        )
        eq4 = eq4_intermediate_check(manifold, scale.violation_pairs, seed=3)
        count = short.total_violations + lemma1.total_violations + eq4.total_violations
        total += count
        details.append(f"{manifold.name}:{count}")
    return total == 0, " ".join(details)


def check_tightness_anchors(scale: Scale) -> Outcome:
    circle = verify_tangent_bounds(Circle(), scale.exactness_pairs, t_range=(0.01, 0.9), seed=4, bound_ids=["lem1"])
    lem1 = circle.per_bound["lem1"].max_tightness
    sphere = Sphere()
    p = sample_point(sphere, np.random.default_rng(5))
    height = verify_projection_lemma(sphere, p, scale.probes, seed=5).statistics["max_height_tightness"]
    ok = lem1 is not None and height is not None and abs(lem1 - 1.0) <= 1e-9 and abs(height - 1.0) <= 1e-9
    return ok, f"lem1 on circle={lem1!r} projection height on sphere={height!r}"


def check_sandwich(scale: Scale) -> Outcome:
    counts = {
        manifold.name: verify_lipschitz_sandwich(manifold, scale.sandwich_pairs, seed=6).total_violations
        for manifold in (Circle(), Sphere(), Torus(), Ellipsoid())
    }
    return sum(counts.values()) == 0, " ".join(f"{k}:{v}" for k, v in counts.items())


def check_projection(scale: Scale) -> Outcome:
    details = []
    ok = True
    for manifold in (Sphere(), Torus()):
        p = sample_point(manifold, np.random.default_rng(7))
        report = verify_projection_lemma(manifold, p, scale.probes, seed=7)
        passed = report.passed
        ok = ok and passed
        details.append(f"{manifold.name}:{'ok' if passed else report.flags}")
    return ok, " ".join(details)


def check_lower_bound(scale: Scale) -> Outcome:
    report = verify_tangent_bounds(
        Sphere(), scale.exactness_pairs, t_range=(0.01, 0.25), seed=8, bound_ids=["sphere_lower"]
    )
    ratio = report.statistics["min_sin_over_t"]
    return ratio is not None and ratio >= 0.96, f"min sin/t={ratio!r}"


def check_convergence(scale: Scale) -> Outcome:
    rows = audit_convergence(Circle(), [1000, 4000, 16000], n_pairs=200, seed=9)
    errors = [row["median_lfs_error"] for row in rows]
    decreasing = all(a is not None and b is not None and b <= a for a, b in zip(errors, errors[1:]))
    cloud = sample_cloud(Sphere(), scale.cloud_sphere, seed=10)
    picks = np.random.default_rng(10).choice(len(cloud), size=500, replace=False)
    angles = [e.tangent_angle_error for e in estimate_all(cloud, 20, picks, reference=Sphere())]
    median_angle = float(np.median(angles))
    ok = decreasing and errors[-1] < 0.05 and median_angle < 0.01
    return ok, f"circle lfs errors={errors} sphere tangent median={median_angle:.5f}"


def check_negative_control(scale: Scale) -> Outcome:
    report = verify_tangent_bounds(
        Circle(), 1000, t_range=(0.01, 0.5), seed=11, bound_ids=["lem1"], bound_scale=0.5
    )
    return report.total_violations > 0, f"violations={report.total_violations}"


CRITERIA: List[Tuple[str, Callable[[Scale], Outcome]]] = [
    ("f anchors", check_f_anchors),
    ("slopes at zero", check_slopes),
    ("sphere exactness", check_sphere_exactness),
    ("zero violations", check_zero_violations),
    ("tightness anchors", check_tightness_anchors),
    ("Lipschitz sandwich", check_sandwich),
    ("projection lemma", check_projection),
    ("lower-bound certificate", check_lower_bound),
    ("point-cloud convergence", check_convergence),
    ("negative control", check_negative_control),
]


def main() -> int:
    ap = argparse.ArgumentParser(description="Run acceptance-scale checks")
    ap.add_argument("--quick", action="store_true", help="divide sample counts by 100")
    ap.add_argument("--only", help="comma-separated criterion numbers (1-based)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    selected = (
        {int(item) for item in args.only.split(",") if item.strip()} if args.only else set(range(1, len(CRITERIA) + 1))
    )
    scale = Scale(args.quick)

    results: Dict[int, Tuple[str, bool, float, str]] = {}
    for number, (name, check) in enumerate(CRITERIA, start=1):
        if number not in selected:
            continue
        started = time.perf_counter()
        try:
            passed, detail = check(scale)
        except LfsGeoError as e:
            logger.exception("Criterion %d raised", number)
            passed, detail = False, f"{type(e).__name__}: {e}"
        results[number] = (name, passed, time.perf_counter() - started, detail)

    width = max(len(name) for name, _ in CRITERIA)
    print(f"{'#':>2}  {'criterion':<{width}}  {'result':<6}  {'time_s':>8}  detail")
    for number, (name, passed, elapsed, detail) in results.items():
        print(f"{number:>2}  {name:<{width}}  {'PASS' if passed else 'FAIL':<6}  {elapsed:>8.2f}  {detail}")

    failed = [number for number, (_, passed, _, _) in results.items() if not passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
