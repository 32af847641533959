"""Command-line frontend: bounds, verify, project and cloud subcommands.

Every subcommand emits a JSON report (stdout or --out) and optionally CSV data.
Exit codes: 0 no violations, 1 violations found, 2 bad input, 3 failure during a run.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError

from src import __version__
from src.bounds import LEMMA_COLUMNS, TABLE_COLUMNS, bounds_table
from src.config import settings
from src.errors import (
    CodimensionUnsupported,
    ConfigError,
    DomainError,
    LfsGeoError,
    UnknownBound,
)
from src.manifolds import Manifold, ManifoldPoint, build_manifold, point_at, sample_point
from src.pointcloud import (
    DEFAULT_NEIGHBORS,
    ESTIMATE_COLUMNS,
    PointCloud,
    empirical_bound_audit,
    estimate_all,
    sample_cloud,
)
from src.reporting import (
    VerificationReport,
    write_csv,
    write_observations_csv,
    write_report,
)
from src.verify import (
    eq4_intermediate_check,
    verify_lipschitz_sandwich,
    verify_projection_lemma,
    verify_tangent_bounds,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_BAD_INPUT = 2
EXIT_FAILURE = 3

DEFAULT_TMAX = {"tangent": 0.25, "sandwich": 0.9, "eq4": 0.25}


class RunConfig(BaseModel):
    """One CLI run. Unknown keys are rejected so typos in config files surface."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["bounds", "verify", "project", "cloud"]
    manifold: str = "sphere"
    params: Dict[str, float] = Field(default_factory=dict)
    bounds: List[str] = Field(default_factory=list)
    check: Literal["tangent", "sandwich", "eq4"] = "tangent"
    n: PositiveInt = 10000
    pairs: PositiveInt = 1000
    tmin: Optional[float] = None
    tmax: Optional[float] = None
    step: float = 0.01
    all: bool = False
    seed: int = Field(default_factory=lambda: settings.seed)
    out: Optional[str] = None
    csv: Optional[str] = None
    threads: PositiveInt = Field(default_factory=lambda: settings.threads)
    tolerance: Optional[float] = None
    bound_scale: float = 1.0
    omit_timing: bool = False
    input: Optional[str] = None
    k: PositiveInt = DEFAULT_NEIGHBORS
    point: Optional[List[float]] = None

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


def _split(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_params(items: Sequence[str]) -> Dict[str, str]:
    params: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"parameter '{item}' is not of the form key=value")
        params[key.strip()] = value.strip()
    return params


def load_config_file(path: str) -> Dict[str, Any]:
    """Flat key=value file; ``param`` and ``bound`` take comma-separated lists."""
    raw = dotenv_values(path)
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        name = key.strip().lower().replace("-", "_")
        if value is None:
            raise ConfigError(f"{path}: key '{key}' has no value")
        if name in ("param", "params"):
            values["params"] = _parse_params(_split(value))
        elif name in ("bound", "bounds"):
            values["bounds"] = _split(value)
        elif name == "point":
            values["point"] = _split(value)
        else:
            values[name] = value
    logger.debug("Loaded %d keys from %s", len(values), path)
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by explicitly given flags."""
    values: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    values["command"] = args.command
    for name, value in vars(args).items():
        if name in ("command", "config") or value is None:
            continue
        if name == "param":
            merged = dict(values.get("params", {}))
            merged.update(_parse_params(value))
            values["params"] = merged
        elif name == "bound":
            values["bounds"] = [b for item in value for b in _split(item)]
        elif name == "point":
            values["point"] = _split(value)
        else:
            values[name] = value
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def _t_range(config: RunConfig, default_tmax: float) -> Tuple[float, float]:
    tmin = config.tmin if config.tmin is not None else 0.0
    tmax = config.tmax if config.tmax is not None else default_tmax
    if not 0.0 <= tmin < tmax:
        raise DomainError(f"t range ({tmin}, {tmax}] is empty")
    return (tmin, tmax)


def _emit(report: VerificationReport, config: RunConfig) -> int:
    text = write_report(report, config.out, omit_timing=config.omit_timing)
    if config.out is None:
        print(text)
    logger.info("%s finished | violations=%d", config.command, report.total_violations)
    return EXIT_VIOLATIONS if report.total_violations > 0 else EXIT_OK


def cmd_bounds_table(config: RunConfig) -> int:
    """Tabulate the registered bounds on an evenly spaced t grid."""
    tmin = config.tmin if config.tmin is not None else 0.0
    tmax = config.tmax if config.tmax is not None else 0.25
    if not config.step > 0.0 or not 0.0 <= tmin <= tmax:
        raise DomainError(f"bad grid: tmin={tmin} tmax={tmax} step={config.step}")
    count = int(round((tmax - tmin) / config.step))
    grid = [tmin + i * config.step for i in range(count + 1)]
    columns = TABLE_COLUMNS + LEMMA_COLUMNS if config.all else TABLE_COLUMNS
    if config.bounds:
        columns = tuple(config.bounds)
    rows = bounds_table(grid, columns)
    table = ([row[column] for column in ("t",) + tuple(columns)] for row in rows)
    target = config.csv or config.out
    if target:
        write_csv(target, ("t",) + tuple(columns), table)
    else:
        write_csv(sys.stdout, ("t",) + tuple(columns), table)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    manifold = build_manifold(config.manifold, config.params)
    t_range = _t_range(config, DEFAULT_TMAX[config.check])
    common = dict(
        seed=config.seed,
        t_range=t_range,
        threads=config.threads,
        tolerance=config.tolerance,
        config=config.echo(),
    )
    if config.check == "sandwich":
        report = verify_lipschitz_sandwich(manifold, config.n, **common)
    elif config.check == "eq4":
        report = eq4_intermediate_check(manifold, config.n, **common)
    else:
        observations: Optional[list] = [] if config.csv else None
        report = verify_tangent_bounds(
            manifold,
            config.n,
            bound_ids=config.bounds or None,
            bound_scale=config.bound_scale,
            observations=observations,
            **common,
        )
        if config.csv and observations is not None:
            write_observations_csv(config.csv, observations)
    return _emit(report, config)


def _base_point(manifold: Manifold, config: RunConfig) -> ManifoldPoint:
    if config.point is None:
        return sample_point(manifold, np.random.default_rng(config.seed))
    position = np.asarray(config.point, dtype=float)
    if position.shape != (manifold.ambient_dim,):
        raise DomainError(f"--point needs {manifold.ambient_dim} coordinates")
    if manifold.distance(position) > 1e-8:
        raise DomainError("--point is not on the manifold")
    return point_at(manifold, position)


def cmd_project(config: RunConfig) -> int:
    manifold = build_manifold(config.manifold, config.params)
    p = _base_point(manifold, config)
    report = verify_projection_lemma(
        manifold, p, config.n, seed=config.seed, tolerance=config.tolerance, config=config.echo()
    )
    return _emit(report, config)


def cmd_cloud(config: RunConfig) -> int:
    reference: Optional[Manifold] = None
    if config.input:
        cloud = PointCloud.from_file(config.input)
    else:
        reference = build_manifold(config.manifold, config.params)
        cloud = sample_cloud(reference, config.n, config.seed)
    # audits skip the smallest t, where estimator noise swamps the variation
    t_range = (
        config.tmin if config.tmin is not None else 0.05,
        config.tmax if config.tmax is not None else 0.25,
    )
    report = empirical_bound_audit(
        cloud,
        config.k,
        config.pairs,
        seed=config.seed,
        t_range=t_range,
        exact=reference,
        tolerance=config.tolerance,
        config=config.echo(),
    )
    if config.csv:
        estimates = estimate_all(cloud, config.k, reference=reference)
        write_csv(config.csv, ESTIMATE_COLUMNS, (e.row() for e in estimates))
    code = _emit(report, config)
    if not report.flags["within_failure_budget"]:
        return EXIT_FAILURE
    return code


COMMANDS = {
    "bounds": cmd_bounds_table,
    "verify": cmd_verify,
    "project": cmd_project,
    "cloud": cmd_cloud,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags win")
    parser.add_argument("--manifold", help="circle, sphere, torus or ellipsoid")
    parser.add_argument("--param", action="append", metavar="K=V", help="shape parameter (repeatable)")
    parser.add_argument("--bound", action="append", metavar="ID", help="bound id (repeatable)")
    parser.add_argument("--n", type=int, help="number of pairs, probes or cloud points")
    parser.add_argument("--tmin", type=float)
    parser.add_argument("--tmax", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="JSON report path (default stdout)")
    parser.add_argument("--csv", help="CSV data path")
    parser.add_argument("--threads", type=int, help="worker cap (default LFSGEO_THREADS)")
    parser.add_argument("--tolerance", type=float, help="relative tolerance override")
    parser.add_argument("--omit-timing", action="store_true", default=None, help="drop wall time from reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfsgeo", description="Tangent-variation and lfs bound toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    bounds = subparsers.add_parser("bounds", help="tabulate bounds on a t grid")
    _add_common(bounds)
    bounds.add_argument("--step", type=float, help="grid spacing (default 0.01)")
    bounds.add_argument("--all", action="store_true", default=None, help="include the lemma bounds")

    verify = subparsers.add_parser("verify", help="Monte-Carlo bound verification")
    _add_common(verify)
    verify.add_argument("--check", choices=["tangent", "sandwich", "eq4"])
    verify.add_argument("--bound-scale", type=float, help="multiply upper bounds (test hook)")

    project = subparsers.add_parser("project", help="projection-onto-tangent probes")
    _add_common(project)
    project.add_argument("--point", help="comma-separated base point on M")

    cloud = subparsers.add_parser("cloud", help="point-cloud estimators and audit")
    _add_common(cloud)
    cloud.add_argument("--input", help="point file, one point per line")
    cloud.add_argument("--k", type=int, help="neighbour count")
    cloud.add_argument("--pairs", type=int, help="audit pairs")
    return parser


def _exit_code_for(error: LfsGeoError) -> int:
    if isinstance(error, (ValueError, UnknownBound, CodimensionUnsupported)):
        return EXIT_BAD_INPUT
    return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=settings.log_level, stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        config = build_run_config(args)
        logger.info("Running %s | seed=%d", config.command, config.seed)
        return COMMANDS[config.command](config)
    except LfsGeoError as e:
        logger.error("%s failed: %s", args.command, e)
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return _exit_code_for(e)
    except OSError as e:
        logger.error("%s failed: %s", args.command, e)
        print(json.dumps({"error": "io_error", "message": str(e)}), file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
