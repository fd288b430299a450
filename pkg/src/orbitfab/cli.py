"""Command-line orchestration: design, analyze, synthesize, sweep.

Subcommands
    generate  build a cluster, verify spacing, write cluster + summary JSON
    analyze   exposure CSV, line-of-sight JSON, mesh metrics CSV for a cluster
    network   size a Clos fabric to the cluster and solve the node placement
    sweep     batch parameter scans driven by config-file sweep blocks

Exit codes: 0 success, 1 usage error, 2 constraint violation, 3 infeasible,
4 timeout. All outputs are deterministic for a fixed config, so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import assignment as asg
from . import clusters, geometry, network

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONSTRAINT = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4

DEFAULT_ILOCAL_DEG = math.degrees(network.DEFAULT_MESH_ILOCAL)


class UsageError(Exception):
    pass


class ConstraintError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters: defaults, then config file, then flags."""

    design: Optional[str] = None
    r_min: float = 100.0
    r_max: float = 1000.0
    i_local_deg: Optional[float] = None
    r_sat: float = 0.0
    k: int = 8
    n_steps: int = 720
    seed: int = 0
    output_dir: str = "."
    time_limit: float = asg.DEFAULT_TIME_LIMIT
    lp_export: bool = False

    def __post_init__(self) -> None:
        if self.n_steps < 8:
            raise UsageError(f"n_steps must be >= 8, got {self.n_steps}")
        if self.r_sat < 0.0:
            raise UsageError(f"r_sat must be >= 0, got {self.r_sat}")
        if self.time_limit <= 0.0:
            raise UsageError(f"time_limit must be > 0, got {self.time_limit}")


_CONFIG_KEYS = {
    "design", "r_min", "r_max", "i_local_deg", "r_sat", "k",
    "n_steps", "seed", "output_dir", "time_limit", "lp_export",
}


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS - {"sweeps"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve(args: argparse.Namespace) -> tuple[RunConfig, list]:
    file_values = _load_config_file(args.config) if args.config else {}
    sweeps = file_values.pop("sweeps", [])
    merged = dict(file_values)
    flag_map = {
        "design": args.design,
        "r_min": args.rmin,
        "r_max": args.rmax,
        "i_local_deg": args.ilocal,
        "r_sat": args.rsat,
        "k": args.k,
        "n_steps": args.steps,
        "output_dir": args.out,
        "time_limit": args.time_limit,
    }
    for key, val in flag_map.items():
        if val is not None:
            merged[key] = val
    if getattr(args, "lp_export", False):
        merged["lp_export"] = True
    try:
        return RunConfig(**merged), sweeps
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def _params_for(config: RunConfig) -> clusters.ClusterParams:
    if config.design is None:
        raise UsageError("a design is required (--design or config file)")
    i_local = None
    if config.design == "three_d":
        deg = config.i_local_deg if config.i_local_deg is not None else DEFAULT_ILOCAL_DEG
        i_local = math.radians(deg)
    try:
        return clusters.ClusterParams(config.design, config.r_min, config.r_max, i_local)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write_text(directory: str, name: str, text: str) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    print(f"wrote {path}")
    return path


def _write_json(directory: str, name: str, obj) -> Path:
    return _write_text(directory, name, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_cluster(path: str) -> clusters.Cluster:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"cluster file not found: {path}")
    try:
        return clusters.Cluster.from_json_dict(json.loads(p.read_text()))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"cluster file {path} is malformed: {exc}") from exc


def cmd_generate(config: RunConfig) -> int:
    cluster = clusters.generate(_params_for(config))
    report = cluster.verify(config.n_steps)
    summary = {
        "design": cluster.params.design,
        "n_sats": report.n_sats,
        "min_separation": report.min_separation,
        "max_radius": report.max_radius,
        "r_min": cluster.params.r_min,
        "r_max": cluster.params.r_max,
        "i_local_deg": (
            math.degrees(cluster.params.i_local)
            if cluster.params.i_local is not None else None
        ),
        "spacing_ok": report.ok,
    }
    _write_json(config.output_dir, "cluster.json", cluster.to_json_dict())
    _write_json(config.output_dir, "summary.json", summary)
    print(f"design={cluster.params.design} n_sats={report.n_sats} "
          f"min_separation={report.min_separation:.6g} max_radius={report.max_radius:.6g}")
    if not report.ok:
        offenders = clusters.violating_pairs(cluster, config.n_steps)
        for i, j, d in offenders[:20]:
            print(f"spacing violation: satellites {i} and {j} approach {d:.6g} m",
                  file=sys.stderr)
        raise ConstraintError(
            f"{report.n_violating_pairs} satellite pairs dip below r_min"
        )
    return EXIT_OK


def cmd_analyze(config: RunConfig, cluster_path: str) -> int:
    cluster = _load_cluster(cluster_path)
    report = geometry.exposure(cluster, config.r_sat, n_steps=config.n_steps)
    _write_text(config.output_dir, "exposure.csv", report.to_csv())
    los = geometry.los_matrix(cluster, config.r_sat, n_steps=config.n_steps)
    _write_json(config.output_dir, "los.json", los.to_json_dict())
    print(f"exposure mean={report.mean_exposure:.6g} min={report.min_exposure:.6g}; "
          f"los pairs={len(los.pairs())}")
    if cluster.params.design in ("planar", "three_d"):
        mesh = network.mesh_graph(cluster)
        metrics = network.graph_metrics(mesh)
        lines = [
            "# mesh graph metrics at the epoch snapshot",
            "n_sats,n_edges,diameter,mean_path_length,"
            "bisection_bandwidth_estimate,fiedler_value",
            f"{cluster.n_sats},{mesh.n_edges},{metrics.diameter},"
            f"{metrics.mean_path_length:.12g},{metrics.bisection_bandwidth_estimate},"
            f"{metrics.fiedler_value:.12g}",
        ]
        _write_text(config.output_dir, "mesh_metrics.csv", "\n".join(lines) + "\n")
    else:
        print("mesh metrics skipped: no static mesh for this design")
    return EXIT_OK


def cmd_network(config: RunConfig, cluster_path: str) -> int:
    if config.k < 2 or config.k % 2 != 0:
        raise UsageError(f"switch radix k must be even and >= 2, got {config.k}")
    cluster = _load_cluster(cluster_path)
    n = cluster.n_sats
    layers = network.choose_layers(n, config.k)
    full = network.clos_generate(config.k, layers)
    try:
        topo = network.clos_prune(full, n)
    except ValueError as exc:
        raise ConstraintError(str(exc)) from exc
    los = geometry.los_matrix(cluster, config.r_sat, n_steps=config.n_steps)
    problem = asg.build_problem(topo, los)
    stats, solution = asg.solve(problem, time_limit=config.time_limit)
    _write_json(config.output_dir, "topology.json", topo.to_json_dict())
    stats_doc = dict(stats.to_json_dict(), n_sats=n, k=config.k, layers=layers)
    _write_json(config.output_dir, "stats.json", stats_doc)
    if config.lp_export:
        _write_text(config.output_dir, "model.lp", asg.export_lp(problem))
    print(f"n_sats={n} k={config.k} layers={layers} outcome={stats.outcome} "
          f"nodes_explored={stats.nodes_explored} wall_time={stats.wall_time:.3g}s")
    if solution is not None:
        _write_json(config.output_dir, "assignment.json", solution.to_json_dict())
        return EXIT_OK
    return EXIT_TIMEOUT if stats.outcome == asg.OUTCOME_TIMEOUT else EXIT_INFEASIBLE


def _require(block: dict, key: str):
    if key not in block:
        raise UsageError(f"sweep block missing required key {key!r}: {block}")
    return block[key]


def _sweep_ilocal(config: RunConfig, block: dict) -> None:
    r_min = float(block.get("r_min", config.r_min))
    r_max = float(block.get("r_max", config.r_max))
    if "grid_deg" in block:
        grid_deg = [float(v) for v in block["grid_deg"]]
    else:
        start = float(_require(block, "start_deg"))
        stop = float(_require(block, "stop_deg"))
        step = float(_require(block, "step_deg"))
        grid_deg = list(np.arange(start, stop + 1e-9, step))
    if not grid_deg:
        raise UsageError("i_local sweep grid is empty")
    results = clusters.optimize_i_local(r_min, r_max, np.radians(grid_deg))
    lines = ["# three_d satellite count vs local plane inclination",
             f"# r_min = {r_min:.12g} m, r_max = {r_max:.12g} m",
             "i_local_deg,n_sats"]
    for (i_local, n), deg in zip(results, grid_deg):
        lines.append(f"{deg:.12g},{n}")
    _write_text(config.output_dir, "nsats_vs_ilocal.csv", "\n".join(lines) + "\n")


def _sweep_exposure(config: RunConfig, block: dict) -> None:
    design = block.get("design", config.design)
    grid = [float(v) for v in _require(block, "r_sat_grid")]
    if not grid:
        raise UsageError("exposure sweep r_sat grid is empty")
    sub = RunConfig(
        design=design,
        r_min=float(block.get("r_min", config.r_min)),
        r_max=float(block.get("r_max", config.r_max)),
        i_local_deg=block.get("i_local_deg", config.i_local_deg),
        n_steps=int(block.get("n_steps", config.n_steps)),
    )
    cluster = clusters.generate(_params_for(sub))
    reports = geometry.exposure_vs_rsat(cluster, grid, n_steps=sub.n_steps)
    lines = ["# cluster-wide solar exposure vs occlusion disk radius",
             f"# design = {design}, n_sats = {cluster.n_sats}",
             "r_sat_m,mean_exposure,min_exposure"]
    for rep in reports:
        lines.append(f"{rep.r_sat:.12g},{rep.mean_exposure:.12g},{rep.min_exposure:.12g}")
    _write_text(config.output_dir, "exposure_vs_rsat.csv", "\n".join(lines) + "\n")


def _sweep_ratio(config: RunConfig, block: dict) -> None:
    designs = block.get("designs", list(clusters.DESIGNS))
    ratios = [float(v) for v in _require(block, "ratios")]
    if not ratios or not designs:
        raise UsageError("ratio sweep needs non-empty designs and ratios")
    r_min = float(block.get("r_min", config.r_min))
    rows = ["# satellite count vs r_max/r_min ratio",
            "design,ratio,n_sats,i_local_deg"]
    fits = ["# power-law fits n = a * ratio^b (rmse in satellites)",
            "design,a,b,rmse"]
    for design in designs:
        points = clusters.sweep_nsats(design, ratios, r_min=r_min)
        for pt in points:
            ilocal = f"{math.degrees(pt.i_local):.12g}" if pt.i_local is not None else ""
            rows.append(f"{design},{pt.ratio:.12g},{pt.n_sats},{ilocal}")
        fit = clusters.fit_power_law([(p.ratio, p.n_sats) for p in points])
        fits.append(f"{design},{fit.a:.12g},{fit.b:.12g},{fit.rmse:.12g}")
    _write_text(config.output_dir, "nsats_vs_ratio.csv", "\n".join(rows) + "\n")
    _write_text(config.output_dir, "power_fits.csv", "\n".join(fits) + "\n")


_SWEEP_KINDS = {
    "ilocal": _sweep_ilocal,
    "exposure": _sweep_exposure,
    "ratio": _sweep_ratio,
}


def cmd_sweep(config: RunConfig, sweeps: list) -> int:
    if not sweeps:
        raise UsageError("sweep needs a config file with a non-empty 'sweeps' list")
    if not isinstance(sweeps, list):
        raise UsageError("'sweeps' must be a list of sweep blocks")
    for block in sweeps:
        if not isinstance(block, dict) or "kind" not in block:
            raise UsageError(f"sweep block needs a 'kind' key: {block}")
        kind = block["kind"]
        if kind not in _SWEEP_KINDS:
            raise UsageError(
                f"unknown sweep kind {kind!r}; expected one of {sorted(_SWEEP_KINDS)}"
            )
        _SWEEP_KINDS[kind](config, block)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to the usage exit code
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="orbitfab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "generate": "build and verify a cluster design",
        "analyze": "exposure, line-of-sight, and mesh reports for a cluster",
        "network": "fit a Clos fabric onto a cluster and solve the placement",
        "sweep": "run config-driven parameter sweeps",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--design", choices=sorted(clusters.DESIGNS))
        p.add_argument("--rmin", type=float, help="minimum spacing [m]")
        p.add_argument("--rmax", type=float, help="cluster radius [m]")
        p.add_argument("--ilocal", type=float,
                       help=f"three_d plane inclination [deg], default {DEFAULT_ILOCAL_DEG:g}")
        p.add_argument("--rsat", type=float, help="occlusion disk radius [m]")
        p.add_argument("--k", type=int, help="switch radix (even)")
        p.add_argument("--steps", type=int, help="orbit samples per period")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--time-limit", type=float, dest="time_limit",
                       help="assignment solve budget [s]")
        if name == "network":
            p.add_argument("--lp-export", action="store_true", dest="lp_export",
                           help="also write the model as LP text")
        if name in ("analyze", "network"):
            p.add_argument("cluster", help="cluster JSON produced by generate")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config, sweeps = _resolve(args)
        if args.command == "generate":
            return cmd_generate(config)
        if args.command == "analyze":
            return cmd_analyze(config, args.cluster)
        if args.command == "network":
            return cmd_network(config, args.cluster)
        return cmd_sweep(config, sweeps)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstraintError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
