"""Sweep solar exposure against the occlusion disk radius for each design.

Emits one CSV per design with mean and min exposure per r_sat value, dense
enough to locate the occlusion onset (where min exposure first drops
below 1). Full resolution takes a few minutes per design.

Usage: python3 scripts/exposure_thresholds.py [--out results/exposure]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

from orbitfab.clusters import ClusterParams, generate
from orbitfab.geometry import exposure_vs_rsat

GRIDS = {
    "suncatcher": [0, 10, 20, 30, 40, 45, 48, 49, 50, 51, 55, 60, 80],
    "planar": [0, 5, 10, 13, 15, 17, 18, 19, 21, 23, 25, 30, 40],
    "three_d": [0, 1, 2, 2.5, 3, 3.5, 4, 5, 8, 12],
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/exposure")
    parser.add_argument("--rmin", type=float, default=100.0)
    parser.add_argument("--rmax", type=float, default=1000.0)
    parser.add_argument("--ilocal-deg", type=float, default=43.8)
    parser.add_argument("--steps", type=int, default=720)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for design, grid in GRIDS.items():
        i_local = math.radians(args.ilocal_deg) if design == "three_d" else None
        cluster = generate(ClusterParams(design, args.rmin, args.rmax, i_local))
        reports = exposure_vs_rsat(cluster, [float(r) for r in grid], n_steps=args.steps)
        lines = ["# cluster-wide solar exposure vs occlusion disk radius",
                 f"# design = {design}, n_sats = {cluster.n_sats}",
                 "r_sat_m,mean_exposure,min_exposure"]
        onset = None
        for rep in reports:
            lines.append(f"{rep.r_sat:.12g},{rep.mean_exposure:.12g},{rep.min_exposure:.12g}")
            if onset is None and rep.min_exposure < 1.0:
                onset = rep.r_sat
        path = out / f"exposure_{design}.csv"
        path.write_text("\n".join(lines) + "\n")
        print(f"{design}: n_sats={cluster.n_sats} first min-exposure dip at "
              f"r_sat={onset} m -> {path}")


if __name__ == "__main__":
    main()
