"""Fabric placement feasibility across the cluster/radix/occlusion grid.

For each (design, r_max, k, r_sat) cell: build the cluster, pick the layer
count for its satellite total, prune the fabric to that exact size, compute
the permanent line-of-sight matrix, and run the placement solver. One CSV
row per cell records size, layers, outcome, and wall time.

Defaults cover r_max 500..1000 m in 100 m steps with k in {4, 8, 12} and
r_sat in {0, 15} m for both the planar and 3D designs (3D planes at the
43.8 deg operating point). Cells whose fabric is shallower than 3 layers
are skipped (the placement study targets multi-stage fabrics).

Usage: python3 scripts/feasibility_grid.py [--out results/grid.csv]
"""

from __future__ import annotations

import argparse
import math
import time
from pathlib import Path

from orbitfab import assignment as asg
from orbitfab import network as nw
from orbitfab.clusters import ClusterParams, generate
from orbitfab.geometry import los_matrix


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/grid.csv")
    parser.add_argument("--rmax", type=float, nargs="+",
                        default=[500, 600, 700, 800, 900, 1000])
    parser.add_argument("--k", type=int, nargs="+", default=[4, 8, 12])
    parser.add_argument("--rsat", type=float, nargs="+", default=[0, 15])
    parser.add_argument("--ilocal-deg", type=float, default=43.8)
    parser.add_argument("--time-limit", type=float, default=60.0)
    args = parser.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    rows = ["design,r_max_m,r_sat_m,k,n_sats,layers,outcome,seconds"]
    for design in ("planar", "three_d"):
        i_local = math.radians(args.ilocal_deg) if design == "three_d" else None
        for r_max in args.rmax:
            cluster = generate(ClusterParams(design, 100.0, float(r_max), i_local))
            n = cluster.n_sats
            for r_sat in args.rsat:
                los = los_matrix(cluster, float(r_sat))
                for k in args.k:
                    layers = nw.choose_layers(n, k)
                    if layers < 3:
                        continue
                    t0 = time.perf_counter()
                    topo = nw.clos_prune(nw.clos_generate(k, layers), n)
                    stats, _ = asg.solve(
                        asg.build_problem(topo, los), time_limit=args.time_limit
                    )
                    dt = time.perf_counter() - t0
                    rows.append(f"{design},{r_max:g},{r_sat:g},{k},{n},"
                                f"{layers},{stats.outcome},{dt:.3f}")
                    print(rows[-1])
    out.write_text("\n".join(rows) + "\n")
    print(f"-> {out}")


if __name__ == "__main__":
    main()
