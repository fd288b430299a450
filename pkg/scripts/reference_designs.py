"""Build the three reference clusters and print their headline numbers.

Usage: python3 scripts/reference_designs.py [--out results/designs]
"""

from __future__ import annotations

import argparse
import json
import math
import time
from pathlib import Path

from orbitfab.clusters import ClusterParams, generate

REFERENCE = [
    ("suncatcher", 100.0, 1000.0, None),
    ("planar", 100.0, 1000.0, None),
    ("three_d", 100.0, 1000.0, math.radians(43.8)),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/designs")
    parser.add_argument("--steps", type=int, default=720)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print(f"{'design':<12}{'n_sats':>8}{'min_sep_m':>12}{'max_radius_m':>14}{'seconds':>9}")
    for design, r_min, r_max, i_local in REFERENCE:
        t0 = time.perf_counter()
        cluster = generate(ClusterParams(design, r_min, r_max, i_local))
        report = cluster.verify(args.steps)
        dt = time.perf_counter() - t0
        print(f"{design:<12}{report.n_sats:>8}{report.min_separation:>12.3f}"
              f"{report.max_radius:>14.2f}{dt:>9.2f}")
        assert report.ok, f"{design}: {report.n_violating_pairs} spacing violations"
        path = out / f"{design}.json"
        path.write_text(json.dumps(cluster.to_json_dict(), indent=2, sort_keys=True) + "\n")
        print(f"  -> {path}")


if __name__ == "__main__":
    main()
