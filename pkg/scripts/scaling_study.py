"""Satellite-count power laws and mesh-metric scaling exponents.

Part 1: N_sats vs r_max/r_min for all three designs over ratios 5..20, with
log-log power fits (planar designs approach exponent 2, the 3D lattice 3,
and the curves cross between ratios ~11.5 and ~15.5).

Part 2: mesh graph metrics (diameter, mean path length, bisection estimate,
Fiedler value) vs N_sats for the planar and 3D meshes, with their log-log
slopes. The 3D sweep re-generates lattices up to N >= 1000.

Full run takes tens of minutes; trim --ratios for a quick look.

Usage: python3 scripts/scaling_study.py [--out results/scaling]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from orbitfab.clusters import fit_power_law, sweep_nsats
from orbitfab.network import fit_loglog_slope, mesh_scaling

METRICS = ("diameter", "mean_path_length", "bisection_bandwidth_estimate", "fiedler_value")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/scaling")
    parser.add_argument("--ratios", type=float, nargs="+",
                        default=[5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20])
    parser.add_argument("--mesh-ratios-planar", type=float, nargs="+",
                        default=[4, 6, 8, 10, 12, 14, 17])
    parser.add_argument("--mesh-ratios-3d", type=float, nargs="+",
                        default=[4, 6, 8, 10, 12, 14, 16])
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = ["design,ratio,n_sats"]
    fits = ["design,a,b,rmse"]
    counts = {}
    for design in ("suncatcher", "planar", "three_d"):
        points = sweep_nsats(design, list(args.ratios))
        counts[design] = {p.ratio: p.n_sats for p in points}
        rows += [f"{design},{p.ratio:g},{p.n_sats}" for p in points]
        fit = fit_power_law([(p.ratio, p.n_sats) for p in points])
        fits.append(f"{design},{fit.a:.6g},{fit.b:.6g},{fit.rmse:.6g}")
        print(f"{design}: n = {fit.a:.3f} * ratio^{fit.b:.3f} (rmse {fit.rmse:.3f})")
    (out / "nsats_vs_ratio.csv").write_text("\n".join(rows) + "\n")
    (out / "power_fits.csv").write_text("\n".join(fits) + "\n")

    crossing = [r for r in args.ratios
                if counts["three_d"][r] > counts["planar"][r]]
    if crossing:
        print(f"3D count first exceeds planar at ratio {min(crossing):g}")

    for design, ratios in (("planar", args.mesh_ratios_planar),
                           ("three_d", args.mesh_ratios_3d)):
        samples = mesh_scaling(design, list(ratios))
        ns = [n for n, _ in samples]
        lines = ["n_sats," + ",".join(METRICS)]
        for n, metrics in samples:
            lines.append(f"{n}," + ",".join(
                f"{getattr(metrics, m):.10g}" for m in METRICS))
        (out / f"mesh_scaling_{design}.csv").write_text("\n".join(lines) + "\n")
        slopes = {m: fit_loglog_slope(ns, [getattr(metrics, m) for _, metrics in samples])
                  for m in METRICS}
        pretty = ", ".join(f"{m}={v:+.3f}" for m, v in slopes.items())
        print(f"{design} mesh slopes (N up to {max(ns)}): {pretty}")


if __name__ == "__main__":
    main()
