"""Cluster construction: baseline grid, rigid planar disk, stacked-plane 3D.

Three designs populate a spherical deployment region of radius ``r_max``
while keeping every pairwise distance at or above ``r_min`` over the full
orbit:

* ``suncatcher``: a rectangular grid riding nested 2:1 in-plane ellipses
  (the whole grid deforms through an area-preserving shear each orbit).
* ``planar``: a hexagonal lattice on a disk inclined 60 degrees from the
  orbital plane through the along-track axis; the disk rotates rigidly.
* ``three_d``: hexagonal lattices on a stack of along-track-inclined planes
  spaced so neighbouring planes sit one ``r_min`` apart; each plane's
  satellites ride similar ellipses that rotate rigidly in shear-compensated
  plane coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from orbitfab import _fast
from orbitfab.astro import ChiefOrbit, ModifiedROE, propagate_many

DESIGNS = ("suncatcher", "planar", "three_d")

DEFAULT_CHIEF = ChiefOrbit.at_altitude(650e3)

PLANAR_TILT = math.pi / 3.0
"""Inclination of the planar design's disk relative to the orbital plane."""

DISTANCE_TOL = 1e-6
"""Absolute tolerance [m] applied to r_min / r_max boundary checks."""


@dataclass(frozen=True)
class ClusterParams:
    """Geometry inputs shared by all designs.

    ``i_local`` is the local plane inclination of the three_d design and is
    ignored by the others. r_min = r_max is allowed (single-satellite and
    single-ring corners exercise it).
    """

    design: str
    r_min: float
    r_max: float
    i_local: float | None = None
    chief: ChiefOrbit = DEFAULT_CHIEF

    def __post_init__(self) -> None:
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; expected one of {DESIGNS}")
        if not 0.0 < self.r_min <= self.r_max:
            raise ValueError(f"need 0 < r_min <= r_max, got {self.r_min}, {self.r_max}")
        if self.design == "three_d":
            if self.i_local is None or not 0.0 < self.i_local < math.pi / 2.0:
                raise ValueError("three_d design needs i_local in (0, pi/2)")
        if self.r_max >= 0.01 * self.chief.semi_major_axis:
            raise ValueError("cluster radius must stay small against the chief orbit")


@dataclass(frozen=True)
class VerificationReport:
    n_sats: int
    min_separation: float
    max_radius: float
    n_violating_pairs: int

    @property
    def ok(self) -> bool:
        return self.n_violating_pairs == 0


class Cluster:
    """A concrete satellite set plus its sampled-trajectory cache."""

    def __init__(self, params: ClusterParams, satellites: list[ModifiedROE], plane_ids: list[int] | None = None):
        self.params = params
        self.satellites = list(satellites)
        self.plane_ids = list(plane_ids) if plane_ids is not None else [0] * len(satellites)
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def n_sats(self) -> int:
        return len(self.satellites)

    def trajectories(self, n_steps: int = 720) -> tuple[np.ndarray, np.ndarray]:
        """(times, positions) with positions shaped (n_sats, n_steps+1, 3); cached."""
        if n_steps not in self._cache:
            self._cache[n_steps] = propagate_many(self.satellites, self.params.chief, n_steps)
        return self._cache[n_steps]

    def verify(self, n_steps: int = 720) -> VerificationReport:
        """Numeric r_min / r_max check over every pair and sample."""
        if self.n_sats == 0:
            return VerificationReport(0, math.inf, 0.0, 0)
        _, pos = self.trajectories(n_steps)
        max_radius = float(np.sqrt((pos**2).sum(axis=2)).max())
        if self.n_sats == 1:
            return VerificationReport(1, math.inf, max_radius, 0)
        ids = np.zeros(self.n_sats, dtype=np.int64)
        min_sep, count, *_ = _fast.banded_pair_scan(
            pos, ids, np.int64(0), self.params.r_min - DISTANCE_TOL, 1 << 20
        )
        return VerificationReport(self.n_sats, float(min_sep), max_radius, int(count))

    def to_json_dict(self) -> dict:
        return {
            "params": {
                "design": self.params.design,
                "r_min": self.params.r_min,
                "r_max": self.params.r_max,
                "i_local": self.params.i_local,
                "chief": {
                    "semi_major_axis": self.params.chief.semi_major_axis,
                    "inclination_true": self.params.chief.inclination_true,
                },
            },
            "satellites": [
                {
                    "delta_a": s.delta_a,
                    "delta_lambda": s.delta_lambda,
                    "delta_ex": s.delta_ex,
                    "delta_ey": s.delta_ey,
                    "delta_ix": s.delta_ix,
                    "delta_iy": s.delta_iy,
                }
                for s in self.satellites
            ],
            "plane_ids": self.plane_ids,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Cluster":
        p = data["params"]
        chief = ChiefOrbit(p["chief"]["semi_major_axis"], p["chief"]["inclination_true"])
        params = ClusterParams(
            design=p["design"], r_min=p["r_min"], r_max=p["r_max"], i_local=p["i_local"], chief=chief
        )
        sats = [ModifiedROE(**s) for s in data["satellites"]]
        return cls(params, sats, data.get("plane_ids"))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Cluster":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


def hex_lattice_disk(radius: float, pitch: float, half_offset: bool = False) -> np.ndarray:
    """Hexagonal lattice points inside a disk, boundary inclusive.

    One lattice axis runs along the second plane coordinate (the in-plane
    projection of the along-track direction). ``half_offset`` shifts the
    lattice by half a pitch along that axis, dropping the center point.
    """
    if radius < 0.0 or pitch <= 0.0:
        raise ValueError("need radius >= 0 and pitch > 0")
    pts: list[tuple[float, float]] = []
    span = int(radius / pitch) + 2
    shift = 0.5 * pitch if half_offset else 0.0
    for j in range(-span, span + 1):
        for i in range(-span, span + 1):
            c1 = pitch * (math.sqrt(3.0) / 2.0) * j
            c2 = pitch * (i + 0.5 * j) + shift
            if math.hypot(c1, c2) <= radius + DISTANCE_TOL:
                pts.append((c1, c2))
    if not pts:
        return np.zeros((0, 2))
    return np.array(sorted(pts))


def generate_suncatcher(params: ClusterParams) -> Cluster:
    """Rectangular-grid baseline: spacing r_min radially, 2 r_min along-track.

    Grid points ride origin-centered 2:1 ellipses; membership requires the
    whole ellipse (semi-major 2b along-track) to fit the r_max disk, i.e.
    integer (i, j) with i^2 + j^2 <= (r_max / (2 r_min))^2, boundary
    inclusive. The minimum pairwise distance over the orbit is exactly r_min.
    """
    if params.design != "suncatcher":
        raise ValueError("params.design must be 'suncatcher'")
    a = params.chief.semi_major_axis
    limit = params.r_max / (2.0 * params.r_min)
    limit2 = limit * limit + DISTANCE_TOL / params.r_min
    span = int(limit) + 1
    sats = []
    for i in range(-span, span + 1):
        for j in range(-span, span + 1):
            if i * i + j * j > limit2:
                continue
            x0 = i * params.r_min
            y0 = j * 2.0 * params.r_min
            sats.append(
                ModifiedROE(0.0, 0.0, -x0 / a, -y0 / (2.0 * a), 0.0, 0.0)
            )
    return Cluster(params, sats)


def generate_planar(params: ClusterParams, half_offset: bool = False) -> Cluster:
    """Rigidly rotating hexagonal disk inclined 60 degrees through the
    along-track axis.

    Each lattice point (azimuth gamma, radius rho) maps to a circular
    relative orbit of radius rho: e_d = rho / (2 a_c), i_d = sqrt(3) e_d,
    omega_d = -pi/2, Omega_d = gamma - pi/2. All satellites revolve at the
    common rate, so the disk never deforms and pairwise distances are
    constant.
    """
    if params.design != "planar":
        raise ValueError("params.design must be 'planar'")
    a = params.chief.semi_major_axis
    sats = []
    for c1, c2 in hex_lattice_disk(params.r_max, params.r_min, half_offset):
        rho = math.hypot(c1, c2)
        if rho == 0.0:
            sats.append(ModifiedROE(0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
            continue
        gamma = math.atan2(c2, c1)
        e_d = rho / (2.0 * a)
        i_d = math.sqrt(3.0) * e_d
        sats.append(
            ModifiedROE(
                0.0,
                0.0,
                -e_d * math.cos(gamma),
                -e_d * math.sin(gamma),
                i_d * math.sin(gamma),
                -i_d * math.cos(gamma),
            )
        )
    return Cluster(params, sats)


def plane_spacing(r_min: float, i_local: float) -> float:
    """Along-track center spacing between neighbouring inclined planes [m]."""
    return r_min / min(math.cos(i_local), math.sin(i_local))


def _three_d_seed(params: ClusterParams) -> tuple[list[ModifiedROE], list[int]]:
    a = params.chief.semi_major_axis
    i_local = params.i_local
    s = plane_spacing(params.r_min, i_local)
    n_half = int(math.floor(params.r_max / s + 1e-9))
    # plane tilt fixes the amplitude ratio: tan(i_local) = i_d / (2 e_d)
    ratio_ie = 2.0 * math.tan(i_local)
    # largest orbit extent in a plane is A * rho for A = sqrt(4 + ratio^2)
    stretch = math.sqrt(4.0 + ratio_ie * ratio_ie)
    seed_radius = params.r_max / stretch + params.r_min
    # quarter-turn the hex grid (same lattice as a 30 degree turn) so rows
    # run across the stacking axis: at the aligned orientation, sun rays
    # sampled over the orbit graze cross-plane neighbours within ~1.3 m,
    # while this one keeps every sampled ray >= ~7 m clear
    lattice = [(-eta, xi) for xi, eta in hex_lattice_disk(seed_radius, params.r_min)]
    sats: list[ModifiedROE] = []
    plane_ids: list[int] = []
    for k in range(-n_half, n_half + 1):
        dlam = k * s / a
        for xi, eta in lattice:
            dex = -xi / a
            dey = -eta / a
            sats.append(
                ModifiedROE(0.0, dlam, dex, dey, ratio_ie * dex, ratio_ie * dey)
            )
            plane_ids.append(k)
    return sats, plane_ids


def _greedy_remove(n: int, viol_i: np.ndarray, viol_j: np.ndarray, viol_d: np.ndarray, rho: np.ndarray) -> set[int]:
    """Resolve spacing violations by deleting satellites, worst pair first.

    Of the worst pair's endpoints, drop the one touching more violations,
    then the one farther from the cluster center, then the higher index.
    """
    edges = sorted(range(len(viol_i)), key=lambda k: (viol_d[k], viol_i[k], viol_j[k]))
    alive_edges = [(int(viol_i[k]), int(viol_j[k])) for k in edges]
    removed: set[int] = set()
    counts = np.zeros(n, dtype=int)
    for i, j in alive_edges:
        counts[i] += 1
        counts[j] += 1
    for i, j in alive_edges:
        if i in removed or j in removed:
            continue
        pick = max((counts[i], rho[i], i), (counts[j], rho[j], j))[2]
        removed.add(pick)
        for u, v in alive_edges:
            if pick in (u, v) and u not in removed and v not in removed:
                counts[u] -= 1
                counts[v] -= 1
    return removed


def generate_3d(params: ClusterParams, n_steps: int = 720) -> Cluster:
    """Stacked along-track-inclined planes of hexagonal lattices.

    Planes sit at along-track offsets k*s for |k| <= floor(r_max/s), with s
    sized so neighbouring planes stay r_min apart perpendicular to the
    planes. In shear-compensated plane coordinates every satellite rides a
    circle and the lattice rotates rigidly, so same-plane spacing holds by
    construction. Satellites whose sampled orbits exit the r_max sphere are
    pruned, then a numeric scan over plane-adjacent pairs (farther plane
    pairs are >= 2 r_min apart by construction) removes residual violators
    greedily.
    """
    if params.design != "three_d":
        raise ValueError("params.design must be 'three_d'")
    sats, plane_ids = _three_d_seed(params)
    if not sats:
        return Cluster(params, [], [])
    _, pos = propagate_many(sats, params.chief, n_steps)
    radii = np.sqrt((pos**2).sum(axis=2)).max(axis=1)
    keep = radii <= params.r_max + DISTANCE_TOL
    sats = [s for s, k in zip(sats, keep) if k]
    plane_ids = [p for p, k in zip(plane_ids, keep) if k]
    pos = pos[keep]
    if len(sats) > 1:
        ids = np.asarray(plane_ids, dtype=np.int64)
        threshold = params.r_min - DISTANCE_TOL
        cap = 1 << 16
        while True:
            _, count, vi, vj, vd = _fast.banded_pair_scan(pos, ids, np.int64(1), threshold, cap)
            if count <= cap:
                break
            cap = 2 * count
        if count:
            rho = np.sqrt((pos[:, 0, :] ** 2).sum(axis=1))
            removed = _greedy_remove(len(sats), vi[:count], vj[:count], vd[:count], rho)
            sats = [s for k, s in enumerate(sats) if k not in removed]
            plane_ids = [p for k, p in enumerate(plane_ids) if k not in removed]
    return Cluster(params, sats, plane_ids)


def violating_pairs(cluster: Cluster, n_steps: int = 720) -> list[tuple[int, int, float]]:
    """Satellite pairs dipping below r_min, with their closest approach [m]."""
    if cluster.n_sats < 2:
        return []
    _, pos = cluster.trajectories(n_steps)
    ids = np.zeros(cluster.n_sats, dtype=np.int64)
    _, count, viol_i, viol_j, viol_d = _fast.banded_pair_scan(
        pos, ids, np.int64(0), cluster.params.r_min - DISTANCE_TOL, 1 << 20
    )
    stored = min(int(count), len(viol_i))
    return [
        (int(viol_i[m]), int(viol_j[m]), float(viol_d[m])) for m in range(stored)
    ]


def generate(params: ClusterParams) -> Cluster:
    """Dispatch to the design-specific constructor."""
    if params.design == "suncatcher":
        return generate_suncatcher(params)
    if params.design == "planar":
        return generate_planar(params)
    return generate_3d(params)


def optimize_i_local(
    r_min: float,
    r_max: float,
    grid: np.ndarray | list[float],
    chief: ChiefOrbit = DEFAULT_CHIEF,
) -> list[tuple[float, int]]:
    """Satellite count of the three_d design at each plane inclination."""
    grid = list(grid)
    if not grid:
        raise ValueError("i_local grid must be non-empty")
    out = []
    for i_local in grid:
        params = ClusterParams("three_d", r_min, r_max, float(i_local), chief)
        out.append((float(i_local), generate_3d(params).n_sats))
    return out


def argmax_plateau(results: list[tuple[float, int]]) -> tuple[float, float, int]:
    """Widest contiguous grid run attaining the maximal count: (lo, hi, n)."""
    if not results:
        raise ValueError("empty i_local scan")
    n_max = max(n for _, n in results)
    best: tuple[float, float] | None = None
    run_start = None
    prev_hit = False
    for idx, (i_local, n) in enumerate(results):
        hit = n == n_max
        if hit and not prev_hit:
            run_start = i_local
        if hit and (idx == len(results) - 1 or results[idx + 1][1] != n_max):
            lo, hi = run_start, i_local
            if best is None or hi - lo > best[1] - best[0]:
                best = (lo, hi)
        prev_hit = hit
    return best[0], best[1], n_max


def pick_plateau_i_local(results: list[tuple[float, int]]) -> float:
    """Largest plane inclination inside the maximal plateau."""
    _, hi, _ = argmax_plateau(results)
    return hi


DEFAULT_ILOCAL_GRID_DEG = np.arange(30.0, 55.0 + 1e-9, 0.5)


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    n_sats: int
    i_local: float | None = None


def sweep_nsats(
    design: str,
    ratios: list[float],
    r_min: float = 100.0,
    chief: ChiefOrbit = DEFAULT_CHIEF,
    coarse_grid_deg: np.ndarray = DEFAULT_ILOCAL_GRID_DEG,
    refine_step_deg: float = 0.1,
) -> list[SweepPoint]:
    """Satellite count versus r_max/r_min ratio at fixed r_min.

    For the three_d design the plane inclination is re-optimized at each
    ratio: a coarse grid scan, then a refinement step around the winning
    plateau, keeping the largest inclination on it.
    """
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}")
    points = []
    for ratio in ratios:
        if ratio < 1.0:
            raise ValueError("ratios must be >= 1")
        r_max = ratio * r_min
        if design == "three_d":
            coarse = optimize_i_local(r_min, r_max, np.radians(coarse_grid_deg), chief)
            lo, hi, _ = argmax_plateau(coarse)
            pad = math.radians(0.5)
            fine_grid = np.arange(lo - pad, hi + pad + 1e-12, math.radians(refine_step_deg))
            fine_grid = fine_grid[(fine_grid > 0.0) & (fine_grid < math.pi / 2.0)]
            fine = optimize_i_local(r_min, r_max, fine_grid, chief)
            i_best = pick_plateau_i_local(fine)
            n = dict(fine)[i_best]
            points.append(SweepPoint(ratio, n, i_best))
        else:
            params = ClusterParams(design, r_min, r_max, None, chief)
            points.append(SweepPoint(ratio, generate(params).n_sats, None))
    return points


@dataclass(frozen=True)
class PowerFit:
    """Least-squares fit of n = a * ratio^b; rmse is in count units."""

    a: float
    b: float
    rmse: float


def fit_power_law(points: list[tuple[float, float]]) -> PowerFit:
    """Fit counts versus ratio to a power law.

    Nonlinear least squares in count space, seeded by a log-log linear
    regression; rmse is the root-mean-square residual in satellites.
    """
    if len(points) < 3:
        raise ValueError("need at least three points to fit a power law")
    ratios = np.array([p[0] for p in points], dtype=float)
    counts = np.array([p[1] for p in points], dtype=float)
    if np.any(ratios <= 0.0) or np.any(counts <= 0.0):
        raise ValueError("power-law fit needs positive ratios and counts")
    if np.unique(ratios).size < 2:
        raise ValueError("power-law fit needs at least two distinct ratios")
    b0, log_a0 = np.polyfit(np.log(ratios), np.log(counts), 1)
    (a, b), _ = scipy.optimize.curve_fit(
        lambda r, a_, b_: a_ * np.power(r, b_),
        ratios,
        counts,
        p0=[math.exp(log_a0), b0],
        maxfev=20000,
    )
    resid = counts - a * np.power(ratios, b)
    return PowerFit(a=float(a), b=float(b), rmse=float(np.sqrt(np.mean(resid**2))))
