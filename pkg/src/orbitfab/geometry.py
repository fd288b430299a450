"""Solar exposure and line-of-sight geometry over sampled cluster orbits.

The sun direction is modeled in the rotated frame: the physical orbit is
sun-synchronous at its true inclination, so the unit sun vector traces a
cone a fixed 8 degrees (for 98 deg inclination) off the cross-track axis,
completing one revolution per orbit period.

Occlusion model: every satellite is an opaque disk of radius ``r_sat``
oriented normal to the sun. A point of a target disk is shadowed when its
sun-directed ray passes strictly within ``r_sat`` of a strictly sunward
satellite center. Exposure is the unshadowed fraction of a deterministic
spiral sample of the disk, averaged over the time grid. Verdicts are defined
with respect to the configured grids, not the continuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from orbitfab import _fast
from orbitfab.clusters import Cluster, ClusterParams, generate_3d

DEFAULT_DISK_SAMPLES = 512


@dataclass(frozen=True)
class SunModel:
    """Sun direction model for a sun-synchronous orbit of given true inclination."""

    period: float
    inclination_true: float = math.radians(98.0)

    def __post_init__(self) -> None:
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if abs(math.cos(self.inclination_true)) < 1e-12:
            raise ValueError("polar orbit has no defined sun-cone: |cos(i)| must be > 0")

    def sun_vector(self, t: float) -> np.ndarray:
        """Unit vector toward the sun at time t."""
        return self.sun_vectors(np.array([t]))[0]

    def sun_vectors(self, times: np.ndarray) -> np.ndarray:
        """Unit sun vectors, shaped (len(times), 3)."""
        phase = 2.0 * math.pi * np.asarray(times, dtype=float) / self.period
        raw = np.stack(
            [np.cos(phase), np.sin(phase), np.full_like(phase, abs(math.tan(self.inclination_true)))],
            axis=1,
        )
        return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def sun_model_for(cluster: Cluster) -> SunModel:
    return SunModel(cluster.params.chief.period, cluster.params.chief.inclination_true)


def disk_sample_offsets(n_samples: int = DEFAULT_DISK_SAMPLES) -> np.ndarray:
    """Deterministic spiral covering of the unit disk, shaped (n, 2).

    Radii sqrt((k + 1/2) / n) with golden-angle azimuths: near-uniform areal
    density, every point strictly inside the disk.
    """
    if n_samples < 1:
        raise ValueError("need at least one disk sample")
    k = np.arange(n_samples)
    r = np.sqrt((k + 0.5) / n_samples)
    theta = k * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


@dataclass(frozen=True)
class ExposureReport:
    """Per-satellite time-averaged solar exposure fractions."""

    r_sat: float
    per_satellite: np.ndarray

    @property
    def mean_exposure(self) -> float:
        return float(self.per_satellite.mean())

    @property
    def min_exposure(self) -> float:
        return float(self.per_satellite.min())

    def to_csv(self) -> str:
        lines = ["# per-satellite time-averaged solar exposure fraction",
                 f"# occlusion disk radius r_sat = {self.r_sat:.12g} m",
                 "sat_index,exposure_fraction"]
        for idx, val in enumerate(self.per_satellite):
            lines.append(f"{idx},{val:.12g}")
        return "\n".join(lines) + "\n"


def exposure(
    cluster: Cluster,
    r_sat: float,
    model: SunModel | None = None,
    n_steps: int = 720,
    n_disk_samples: int = DEFAULT_DISK_SAMPLES,
) -> ExposureReport:
    """Time-averaged unshadowed disk fraction for every satellite."""
    if r_sat < 0.0:
        raise ValueError("r_sat must be >= 0")
    n = cluster.n_sats
    if n == 0:
        return ExposureReport(r_sat, np.zeros(0))
    if model is None:
        model = sun_model_for(cluster)
    times, pos = cluster.trajectories(n_steps)
    if r_sat == 0.0 or n == 1:
        return ExposureReport(r_sat, np.ones(n))
    suns = model.sun_vectors(times)
    samples = disk_sample_offsets(n_disk_samples) * r_sat
    shadowed = _fast.exposure_scan(
        np.ascontiguousarray(pos), np.ascontiguousarray(suns), samples, float(r_sat)
    )
    return ExposureReport(r_sat, 1.0 - shadowed / len(times))


def exposure_vs_rsat(
    cluster: Cluster,
    r_sat_grid: list[float],
    model: SunModel | None = None,
    n_steps: int = 720,
    n_disk_samples: int = DEFAULT_DISK_SAMPLES,
) -> list[ExposureReport]:
    """Exposure reports across a grid of occlusion disk radii."""
    if not list(r_sat_grid):
        raise ValueError("r_sat grid must be non-empty")
    return [exposure(cluster, r, model, n_steps, n_disk_samples) for r in r_sat_grid]


def exposure_vs_ilocal(
    r_min: float,
    r_max: float,
    r_sat: float,
    i_local_grid: list[float],
    chief=None,
    n_steps: int = 720,
    n_disk_samples: int = DEFAULT_DISK_SAMPLES,
) -> list[tuple[float, float, float]]:
    """(i_local, mean exposure, min exposure) of the three_d design per grid point."""
    from orbitfab.clusters import DEFAULT_CHIEF

    chief = chief or DEFAULT_CHIEF
    if not list(i_local_grid):
        raise ValueError("i_local grid must be non-empty")
    out = []
    for i_local in i_local_grid:
        cluster = generate_3d(ClusterParams("three_d", r_min, r_max, float(i_local), chief))
        rep = exposure(cluster, r_sat, None, n_steps, n_disk_samples)
        out.append((float(i_local), rep.mean_exposure, rep.min_exposure))
    return out


@dataclass(frozen=True)
class LosMatrix:
    """Symmetric boolean line-of-sight matrix; diagonal is False."""

    bits: np.ndarray

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def degree(self) -> np.ndarray:
        return self.bits.sum(axis=1)

    def pairs(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.bits, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def to_json_dict(self) -> dict:
        return {"n": int(self.n), "pairs": [[int(i), int(j)] for i, j in self.pairs()]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "LosMatrix":
        bits = np.zeros((data["n"], data["n"]), dtype=bool)
        for i, j in data["pairs"]:
            bits[i, j] = bits[j, i] = True
        return cls(bits)


def los_matrix(cluster: Cluster, r_sat: float, n_steps: int = 720) -> LosMatrix:
    """Pairwise line-of-sight over the full sampled orbit.

    A pair has LOS iff at every sampled instant the segment between them
    keeps point-to-segment clearance >= r_sat from every other satellite.
    """
    if r_sat < 0.0:
        raise ValueError("r_sat must be >= 0")
    n = cluster.n_sats
    if r_sat == 0.0:
        bits = np.ones((n, n), dtype=bool)
        np.fill_diagonal(bits, False)
        return LosMatrix(bits)
    _, pos = cluster.trajectories(n_steps)
    bits = _fast.los_scan(np.ascontiguousarray(pos), float(r_sat))
    return LosMatrix(bits)
