"""Sun model, disk occlusion, and line-of-sight scans against brute oracles."""

import math

import numpy as np
import pytest

from orbitfab.astro import ModifiedROE
from orbitfab.clusters import Cluster, ClusterParams, generate_3d, generate_planar, generate_suncatcher
from orbitfab.geometry import (
    ExposureReport,
    LosMatrix,
    SunModel,
    disk_sample_offsets,
    exposure,
    exposure_vs_ilocal,
    exposure_vs_rsat,
    los_matrix,
    sun_model_for,
)

from conftest import REFERENCE_CHIEF


def static_cluster(positions: np.ndarray, n_steps: int) -> Cluster:
    """Cluster whose trajectory cache is overridden with hand-built positions."""
    params = ClusterParams("planar", 1.0, 1000.0)
    sats = [ModifiedROE(0.0, 0.0, 0.0, 0.0, 0.0, 0.0) for _ in range(positions.shape[0])]
    cluster = Cluster(params, sats)
    times = np.linspace(0.0, REFERENCE_CHIEF.period, n_steps + 1)
    cluster._cache[n_steps] = (times, positions)
    return cluster


def random_cluster(rng: np.random.Generator, n: int) -> Cluster:
    sats = [
        ModifiedROE(
            0.0,
            rng.uniform(-5e-5, 5e-5),
            rng.uniform(-3e-5, 3e-5),
            rng.uniform(-3e-5, 3e-5),
            rng.uniform(-3e-5, 3e-5),
            rng.uniform(-3e-5, 3e-5),
        )
        for _ in range(n)
    ]
    return Cluster(ClusterParams("planar", 1.0, 2000.0), sats)


def brute_los(pos: np.ndarray, r_sat: float) -> tuple[np.ndarray, np.ndarray]:
    """Plain-numpy point-to-segment sweep; returns (bits, min clearance per pair)."""
    n = pos.shape[0]
    bits = np.ones((n, n), dtype=bool)
    np.fill_diagonal(bits, False)
    clearance = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            seg = pos[j] - pos[i]
            denom = (seg * seg).sum(axis=1)
            worst = np.inf
            for o in range(n):
                if o == i or o == j:
                    continue
                rel = pos[o] - pos[i]
                frac = np.clip((rel * seg).sum(axis=1) / denom, 0.0, 1.0)
                dist = np.sqrt(((rel - frac[:, None] * seg) ** 2).sum(axis=1))
                worst = min(worst, float(dist.min()))
            clearance[i, j] = clearance[j, i] = worst
            bits[i, j] = bits[j, i] = worst >= r_sat
    return bits, clearance


class TestSunModel:
    def test_reference_direction_at_epoch(self):
        model = SunModel(REFERENCE_CHIEF.period)
        vec = model.sun_vector(0.0)
        raw = np.array([1.0, 0.0, abs(math.tan(math.radians(98.0)))])
        assert vec == pytest.approx(raw / np.linalg.norm(raw), abs=1e-12)
        assert vec == pytest.approx([0.1392, 0.0, 0.9903], abs=1e-4)

    def test_quarter_period_direction(self):
        model = SunModel(REFERENCE_CHIEF.period)
        vec = model.sun_vector(model.period / 4.0)
        raw = np.array([0.0, 1.0, abs(math.tan(math.radians(98.0)))])
        assert vec == pytest.approx(raw / np.linalg.norm(raw), abs=1e-12)

    def test_cone_half_angle_is_eight_degrees(self):
        model = SunModel(REFERENCE_CHIEF.period)
        times = np.linspace(0.0, model.period, 97)
        suns = model.sun_vectors(times)
        assert np.allclose(np.linalg.norm(suns, axis=1), 1.0, atol=1e-12)
        angles = np.degrees(np.arccos(suns[:, 2]))
        assert np.all(np.abs(angles - 8.0) < 0.01)

    def test_rejects_degenerate_construction(self):
        with pytest.raises(ValueError):
            SunModel(0.0)
        with pytest.raises(ValueError):
            SunModel(REFERENCE_CHIEF.period, math.pi / 2.0)

    def test_model_for_cluster_copies_chief_geometry(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 200.0))
        model = sun_model_for(cluster)
        assert model.period == REFERENCE_CHIEF.period
        assert model.inclination_true == REFERENCE_CHIEF.inclination_true


class TestDiskSamples:
    def test_samples_stay_strictly_inside_the_unit_disk(self):
        pts = disk_sample_offsets(512)
        radii = np.hypot(pts[:, 0], pts[:, 1])
        assert pts.shape == (512, 2)
        assert radii.max() < 1.0
        # uniform areal density puts the mean radius at 2/3
        assert radii.mean() == pytest.approx(2.0 / 3.0, rel=0.02)

    def test_pattern_is_deterministic(self):
        assert np.array_equal(disk_sample_offsets(64), disk_sample_offsets(64))

    def test_rejects_empty_pattern(self):
        with pytest.raises(ValueError):
            disk_sample_offsets(0)


class TestExposure:
    def test_zero_radius_never_occludes(self):
        for cluster in (
            generate_suncatcher(ClusterParams("suncatcher", 100.0, 400.0)),
            generate_planar(ClusterParams("planar", 100.0, 400.0)),
            generate_3d(ClusterParams("three_d", 100.0, 400.0, math.radians(43.8))),
        ):
            report = exposure(cluster, 0.0, n_steps=64)
            assert np.all(report.per_satellite == 1.0)

    def test_sunward_rider_casts_full_shadow(self):
        n_steps = 64
        model = SunModel(REFERENCE_CHIEF.period)
        times = np.linspace(0.0, model.period, n_steps + 1)
        pos = np.zeros((2, n_steps + 1, 3))
        pos[1] = 7.0 * model.sun_vectors(times)  # exactly on every sun ray
        cluster = static_cluster(pos, n_steps)
        report = exposure(cluster, 1.0, model, n_steps=n_steps)
        assert report.per_satellite[0] == 0.0
        assert report.per_satellite[1] == 1.0
        assert report.min_exposure == 0.0
        assert report.mean_exposure == 0.5

    def test_coincident_satellites_do_not_shadow(self):
        # occlusion requires a strictly sunward center
        n_steps = 16
        pos = np.zeros((2, n_steps + 1, 3))
        cluster = static_cluster(pos, n_steps)
        report = exposure(cluster, 5.0, n_steps=n_steps)
        assert np.all(report.per_satellite == 1.0)

    def test_reference_grid_immunity_ends_at_the_projected_pitch(self):
        # sunward projection shrinks the 100 m pitch by cos(8 deg), so the
        # analytic onset sits at 49.51 m and 50.0 m grazes by ~3.5e-5
        cluster = generate_suncatcher(ClusterParams("suncatcher", 100.0, 1000.0))
        assert exposure(cluster, 45.0).min_exposure == 1.0
        assert exposure(cluster, 49.0).min_exposure == 1.0
        assert exposure(cluster, 50.0).min_exposure >= 1.0 - 1e-3

    def test_single_satellite_and_empty_cluster(self):
        single = generate_3d(ClusterParams("three_d", 100.0, 100.0, math.radians(45.0)))
        assert single.n_sats == 1
        assert exposure(single, 25.0, n_steps=16).per_satellite == pytest.approx([1.0])
        empty = Cluster(ClusterParams("planar", 100.0, 400.0), [])
        assert exposure(empty, 25.0, n_steps=16).per_satellite.shape == (0,)

    def test_rejects_negative_radius(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 200.0))
        with pytest.raises(ValueError):
            exposure(cluster, -1.0)
        with pytest.raises(ValueError):
            los_matrix(cluster, -1.0)

    def test_report_bounds_and_csv_schema(self):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 400.0, math.radians(43.8)))
        report = exposure(cluster, 10.0, n_steps=180)
        assert np.all((0.0 <= report.per_satellite) & (report.per_satellite <= 1.0))
        assert report.min_exposure <= report.mean_exposure <= 1.0
        lines = report.to_csv().strip().split("\n")
        assert lines[0].startswith("#")
        assert "10" in lines[1]
        assert lines[2] == "sat_index,exposure_fraction"
        assert len(lines) == 3 + cluster.n_sats
        values = [float(row.split(",")[1]) for row in lines[3:]]
        assert values == pytest.approx(list(report.per_satellite), rel=1e-9)


class TestExposureSweeps:
    def test_min_and_mean_non_increasing_in_r_sat(self):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 400.0, math.radians(43.8)))
        reports = exposure_vs_rsat(cluster, [0.0, 2.0, 5.0, 10.0, 20.0], n_steps=180)
        mins = [r.min_exposure for r in reports]
        means = [r.mean_exposure for r in reports]
        assert all(a >= b for a, b in zip(mins, mins[1:]))
        assert all(a >= b for a, b in zip(means, means[1:]))

    def test_empty_grids_rejected(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 200.0))
        with pytest.raises(ValueError):
            exposure_vs_rsat(cluster, [])
        with pytest.raises(ValueError):
            exposure_vs_ilocal(100.0, 300.0, 15.0, [])

    def test_inclination_sweep_zero_radius_is_flat(self):
        scan = exposure_vs_ilocal(100.0, 300.0, 0.0, list(np.radians([40.0, 45.0])), n_steps=32)
        for _, mean_val, min_val in scan:
            assert mean_val == 1.0 and min_val == 1.0

    def test_exposure_improves_towards_larger_plane_tilt(self):
        grid = list(np.radians([41.2, 42.5, 43.8]))
        scan = exposure_vs_ilocal(100.0, 1000.0, 15.0, grid)
        means = [m for _, m, _ in scan]
        mins = [m for _, _, m in scan]
        for seq in (means, mins):
            for a, b in zip(seq, seq[1:]):
                assert b >= a - 0.005  # non-decreasing within 0.5 pp


class TestPlanarImmunity:
    def test_sunward_cylinders_stay_empty_below_onset(self):
        """No sunward neighbour enters the 2 r_sat cylinder for r_sat < 19 m."""
        cluster = generate_planar(ClusterParams("planar", 100.0, 1000.0))
        times, pos = cluster.trajectories(720)
        suns = sun_model_for(cluster).sun_vectors(times)
        worst = np.inf
        for t in range(len(times)):
            s = suns[t]
            p = pos[:, t, :]
            along = p @ s
            lat = p - np.outer(along, s)
            diff = lat[None, :, :] - lat[:, None, :]
            d = np.sqrt((diff**2).sum(axis=2))
            d[~(along[None, :] > along[:, None])] = np.inf
            worst = min(worst, float(d.min()))
        assert worst >= 2.0 * 19.0
        report = exposure(cluster, 15.0)
        assert np.all(report.per_satellite == 1.0)


class TestLineOfSight:
    def test_two_satellites_always_see_each_other(self):
        sats = [ModifiedROE(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), ModifiedROE(0.0, 1e-5, 0.0, 0.0, 0.0, 0.0)]
        cluster = Cluster(ClusterParams("planar", 1.0, 2000.0), sats)
        for r_sat in (0.5, 50.0, 5000.0):
            los = los_matrix(cluster, r_sat, n_steps=16)
            assert los.bits[0, 1] and los.bits[1, 0]
            assert not los.bits[0, 0]

    def test_middle_satellite_blocks_the_outer_pair(self):
        sats = [ModifiedROE(0.0, k * 1e-5, 0.0, 0.0, 0.0, 0.0) for k in range(3)]
        cluster = Cluster(ClusterParams("planar", 1.0, 2000.0), sats)
        los = los_matrix(cluster, 0.001, n_steps=16)
        assert not los.bits[0, 2] and not los.bits[2, 0]
        assert los.bits[0, 1] and los.bits[1, 2]

    def test_zero_radius_connects_everything(self):
        cluster = random_cluster(np.random.default_rng(3), 5)
        los = los_matrix(cluster, 0.0, n_steps=16)
        expect = ~np.eye(5, dtype=bool)
        assert np.array_equal(los.bits, expect)

    def test_matches_brute_oracle_on_random_clusters(self):
        for seed in range(12):
            cluster = random_cluster(np.random.default_rng(seed), 6)
            los = los_matrix(cluster, 15.0, n_steps=720)
            _, pos = cluster.trajectories(720)
            same_bits, _ = brute_los(pos, 15.0)
            assert np.array_equal(los.bits, same_bits), f"seed {seed}: grid parity"
            assert np.array_equal(los.bits, los.bits.T)
            _, pos_hi = cluster.trajectories(7200)
            hi_bits, hi_clear = brute_los(pos_hi, 15.0)
            mismatch = los.bits != hi_bits
            if mismatch.any():
                # only pairs grazing the threshold may flip at 10x resolution
                assert np.all(np.abs(hi_clear[mismatch] - 15.0) <= 1e-3), f"seed {seed}"

    def test_rigid_disk_verdicts_match_at_any_resolution(self):
        small = generate_planar(ClusterParams("planar", 100.0, 300.0))
        for r_sat in (5.0, 15.0, 40.0):
            snap = los_matrix(small, r_sat, n_steps=8)
            full = los_matrix(small, r_sat, n_steps=720)
            assert np.array_equal(snap.bits, full.bits)
        big = generate_planar(ClusterParams("planar", 100.0, 1000.0))
        assert np.array_equal(
            los_matrix(big, 15.0, n_steps=8).bits, los_matrix(big, 15.0, n_steps=720).bits
        )


class TestLosMatrixType:
    def test_degree_and_pair_listing(self):
        bits = np.array(
            [[False, True, False], [True, False, True], [False, True, False]]
        )
        los = LosMatrix(bits)
        assert los.n == 3
        assert los.degree().tolist() == [1, 2, 1]
        assert los.pairs() == [(0, 1), (1, 2)]

    def test_json_round_trip(self):
        cluster = random_cluster(np.random.default_rng(7), 6)
        los = los_matrix(cluster, 15.0, n_steps=90)
        loaded = LosMatrix.from_json_dict(los.to_json_dict())
        assert np.array_equal(loaded.bits, los.bits)
        assert loaded.to_json_dict() == los.to_json_dict()
