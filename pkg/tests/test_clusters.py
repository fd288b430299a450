"""Cluster constructors: counts against lattice oracles, spacing, sweeps, fits."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitfab.astro import ModifiedROE
from orbitfab.clusters import (
    Cluster,
    ClusterParams,
    argmax_plateau,
    fit_power_law,
    generate,
    generate_3d,
    generate_planar,
    generate_suncatcher,
    hex_lattice_disk,
    optimize_i_local,
    pick_plateau_i_local,
    plane_spacing,
    sweep_nsats,
    violating_pairs,
)

from conftest import A_C


def gauss_circle_count(limit: float) -> int:
    """Integer pairs with i^2 + j^2 <= limit^2, enumerated the slow way."""
    span = int(limit) + 1
    return sum(
        1
        for i in range(-span, span + 1)
        for j in range(-span, span + 1)
        if i * i + j * j <= limit * limit + 1e-9
    )


def loeschian_disk_count(ratio: float) -> int:
    """Hex lattice points within ratio*pitch of the origin.

    Counts the norm form p^2 + pq + q^2 <= ratio^2 instead of enumerating
    cartesian coordinates, so it shares no code path with the generator.
    """
    span = int(2.0 * ratio) + 2
    return sum(
        1
        for p in range(-span, span + 1)
        for q in range(-span, span + 1)
        if p * p + p * q + q * q <= ratio * ratio + 1e-9
    )


def pairwise_min_over_orbit(pos: np.ndarray) -> float:
    # plain numpy, independent of the compiled scan kernels
    iu = np.triu_indices(pos.shape[0], 1)
    diff = pos[iu[0]] - pos[iu[1]]
    return float(np.sqrt((diff**2).sum(axis=2)).min())


class TestHexLattice:
    def test_counts_match_norm_form_oracle(self):
        assert hex_lattice_disk(1000.0, 100.0).shape[0] == loeschian_disk_count(10.0) == 367
        assert hex_lattice_disk(37.0, 3.7).shape[0] == 367  # scale invariant
        assert hex_lattice_disk(100.0, 100.0).shape[0] == 7

    def test_zero_radius_keeps_only_origin(self):
        pts = hex_lattice_disk(0.0, 50.0)
        assert pts.shape == (1, 2)
        assert np.all(pts == 0.0)

    def test_half_offset_drops_the_center(self):
        pts = hex_lattice_disk(300.0, 100.0, half_offset=True)
        assert pts.shape[0] > 0
        assert np.hypot(pts[:, 0], pts[:, 1]).min() > 1.0

    def test_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            hex_lattice_disk(-1.0, 100.0)
        with pytest.raises(ValueError):
            hex_lattice_disk(100.0, 0.0)

    @given(st.sampled_from([1.0, 2.0, 2.6, 3.3, 4.0, 5.5, 7.0]))
    def test_count_depends_only_on_radius_ratio(self, ratio):
        n_ref = loeschian_disk_count(ratio)
        for pitch in (40.0, 100.0, 333.0):
            assert hex_lattice_disk(ratio * pitch, pitch).shape[0] == n_ref


class TestSuncatcher:
    def test_reference_grid_has_81_satellites(self):
        cluster = generate_suncatcher(ClusterParams("suncatcher", 100.0, 1000.0))
        assert cluster.n_sats == gauss_circle_count(5.0) == 81

    def test_degenerate_radius_keeps_only_the_center(self):
        cluster = generate_suncatcher(ClusterParams("suncatcher", 100.0, 100.0))
        assert cluster.n_sats == 1
        roe = cluster.satellites[0]
        assert roe.delta_ex == roe.delta_ey == 0.0

    @given(
        st.sampled_from([1.0, 2.0, 2.5, 3.3, 4.0, 5.0, 6.7, 8.0]),
        st.sampled_from([50.0, 100.0, 250.0]),
    )
    def test_count_matches_disk_oracle(self, ratio, r_min):
        cluster = generate_suncatcher(ClusterParams("suncatcher", r_min, ratio * r_min))
        # membership requires the whole 2:1 ellipse inside the disk
        assert cluster.n_sats == gauss_circle_count(ratio / 2.0)

    def test_spacing_floor_is_attained_exactly(self):
        cluster = generate_suncatcher(ClusterParams("suncatcher", 100.0, 1000.0))
        report = cluster.verify(720)
        assert report.ok
        assert report.min_separation == pytest.approx(100.0, rel=1e-9)
        assert report.max_radius == pytest.approx(1000.0, rel=1e-9)

    def test_satellites_ride_two_to_one_ellipses(self):
        cluster = generate_suncatcher(ClusterParams("suncatcher", 100.0, 1000.0))
        _, pos = cluster.trajectories(720)
        assert np.all(pos[:, :, 2] == 0.0)
        for k in (1, 7, 40, 80):
            b = A_C * cluster.satellites[k].e_d  # radial semi-axis
            if b == 0.0:
                continue
            lhs = (pos[k, :, 0] / b) ** 2 + (pos[k, :, 1] / (2.0 * b)) ** 2
            assert np.allclose(lhs, 1.0, atol=1e-9)
            # axis ratio 2 fixes the eccentricity at sqrt(3)/2
            assert math.sqrt(1.0 - (b / (2.0 * b)) ** 2) == pytest.approx(math.sqrt(3.0) / 2.0)


class TestPlanar:
    def test_reference_disk_has_367_satellites(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 1000.0))
        assert cluster.n_sats == loeschian_disk_count(10.0) == 367

    def test_minimal_disk_is_center_plus_one_ring(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 100.0))
        assert cluster.n_sats == 7

    def test_disk_rotates_rigidly(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 300.0))
        _, pos = cluster.trajectories(360)
        diff = pos[:, None, :, :] - pos[None, :, :, :]
        dists = np.sqrt((diff**2).sum(axis=3))
        assert float(np.ptp(dists, axis=2).max()) <= 1e-6

    def test_spacing_and_radius_bounds(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 1000.0))
        report = cluster.verify(720)
        assert report.ok
        assert report.min_separation == pytest.approx(100.0, rel=1e-9)
        assert report.max_radius == pytest.approx(1000.0, rel=1e-9)

    def test_half_offset_variant_has_no_center_satellite(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 400.0), half_offset=True)
        assert cluster.n_sats > 0
        assert min(s.e_d for s in cluster.satellites) > 0.0
        assert cluster.verify(180).ok


class TestThreeD:
    def test_tight_sphere_collapses_to_a_single_satellite(self):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 100.0, math.radians(45.0)))
        assert cluster.n_sats == 1

    def test_reference_count_at_half_kilometre(self):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 500.0, math.radians(43.8)))
        assert cluster.n_sats == 31

    def test_radius_and_spacing_hold_numerically(self):
        params = ClusterParams("three_d", 100.0, 300.0, math.radians(40.0))
        cluster = generate_3d(params)
        assert cluster.n_sats >= 1
        assert len(cluster.plane_ids) == cluster.n_sats
        _, pos = cluster.trajectories(360)
        assert float(np.sqrt((pos**2).sum(axis=2)).max()) <= 300.0 + 1e-6
        if cluster.n_sats > 1:
            assert pairwise_min_over_orbit(pos) >= 100.0 - 1e-6

    def test_verify_agrees_with_plain_numpy_scan(self):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 400.0, math.radians(43.8)))
        report = cluster.verify(240)
        _, pos = cluster.trajectories(240)
        assert report.ok
        assert report.min_separation == pytest.approx(pairwise_min_over_orbit(pos), rel=1e-12)


def test_counts_are_monotone_in_r_max():
    for design in ("suncatcher", "planar"):
        counts = [
            generate(ClusterParams(design, 100.0, r_max)).n_sats
            for r_max in (150.0, 400.0, 650.0, 900.0)
        ]
        assert counts == sorted(counts)
        assert counts[0] < counts[-1]


def test_dispatch_and_design_guards():
    params = ClusterParams("suncatcher", 100.0, 400.0)
    assert generate(params).n_sats == generate_suncatcher(params).n_sats
    with pytest.raises(ValueError):
        generate_suncatcher(ClusterParams("planar", 100.0, 400.0))
    with pytest.raises(ValueError):
        generate_planar(ClusterParams("suncatcher", 100.0, 400.0))
    with pytest.raises(ValueError):
        generate_3d(ClusterParams("planar", 100.0, 400.0))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(design="ring", r_min=100.0, r_max=200.0),
        dict(design="planar", r_min=0.0, r_max=200.0),
        dict(design="planar", r_min=300.0, r_max=200.0),
        dict(design="three_d", r_min=100.0, r_max=200.0),
        dict(design="three_d", r_min=100.0, r_max=200.0, i_local=math.pi / 2.0),
        dict(design="planar", r_min=100.0, r_max=1e6),
    ],
)
def test_parameter_validation(kwargs):
    with pytest.raises(ValueError):
        ClusterParams(**kwargs)


def test_plane_spacing_reference_values():
    assert plane_spacing(100.0, math.radians(45.0)) == pytest.approx(100.0 * math.sqrt(2.0))
    assert plane_spacing(100.0, math.radians(30.0)) == pytest.approx(200.0)
    assert plane_spacing(80.0, math.radians(60.0)) == pytest.approx(160.0)


class TestPlateauSelection:
    def test_widest_run_wins(self):
        scan = [(1.0, 5), (2.0, 9), (3.0, 9), (4.0, 7), (5.0, 9)]
        assert argmax_plateau(scan) == (2.0, 3.0, 9)
        assert pick_plateau_i_local(scan) == 3.0

    def test_ties_keep_the_first_run(self):
        scan = [(1.0, 4), (2.0, 4), (4.0, 3), (6.0, 4), (7.0, 4)]
        assert argmax_plateau(scan) == (1.0, 2.0, 4)

    def test_single_point_scan(self):
        assert argmax_plateau([(0.7, 12)]) == (0.7, 0.7, 12)

    def test_empty_scan_rejected(self):
        with pytest.raises(ValueError):
            argmax_plateau([])
        with pytest.raises(ValueError):
            optimize_i_local(100.0, 300.0, [])

    def test_scan_echoes_grid_and_counts(self):
        grid = np.radians([35.0, 40.0, 45.0, 50.0])
        scan = optimize_i_local(100.0, 300.0, grid)
        assert [i for i, _ in scan] == pytest.approx(list(grid))
        assert all(isinstance(n, int) and n >= 1 for _, n in scan)


class TestSweeps:
    def test_planar_sweep_matches_lattice_oracle(self):
        points = sweep_nsats("planar", [2.0, 3.0])
        assert [p.n_sats for p in points] == [loeschian_disk_count(2.0), loeschian_disk_count(3.0)]
        assert all(p.i_local is None for p in points)

    def test_three_d_sweep_reoptimizes_inclination(self):
        points = sweep_nsats(
            "three_d",
            [3.0],
            coarse_grid_deg=np.array([40.0, 43.0, 46.0]),
            refine_step_deg=0.5,
        )
        (point,) = points
        assert point.n_sats >= 1
        assert math.radians(39.0) < point.i_local < math.radians(47.0)

    def test_bad_sweep_inputs_rejected(self):
        with pytest.raises(ValueError):
            sweep_nsats("torus", [2.0])
        with pytest.raises(ValueError):
            sweep_nsats("planar", [0.5])


class TestPowerFit:
    def test_exact_recovery(self):
        points = [(r, 2.0 * r**3) for r in (5.0, 8.0, 13.0, 20.0)]
        fit = fit_power_law(points)
        assert fit.a == pytest.approx(2.0, abs=1e-9)
        assert fit.b == pytest.approx(3.0, abs=1e-9)
        assert fit.rmse < 1e-9

    def test_residuals_reported_in_count_units(self):
        points = [(5.0, 250.0), (10.0, 2000.0), (20.0, 16000.0), (40.0, 129000.0)]
        fit = fit_power_law(points)
        resid = np.array([n - fit.a * r**fit.b for r, n in points])
        assert fit.rmse == pytest.approx(math.sqrt(np.mean(resid**2)), rel=1e-12)

    def test_objective_is_count_space_not_log_space(self):
        ratios = np.array([5.0, 8.0, 12.0, 16.0, 20.0])
        counts = 2.0 * ratios**3
        counts[0] *= 3.0  # skews a log fit far more than a count fit
        b0, log_a0 = np.polyfit(np.log(ratios), np.log(counts), 1)
        fit = fit_power_law(list(zip(ratios, counts)))

        def sse(a: float, b: float) -> float:
            return float(((counts - a * ratios**b) ** 2).sum())

        assert sse(fit.a, fit.b) < sse(math.exp(log_a0), b0)

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(ValueError):
            fit_power_law([(5.0, 10.0), (6.0, 12.0)])
        with pytest.raises(ValueError):
            fit_power_law([(5.0, 10.0), (5.0, 10.0), (5.0, 11.0)])
        with pytest.raises(ValueError):
            fit_power_law([(5.0, 10.0), (6.0, -1.0), (7.0, 12.0)])

    @settings(max_examples=25)
    @given(st.floats(0.5, 4.0), st.floats(0.2, 3.0))
    def test_recovers_arbitrary_exact_power_laws(self, a, b):
        points = [(r, a * r**b) for r in (5.0, 9.0, 14.0, 20.0)]
        fit = fit_power_law(points)
        assert fit.a == pytest.approx(a, rel=1e-6)
        assert fit.b == pytest.approx(b, abs=1e-6)


class TestSerialization:
    def test_json_round_trip_preserves_elements(self, tmp_path):
        cluster = generate_3d(ClusterParams("three_d", 100.0, 400.0, math.radians(43.8)))
        path = tmp_path / "cluster.json"
        cluster.save(path)
        loaded = Cluster.load(path)
        assert loaded.params == cluster.params
        assert loaded.satellites == cluster.satellites
        assert loaded.plane_ids == cluster.plane_ids

    def test_dict_round_trip_survives_json_text(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 300.0))
        blob = json.dumps(cluster.to_json_dict())
        loaded = Cluster.from_json_dict(json.loads(blob))
        assert loaded.satellites == cluster.satellites


class TestVerification:
    def test_coincident_pair_is_reported(self):
        params = ClusterParams("planar", 100.0, 400.0)
        roe = ModifiedROE(0.0, 0.0, 5e-7, 0.0, 0.0, 0.0)
        cluster = Cluster(params, [roe, roe])
        report = cluster.verify(64)
        assert not report.ok
        assert report.n_violating_pairs == 1
        assert violating_pairs(cluster, 64) == [(0, 1, pytest.approx(0.0, abs=1e-9))]

    def test_clean_design_reports_no_pairs(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 300.0))
        assert violating_pairs(cluster, 180) == []
        report = cluster.verify(180)
        assert report.ok
        assert report.min_separation >= 100.0 - 1e-6

    def test_empty_and_singleton_clusters(self):
        params = ClusterParams("planar", 100.0, 400.0)
        empty = Cluster(params, [])
        assert empty.verify(64).ok
        assert violating_pairs(empty, 64) == []
        single = Cluster(params, [ModifiedROE(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)])
        report = single.verify(64)
        assert report.ok
        assert report.min_separation == math.inf

    def test_trajectory_cache_reuses_arrays(self):
        cluster = generate_planar(ClusterParams("planar", 100.0, 200.0))
        _, first = cluster.trajectories(64)
        _, second = cluster.trajectories(64)
        assert first is second
