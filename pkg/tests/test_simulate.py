"""Monte Carlo engine: reproducibility, estimator framing, baselines."""
from __future__ import annotations

import math

import numpy as np
import pytest

import leo_relay.channel as ch
import leo_relay.planner as pl
import leo_relay.simulate as sim
import leo_relay.sphere as sp
from conftest import QUARTER_TURN, make_channel, make_geometry


def toy_config(**overrides) -> sim.SimulationConfig:
    values = dict(
        geometry=make_geometry(num_satellites=200),
        channel=make_channel(),
        total_angle_rad=QUARTER_TURN,
        num_realizations=200,
        base_seed=2024,
    )
    values.update(overrides)
    return sim.SimulationConfig(**values)


def mean_hops(report: sim.EmpiricalReport) -> float:
    total = sum(count for _hops, count in report.hop_histogram)
    return sum(hops * count for hops, count in report.hop_histogram) / total


def test_run_is_deterministic() -> None:
    config = toy_config(num_realizations=150)
    a = sim.run(config)
    b = sim.run(config)
    assert a == b
    # Note base_seed 2025 would NOT do here: realization r is seeded by
    # base_seed ^ r, and {2024 ^ r} == {2025 ^ r} as sets for r < 150.
    c = sim.run(toy_config(num_realizations=150, base_seed=9999))
    assert c.t_tx_s.mean != a.t_tx_s.mean


def test_realizations_decompose_over_seeds() -> None:
    # Realization r uses the stream seeded by base_seed ^ r, so a batch
    # mean is exactly the average of single-realization runs.
    batch = sim.run(toy_config(num_realizations=4, base_seed=2024))
    assert batch.t_tx_s.mean == 0.2675214327155024  # frozen
    singles = [
        sim.run(toy_config(num_realizations=1, base_seed=2024 ^ r)).t_tx_s.mean
        for r in range(4)
    ]
    assert math.fsum(singles) / 4.0 == batch.t_tx_s.mean


def test_no_blockage_arq_equals_transmission() -> None:
    # A point Earth removes blockage and a zero threshold with zero
    # jitter removes retries, so the ARQ and plain sums agree
    # realization by realization.
    config = sim.SimulationConfig(
        geometry=sp.ConstellationGeometry(
            sphere_radius_m=7371e3, earth_radius_m=1.0, num_satellites=60
        ),
        channel=make_channel(jitter_sigma_rad=0.0, coverage_threshold=0.0),
        total_angle_rad=QUARTER_TURN,
        num_realizations=200,
        base_seed=5150,
    )
    report = sim.run(config)
    assert report.availability.mean == 1.0
    assert report.coverage.mean == 1.0
    assert report.num_unroutable == 0
    assert report.t_arq_s.mean == report.t_tx_s.mean
    assert report.t_arq_s.stderr == report.t_tx_s.stderr


def test_hop_histogram_accounting() -> None:
    report = sim.run(toy_config(num_realizations=120))
    assert report.num_realizations == 120
    assert sum(count for _h, count in report.hop_histogram) == 120
    assert all(hops >= report.num_hops_planned for hops, _c in report.hop_histogram)
    assert report.num_hops_planned == 2  # auto hop search on the toy shell


def test_estimates_carry_uncertainty() -> None:
    report = sim.run(toy_config(num_realizations=100))
    for estimate in (
        report.availability,
        report.coverage,
        report.t_tx_s,
        report.t_arq_s,
        report.t_prop_s,
        report.kernel_latency_s,
        report.arq_kernel_latency_s,
    ):
        assert estimate.count == 100
        assert estimate.stderr >= 0.0
        assert math.isfinite(estimate.mean)
    assert report.t_prop_s.mean < report.t_tx_s.mean < report.t_arq_s.mean + 1e-12


def test_cone_angle_validation() -> None:
    with pytest.raises(ValueError):
        toy_config(min_stepsize_cone_rad=0.0)
    with pytest.raises(ValueError):
        toy_config(min_stepsize_cone_rad=math.pi / 2 + 0.01)
    toy_config(min_stepsize_cone_rad=math.pi / 2)  # boundary allowed


def test_reference_shell_reproduction() -> None:
    """KNOWN FAILURE: the published latency row is not reproduced.

    At the bundled Starlink-like shell with its published 5-hop plan the
    simulator (which agrees with this library's analytic metrics to
    within Monte Carlo error) measures coverage 0.980, t_tx 0.425 s and
    t_arq 0.427 s, while the bundled reference row quotes 0.909, 0.642 s
    and 0.654 s.  Availability does reproduce.  Kept as stated; see the
    project notes.
    """
    config = sim.SimulationConfig(
        geometry=make_geometry(num_satellites=11927, sphere_radius_m=(6371 + 550) * 1e3),
        channel=make_channel(),
        total_angle_rad=QUARTER_TURN,
        num_realizations=10_000,
        base_seed=8675309,
        num_hops=5,
    )
    report = sim.run(config)
    problems = []
    if round(report.availability.mean, 3) != 1.000:
        problems.append(f"availability {report.availability.mean:.3f} != 1.000")
    if abs(report.coverage.mean - 0.909) > 0.01:
        problems.append(f"coverage {report.coverage.mean:.3f} not within 0.909 +/- 0.01")
    if abs(report.t_tx_s.mean - 0.642) > 0.02 * 0.642:
        problems.append(f"t_tx {report.t_tx_s.mean:.3f} not within 0.642 +/- 2%")
    if abs(report.t_arq_s.mean - 0.654) > 0.02 * 0.654:
        problems.append(f"t_arq {report.t_arq_s.mean:.3f} not within 0.654 +/- 2%")
    assert not problems, "; ".join(problems)


def test_unroutable_runs_are_counted_not_resampled() -> None:
    config = sim.SimulationConfig(
        geometry=sp.ConstellationGeometry(
            sphere_radius_m=7371e3, earth_radius_m=6371e3, num_satellites=1
        ),
        channel=make_channel(),
        total_angle_rad=math.pi,
        num_realizations=200,
        base_seed=31415,
        num_hops=2,
    )
    report = sim.run(config)
    assert report.num_unroutable == 200
    assert report.availability.mean == 0.0
    assert report.availability.count == 200
    # Latency is measured on plans that produced a route, so with every
    # realization unroutable there are no samples at all.
    assert report.t_tx_s.count == 0 and math.isnan(report.t_tx_s.mean)
    assert report.hop_histogram == ()


def test_stepsize_baselines_bracket_hop_counts() -> None:
    base = dict(
        geometry=make_geometry(num_satellites=5000),
        channel=make_channel(),
        total_angle_rad=QUARTER_TURN,
        num_realizations=200,
        base_seed=31337,
    )
    big = sim.run(sim.SimulationConfig(strategy=sim.Strategy.MAX_STEPSIZE, **base))
    small = sim.run(sim.SimulationConfig(strategy=sim.Strategy.MIN_STEPSIZE, **base))
    # Frozen: 2.00 mean hops for the far-reaching rule, 11.34 for the
    # short-step rule.
    assert mean_hops(big) == pytest.approx(2.0, abs=0.1)
    assert mean_hops(small) > 4.0 * mean_hops(big)
    assert big.t_tx_s.mean < small.t_tx_s.mean


def test_ideal_gap_shrinks_with_density() -> None:
    # The realized ARQ-weighted kernel sum approaches its ideal-plan
    # floor as the shell gets denser (frozen gaps 6.0e-4, 3.0e-4,
    # 1.5e-4, 0.6e-4).
    params = make_channel()
    gaps = []
    for num_satellites in (500, 1000, 2000, 5000):
        geometry = make_geometry(num_satellites=num_satellites)
        config = sim.SimulationConfig(
            geometry=geometry,
            channel=params,
            total_angle_rad=QUARTER_TURN,
            num_realizations=400,
            base_seed=777,
        )
        report = sim.run(config)
        ideal = pl.solve_ideal(geometry, params, QUARTER_TURN, epsilon=config.epsilon)
        chord = ideal.hop_chord_m
        floor = (
            ideal.num_hops
            * ch.single_hop_latency_kernel(params, chord)
            / ch.conditional_coverage(params, chord)
        )
        gaps.append(report.arq_kernel_latency_s.mean - floor)
    assert all(g > 0.0 for g in gaps)
    assert gaps == sorted(gaps, reverse=True)


def test_benchmark_range_honors_coverage_floor() -> None:
    geometry = make_geometry()
    params = make_channel()
    r = sim.benchmark_range_m(geometry, params, epsilon=0.1, num_hops=5)
    floor = (1.0 - 0.1) ** (1.0 / 5.0)
    assert r <= geometry.max_available_chord_m
    assert ch.conditional_coverage(params, r) >= floor - 1e-12
    if r < geometry.max_available_chord_m:
        assert ch.conditional_coverage(params, r * 1.001) < floor
    # With no jitter and no SNR floor only visibility limits the range.
    free = sim.benchmark_range_m(
        geometry,
        make_channel(jitter_sigma_rad=0.0, coverage_threshold=0.0),
        epsilon=0.1,
        num_hops=5,
    )
    assert free == geometry.max_available_chord_m


def test_plan_benchmark_rejects_proposed_strategy() -> None:
    geometry = make_geometry(num_satellites=50)
    topo = sp.sample_topology(geometry, seed=3)
    with pytest.raises(ValueError):
        sim.plan_benchmark(
            topo,
            QUARTER_TURN,
            strategy=sim.Strategy.PROPOSED,
            comm_range_m=5e6,
        )
    route = sim.plan_benchmark(
        topo,
        QUARTER_TURN,
        strategy=sim.Strategy.MAX_STEPSIZE,
        comm_range_m=8e6,
    )
    assert route.failed or route.num_relays >= 0


def test_table2_monte_carlo_tracks_analytics() -> None:
    # At every reference shell the five simulated metrics agree with
    # their analytic columns within 2 standard errors (frozen worst
    # z-score 1.79 at this seed).
    import leo_relay.config as cfgmod
    import leo_relay.experiments as ex

    cfg = cfgmod.from_mapping({"num_realizations": 250, "base_seed": 4242})
    result = ex.run_table2(cfg)
    pairs = (
        ("mc_availability", "availability"),
        ("mc_coverage", "routing_coverage"),
        ("mc_t_tx_s", "t_tx_exact_s"),
        ("mc_t_arq_s", "t_arq_exact_s"),
        ("mc_t_prop_s", "t_prop_mean_s"),
    )
    for row in result.rows:
        cells = dict(zip(result.columns, row))
        for mc_col, an_col in pairs:
            mc = cells[mc_col]
            se = cells[mc_col + "_se"]
            analytic = cells[an_col]
            if se == 0.0:
                assert abs(mc - analytic) < 1e-9, (cells["constellation"], mc_col)
            else:
                z = (mc - analytic) / se
                assert abs(z) <= 2.0, (cells["constellation"], mc_col, z)


def test_empirical_hop_angle_sampler_shapes() -> None:
    geometry = make_geometry(num_satellites=200)
    edge, interior = sim.empirical_central_angle_samples(
        geometry, hop_angle_rad=math.pi / 4.0, num_samples=3000, seed=2468
    )
    edge2, interior2 = sim.empirical_central_angle_samples(
        geometry, hop_angle_rad=math.pi / 4.0, num_samples=3000, seed=2468
    )
    assert np.array_equal(edge, edge2) and np.array_equal(interior, interior2)
    for arr in (edge, interior):
        assert arr.shape == (3000,)
        assert np.all((arr >= 0.0) & (arr <= math.pi))
    # The interior hop stacks two detours, so it runs longer on average.
    assert interior.mean() > edge.mean()
