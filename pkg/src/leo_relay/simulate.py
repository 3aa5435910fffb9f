"""Monte Carlo evaluation of planned routes on sampled topologies.

Each realization draws a fresh uniform deployment, plans a route with
the configured strategy, and measures availability, coverage, and the
three latency figures.  Realization ``r`` derives all of its randomness
from ``base_seed ^ r``, so runs are reproducible and realizations are
independent work items; aggregation uses compensated sums, keeping the
report identical no matter how realizations would be scheduled.

Metric conventions (matching the analytic module): every latency
estimator is framed on the nominal plan — the nearest-to-ideal relays
before any detour repair — because that is the route whose hop-angle
laws the analytic module integrates.

* availability    - indicator that no nominal-plan hop is Earth-blocked;
* coverage        - indicator that every nominal-plan hop draws a fading
                    gain above its SNR-threshold gain;
* t_tx            - sum of per-hop packet times at gains drawn
                    conditioned on coverage (an uncovered attempt
                    delivers nothing, so delivery time is only defined
                    on covered attempts);
* t_arq           - per available (unblocked) hop, a geometric number of
                    attempts at the hop's conditional coverage times the
                    packet time at the successful gain; blocked hops are
                    dropped, mirroring the truncation of the analytic
                    ARQ integrals at the availability angle;
* t_prop          - nominal-plan chord sum over the speed of light.

Detour repair therefore influences availability, the unroutable count
and the flown-hop histogram, not the latency estimators.  Unroutable
realizations (a blocked hop that cannot be repaired) are excluded from
latency means and reported separately; they still count against
availability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import channel as _channel
from . import planner as _planner
from . import sphere as _sphere
from .channel import ChannelParams
from .planner import RoutePlan
from .sphere import ConstellationGeometry, Topology

__all__ = [
    "Strategy",
    "SimulationConfig",
    "EmpiricalReport",
    "MetricEstimate",
    "run",
    "plan_benchmark",
    "BenchmarkRoute",
    "empirical_central_angle_samples",
]

_SPEED_OF_LIGHT_M_S = 2.99792458e8  # default only; configs carry their own value

# Spawn key separating the fading stream from the topology stream inside
# one realization.
_FADING_STREAM = 7


class Strategy(Enum):
    """Route selection strategy for one realization."""

    PROPOSED = "proposed"
    MIN_DEFLECTION = "min_deflection"
    MAX_STEPSIZE = "max_stepsize"
    MIN_STEPSIZE = "min_stepsize"


@dataclass(frozen=True)
class SimulationConfig:
    geometry: ConstellationGeometry
    channel: ChannelParams
    total_angle_rad: float
    num_realizations: int
    base_seed: int
    epsilon: float = 0.1
    num_hops: Optional[int] = None  # None: planned by `method`
    method: int = 1
    alpha2_mode: str = "additive"
    strategy: Strategy = Strategy.PROPOSED
    min_stepsize_cone_rad: float = math.pi / 6.0
    speed_of_light_m_s: float = _SPEED_OF_LIGHT_M_S

    def __post_init__(self) -> None:
        if self.num_realizations < 1:
            raise ValueError(f"num_realizations must be >= 1, got {self.num_realizations}")
        if not (0.0 < self.total_angle_rad <= math.pi):
            raise ValueError(f"total_angle_rad must lie in (0, pi], got {self.total_angle_rad}")
        if self.num_hops is not None and self.num_hops < 1:
            raise ValueError(f"num_hops must be >= 1, got {self.num_hops}")
        if self.method not in (1, 2):
            raise ValueError(f"method must be 1 or 2, got {self.method}")
        if not (0.0 < self.min_stepsize_cone_rad <= math.pi / 2.0):
            raise ValueError(
                "min_stepsize_cone_rad must lie in (0, pi/2], got "
                f"{self.min_stepsize_cone_rad}"
            )


@dataclass(frozen=True)
class MetricEstimate:
    """Sample mean with its standard error and sample count."""

    mean: float
    stderr: float
    count: int


@dataclass(frozen=True)
class EmpiricalReport:
    num_realizations: int
    num_hops_planned: int
    num_unroutable: int
    availability: MetricEstimate
    coverage: MetricEstimate
    t_tx_s: MetricEstimate
    t_arq_s: MetricEstimate
    t_prop_s: MetricEstimate
    kernel_latency_s: MetricEstimate
    arq_kernel_latency_s: MetricEstimate
    hop_histogram: tuple[tuple[int, int], ...]


class _Accumulator:
    """Order-insensitive mean/stderr accumulator (compensated sums)."""

    def __init__(self) -> None:
        self._values: list[float] = []

    def add(self, value: float) -> None:
        self._values.append(float(value))

    def estimate(self) -> MetricEstimate:
        n = len(self._values)
        if n == 0:
            return MetricEstimate(mean=math.nan, stderr=math.nan, count=0)
        total = math.fsum(self._values)
        mean = total / n
        if n == 1:
            return MetricEstimate(mean=mean, stderr=math.nan, count=1)
        sq = math.fsum((v - mean) ** 2 for v in self._values)
        return MetricEstimate(mean=mean, stderr=math.sqrt(sq / (n - 1) / n), count=n)


@dataclass(frozen=True)
class BenchmarkRoute:
    """Greedy-strategy route for one topology (hops only)."""

    hop_chords_m: tuple[float, ...]
    num_relays: int
    failed: bool


def _coverage_floor_range_m(
    geometry: ConstellationGeometry, params: ChannelParams, per_hop_floor: float
) -> float:
    """Longest chord whose conditional coverage still meets the floor.

    Inverts the coverage law in closed form; capped at the visibility
    limit.
    """
    no_outage = 1.0 - params.outage_probability
    if per_hop_floor >= no_outage:
        return 0.0
    x_max = (1.0 - per_hop_floor / no_outage) ** (1.0 / params.shape_sq)
    # Threshold ratio grows as chord^2; solve x(l) = x_max.
    ref = geometry.max_available_chord_m
    x_ref = _channel.coverage_gain_threshold(params, ref) / params.max_fading_gain
    if x_ref <= 0.0:
        # Zero SNR threshold: every visible chord is covered.
        return geometry.max_available_chord_m
    chord = ref * math.sqrt(x_max / x_ref)
    return min(chord, geometry.max_available_chord_m)


def benchmark_range_m(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    epsilon: float,
    num_hops: int,
) -> float:
    """Communication range for the greedy baselines.

    A hop is usable when it clears the Earth and its coverage meets the
    per-hop floor ``(1 - epsilon) ** (1 / num_hops)`` — the same floor
    the hop-count optimizers enforce.
    """
    floor = (1.0 - epsilon) ** (1.0 / max(1, num_hops))
    return min(
        geometry.max_available_chord_m,
        _coverage_floor_range_m(geometry, params, floor),
    )


def plan_benchmark(
    topology: Topology,
    total_angle_rad: float,
    strategy: Strategy,
    comm_range_m: float,
    cone_rad: float = math.pi / 6.0,
) -> BenchmarkRoute:
    """Route one topology with a greedy baseline strategy."""
    if strategy == Strategy.PROPOSED:
        raise ValueError("plan_benchmark handles greedy baselines; use algorithm2 for proposed")
    geometry = topology.geometry
    range_angle = 2.0 * math.asin(
        min(1.0, comm_range_m / (2.0 * geometry.sphere_radius_m))
    )
    nodes = _planner.greedy_route(
        topology, total_angle_rad, strategy.value, range_angle, cone_rad
    )
    if nodes is None:
        return BenchmarkRoute(hop_chords_m=(), num_relays=0, failed=True)
    chords = tuple(
        _planner._chord_between(geometry, nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1)
    )
    return BenchmarkRoute(hop_chords_m=chords, num_relays=len(nodes) - 2, failed=False)


def _planned_hops(config: SimulationConfig) -> int:
    if config.num_hops is not None:
        return config.num_hops
    search = (
        _planner.algorithm1(
            config.geometry,
            config.channel,
            config.total_angle_rad,
            config.epsilon,
            config.alpha2_mode,
        )
        if config.method == 1
        else _planner.method2_hop_search(
            config.geometry,
            config.channel,
            config.total_angle_rad,
            config.epsilon,
            config.alpha2_mode,
        )
    )
    return search.optimal_hops


def _route_for_realization(
    config: SimulationConfig, topology: Topology, num_hops: int, comm_range_m: float
) -> tuple[tuple[float, ...], tuple[float, ...], bool, bool, int]:
    """Plan one realization.

    Returns ``(raw_chords, final_chords, available, unroutable, hops)``.
    For greedy baselines the raw and final plans coincide and a failed
    walk counts as unroutable and unavailable.
    """
    if config.strategy == Strategy.PROPOSED:
        plan = _planner.algorithm2(topology, config.total_angle_rad, num_hops, repair=True)
        return (
            plan.raw_hop_chords_m,
            plan.hop_chords_m,
            plan.available,
            plan.unroutable,
            plan.num_hops,
        )
    route = plan_benchmark(
        topology,
        config.total_angle_rad,
        config.strategy,
        comm_range_m,
        config.min_stepsize_cone_rad,
    )
    if route.failed:
        return ((), (), False, True, 0)
    return (route.hop_chords_m, route.hop_chords_m, True, False, len(route.hop_chords_m))


def run(config: SimulationConfig) -> EmpiricalReport:
    """Run the Monte Carlo study described by ``config``."""
    geometry, params = config.geometry, config.channel
    num_hops = _planned_hops(config)
    comm_range = benchmark_range_m(geometry, params, config.epsilon, num_hops)
    dmax = geometry.max_available_chord_m

    acc = {
        name: _Accumulator()
        for name in (
            "availability",
            "coverage",
            "t_tx",
            "t_arq",
            "t_prop",
            "kernel",
            "arq_kernel",
        )
    }
    histogram: dict[int, int] = {}
    unroutable_count = 0

    for r in range(config.num_realizations):
        seed_r = config.base_seed ^ r
        topology = _sphere.sample_topology(geometry, seed_r)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed_r, spawn_key=(_FADING_STREAM,))
        )

        raw_chords, _, available, unroutable, hops = _route_for_realization(
            config, topology, num_hops, comm_range
        )
        acc["availability"].add(1.0 if available else 0.0)

        if unroutable:
            unroutable_count += 1
            continue
        histogram[hops] = histogram.get(hops, 0) + 1

        # Coverage: one fading draw per raw-plan hop; outage or a gain
        # below the hop's threshold gain breaks the route.
        covered = True
        for chord in raw_chords:
            sample = _channel.sample_fading(params, rng)
            if sample.is_outage or sample.gain < _channel.coverage_gain_threshold(params, chord):
                covered = False
        acc["coverage"].add(1.0 if covered else 0.0)

        # Latency estimators are framed on the nominal plan so they
        # estimate exactly what the analytic module predicts: the
        # transmission sums run over every nominal hop, while the ARQ
        # sums drop hops beyond the available chord, mirroring the
        # analytic ARQ integrals' truncation at the availability angle.
        # Repair only influences availability, the unroutable count and
        # the flown-hop histogram.
        hop_times = [_packet_time_covered(params, chord, rng) for chord in raw_chords]
        acc["t_tx"].add(math.fsum(hop_times))

        t_arq = 0.0
        kernel = 0.0
        arq_kernel = 0.0
        for i, chord in enumerate(raw_chords):
            kernel += _channel.single_hop_latency_kernel(params, chord)
            if chord > dmax:
                continue
            cov = _channel.conditional_coverage(params, chord)
            # Same floor as the analytic ARQ weight, so both sides stay
            # bounded on (vanishingly rare) near-zero-coverage hops.
            attempts = int(rng.geometric(max(cov, 1e-6)))
            # The retry count is independent of the successful attempt's
            # gain, so reusing the hop's packet time keeps the mean and
            # makes t_arq == t_tx hop-for-hop when every hop succeeds
            # on the first try.
            t_arq += attempts * hop_times[i]
            arq_kernel += _channel.single_hop_latency_kernel(params, chord) / max(
                cov, 1e-6
            )
        acc["t_arq"].add(t_arq)
        acc["kernel"].add(kernel)
        acc["arq_kernel"].add(arq_kernel)
        acc["t_prop"].add(math.fsum(raw_chords) / config.speed_of_light_m_s)

    return EmpiricalReport(
        num_realizations=config.num_realizations,
        num_hops_planned=num_hops,
        num_unroutable=unroutable_count,
        availability=acc["availability"].estimate(),
        coverage=acc["coverage"].estimate(),
        t_tx_s=acc["t_tx"].estimate(),
        t_arq_s=acc["t_arq"].estimate(),
        t_prop_s=acc["t_prop"].estimate(),
        kernel_latency_s=acc["kernel"].estimate(),
        arq_kernel_latency_s=acc["arq_kernel"].estimate(),
        hop_histogram=tuple(sorted(histogram.items())),
    )


def _packet_time_covered(
    params: ChannelParams, chord_m: float, rng: np.random.Generator
) -> float:
    """Packet time at a fading gain drawn conditioned on coverage."""
    try:
        gain = float(_channel.sample_covered_gains(params, chord_m, rng, 1)[0])
    except ValueError:
        # Chord beyond any coverage: continuous limit is the threshold rate.
        return _channel.covered_latency_bound(params)
    return params.packet_bits / (
        params.bandwidth_hz * math.log2(1.0 + _channel.snr(params, chord_m, gain))
    )


def empirical_central_angle_samples(
    geometry: ConstellationGeometry,
    hop_angle_rad: float,
    num_samples: int,
    seed: int,
    chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled hop central angles from fresh topologies.

    For each topology, the edge sample is the angle between a fixed
    endpoint (the pole) and the satellite nearest to the ideal position
    ``hop_angle_rad`` away; the interior sample is the angle between the
    nearest satellites of two ideal positions ``hop_angle_rad`` apart.
    With ``hop_angle_rad = 0`` the edge samples collapse to the
    nearest-neighbor polar law.

    Returns ``(edge_samples, interior_samples)``.
    """
    if not (0.0 <= hop_angle_rad <= math.pi):
        raise ValueError(f"hop_angle_rad must lie in [0, pi], got {hop_angle_rad}")
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    rng = np.random.default_rng(seed)
    n = geometry.num_satellites
    edge = np.empty(num_samples)
    interior = np.empty(num_samples)

    # Interior ideal positions: symmetric about the equator on one
    # meridian, separated by exactly hop_angle_rad.
    pa = 0.5 * math.pi - 0.5 * hop_angle_rad
    pb = 0.5 * math.pi + 0.5 * hop_angle_rad

    done = 0
    while done < num_samples:
        m = min(chunk, num_samples - done)
        polar = np.arccos(1.0 - 2.0 * rng.random((m, n)))
        azim = 2.0 * math.pi * rng.random((m, n))
        cos_p, sin_p = np.cos(polar), np.sin(polar)

        def nearest(target_polar: float, target_azim: float) -> tuple[np.ndarray, np.ndarray]:
            cos_d = cos_p * math.cos(target_polar) + sin_p * math.sin(target_polar) * np.cos(
                azim - target_azim
            )
            idx = np.argmax(cos_d, axis=1)
            rows = np.arange(m)
            return polar[rows, idx], azim[rows, idx]

        e_pol, e_azi = nearest(hop_angle_rad, 0.0)
        cos_edge = np.clip(np.cos(e_pol), -1.0, 1.0)
        edge[done : done + m] = np.arccos(cos_edge)

        a_pol, a_azi = nearest(pa, 0.0)
        b_pol, b_azi = nearest(pb, 0.0)
        cos_int = np.cos(a_pol) * np.cos(b_pol) + np.sin(a_pol) * np.sin(b_pol) * np.cos(
            a_azi - b_azi
        )
        interior[done : done + m] = np.arccos(np.clip(cos_int, -1.0, 1.0))
        done += m

    return edge, interior
