"""Analytic route-level metrics for planned multi-hop routes.

A planned route with ``num_hops`` hops crosses a total central angle
``total_angle_rad`` in equal ideal steps.  The two edge hops follow the
edge central-angle law and the ``num_hops - 2`` interior hops follow the
stretched interior law; hops are treated as independent draws from those
laws, which is what makes the route metrics products of per-hop
integrals.

Latency conventions: "approx" metrics evaluate the per-hop latency
kernel at the law's chord (mean fading gain inside the log); "exact"
metrics average the per-packet time over fading conditioned on coverage.
ARQ metrics weight each hop by the inverse of its joint
availability-and-coverage probability (expected number of transmission
attempts) and restrict the hop-angle integral to the available range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import channel as _channel
from . import sphere as _sphere
from .channel import ChannelParams
from .sphere import CentralAngleLaw, ConstellationGeometry

__all__ = [
    "RouteSpec",
    "MetricsReport",
    "availability",
    "routing_coverage",
    "avail_and_coverage",
    "t_tx_exact",
    "t_tx_approx",
    "t_arq_exact",
    "t_arq_approx",
    "metrics_report",
    "direct_hop_report",
]

# Coverage probabilities below this floor are clamped before dividing in
# the ARQ integrands, keeping them bounded near the edge of coverage.
_COVERAGE_FLOOR = 1e-6


@dataclass(frozen=True)
class RouteSpec:
    """A relay route description for analytic evaluation.

    Requires at least two hops: one relay between the endpoints.  The
    elementary single-hop (direct) case has no relay-selection problem
    and is covered by :func:`direct_hop_report`.
    """

    geometry: ConstellationGeometry
    channel: ChannelParams
    num_hops: int
    total_angle_rad: float
    alpha2_mode: str = "additive"

    def __post_init__(self) -> None:
        if self.num_hops < 2:
            raise ValueError(f"num_hops must be >= 2, got {self.num_hops}")
        if not (0.0 < self.total_angle_rad <= math.pi):
            raise ValueError(
                f"total_angle_rad must lie in (0, pi], got {self.total_angle_rad}"
            )
        if self.alpha2_mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown alpha2 mode: {self.alpha2_mode!r}")

    @property
    def ideal_hop_angle_rad(self) -> float:
        return self.total_angle_rad / self.num_hops

    def edge_law(self) -> CentralAngleLaw:
        return _sphere.edge_hop_law(self.geometry, self.ideal_hop_angle_rad, self.alpha2_mode)

    def interior_law(self) -> CentralAngleLaw:
        return _sphere.interior_hop_law(self.geometry, self.ideal_hop_angle_rad, self.alpha2_mode)


@dataclass(frozen=True)
class MetricsReport:
    """Analytic metrics for one route specification.

    Probabilities are validated to ``[0, 1]``.  The ARQ figures exceed
    their transmission counterparts whenever route availability is close
    to one (the usual operating regime); at low availability the ARQ
    integrals lose the unavailable tail mass and the ordering can invert,
    so it is not enforced here.
    """

    num_hops: int
    availability: float
    routing_coverage: float
    avail_and_coverage: float
    t_tx_exact_s: float
    t_tx_approx_s: float
    t_arq_exact_s: float
    t_arq_approx_s: float

    def __post_init__(self) -> None:
        for name in ("availability", "routing_coverage", "avail_and_coverage"):
            value = getattr(self, name)
            if not (-1e-12 <= value <= 1.0 + 1e-12):
                raise ValueError(f"{name} must be a probability, got {value}")
            object.__setattr__(self, name, min(1.0, max(0.0, value)))
        for name in ("t_tx_exact_s", "t_tx_approx_s", "t_arq_exact_s", "t_arq_approx_s"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.avail_and_coverage > min(self.availability, self.routing_coverage) + 1e-9:
            raise ValueError(
                "avail_and_coverage cannot exceed availability or routing_coverage"
            )


def _route_product(spec: RouteSpec, per_hop_edge: float, per_hop_interior: float) -> float:
    interior = spec.num_hops - 2
    value = per_hop_edge * per_hop_edge
    if interior > 0:
        value *= per_hop_interior ** interior
    return value


def _route_sum(spec: RouteSpec, per_hop_edge: float, per_hop_interior: float) -> float:
    return 2.0 * per_hop_edge + (spec.num_hops - 2) * per_hop_interior


def availability(spec: RouteSpec) -> float:
    """Probability every hop chord stays clear of the Earth.

    Product of per-hop probabilities that the hop's central angle stays
    below the visibility limit, hops independent.
    """
    theta_max = spec.geometry.max_available_angle_rad
    edge = _sphere.central_angle_cdf(spec.edge_law(), theta_max)
    interior = (
        _sphere.central_angle_cdf(spec.interior_law(), theta_max) if spec.num_hops > 2 else 1.0
    )
    return min(1.0, _route_product(spec, edge, interior))


def _coverage_of_angle(params: ChannelParams, geometry: ConstellationGeometry):
    def fn(theta: float) -> float:
        return _channel.conditional_coverage(params, _sphere.chord_from_angle(geometry, theta))

    return fn


def routing_coverage(spec: RouteSpec) -> float:
    """Probability every hop meets the SNR threshold (no visibility cut)."""
    cov = _coverage_of_angle(spec.channel, spec.geometry)
    edge = _sphere.law_expectation(spec.edge_law(), cov)
    interior = _sphere.law_expectation(spec.interior_law(), cov) if spec.num_hops > 2 else 1.0
    return min(1.0, _route_product(spec, edge, interior))


def avail_and_coverage(spec: RouteSpec) -> float:
    """Joint probability each hop is both visible and covered.

    The per-hop coverage integral truncated at the visibility limit;
    smaller than the product of availability and coverage marginals in
    general, never larger than either.
    """
    theta_max = spec.geometry.max_available_angle_rad
    cov = _coverage_of_angle(spec.channel, spec.geometry)
    edge = _sphere.law_expectation(spec.edge_law(), cov, upper_rad=theta_max)
    interior = (
        _sphere.law_expectation(spec.interior_law(), cov, upper_rad=theta_max)
        if spec.num_hops > 2
        else 1.0
    )
    return min(1.0, _route_product(spec, edge, interior))


def _kernel_of_angle(params: ChannelParams, geometry: ConstellationGeometry):
    def fn(theta: float) -> float:
        return _channel.single_hop_latency_kernel(
            params, _sphere.chord_from_angle(geometry, theta)
        )

    return fn


def _covered_latency_of_angle(params: ChannelParams, geometry: ConstellationGeometry):
    def fn(theta: float) -> float:
        return _channel.mean_covered_latency(params, _sphere.chord_from_angle(geometry, theta))

    return fn


def t_tx_exact(spec: RouteSpec) -> float:
    """Mean route transmission latency, fading averaged per hop.

    Each hop contributes the mean per-packet time over fading
    conditioned on coverage, averaged over that hop's central-angle law
    on its full support.
    """
    fn = _covered_latency_of_angle(spec.channel, spec.geometry)
    edge = _sphere.law_expectation(spec.edge_law(), fn)
    interior = _sphere.law_expectation(spec.interior_law(), fn) if spec.num_hops > 2 else 0.0
    return _route_sum(spec, edge, interior)


def t_tx_approx(spec: RouteSpec) -> float:
    """Kernel approximation of the route transmission latency.

    Swaps the fading average into the rate's logarithm (mean fading
    gain); by convexity of the per-packet time in the gain this
    underestimates :func:`t_tx_exact`.
    """
    fn = _kernel_of_angle(spec.channel, spec.geometry)
    edge = _sphere.law_expectation(spec.edge_law(), fn)
    interior = _sphere.law_expectation(spec.interior_law(), fn) if spec.num_hops > 2 else 0.0
    return _route_sum(spec, edge, interior)


def _arq_weighted(spec: RouteSpec, latency_of_angle) -> float:
    params, geometry = spec.channel, spec.geometry
    theta_max = geometry.max_available_angle_rad

    def fn(theta: float) -> float:
        cov = _channel.conditional_coverage(params, _sphere.chord_from_angle(geometry, theta))
        return latency_of_angle(theta) / max(cov, _COVERAGE_FLOOR)

    edge = _sphere.law_expectation(spec.edge_law(), fn, upper_rad=theta_max)
    interior = (
        _sphere.law_expectation(spec.interior_law(), fn, upper_rad=theta_max)
        if spec.num_hops > 2
        else 0.0
    )
    return _route_sum(spec, edge, interior)


def t_arq_exact(spec: RouteSpec) -> float:
    """Mean route latency under per-hop retransmission until success.

    Each hop's covered-mean per-packet time is weighted by the expected
    number of attempts (inverse coverage), integrated over the available
    range of hop angles.
    """
    return _arq_weighted(spec, _covered_latency_of_angle(spec.channel, spec.geometry))


def t_arq_approx(spec: RouteSpec) -> float:
    """Kernel approximation of the ARQ route latency."""
    return _arq_weighted(spec, _kernel_of_angle(spec.channel, spec.geometry))


def metrics_report(spec: RouteSpec) -> MetricsReport:
    """All analytic metrics for one route specification."""
    return MetricsReport(
        num_hops=spec.num_hops,
        availability=availability(spec),
        routing_coverage=routing_coverage(spec),
        avail_and_coverage=avail_and_coverage(spec),
        t_tx_exact_s=t_tx_exact(spec),
        t_tx_approx_s=t_tx_approx(spec),
        t_arq_exact_s=t_arq_exact(spec),
        t_arq_approx_s=t_arq_approx(spec),
    )


def direct_hop_report(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    total_angle_rad: float,
) -> MetricsReport:
    """Metrics for the degenerate single-hop route (no relays).

    The hop endpoints are fixed, so the hop chord is deterministic:
    availability is an indicator, coverage is the single-hop coverage
    probability, and the latency laws collapse to point evaluations.
    """
    if not (0.0 < total_angle_rad <= math.pi):
        raise ValueError(f"total_angle_rad must lie in (0, pi], got {total_angle_rad}")
    chord = _sphere.chord_from_angle(geometry, total_angle_rad)
    available = 1.0 if chord <= geometry.max_available_chord_m else 0.0
    cov = _channel.conditional_coverage(params, chord)
    exact = _channel.mean_covered_latency(params, chord)
    kernel = _channel.single_hop_latency_kernel(params, chord)
    weight = available / max(cov, _COVERAGE_FLOOR)
    return MetricsReport(
        num_hops=1,
        availability=available,
        routing_coverage=cov,
        avail_and_coverage=available * cov,
        t_tx_exact_s=exact,
        t_tx_approx_s=kernel,
        t_arq_exact_s=exact * weight,
        t_arq_approx_s=kernel * weight,
    )
