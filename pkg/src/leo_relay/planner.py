"""Hop-count optimization and per-topology relay selection.

Planning happens in two stages.  Stage one picks the number of hops from
the shell geometry and channel alone: either by minimizing the kernel
transmission latency of the equally split route under a route-level
coverage floor (``algorithm1``), or by minimizing the predicted ARQ
latency under a per-hop coverage floor (``method2_hop_search``).  Stage
two (``algorithm2``) maps the chosen hop count onto an actual topology
by picking, for each ideal relay position on the connecting arc, the
satellite nearest to it.

Earth blockage is handled in stage two: hops whose chord dips below the
Earth are flagged, and a minimum-deflection detour walk inserts extra
relays when possible.

A single direct hop (no relays) is a legal plan: the minimum hop count
implied by the visibility limit can be 1 when the endpoints see each
other, and greedy baseline strategies route directly in that case, so
the optimizers must be allowed to as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import channel as _channel
from . import metrics as _metrics
from . import sphere as _sphere
from .channel import ChannelParams
from .sphere import ConstellationGeometry, Topology

__all__ = [
    "InfeasibleError",
    "UnroutableTopologyError",
    "CandidateEvaluation",
    "HopSearchOutcome",
    "IdealSolution",
    "RoutePlan",
    "hop_bounds",
    "solve_ideal",
    "algorithm1",
    "method2_hop_search",
    "algorithm2",
    "greedy_route",
]

# Hard cap on the hop-count scan when the outage probability is zero and
# the retransmission bound degenerates; unreachable with realistic jitter.
_SCAN_CAP = 512


class InfeasibleError(RuntimeError):
    """No hop count meets the coverage floor within the visibility limits."""


class UnroutableTopologyError(RuntimeError):
    """A sampled topology admits no feasible relay sequence."""


@dataclass(frozen=True)
class CandidateEvaluation:
    """One scanned hop count with its feasibility and predicted latency."""

    num_hops: int
    feasible: bool
    predicted_latency_s: Optional[float]


@dataclass(frozen=True)
class HopSearchOutcome:
    """Result of a hop-count search, with the full candidate table."""

    method: int
    optimal_hops: int
    predicted_latency_s: float
    candidates: tuple[CandidateEvaluation, ...]


@dataclass(frozen=True)
class IdealSolution:
    """Optimal equal split when relays can sit exactly on the arc."""

    num_hops: int
    hop_chord_m: float
    latency_bound_s: float
    relay_polar_rad: tuple[float, ...]


@dataclass(frozen=True)
class RoutePlan:
    """A realized relay route on one topology.

    ``raw_hop_chords_m``/``blocked`` describe the nearest-to-ideal plan
    after merging consecutive duplicate relays; ``hop_chords_m`` is the
    flight plan after blocked hops are repaired with extra relays (equal
    to the raw plan when nothing was blocked, or when repair failed and
    ``unroutable`` is set).
    """

    relay_indices: tuple[int, ...]
    raw_hop_chords_m: tuple[float, ...]
    blocked: tuple[bool, ...]
    hop_chords_m: tuple[float, ...]
    num_extra_relays: int
    unroutable: bool

    @property
    def available(self) -> bool:
        """True when the raw plan needed no repair."""
        return not any(self.blocked)

    @property
    def num_hops(self) -> int:
        return len(self.hop_chords_m)


def hop_bounds(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    total_angle_rad: float,
    epsilon: float,
) -> tuple[int, int]:
    """Feasible hop-count window ``(n_min, n_max)``.

    ``n_min`` makes every equal hop short enough to clear the Earth;
    ``n_max`` is the largest hop count whose accumulated outage still
    leaves the route-failure budget ``epsilon`` attainable (each hop
    fails at least with the outage probability, so coverage can never
    beat ``(1 - outage) ** n``).

    Raises:
        InfeasibleError: When the window is empty before rounding — no
            hop count can satisfy both limits.
    """
    if not (0.0 < total_angle_rad <= math.pi):
        raise ValueError(f"total_angle_rad must lie in (0, pi], got {total_angle_rad}")
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    ratio = total_angle_rad / geometry.max_available_angle_rad
    outage = params.outage_probability
    if outage > 0.0:
        bound = math.log1p(-epsilon) / math.log1p(-outage)
        if ratio >= bound:
            raise InfeasibleError(
                "route infeasible: the hop count needed to clear the Earth "
                f"(>= {ratio:.3f}) already exceeds the outage-accumulation limit "
                f"({bound:.3f}) for epsilon={epsilon}"
            )
        n_max = math.ceil(bound) - 1
    else:
        n_max = max(1, math.ceil(ratio)) + _SCAN_CAP
    n_min = max(1, math.ceil(ratio - 1e-12))
    return n_min, n_max


def _direct_chord_feasible(
    geometry: ConstellationGeometry, params: ChannelParams, chord_m: float, floor: float
) -> bool:
    return chord_m < geometry.max_available_chord_m and _channel.conditional_coverage(
        params, chord_m
    ) >= floor


def solve_ideal(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    total_angle_rad: float,
    epsilon: float,
) -> IdealSolution:
    """Best equal split when relays sit exactly on the connecting arc.

    Scans the feasible hop-count window, keeps the hop counts whose
    per-hop coverage meets ``(1 - epsilon) ** (1/n)``, and returns the
    one minimizing ``n`` times the per-hop latency kernel.  Lower bounds
    every realizable plan's kernel-latency sum.

    Raises:
        InfeasibleError: If the window is empty or no scanned hop count
            meets the coverage floor.
    """
    n_min, n_max = hop_bounds(geometry, params, total_angle_rad, epsilon)
    best: Optional[tuple[int, float, float]] = None
    for n in range(n_min, n_max + 1):
        chord = _sphere.chord_from_angle(geometry, total_angle_rad / n)
        floor = (1.0 - epsilon) ** (1.0 / n)
        if _channel.conditional_coverage(params, chord) < floor:
            continue
        score = n * _channel.single_hop_latency_kernel(params, chord)
        if best is None or score < best[2]:
            best = (n, chord, score)
    if best is None:
        raise InfeasibleError(
            "no hop count in the feasible window meets the per-hop coverage floor"
        )
    n, chord, score = best
    relays = tuple(i * total_angle_rad / n for i in range(1, n))
    return IdealSolution(
        num_hops=n, hop_chord_m=chord, latency_bound_s=score, relay_polar_rad=relays
    )


def algorithm1(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    total_angle_rad: float,
    epsilon: float,
    alpha2_mode: str = "additive",
) -> HopSearchOutcome:
    """Minimum-latency hop count under a route-level coverage floor.

    For each candidate ``n`` the ideal chord is stretched by the mean
    detour ratios (edge hops by ``alpha1``, interior hops by ``alpha2``)
    and the candidate is feasible when the stretched route coverage
    stays above ``1 - epsilon`` and the stretched interior chord clears
    the Earth.  The score is the stretched kernel-latency sum.  Every
    integer in the feasible window is evaluated, including the lower
    endpoint; ties keep the smallest hop count.

    Raises:
        InfeasibleError: If no candidate is feasible.
    """
    n_min, n_max = hop_bounds(geometry, params, total_angle_rad, epsilon)
    dmax = geometry.max_available_chord_m
    floor = 1.0 - epsilon
    rows: list[CandidateEvaluation] = []
    best: Optional[tuple[int, float]] = None
    for n in range(n_min, n_max + 1):
        chord = _sphere.chord_from_angle(geometry, total_angle_rad / n)
        if n == 1:
            feasible = _direct_chord_feasible(geometry, params, chord, floor)
            score = _channel.single_hop_latency_kernel(params, chord)
        else:
            a1 = _sphere.alpha1(geometry, total_angle_rad / n)
            a2 = _sphere.alpha2(a1, alpha2_mode)
            cov = _channel.conditional_coverage(params, a1 * chord) ** 2
            if n > 2:
                cov *= _channel.conditional_coverage(params, a2 * chord) ** (n - 2)
            feasible = cov >= floor and a2 * chord < dmax
            score = 2.0 * _channel.single_hop_latency_kernel(params, a1 * chord)
            if n > 2:
                score += (n - 2) * _channel.single_hop_latency_kernel(params, a2 * chord)
        rows.append(
            CandidateEvaluation(
                num_hops=n, feasible=feasible, predicted_latency_s=score if feasible else None
            )
        )
        if feasible and (best is None or score < best[1]):
            best = (n, score)
    if best is None:
        raise InfeasibleError(
            f"no feasible hop count in [{n_min}, {n_max}] for the requested coverage floor"
        )
    return HopSearchOutcome(
        method=1, optimal_hops=best[0], predicted_latency_s=best[1], candidates=tuple(rows)
    )


def method2_hop_search(
    geometry: ConstellationGeometry,
    params: ChannelParams,
    total_angle_rad: float,
    epsilon: float,
    alpha2_mode: str = "additive",
) -> HopSearchOutcome:
    """Hop count minimizing the predicted ARQ latency.

    Candidates satisfy the per-hop coverage floor
    ``(1 - epsilon) ** (1/n)`` at the ideal chord; the objective is the
    approximate ARQ route latency under the planned-hop angle laws.  The
    scan is capped at four times the visibility minimum: beyond that the
    per-hop kernel gains are marginal while the retransmission weight
    only accumulates, so wider scans never win.

    Raises:
        InfeasibleError: If no candidate is feasible.
    """
    n_min, n_max = hop_bounds(geometry, params, total_angle_rad, epsilon)
    cap = min(n_max, 4 * n_min)
    rows: list[CandidateEvaluation] = []
    best: Optional[tuple[int, float]] = None
    for n in range(n_min, cap + 1):
        chord = _sphere.chord_from_angle(geometry, total_angle_rad / n)
        floor = (1.0 - epsilon) ** (1.0 / n)
        feasible = _channel.conditional_coverage(params, chord) >= floor
        if n == 1:
            feasible = feasible and chord < geometry.max_available_chord_m
        score: Optional[float] = None
        if feasible:
            if n == 1:
                score = _metrics.direct_hop_report(geometry, params, total_angle_rad).t_arq_approx_s
            else:
                spec = _metrics.RouteSpec(
                    geometry=geometry,
                    channel=params,
                    num_hops=n,
                    total_angle_rad=total_angle_rad,
                    alpha2_mode=alpha2_mode,
                )
                score = _metrics.t_arq_approx(spec)
            if best is None or score < best[1]:
                best = (n, score)
        rows.append(CandidateEvaluation(num_hops=n, feasible=feasible, predicted_latency_s=score))
    if best is None:
        raise InfeasibleError(
            f"no feasible hop count in [{n_min}, {cap}] for the per-hop coverage floor"
        )
    return HopSearchOutcome(
        method=2, optimal_hops=best[0], predicted_latency_s=best[1], candidates=tuple(rows)
    )


# ---------------------------------------------------------------------------
# Per-topology routing
# ---------------------------------------------------------------------------

def _cos_dist_to(topology: Topology, polar: float, azimuth: float) -> np.ndarray:
    return np.cos(topology.polar_rad) * math.cos(polar) + np.sin(topology.polar_rad) * math.sin(
        polar
    ) * np.cos(topology.azimuth_rad - azimuth)


def _chord_between(
    geometry: ConstellationGeometry, p1: tuple[float, float], p2: tuple[float, float]
) -> float:
    cos_psi = math.cos(p1[0]) * math.cos(p2[0]) + math.sin(p1[0]) * math.sin(p2[0]) * math.cos(
        p1[1] - p2[1]
    )
    cos_psi = min(1.0, max(-1.0, cos_psi))
    return geometry.sphere_radius_m * math.sqrt(max(0.0, 2.0 * (1.0 - cos_psi)))


def _select_step(
    topology: Topology,
    current: tuple[float, float],
    target: tuple[float, float],
    range_angle_rad: float,
    rule: str,
    cone_rad: float = math.pi / 6.0,
) -> Optional[int]:
    """Pick the next satellite from ``current`` toward ``target``.

    Candidates must lie within the range angle of ``current`` and make
    strict progress toward ``target``.  ``rule`` is one of
    ``min_deflection`` (smallest bearing off the direct arc),
    ``max_stepsize`` (largest progress), or ``min_stepsize`` (shortest
    hop within a bearing cone of half-angle ``cone_rad``).  Returns the
    chosen satellite index, or None when no candidate qualifies.
    """
    cos_a = np.clip(_cos_dist_to(topology, current[0], current[1]), -1.0, 1.0)
    cos_b = np.clip(_cos_dist_to(topology, target[0], target[1]), -1.0, 1.0)
    cos_c = math.cos(current[0]) * math.cos(target[0]) + math.sin(current[0]) * math.sin(
        target[0]
    ) * math.cos(current[1] - target[1])
    cos_c = min(1.0, max(-1.0, cos_c))

    in_range = cos_a >= math.cos(range_angle_rad)
    progress = cos_b > cos_c + 1e-15
    moved = cos_a < 1.0 - 1e-15
    mask = in_range & progress & moved
    if not np.any(mask):
        return None

    if rule == "max_stepsize":
        score = np.where(mask, cos_b, -np.inf)
        return int(np.argmax(score))

    sin_a = np.sqrt(np.maximum(0.0, 1.0 - cos_a * cos_a))
    sin_c = math.sqrt(max(0.0, 1.0 - cos_c * cos_c))
    denom = np.maximum(sin_a * sin_c, 1e-300)
    cos_deflection = np.clip((cos_b - cos_a * cos_c) / denom, -1.0, 1.0)

    if rule == "min_deflection":
        score = np.where(mask, cos_deflection, -np.inf)
        return int(np.argmax(score))
    if rule == "min_stepsize":
        in_cone = mask & (cos_deflection >= math.cos(cone_rad))
        if not np.any(in_cone):
            return None
        score = np.where(in_cone, cos_a, -np.inf)
        return int(np.argmax(score))
    raise ValueError(f"unknown step rule: {rule!r}")


def greedy_route(
    topology: Topology,
    total_angle_rad: float,
    rule: str,
    range_angle_rad: float,
    cone_rad: float = math.pi / 6.0,
) -> Optional[list[tuple[float, float]]]:
    """Walk from the pole to ``(total_angle_rad, 0)`` with a greedy rule.

    Returns the node list (endpoints included) or None when the walk
    dead-ends.  Progress is strictly monotone, so the walk terminates.
    """
    source = (0.0, 0.0)
    target = (total_angle_rad, 0.0)
    nodes = [source]
    current = source
    cos_range = math.cos(range_angle_rad)
    for _ in range(len(topology) + 1):
        cos_to_target = math.cos(current[0]) * math.cos(target[0]) + math.sin(
            current[0]
        ) * math.sin(target[0]) * math.cos(current[1] - target[1])
        if cos_to_target >= cos_range:
            nodes.append(target)
            return nodes
        idx = _select_step(topology, current, target, range_angle_rad, rule, cone_rad)
        if idx is None:
            return None
        current = (float(topology.polar_rad[idx]), float(topology.azimuth_rad[idx]))
        nodes.append(current)
    return None


def _repair_hop(
    topology: Topology,
    start: tuple[float, float],
    end: tuple[float, float],
    range_angle_rad: float,
) -> Optional[list[tuple[float, float]]]:
    """Detour around the Earth between two nodes with min-deflection steps."""
    nodes: list[tuple[float, float]] = []
    current = start
    cos_range = math.cos(range_angle_rad)
    for _ in range(len(topology) + 1):
        cos_to_end = math.cos(current[0]) * math.cos(end[0]) + math.sin(current[0]) * math.sin(
            end[0]
        ) * math.cos(current[1] - end[1])
        if cos_to_end >= cos_range:
            return nodes
        idx = _select_step(topology, current, end, range_angle_rad, "min_deflection")
        if idx is None:
            return None
        current = (float(topology.polar_rad[idx]), float(topology.azimuth_rad[idx]))
        nodes.append(current)
    return None


def algorithm2(
    topology: Topology,
    total_angle_rad: float,
    num_hops: int,
    repair: bool = True,
) -> RoutePlan:
    """Select relays for an equal-split plan on one topology.

    Each ideal relay position on the arc gets the satellite nearest to
    it; consecutive duplicates merge into one relay.  Hops whose chord
    dips below the Earth are flagged, and (with ``repair``) a
    minimum-deflection walk inserts extra relays around the blockage.
    The plan is marked ``unroutable`` when a blocked hop cannot be
    repaired; the raw plan is then kept as the flight plan.
    """
    if num_hops < 1:
        raise ValueError(f"num_hops must be >= 1, got {num_hops}")
    if not (0.0 < total_angle_rad <= math.pi):
        raise ValueError(f"total_angle_rad must lie in (0, pi], got {total_angle_rad}")
    geometry = topology.geometry
    dmax = geometry.max_available_chord_m
    theta_max = geometry.max_available_angle_rad

    relay_indices: list[int] = []
    for i in range(1, num_hops):
        idx = topology.nearest_index(i * total_angle_rad / num_hops, 0.0)
        if not relay_indices or idx != relay_indices[-1]:
            relay_indices.append(idx)

    nodes: list[tuple[float, float]] = [(0.0, 0.0)]
    nodes += [
        (float(topology.polar_rad[i]), float(topology.azimuth_rad[i])) for i in relay_indices
    ]
    nodes.append((total_angle_rad, 0.0))

    raw_chords = tuple(
        _chord_between(geometry, nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1)
    )
    blocked = tuple(c > dmax for c in raw_chords)

    final_chords = raw_chords
    extra = 0
    unroutable = False
    if repair and any(blocked):
        rebuilt: list[tuple[float, float]] = [nodes[0]]
        for k in range(len(nodes) - 1):
            if not blocked[k]:
                rebuilt.append(nodes[k + 1])
                continue
            detour = _repair_hop(topology, nodes[k], nodes[k + 1], theta_max)
            if detour is None:
                unroutable = True
                break
            extra += len(detour)
            rebuilt.extend(detour)
            rebuilt.append(nodes[k + 1])
        if not unroutable:
            final_chords = tuple(
                _chord_between(geometry, rebuilt[k], rebuilt[k + 1])
                for k in range(len(rebuilt) - 1)
            )
        else:
            extra = 0

    return RoutePlan(
        relay_indices=tuple(relay_indices),
        raw_hop_chords_m=raw_chords,
        blocked=blocked,
        hop_chords_m=final_chords,
        num_extra_relays=extra,
        unroutable=unroutable,
    )
