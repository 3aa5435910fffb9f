"""Spherical geometry for randomly deployed satellite shells.

Satellites are modeled as a binomial point process: a fixed number of
points placed independently and uniformly on a sphere concentric with
Earth.  This module provides the deterministic geometry (chord lengths,
central angles, visibility limits), the topology sampler, and the
distributions that describe where the satellite nearest to an ideal
relay position actually ends up:

* the polar angle law of the nearest neighbor of a reference point,
* the ``edge`` hop law (angle between a fixed endpoint and the satellite
  nearest to an ideal relay position), and
* the ``interior`` hop law (relay-to-relay), obtained from the edge law
  by the mean chord-stretch ratio.

All angles are radians and all lengths are meters unless a name says
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

__all__ = [
    "ConstellationGeometry",
    "SphericalPoint",
    "Topology",
    "CentralAngleLaw",
    "chord_distance",
    "central_angle",
    "sample_topology",
    "nn_polar_cdf",
    "nn_polar_pdf",
    "alpha1",
    "alpha2",
    "edge_hop_law",
    "interior_hop_law",
    "central_angle_cdf",
    "central_angle_pdf",
    "law_expectation",
    "cdf_grid",
]

_TWO_PI = 2.0 * math.pi

# Relative tolerance for the adaptive quadratures in this module.
# Probability-type integrals use 1e-8; an absolute floor avoids chasing
# digits of integrals that are themselves ~0.
_QUAD_EPSREL = 1e-8
_QUAD_EPSABS = 1e-12


class NumericsError(RuntimeError):
    """A quadrature or root-finding step failed to reach its tolerance."""


@dataclass(frozen=True)
class ConstellationGeometry:
    """Shell geometry for a uniformly deployed constellation.

    Args:
        sphere_radius_m: Radius of the satellite shell, measured from the
            Earth's center.
        earth_radius_m: Earth radius; blocks line of sight between
            satellites whose connecting chord dips below it.
        num_satellites: Number of satellites placed uniformly on the shell.

    Raises:
        ValueError: If the shell does not enclose the Earth or the
            satellite count is not positive.
    """

    sphere_radius_m: float
    earth_radius_m: float
    num_satellites: int

    def __post_init__(self) -> None:
        if self.earth_radius_m <= 0.0:
            raise ValueError(f"earth_radius_m must be positive, got {self.earth_radius_m}")
        if self.sphere_radius_m <= self.earth_radius_m:
            raise ValueError(
                "sphere_radius_m must exceed earth_radius_m, got "
                f"{self.sphere_radius_m} <= {self.earth_radius_m}"
            )
        if self.num_satellites < 1:
            raise ValueError(f"num_satellites must be >= 1, got {self.num_satellites}")

    @property
    def altitude_m(self) -> float:
        return self.sphere_radius_m - self.earth_radius_m

    @property
    def max_available_chord_m(self) -> float:
        """Longest chord between shell points that clears the Earth."""
        rs, re = self.sphere_radius_m, self.earth_radius_m
        return 2.0 * math.sqrt(rs * rs - re * re)

    @property
    def max_available_angle_rad(self) -> float:
        """Central angle subtended by the longest unblocked chord."""
        return 2.0 * math.asin(self.max_available_chord_m / (2.0 * self.sphere_radius_m))


@dataclass(frozen=True)
class SphericalPoint:
    """A point on the shell in polar coordinates.

    The polar angle is measured from the reference pole (the transmitter
    direction); the azimuth is normalized into ``[0, 2*pi)``.
    """

    polar_rad: float
    azimuth_rad: float

    def __post_init__(self) -> None:
        if not (-1e-12 <= self.polar_rad <= math.pi + 1e-12):
            raise ValueError(f"polar_rad must lie in [0, pi], got {self.polar_rad}")
        object.__setattr__(self, "polar_rad", min(max(self.polar_rad, 0.0), math.pi))
        object.__setattr__(self, "azimuth_rad", self.azimuth_rad % _TWO_PI)


@dataclass(frozen=True)
class Topology:
    """One realization of the point process.

    Satellite positions are stored as parallel coordinate arrays so that
    nearest-neighbor queries stay vectorized; ``point(i)`` gives the
    structured view of a single satellite.
    """

    geometry: ConstellationGeometry
    polar_rad: np.ndarray
    azimuth_rad: np.ndarray

    def __post_init__(self) -> None:
        polar = np.asarray(self.polar_rad, dtype=float)
        azimuth = np.asarray(self.azimuth_rad, dtype=float)
        if polar.shape != azimuth.shape or polar.ndim != 1:
            raise ValueError("polar_rad and azimuth_rad must be 1-D arrays of equal length")
        if polar.shape[0] != self.geometry.num_satellites:
            raise ValueError(
                f"topology holds {polar.shape[0]} satellites, geometry declares "
                f"{self.geometry.num_satellites}"
            )
        object.__setattr__(self, "polar_rad", polar)
        object.__setattr__(self, "azimuth_rad", azimuth)

    def __len__(self) -> int:
        return int(self.polar_rad.shape[0])

    def point(self, index: int) -> SphericalPoint:
        return SphericalPoint(float(self.polar_rad[index]), float(self.azimuth_rad[index]))

    def nearest_index(self, target_polar_rad: float, target_azimuth_rad: float) -> int:
        """Index of the satellite with the smallest central angle to a target.

        Ties resolve to the lowest index (``argmax`` keeps the first
        occurrence), which keeps planning deterministic.
        """
        cos_dist = _cos_central_angle_arrays(
            self.polar_rad, self.azimuth_rad, target_polar_rad, target_azimuth_rad
        )
        return int(np.argmax(cos_dist))


def _cos_central_angle_arrays(
    polar: np.ndarray, azimuth: np.ndarray, polar0: float, azimuth0: float
) -> np.ndarray:
    return np.cos(polar) * math.cos(polar0) + np.sin(polar) * math.sin(polar0) * np.cos(
        azimuth - azimuth0
    )


def _cos_central_angle(p1: SphericalPoint, p2: SphericalPoint) -> float:
    return math.cos(p1.polar_rad) * math.cos(p2.polar_rad) + math.sin(p1.polar_rad) * math.sin(
        p2.polar_rad
    ) * math.cos(p1.azimuth_rad - p2.azimuth_rad)


def central_angle(p1: SphericalPoint, p2: SphericalPoint) -> float:
    """Central angle between two shell points, in ``[0, pi]``.

    Computed through the half-chord arcsine so that
    ``chord_distance == 2 * R * sin(central_angle / 2)`` holds to
    machine precision.
    """
    cos_psi = min(1.0, max(-1.0, _cos_central_angle(p1, p2)))
    half_chord = math.sqrt(max(0.0, 0.5 * (1.0 - cos_psi)))
    return 2.0 * math.asin(min(1.0, half_chord))


def chord_distance(p1: SphericalPoint, p2: SphericalPoint, geometry: ConstellationGeometry) -> float:
    """Straight-line distance through space between two shell points."""
    cos_psi = min(1.0, max(-1.0, _cos_central_angle(p1, p2)))
    return geometry.sphere_radius_m * math.sqrt(max(0.0, 2.0 * (1.0 - cos_psi)))


def chord_from_angle(geometry: ConstellationGeometry, angle_rad: float) -> float:
    """Chord length subtending ``angle_rad`` on the shell."""
    return 2.0 * geometry.sphere_radius_m * math.sin(0.5 * angle_rad)


def sample_topology(geometry: ConstellationGeometry, seed: int) -> Topology:
    """Draw one uniform deployment of the shell.

    Uses the inverse-CDF placement ``polar = arccos(1 - 2u)``,
    ``azimuth = 2*pi*v`` with a PCG64 generator, so a given seed always
    produces the same topology.
    """
    rng = np.random.default_rng(seed)
    u = rng.random(geometry.num_satellites)
    v = rng.random(geometry.num_satellites)
    polar = np.arccos(1.0 - 2.0 * u)
    azimuth = _TWO_PI * v
    return Topology(geometry=geometry, polar_rad=polar, azimuth_rad=azimuth)


# ---------------------------------------------------------------------------
# Nearest-neighbor polar angle law
# ---------------------------------------------------------------------------

def _log_cap_fraction(theta: float | np.ndarray) -> float | np.ndarray:
    """log((1 + cos(theta)) / 2), clamped away from log(0)."""
    val = 0.5 * (1.0 + np.cos(theta))
    return np.log(np.maximum(val, 1e-300))


def nn_polar_cdf(geometry: ConstellationGeometry, theta: float | np.ndarray) -> float | np.ndarray:
    """CDF of the angle from a reference point to its nearest satellite.

    ``P[angle <= theta] = 1 - ((1 + cos(theta)) / 2) ** N`` — one minus
    the probability that all ``N`` satellites miss the spherical cap of
    angular radius ``theta``.  Evaluated in log space so it stays exact
    for very large ``N``.
    """
    theta_arr = np.asarray(theta, dtype=float)
    out = 1.0 - np.exp(geometry.num_satellites * _log_cap_fraction(theta_arr))
    return float(out) if np.isscalar(theta) or theta_arr.ndim == 0 else out


def nn_polar_pdf(geometry: ConstellationGeometry, theta: float | np.ndarray) -> float | np.ndarray:
    """Density of the nearest-satellite angle (derivative of the CDF)."""
    n = geometry.num_satellites
    theta_arr = np.asarray(theta, dtype=float)
    out = 0.5 * n * np.sin(theta_arr) * np.exp((n - 1) * _log_cap_fraction(theta_arr))
    return float(out) if np.isscalar(theta) or theta_arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# Edge hop (endpoint -> nearest satellite to an ideal position) law
# ---------------------------------------------------------------------------

def _edge_pdf_single(geometry: ConstellationGeometry, hop_angle_rad: float, theta: float) -> float:
    """Density of the edge-hop central angle at one point.

    Marginalizes the joint position density of the satellite nearest to
    the ideal relay position (polar ``hop_angle_rad``) over azimuth:

        f(theta) = (N sin(theta) / (4 pi))
                   * Int_0^{2 pi} ((1 + cos Psi)/2)^(N-1) d phi

    where ``Psi`` is the angle between the candidate position
    ``(theta, phi)`` and the ideal position.  The integrand peaks at
    ``phi = 0`` and, for large ``N``, is sharply concentrated, so the
    quadrature gets explicit hint points at the peak scale.
    """
    if theta <= 0.0 or theta >= math.pi:
        return 0.0
    n = geometry.num_satellites
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    sin_h, cos_h = math.sin(hop_angle_rad), math.cos(hop_angle_rad)
    cross = sin_t * sin_h

    if cross <= 1e-300:
        # Degenerate: the ideal position sits on the pole, the integrand
        # no longer depends on azimuth and the law collapses to the
        # nearest-neighbor polar law.
        log_val = _log_cap_fraction_scalar(cos_t * cos_h)
        return 0.5 * n * sin_t * math.exp((n - 1) * log_val)

    def integrand(phi: float) -> float:
        cos_psi = cos_t * cos_h + cross * math.cos(phi)
        return math.exp((n - 1) * _log_cap_fraction_scalar(cos_psi))

    cos_psi0 = min(1.0, cos_t * cos_h + cross)
    # Azimuth scale over which the exponent drops by ~1.
    peak_width = math.sqrt(2.0 * max(1e-12, 1.0 + cos_psi0) / (max(n - 1, 1) * cross))
    pts = [p for p in (peak_width, 3.0 * peak_width, 10.0 * peak_width) if 0.0 < p < math.pi]
    inner, inner_err = integrate.quad(
        integrand, 0.0, math.pi, epsrel=_QUAD_EPSREL, epsabs=_QUAD_EPSABS, limit=200,
        points=pts or None,
    )
    _check_quad(inner, inner_err)
    return n * sin_t / (4.0 * math.pi) * 2.0 * inner


def _log_cap_fraction_scalar(cos_psi: float) -> float:
    val = 0.5 * (1.0 + min(1.0, max(-1.0, cos_psi)))
    return math.log(max(val, 1e-300))


def _check_quad(value: float, err: float) -> None:
    if not math.isfinite(value):
        raise NumericsError("quadrature returned a non-finite value")
    if err > max(_QUAD_EPSABS * 50.0, 5e-5 * max(abs(value), 1e-9)):
        raise NumericsError(
            f"quadrature error estimate {err:.3e} too large for value {value:.6e}"
        )


def _edge_hint_points(geometry: ConstellationGeometry, hop_angle_rad: float, lo: float, hi: float) -> list[float]:
    """Hint points bracketing the edge-law peak for the outer quadrature."""
    scale = 2.0 / math.sqrt(geometry.num_satellites)
    raw = [
        hop_angle_rad - 8.0 * scale,
        hop_angle_rad - 3.0 * scale,
        hop_angle_rad,
        hop_angle_rad + 3.0 * scale,
        hop_angle_rad + 8.0 * scale,
    ]
    return [p for p in raw if lo < p < hi]


# ---------------------------------------------------------------------------
# Chord-stretch ratios
# ---------------------------------------------------------------------------

@lru_cache(maxsize=512)
def alpha1(geometry: ConstellationGeometry, hop_angle_rad: float) -> float:
    """Mean ratio of the realized edge-hop chord to the ideal chord.

    The realized first hop runs from a fixed endpoint to the satellite
    nearest an ideal position ``hop_angle_rad`` away.  Averaging the
    chord over the nearest-neighbor displacement gives

        alpha1 = N / (8 pi R sin(h/2))
                 * Int d(h, 0; xi, phi) f_nn(xi, phi) dxi dphi ,

    which this routine evaluates after collapsing the azimuth integral
    in closed form: ``Int_0^{2pi} sqrt(A - B cos phi) dphi =
    4 sqrt(A + B) E(m)`` with ``m = 2B / (A + B)`` and ``E`` the
    complete elliptic integral of the second kind.  The remaining polar
    integral is handled adaptively.

    The returned ratio is floored at 1.  At ultra-sparse densities
    (a handful of satellites with wide hops) the raw mean dips below 1
    because the chord is concave in the central angle, but every
    consumer treats the value as a detour stretch with contract
    ``>= 1``, and at the densities where the laws are used the raw
    integral already exceeds 1.

    Raises:
        ValueError: If ``hop_angle_rad`` is outside ``(0, pi]``.
    """
    if not (0.0 < hop_angle_rad <= math.pi):
        raise ValueError(f"hop_angle_rad must lie in (0, pi], got {hop_angle_rad}")
    n = geometry.num_satellites
    sin_half_h = math.sin(0.5 * hop_angle_rad)

    def integrand(xi: float) -> float:
        if xi <= 0.0 or xi >= math.pi:
            return 0.0
        sin_sum_half = math.sin(0.5 * (hop_angle_rad + xi))
        if sin_sum_half <= 1e-300:
            return 0.0
        m = math.sin(hop_angle_rad) * math.sin(xi) / (sin_sum_half * sin_sum_half)
        m = min(1.0, max(0.0, m))
        weight = math.sin(xi) * math.exp((n - 1) * _log_cap_fraction_scalar(math.cos(xi)))
        return weight * sin_sum_half * float(special.ellipe(m))

    scale = 2.0 / math.sqrt(n)
    pts = [p for p in (0.5 * scale, scale, 3.0 * scale, 8.0 * scale) if 0.0 < p < math.pi]
    value, err = integrate.quad(
        integrand, 0.0, math.pi, epsrel=_QUAD_EPSREL, epsabs=_QUAD_EPSABS, limit=200,
        points=pts or None,
    )
    _check_quad(value, err)
    return max(1.0, n / (math.pi * sin_half_h) * value)


def alpha2(alpha1_value: float, mode: str = "additive") -> float:
    """Interior-hop chord-stretch ratio derived from ``alpha1``.

    Both ends of an interior hop carry a nearest-neighbor detour.  The
    ``additive`` convention stacks the two mean detours
    (``2*alpha1 - 1``); the ``multiplicative`` one compounds them
    (``alpha1**2``).  The two agree to first order in ``alpha1 - 1``.
    """
    if mode == "additive":
        return 2.0 * alpha1_value - 1.0
    if mode == "multiplicative":
        return alpha1_value * alpha1_value
    raise ValueError(f"unknown alpha2 mode: {mode!r}")


# ---------------------------------------------------------------------------
# Central angle laws for planned hops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CentralAngleLaw:
    """Distribution of a planned hop's central angle.

    ``kind`` is ``"edge"`` for the first/last hop of a route (fixed
    endpoint to nearest-to-ideal relay) and ``"interior"`` for
    relay-to-relay hops, whose law is the edge law with every chord
    stretched by ``alpha1_value``.

    ``alpha2_mode`` records which convention planners should use when
    they need the interior mean-stretch scalar; the law itself only
    needs ``alpha1_value``.
    """

    geometry: ConstellationGeometry
    ideal_hop_angle_rad: float
    kind: str
    alpha1_value: float
    alpha2_mode: str = "additive"

    def __post_init__(self) -> None:
        if self.kind not in ("edge", "interior"):
            raise ValueError(f"kind must be 'edge' or 'interior', got {self.kind!r}")
        if not (0.0 <= self.ideal_hop_angle_rad <= math.pi):
            raise ValueError(
                f"ideal_hop_angle_rad must lie in [0, pi], got {self.ideal_hop_angle_rad}"
            )
        if self.alpha1_value < 1.0 - 1e-9:
            raise ValueError(f"alpha1_value must be >= 1, got {self.alpha1_value}")
        if self.alpha2_mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown alpha2 mode: {self.alpha2_mode!r}")

    @property
    def alpha2_value(self) -> float:
        return alpha2(self.alpha1_value, self.alpha2_mode)


def edge_hop_law(
    geometry: ConstellationGeometry, hop_angle_rad: float, alpha2_mode: str = "additive"
) -> CentralAngleLaw:
    """Law of a first/last hop aiming at an ideal position ``hop_angle_rad`` away."""
    a1 = alpha1(geometry, hop_angle_rad) if hop_angle_rad > 0.0 else 1.0
    return CentralAngleLaw(
        geometry=geometry,
        ideal_hop_angle_rad=hop_angle_rad,
        kind="edge",
        alpha1_value=max(1.0, a1),
        alpha2_mode=alpha2_mode,
    )


def interior_hop_law(
    geometry: ConstellationGeometry, hop_angle_rad: float, alpha2_mode: str = "additive"
) -> CentralAngleLaw:
    """Law of a relay-to-relay hop with ideal spacing ``hop_angle_rad``."""
    a1 = alpha1(geometry, hop_angle_rad) if hop_angle_rad > 0.0 else 1.0
    return CentralAngleLaw(
        geometry=geometry,
        ideal_hop_angle_rad=hop_angle_rad,
        kind="interior",
        alpha1_value=max(1.0, a1),
        alpha2_mode=alpha2_mode,
    )


def _edge_cdf(law: CentralAngleLaw, xi: float) -> float:
    if xi <= 0.0:
        return 0.0
    if xi >= math.pi:
        xi = math.pi
    if law.ideal_hop_angle_rad == 0.0:
        return float(nn_polar_cdf(law.geometry, xi))
    pts = _edge_hint_points(law.geometry, law.ideal_hop_angle_rad, 0.0, xi)
    value, err = integrate.quad(
        lambda t: _edge_pdf_single(law.geometry, law.ideal_hop_angle_rad, t),
        0.0,
        xi,
        epsrel=_QUAD_EPSREL,
        epsabs=_QUAD_EPSABS,
        limit=200,
        points=pts or None,
    )
    _check_quad(value, err)
    return min(1.0, max(0.0, value))


def central_angle_cdf(law: CentralAngleLaw, xi: float) -> float:
    """CDF of the hop central angle at ``xi``.

    The interior law is the edge law with chords stretched by
    ``alpha1_value``: ``F_int(xi) = F_edge(2 asin(sin(xi/2) / alpha1))``.
    """
    if law.kind == "edge":
        return _edge_cdf(law, xi)
    if xi <= 0.0:
        return 0.0
    ratio = math.sin(0.5 * min(xi, math.pi)) / law.alpha1_value
    if ratio >= 1.0:
        return 1.0
    return _edge_cdf(law, 2.0 * math.asin(ratio))


def central_angle_pdf(law: CentralAngleLaw, theta: float) -> float:
    """Density of the hop central angle at ``theta``."""
    if theta <= 0.0 or theta >= math.pi:
        return 0.0
    if law.kind == "edge":
        return _edge_pdf_single(law.geometry, law.ideal_hop_angle_rad, theta)
    a1 = law.alpha1_value
    sin_half = math.sin(0.5 * theta)
    ratio = sin_half / a1
    if ratio >= 1.0:
        return 0.0
    base = 2.0 * math.asin(ratio)
    jac = math.cos(0.5 * theta) / math.sqrt(max(a1 * a1 - sin_half * sin_half, 1e-300))
    return _edge_pdf_single(law.geometry, law.ideal_hop_angle_rad, base) * jac


def law_expectation(
    law: CentralAngleLaw,
    fn: Callable[[float], float],
    upper_rad: float = math.pi,
) -> float:
    """Integral of ``fn(theta)`` against the hop-angle density up to ``upper_rad``.

    Interior-law integrals are evaluated in the underlying edge variable
    (``theta = 2 asin(alpha1 sin(u/2))``), which removes the square-root
    singularity the chord-stretch transform introduces at the upper end
    of the support.
    """
    upper = min(max(upper_rad, 0.0), math.pi)
    if upper == 0.0:
        return 0.0
    geometry, hop = law.geometry, law.ideal_hop_angle_rad

    if law.kind == "edge":
        if hop == 0.0:
            integrand = lambda t: float(nn_polar_pdf(geometry, t)) * fn(t)
        else:
            integrand = lambda t: _edge_pdf_single(geometry, hop, t) * fn(t)
        pts = _edge_hint_points(geometry, hop, 0.0, upper)
        value, err = integrate.quad(
            integrand, 0.0, upper, epsrel=_QUAD_EPSREL, epsabs=_QUAD_EPSABS, limit=200,
            points=pts or None,
        )
        _check_quad(value, err)
        return value

    a1 = law.alpha1_value
    u_upper = 2.0 * math.asin(min(1.0, math.sin(0.5 * upper) / a1))
    if u_upper <= 0.0:
        return 0.0

    def transformed(u: float) -> float:
        stretched = min(1.0, a1 * math.sin(0.5 * u))
        theta = 2.0 * math.asin(stretched)
        if hop == 0.0:
            dens = float(nn_polar_pdf(geometry, u))
        else:
            dens = _edge_pdf_single(geometry, hop, u)
        return dens * fn(theta)

    pts = _edge_hint_points(geometry, hop, 0.0, u_upper)
    value, err = integrate.quad(
        transformed, 0.0, u_upper, epsrel=_QUAD_EPSREL, epsabs=_QUAD_EPSABS, limit=200,
        points=pts or None,
    )
    _check_quad(value, err)
    return value


def cdf_grid(law: CentralAngleLaw, thetas: Sequence[float]) -> np.ndarray:
    """CDF of the law on an increasing grid, via cumulative Simpson sums.

    Much cheaper than calling :func:`central_angle_cdf` once per grid
    point; used for goodness-of-fit sweeps against empirical samples.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 1 or thetas.shape[0] < 2:
        raise ValueError("thetas must be a 1-D grid with at least two points")
    if np.any(np.diff(thetas) <= 0.0):
        raise ValueError("thetas must be strictly increasing")
    dens = np.array([central_angle_pdf(law, float(t)) for t in thetas])
    out = integrate.cumulative_simpson(dens, x=thetas, initial=0.0)
    lead = central_angle_cdf(law, float(thetas[0]))
    return np.minimum(1.0, lead + out)
