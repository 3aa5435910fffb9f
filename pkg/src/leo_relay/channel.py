"""Inter-satellite link budget, pointing-error fading, and hop latency.

The link model combines free-space path loss with a misalignment fading
gain: the transmitter's pointing deviation is Rayleigh distributed, the
collected-power fraction given the deviation follows a power-law density
on ``(0, max_fading_gain]``, and severe deviations show up as outright
outage with probability ``jitter_sigma_rad ** 2``.

Latency figures are per-packet transmission times at Shannon rate; the
"kernel" evaluates the rate at the mean fading gain, the "covered"
moments average over fading conditioned on the hop actually meeting the
coverage threshold (an uncovered attempt delivers nothing, so only
covered attempts carry a finite delivery time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "ChannelParams",
    "FadingSample",
    "mean_fading_gain",
    "snr",
    "conditional_coverage",
    "coverage_gain_threshold",
    "single_hop_latency_kernel",
    "mean_covered_latency",
    "sample_fading",
    "sample_fading_gains",
    "sample_covered_gains",
]

_FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class ChannelParams:
    """Static link-budget and fading parameters shared by all hops.

    Args:
        tx_power_w: Transmit power in watts.
        antenna_gain: Combined transmit/receive gain, linear.
        wavelength_m: Carrier wavelength in meters.
        bandwidth_hz: Channel bandwidth in hertz.
        noise_power_w: Receiver noise power in watts.
        packet_bits: Packet size in bits.
        fading_shape: Power-law exponent parameter of the collected-power
            fraction; larger values concentrate the gain near its maximum.
        max_fading_gain: Largest collectable power fraction, in ``(0, 1]``.
        jitter_sigma_rad: Rayleigh scale of the pointing deviation, in
            radians; its square is the outage probability.
        coverage_threshold: Linear SNR a hop must meet to be covered.
    """

    tx_power_w: float
    antenna_gain: float
    wavelength_m: float
    bandwidth_hz: float
    noise_power_w: float
    packet_bits: float
    fading_shape: float
    max_fading_gain: float
    jitter_sigma_rad: float
    coverage_threshold: float

    def __post_init__(self) -> None:
        positive = {
            "tx_power_w": self.tx_power_w,
            "antenna_gain": self.antenna_gain,
            "wavelength_m": self.wavelength_m,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_power_w": self.noise_power_w,
            "packet_bits": self.packet_bits,
            "fading_shape": self.fading_shape,
        }
        for name, value in positive.items():
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if not (self.coverage_threshold >= 0.0) or not math.isfinite(self.coverage_threshold):
            raise ValueError(
                f"coverage_threshold must be non-negative and finite, got {self.coverage_threshold}"
            )
        if not (0.0 < self.max_fading_gain <= 1.0):
            raise ValueError(f"max_fading_gain must lie in (0, 1], got {self.max_fading_gain}")
        if not (0.0 <= self.jitter_sigma_rad < 1.0):
            raise ValueError(
                "jitter_sigma_rad must lie in [0, 1) so its square is an outage "
                f"probability, got {self.jitter_sigma_rad}"
            )

    @property
    def outage_probability(self) -> float:
        return self.jitter_sigma_rad * self.jitter_sigma_rad

    @property
    def shape_sq(self) -> float:
        return self.fading_shape * self.fading_shape


@dataclass(frozen=True)
class FadingSample:
    """One draw of the misalignment fading: gain is 0 under outage.

    ``deviation_rad`` is the pointing deviation, Rayleigh-distributed
    with scale ``jitter_sigma_rad``; it is reported for inspection and
    coupled to the outage event (outage occurs exactly when the
    deviation falls in the upper tail of mass ``jitter_sigma_rad**2``),
    so one uniform draw drives both.
    """

    gain: float
    is_outage: bool
    deviation_rad: float = 0.0


def mean_fading_gain(params: ChannelParams) -> float:
    """Mean collected-power fraction, outage mass included.

    Equals ``max_fading_gain * shape_sq / (1 + shape_sq) * (1 - outage)``;
    the trailing factor is the second-order small-deviation approximation
    of the mean cosine of the pointing deviation.
    """
    s2 = params.shape_sq
    return params.max_fading_gain * s2 / (1.0 + s2) * (1.0 - params.outage_probability)


def snr(params: ChannelParams, chord_m: float, gain: float) -> float:
    """Received SNR over a chord at a given fading gain."""
    if chord_m <= 0.0:
        raise ValueError(f"chord_m must be positive, got {chord_m}")
    spreading = params.wavelength_m / (_FOUR_PI * chord_m)
    return (
        params.tx_power_w * params.antenna_gain * spreading * spreading * gain
        / params.noise_power_w
    )


def _threshold_ratio(params: ChannelParams, chord_m: float) -> float:
    """Coverage-threshold gain as a fraction of the maximum gain.

    This is the ``x`` in the coverage law: the hop is covered iff the
    fading gain exceeds ``x * max_fading_gain``.  Values ``>= 1`` mean
    the hop cannot be covered even at peak gain.
    """
    spread = _FOUR_PI * chord_m / params.wavelength_m
    return (
        params.coverage_threshold * params.noise_power_w * spread * spread
        / (params.max_fading_gain * params.tx_power_w * params.antenna_gain)
    )


def coverage_gain_threshold(params: ChannelParams, chord_m: float) -> float:
    """Smallest fading gain at which the hop meets the coverage threshold."""
    return _threshold_ratio(params, chord_m) * params.max_fading_gain


def conditional_coverage(params: ChannelParams, chord_m: float) -> float:
    """Probability a hop of the given chord meets the SNR threshold.

    ``(1 - outage) * (1 - x ** shape_sq)`` for threshold ratio ``x < 1``,
    zero otherwise.  Strictly below ``1 - outage`` for any positive chord.
    """
    x = _threshold_ratio(params, chord_m)
    if x >= 1.0:
        return 0.0
    return (1.0 - params.outage_probability) * (1.0 - x ** params.shape_sq)


def single_hop_latency_kernel(params: ChannelParams, chord_m: float) -> float:
    """Per-packet transmission time at the mean fading gain.

    ``packet_bits / (bandwidth * log2(1 + snr(chord, mean gain)))`` —
    the deterministic latency kernel used by the hop-count optimizers.
    """
    rate_snr = snr(params, chord_m, mean_fading_gain(params))
    return params.packet_bits / (params.bandwidth_hz * math.log2(1.0 + rate_snr))


def _latency_at_gain(params: ChannelParams, chord_m: float, gain: float) -> float:
    return params.packet_bits / (params.bandwidth_hz * math.log2(1.0 + snr(params, chord_m, gain)))


def covered_latency_bound(params: ChannelParams) -> float:
    """Upper bound on any covered hop's per-packet time (rate at threshold SNR)."""
    return params.packet_bits / (params.bandwidth_hz * math.log2(1.0 + params.coverage_threshold))


def mean_covered_latency(params: ChannelParams, chord_m: float) -> float:
    """Mean per-packet time over fading, conditioned on the hop being covered.

    Averages ``packet_bits / (B log2(1 + SNR(W)))`` over the gain ``W``
    restricted to the coverage region ``W >= threshold gain``.  When the
    chord is too long for coverage at any gain, returns the threshold-SNR
    bound (the integrand's supremum) so callers get a finite, continuous
    limit; such chords carry zero coverage weight in route metrics.
    """
    x = _threshold_ratio(params, chord_m)
    if x >= 1.0:
        return covered_latency_bound(params)
    s2 = params.shape_sq
    lo = x ** s2

    # Gain in terms of its (uniform) CDF coordinate t: W = A0 * t ** (1/s2).
    def integrand(t: float) -> float:
        gain = params.max_fading_gain * t ** (1.0 / s2)
        return _latency_at_gain(params, chord_m, gain)

    value, err = integrate.quad(integrand, lo, 1.0, epsrel=1e-9, epsabs=1e-14, limit=200)
    if not math.isfinite(value) or err > max(1e-12, 1e-6 * abs(value)):
        raise RuntimeError(
            f"covered-latency quadrature failed: value={value!r}, err={err!r}"
        )
    return value / (1.0 - lo)


def sample_fading(params: ChannelParams, rng: np.random.Generator) -> FadingSample:
    """Draw one fading realization (outage with probability sigma^2).

    The first uniform fixes the pointing deviation through the Rayleigh
    inverse survival function and thereby the outage indicator (outage
    is the upper deviation tail of mass sigma^2); a second uniform is
    drawn only for the non-outage gain.
    """
    u_dev = rng.random()
    if params.jitter_sigma_rad == 0.0:
        deviation = 0.0
    elif u_dev <= 0.0:
        deviation = math.inf
    else:
        deviation = params.jitter_sigma_rad * math.sqrt(-2.0 * math.log(u_dev))
    if u_dev < params.outage_probability:
        return FadingSample(gain=0.0, is_outage=True, deviation_rad=deviation)
    u = rng.random()
    return FadingSample(
        gain=params.max_fading_gain * u ** (1.0 / params.shape_sq),
        is_outage=False,
        deviation_rad=deviation,
    )


def sample_fading_gains(params: ChannelParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector of fading gains with outage draws mapped to 0."""
    outage = rng.random(size) < params.outage_probability
    u = rng.random(size)
    gains = params.max_fading_gain * u ** (1.0 / params.shape_sq)
    gains[outage] = 0.0
    return gains


def sample_covered_gains(
    params: ChannelParams, chord_m: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Fading gains conditioned on the hop being covered.

    Inverse-CDF sampling restricted to the coverage region.  Raises if
    the chord cannot be covered at any gain.
    """
    x = _threshold_ratio(params, chord_m)
    if x >= 1.0:
        raise ValueError(f"chord {chord_m} m cannot be covered at any fading gain")
    s2 = params.shape_sq
    lo = x ** s2
    t = lo + (1.0 - lo) * rng.random(size)
    return params.max_fading_gain * t ** (1.0 / s2)
