"""Shared builders for the test suite.

The default values mirror the package's own configuration defaults
(1000-km shell over a 6371-km Earth, the bundled link budget); tests
override individual fields as needed.
"""
from __future__ import annotations

import math

import pytest

from leo_relay import ChannelParams, ConstellationGeometry

EARTH_RADIUS_M = 6371e3
DEFAULT_SHELL_RADIUS_M = 7371e3


def make_geometry(
    num_satellites: int = 1000,
    sphere_radius_m: float = DEFAULT_SHELL_RADIUS_M,
    earth_radius_m: float = EARTH_RADIUS_M,
) -> ConstellationGeometry:
    return ConstellationGeometry(
        sphere_radius_m=sphere_radius_m,
        earth_radius_m=earth_radius_m,
        num_satellites=num_satellites,
    )


def make_channel(**overrides: float) -> ChannelParams:
    values = dict(
        tx_power_w=10.0**1.5,  # 15 dBW
        antenna_gain=1e16,  # 160 dBi combined
        wavelength_m=1550e-9,
        bandwidth_hz=20e6,
        noise_power_w=1e-13,  # -100 dBm
        packet_bits=1e7,
        fading_shape=1.00526,
        max_fading_gain=0.01979,
        jitter_sigma_rad=0.015,
        coverage_threshold=1.0,  # 0 dB
    )
    values.update(overrides)
    return ChannelParams(**values)


@pytest.fixture(scope="session")
def default_geometry() -> ConstellationGeometry:
    return make_geometry()


@pytest.fixture(scope="session")
def toy_geometry() -> ConstellationGeometry:
    return make_geometry(num_satellites=200)


@pytest.fixture(scope="session")
def channel() -> ChannelParams:
    return make_channel()


QUARTER_TURN = math.pi / 2.0
