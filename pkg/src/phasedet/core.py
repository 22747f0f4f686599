"""Classical free particles that carry an action phase.

Internal units: hbar/m = 1 and the velocity dispersion sigma_v = 1, so

    velocity  in units of sigma_v
    length    in units of hbar / (m sigma_v)
    time      in units of hbar / (m sigma_v**2)

Everything in this package works in those units; conversion (if any) is
left to the I/O layer. Photons are the exception and use SI lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import ParticleStream

HBAR_OVER_M = 1.0
SIGMA_V = 1.0
# minimum-spread pairing sigma_x0 * sigma_v = 1/2
SIGMA_X0 = 0.5 * HBAR_OVER_M / SIGMA_V
DEFAULT_PHI0 = -math.pi / 4

DIRECT = 0
REFLECTED = 1


@dataclass(frozen=True)
class Particle:
    x_origin: float
    v: float
    phi0: float = DEFAULT_PHI0
    channel: int = 0
    reflected: bool = False


@dataclass(frozen=True)
class VelocityDistribution:
    mean: float
    sigma: float = SIGMA_V
    weight: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.weight <= 1:
            raise ValueError(f"weight must lie in (0, 1], got {self.weight}")


def check_weights(dists) -> None:
    total = math.fsum(d.weight for d in dists)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"source weights sum to {total}, expected 1")


@dataclass(frozen=True)
class PhotonGeometry:
    """Two slits at y = +-D/2 and a detection line parallel to the slit
    screen at distance ``screen_distance``. Lengths in meters."""

    wavelength: float = 842e-9
    slit_separation: float = 250e-6
    screen_distance: float = 0.12
    min_distance_ratio: float = 100.0

    def __post_init__(self):
        if self.wavelength <= 0 or self.slit_separation <= 0 or self.screen_distance <= 0:
            raise ValueError("photon geometry lengths must be positive")
        ratio = self.screen_distance / self.slit_separation
        if ratio < self.min_distance_ratio:
            raise ValueError(
                f"screen_distance/slit_separation = {ratio:.3g} is below "
                f"the far-field guard {self.min_distance_ratio:g}"
            )

    @property
    def slit_positions(self) -> tuple[float, float]:
        half = 0.5 * self.slit_separation
        return (-half, half)

    @property
    def fringe_spacing(self) -> float:
        return self.wavelength * self.screen_distance / self.slit_separation


def sample_velocity(dist: VelocityDistribution, stream: ParticleStream, index: int) -> float:
    """Velocity of particle ``index``; the same (seed, index) always gives
    the same value however the particles are split across workers."""
    z = stream.normal(index, 1)[0]
    return dist.mean + dist.sigma * z


def sample_velocities(dist: VelocityDistribution, stream: ParticleStream,
                      start: int, count: int) -> np.ndarray:
    return dist.mean + dist.sigma * stream.normal(start, count)


# -- array kernels -----------------------------------------------------------

def free_position(x_origin, v, t):
    return x_origin + v * t


def free_phase(v, t, phi0):
    # action of a free particle: integral of v**2/2 dt
    return 0.5 * v * v * t + phi0


def wall_flight(x_origin, v, t, phi0, wall_x=0.0):
    """Free flight with an infinitely hard wall at ``wall_x``.

    Returns ``(position, phase, channel)`` arrays. A particle that has hit
    the wall by time ``t`` is mirrored back, picks up an extra phase of pi
    and is tagged REFLECTED. Its speed, and hence its action, is unchanged.
    """
    x_origin = np.asarray(x_origin, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(x_origin >= wall_x):
        raise ValueError("particles must start on the left of the wall")
    x_free = x_origin + v * t
    hit = x_free >= wall_x
    position = np.where(hit, 2.0 * wall_x - x_free, x_free)
    # exactly on the wall: keep it inside, in the bin touching the wall
    position = np.where(position >= wall_x, np.nextafter(wall_x, -np.inf), position)
    phase = free_phase(v, t, phi0) + np.where(hit, np.pi, 0.0)
    channel = np.where(hit, REFLECTED, DIRECT).astype(np.int64)
    return position, phase, channel


# -- single-particle operations ----------------------------------------------

def position_free(p: Particle, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return p.x_origin + p.v * t


def phase_free(p: Particle, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return 0.5 * p.v * p.v * t + p.phi0


def evolve_with_wall(p: Particle, t: float, wall_x: float = 0.0) -> tuple[float, float, int]:
    if t < 0:
        raise ValueError("t must be non-negative")
    x, phase, channel = wall_flight(p.x_origin, p.v, t, p.phi0, wall_x)
    return float(x), float(phase), int(channel)


def photon_phase(path_length, wavelength):
    """Phase 2*pi*l/lambda accumulated by a photon over ``path_length``."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    if np.any(np.asarray(path_length) < 0):
        raise ValueError("path length must be non-negative")
    return 2.0 * np.pi * path_length / wavelength
