"""End-to-end numerical experiments.

Particles are generated in fixed blocks of the index space, pushed through
their free (or walled) flight to every snapshot time and recorded into one
detector per snapshot. Blocks may be processed by several workers, but the
partial detectors are always merged in block order, so the result is the
same bit for bit whatever the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import DEFAULT_PHI0, SIGMA_V, PhotonGeometry, VelocityDistribution
from .detector import DetectorArray
from .rng import BLOCK, ParticleStream

KINDS = ("single_packet", "two_packets", "wall", "double_slit")
SNAPSHOT_TIMES = (0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0)

# stream ids: velocities, photon emission angles
VELOCITY_STREAM = 0
ANGLE_STREAM = 1


@dataclass
class SinglePacket:
    x0: float = 0.0
    v0: float = 5.0
    sigma_v: float = SIGMA_V
    phi0: float = DEFAULT_PHI0


@dataclass
class TwoPackets:
    # collision of the two packet centers at t = (x2 - x1) / (2 v0) = 4
    x1: float = -20.0
    x2: float = 20.0
    v0: float = 5.0
    sigma_v: float = SIGMA_V
    phi0: float = DEFAULT_PHI0


@dataclass
class Wall:
    # packet center reaches the wall at t = 4
    x0: float = -20.0
    v0: float = 5.0
    sigma_v: float = SIGMA_V
    wall_x: float = 0.0
    phi0: float = DEFAULT_PHI0


@dataclass
class DoubleSlit:
    wavelength: float = 842e-9
    slit_separation: float = 250e-6
    screen_distance: float = 0.12
    pixel_width: float = 1e-6
    segment_width: float = 100e-6
    segments: int = 28
    # 0 picks a window that just covers the detector
    half_angle: float = 0.0

    @property
    def geometry(self) -> PhotonGeometry:
        return PhotonGeometry(self.wavelength, self.slit_separation, self.screen_distance)

    @property
    def detector_width(self) -> float:
        return self.segments * self.segment_width

    @property
    def pixels_per_segment(self) -> int:
        return int(round(self.segment_width / self.pixel_width))

    def emission_half_angle(self) -> float:
        if self.half_angle > 0:
            return self.half_angle
        reach = 0.5 * (self.detector_width + self.slit_separation)
        return math.atan(reach / self.screen_distance)


PHYSICS = {"single_packet": SinglePacket, "two_packets": TwoPackets,
           "wall": Wall, "double_slit": DoubleSlit}


@dataclass
class DetectorGeometry:
    x_min: float | None = None
    x_max: float | None = None
    delta_x: float = 0.01


@dataclass
class ScenarioConfig:
    kind: str
    particles: int = 1_000_000
    seed: int = 0
    times: tuple = SNAPSHOT_TIMES
    detector: DetectorGeometry = field(default_factory=DetectorGeometry)
    physics: object = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if self.physics is None:
            self.physics = PHYSICS[self.kind]()
        if not isinstance(self.physics, PHYSICS[self.kind]):
            raise TypeError(f"{self.kind} needs {PHYSICS[self.kind].__name__} parameters")
        if self.particles < 1:
            raise ValueError("particle budget must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.times = tuple(float(t) for t in self.times)
        if self.kind != "double_slit":
            if not self.times:
                raise ValueError("at least one snapshot time is required")
            if any(t <= 0 for t in self.times):
                raise ValueError("snapshot times must be strictly positive")
            if not self.detector.delta_x > 0:
                raise ValueError("delta_x must be positive")
            self._fill_domain()
        else:
            self.physics.geometry  # validates the far-field guard

    @property
    def n_channels(self) -> int:
        return 1 if self.kind == "single_packet" else 2

    def sources(self) -> list[tuple[float, VelocityDistribution]]:
        p = self.physics
        if self.kind == "single_packet":
            return [(p.x0, VelocityDistribution(p.v0, p.sigma_v, 1.0))]
        if self.kind == "two_packets":
            return [(p.x1, VelocityDistribution(p.v0, p.sigma_v, 0.5)),
                    (p.x2, VelocityDistribution(-p.v0, p.sigma_v, 0.5))]
        if self.kind == "wall":
            if p.x0 >= p.wall_x:
                raise ValueError("wall scenario needs x0 < wall_x")
            return [(p.x0, VelocityDistribution(p.v0, p.sigma_v, 1.0))]
        raise ValueError("double_slit has no massive sources")

    def _fill_domain(self):
        d = self.detector
        t_max = max(self.times)
        spread = 6.0 * self.physics.sigma_v * t_max + 1.0
        centers = []
        for x0, dist in self.sources():
            centers += [x0, x0 + dist.mean * t_max]
        lo, hi = min(centers) - spread, max(centers) + spread
        if self.kind == "wall":
            wall = self.physics.wall_x
            p = self.physics
            lo = min(lo, 2 * wall - (p.x0 + p.v0 * t_max) - spread)
            hi = wall
        if d.x_min is None:
            d.x_min = math.floor(lo)
        if d.x_max is None:
            d.x_max = math.ceil(hi) if self.kind != "wall" else hi
        if not d.x_max > d.x_min:
            raise ValueError("detector x_max must exceed x_min")
        if self.kind == "wall" and d.x_max > self.physics.wall_x:
            raise ValueError("wall detector cannot extend past the wall")


# -- shared machinery --------------------------------------------------------

@dataclass(frozen=True)
class Snapshot:
    time: float
    x_min: float
    x_max: float
    delta_x: float

    def new_detector(self, n_channels: int) -> DetectorArray:
        return DetectorArray(self.x_min, self.x_max, self.delta_x, n_channels, self.time)


def _pieces(total: int) -> list[tuple[int, int]]:
    cuts = list(range(0, total, BLOCK)) + [total]
    return list(zip(cuts[:-1], cuts[1:]))


def _accumulate(acc: DetectorArray, part: DetectorArray) -> None:
    # same arithmetic as detector.merge, without the copy
    acc.sums += part.sums
    acc.counts += part.counts
    acc.overflow += part.overflow
    acc.rejected += part.rejected


def _ordered_pass(work, total, fresh, workers, checkpoints=()):
    """Run ``work(start, stop)`` over the fixed blocks of [0, total) and fold
    the results in index order into ``fresh()``.

    Returns the final detectors and the state after the first m particles
    for every checkpoint m. The block layout never depends on the
    checkpoints: a checkpoint inside a block is the prefix so far plus a
    separate partial block, which is exactly what a run with budget m does.
    """
    checkpoints = sorted({int(m) for m in checkpoints})
    if any(m < 0 or m > total for m in checkpoints):
        raise ValueError(f"checkpoints must lie in [0, {total}]")
    acc = fresh()
    snaps = {}
    if 0 in checkpoints:
        snaps[0] = [d.copy() for d in acc]

    def fold(start, stop, parts):
        for m in checkpoints:
            if start < m < stop:
                snaps[m] = [d.copy() for d in acc]
                for a, p in zip(snaps[m], work(start, m)):
                    _accumulate(a, p)
        for a, p in zip(acc, parts):
            _accumulate(a, p)
        if stop in checkpoints:
            snaps[stop] = [d.copy() for d in acc]

    pieces = _pieces(total)
    if workers == 1:
        for start, stop in pieces:
            fold(start, stop, work(start, stop))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            window = 2 * workers
            futures = []
            for start, stop in pieces:
                futures.append((start, stop, pool.submit(work, start, stop)))
                if len(futures) >= window:
                    s, e, fut = futures.pop(0)
                    fold(s, e, fut.result())
            for s, e, fut in futures:
                fold(s, e, fut.result())
    return acc, snaps


# -- massive particles ---------------------------------------------------------

def _massive_work(cfg: ScenarioConfig, snapshots: list[Snapshot]):
    sources = cfg.sources()
    core.check_weights([d for _, d in sources])
    origins = np.array([x0 for x0, _ in sources])
    means = np.array([d.mean for _, d in sources])
    sigmas = np.array([d.sigma for _, d in sources])
    stream = ParticleStream(cfg.seed, VELOCITY_STREAM)
    phi0 = cfg.physics.phi0
    wall = cfg.kind == "wall"
    k = cfg.n_channels

    def work(start, stop):
        src = np.arange(start, stop) % len(sources)
        v = means[src] + sigmas[src] * stream.normal(start, stop - start)
        x0 = origins[src]
        parts = []
        for snap in snapshots:
            det = snap.new_detector(k)
            if wall:
                x, phase, ch = core.wall_flight(x0, v, snap.time, phi0, cfg.physics.wall_x)
            else:
                x = core.free_position(x0, v, snap.time)
                phase = core.free_phase(v, snap.time, phi0)
                ch = src
            det.record_many(x, phase, ch)
            parts.append(det)
        return parts

    return work


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    snapshots: list[Snapshot]
    detectors: list[DetectorArray]
    buildup: dict[int, list[DetectorArray]] = field(default_factory=dict)
    elapsed: float = 0.0

    def at(self, t: float) -> DetectorArray:
        for snap, det in zip(self.snapshots, self.detectors):
            if snap.time == t:
                return det
        raise KeyError(t)


def run_massive(cfg: ScenarioConfig, snapshots: list[Snapshot] | None = None,
                checkpoints=()) -> ScenarioResult:
    if cfg.kind == "double_slit":
        raise ValueError("use run_double_slit for photons")
    d = cfg.detector
    if snapshots is None:
        snapshots = [Snapshot(t, d.x_min, d.x_max, d.delta_x) for t in cfg.times]
    t0 = time.perf_counter()
    work = _massive_work(cfg, snapshots)
    fresh = lambda: [s.new_detector(cfg.n_channels) for s in snapshots]
    dets, snaps = _ordered_pass(work, cfg.particles, fresh, cfg.workers, checkpoints)
    return ScenarioResult(cfg, snapshots, dets, snaps, time.perf_counter() - t0)


def _require(cfg: ScenarioConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ValueError(f"expected a {kind} config, got {cfg.kind}")


def run_single_packet(cfg: ScenarioConfig, checkpoints=()) -> ScenarioResult:
    _require(cfg, "single_packet")
    return run_massive(cfg, checkpoints=checkpoints)


def run_two_packets(cfg: ScenarioConfig, checkpoints=()) -> ScenarioResult:
    _require(cfg, "two_packets")
    return run_massive(cfg, checkpoints=checkpoints)


def run_wall(cfg: ScenarioConfig, checkpoints=()) -> ScenarioResult:
    _require(cfg, "wall")
    return run_massive(cfg, checkpoints=checkpoints)


def run_bin_sizes(cfg: ScenarioConfig, delta_xs, t: float = 4.0) -> ScenarioResult:
    """One pass over the particle stream feeding one detector per bin size,
    all at time ``t``; differences between them come from binning alone."""
    d = cfg.detector
    snaps = [Snapshot(t, d.x_min, d.x_max, float(dx)) for dx in delta_xs]
    return run_massive(cfg, snapshots=snaps)


# -- photons -------------------------------------------------------------------

@dataclass
class DoubleSlitResult:
    config: ScenarioConfig
    pixels: DetectorArray
    buildup: dict[int, DetectorArray] = field(default_factory=dict)
    elapsed: float = 0.0

    def segments(self, pixels: DetectorArray | None = None):
        """(segment centers, raw counts, recorded counts) summed over the
        pixels of each segment."""
        return segment_histogram(self.pixels if pixels is None else pixels,
                                 self.config.physics)


def segment_histogram(pixels: DetectorArray, p: DoubleSlit):
    per = p.pixels_per_segment
    raw = pixels.raw().reshape(p.segments, per).sum(axis=1)
    rec = pixels.recorded().reshape(p.segments, per).sum(axis=1)
    centers = -0.5 * p.detector_width + (np.arange(p.segments) + 0.5) * p.segment_width
    return centers, raw, rec


def pixel_detector(p: DoubleSlit) -> DetectorArray:
    half = 0.5 * p.detector_width
    det = DetectorArray(-half, half, p.pixel_width, 2, None)
    expected = p.segments * p.pixels_per_segment
    if det.n_bins != expected:
        raise ValueError("segment width must be a whole number of pixels")
    return det


def _photon_work(cfg: ScenarioConfig):
    p: DoubleSlit = cfg.physics
    geo = p.geometry
    slits = np.array(geo.slit_positions)
    theta_max = p.emission_half_angle()
    angles = ParticleStream(cfg.seed, ANGLE_STREAM)
    template = pixel_detector(p)

    def work(start, stop):
        slit = np.arange(start, stop) % 2
        theta = (2.0 * angles.uniform(start, stop - start) - 1.0) * theta_max
        y_src = slits[slit]
        hit = y_src + geo.screen_distance * np.tan(theta)
        det = DetectorArray(template.x_min, template.x_max, template.delta_x, 2, None)
        idx = np.floor((hit - det.x_min) / det.delta_x)
        inside = (hit >= det.x_min) & (hit < det.x_max)
        # photons inside are registered at their pixel center; the phase is
        # the straight path from the slit to that center
        center = np.where(inside, det.x_min + (idx + 0.5) * det.delta_x, hit)
        path = np.hypot(geo.screen_distance, center - y_src)
        det.record_many(center, core.photon_phase(path, geo.wavelength), slit)
        return [det]

    return work


def run_double_slit(cfg: ScenarioConfig, checkpoints=()) -> DoubleSlitResult:
    _require(cfg, "double_slit")
    t0 = time.perf_counter()
    template = pixel_detector(cfg.physics)
    fresh = lambda: [template.copy()]
    dets, snaps = _ordered_pass(_photon_work(cfg), cfg.particles, fresh, cfg.workers, checkpoints)
    return DoubleSlitResult(cfg, dets[0], {m: s[0] for m, s in snaps.items()},
                            time.perf_counter() - t0)


def double_slit_expected(p: DoubleSlit, photons: int, x=None):
    """Expected raw and recorded counts per pixel for ``photons`` emitted
    photons, from the emission density and the exact path phases."""
    geo = p.geometry
    det = pixel_detector(p)
    x = det.centers if x is None else np.asarray(x)
    theta_max = p.emission_half_angle()
    amps = []
    raw = np.zeros_like(x)
    for y in geo.slit_positions:
        # d(theta)/dx for a photon landing at x from a slit at y
        dens = geo.screen_distance / (geo.screen_distance ** 2 + (x - y) ** 2)
        n = 0.5 * photons * dens * p.pixel_width / (2.0 * theta_max)
        phase = core.photon_phase(np.hypot(geo.screen_distance, x - y), geo.wavelength)
        raw += n
        amps.append(np.sqrt(n) * np.exp(1j * phase))
    return raw, np.abs(amps[0] + amps[1]) ** 2


def run(cfg: ScenarioConfig, checkpoints=()):
    runner = {"single_packet": run_single_packet, "two_packets": run_two_packets,
              "wall": run_wall, "double_slit": run_double_slit}[cfg.kind]
    return runner(cfg, checkpoints=checkpoints)
