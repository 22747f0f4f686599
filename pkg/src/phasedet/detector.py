"""The phase-aggregating detector.

Each spatial bin keeps, for every arrival channel k, the running sum of
unit phasors exp(i*phi) and the number of particles N_k. When read out a bin
announces

    amplitude = sum_k  S_k / sqrt(N_k)
    recorded  = |amplitude|**2

next to the plain particle count N = sum_k N_k. Channels that saw no
particle contribute nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryMismatch(ValueError):
    pass


@dataclass
class ChannelAccumulator:
    sum: complex = 0j
    count: int = 0

    def add(self, phase: float) -> None:
        self.sum += complex(math.cos(phase), math.sin(phase))
        self.count += 1


@dataclass
class DetectionBin:
    center: float
    width: float
    channels: list[ChannelAccumulator] = field(default_factory=list)

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bin width must be positive")

    @property
    def raw_count(self) -> int:
        return sum(ch.count for ch in self.channels)


def finalize_bin(bin: DetectionBin) -> complex:
    amp = 0j
    for ch in bin.channels:
        if ch.count > 0:
            amp += ch.sum / math.sqrt(ch.count)
    return amp


def recorded_count(bin: DetectionBin) -> float:
    occupied = [ch for ch in bin.channels if ch.count > 0]
    if len(occupied) == 1:
        s = occupied[0].sum
        return (s.real ** 2 + s.imag ** 2) / occupied[0].count
    return abs(finalize_bin(bin)) ** 2


def n_bins_for(x_min: float, x_max: float, delta_x: float) -> int:
    # tolerate (x_max - x_min)/delta_x landing a hair above an integer
    return max(1, math.ceil((x_max - x_min) / delta_x - 1e-9))


class DetectorArray:
    """A grid of detection bins tiling [x_min, x_max) at one snapshot time.

    Single writer. Parallel fills use one private array per worker and
    :func:`merge` at the end.
    """

    def __init__(self, x_min: float, x_max: float, delta_x: float, n_channels: int,
                 snapshot_time: float | None = None):
        if not delta_x > 0:
            raise ValueError("delta_x must be positive")
        if not x_max > x_min:
            raise ValueError("x_max must exceed x_min")
        if n_channels < 1:
            raise ValueError("need at least one channel")
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        self.delta_x = float(delta_x)
        self.n_channels = int(n_channels)
        self.snapshot_time = snapshot_time
        n = n_bins_for(self.x_min, self.x_max, self.delta_x)
        self.sums = np.zeros((n, self.n_channels), dtype=complex)
        self.counts = np.zeros((n, self.n_channels), dtype=np.int64)
        self.overflow = 0
        self.rejected = 0

    @property
    def n_bins(self) -> int:
        return self.counts.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_bins) + 0.5) * self.delta_x

    @property
    def geometry(self) -> tuple:
        return (self.x_min, self.x_max, self.delta_x, self.n_channels, self.snapshot_time)

    @property
    def n_records(self) -> int:
        """Every particle offered to the detector, binned or not."""
        return int(self.counts.sum()) + self.overflow + self.rejected

    def copy(self) -> DetectorArray:
        out = DetectorArray(self.x_min, self.x_max, self.delta_x, self.n_channels,
                            self.snapshot_time)
        out.sums = self.sums.copy()
        out.counts = self.counts.copy()
        out.overflow = self.overflow
        out.rejected = self.rejected
        return out

    def bin(self, i: int) -> DetectionBin:
        chans = [ChannelAccumulator(complex(s), int(c))
                 for s, c in zip(self.sums[i], self.counts[i])]
        return DetectionBin(float(self.centers[i]), self.delta_x, chans)

    def record(self, x: float, phase: float, channel: int) -> DetectorArray:
        self.record_many(np.array([x], dtype=float), np.array([phase], dtype=float),
                         np.array([channel]))
        return self

    def record_many(self, x, phase, channel) -> DetectorArray:
        """Vectorized :meth:`record`; particles are summed in array order."""
        x = np.asarray(x, dtype=float)
        phase = np.asarray(phase, dtype=float)
        channel = np.broadcast_to(np.asarray(channel, dtype=np.int64), x.shape)
        if channel.size and (channel.min() < 0 or channel.max() >= self.n_channels):
            raise ValueError(f"channel outside [0, {self.n_channels})")

        finite = np.isfinite(x) & np.isfinite(phase)
        self.rejected += int(np.count_nonzero(~finite))
        inside = finite & (x >= self.x_min) & (x < self.x_max)
        self.overflow += int(np.count_nonzero(finite & ~inside))
        if not inside.any():
            return self

        xs, ph, ch = x[inside], phase[inside], channel[inside]
        idx = np.floor((xs - self.x_min) / self.delta_x).astype(np.int64)
        np.clip(idx, 0, self.n_bins - 1, out=idx)
        flat = idx * self.n_channels + ch
        size = self.n_bins * self.n_channels
        re = np.bincount(flat, weights=np.cos(ph), minlength=size)
        im = np.bincount(flat, weights=np.sin(ph), minlength=size)
        self.sums += (re + 1j * im).reshape(self.n_bins, self.n_channels)
        self.counts += np.bincount(flat, minlength=size).reshape(self.n_bins, self.n_channels)
        return self

    def amplitudes(self) -> np.ndarray:
        """Per-bin complex amplitude, vectorized over all bins."""
        with np.errstate(divide="ignore", invalid="ignore"):
            per_channel = np.where(self.counts > 0, self.sums / np.sqrt(self.counts), 0j)
        return per_channel.sum(axis=1)

    def recorded(self) -> np.ndarray:
        out = np.abs(self.amplitudes()) ** 2
        # one occupied channel: |S|^2/N avoids the sqrt round trip, so a
        # coherent bin reports exactly N
        single = np.count_nonzero(self.counts, axis=1) == 1
        if single.any():
            s = self.sums[single].sum(axis=1)
            n = self.counts[single].sum(axis=1)
            out[single] = (s.real ** 2 + s.imag ** 2) / n
        return out

    def raw(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def record(detector: DetectorArray, x: float, phase: float, channel: int) -> DetectorArray:
    return detector.record(x, phase, channel)


def merge(a: DetectorArray, b: DetectorArray) -> DetectorArray:
    if a.geometry != b.geometry:
        raise GeometryMismatch(f"cannot merge {a.geometry} with {b.geometry}")
    out = a.copy()
    out.sums += b.sums
    out.counts += b.counts
    out.overflow += b.overflow
    out.rejected += b.rejected
    return out


@dataclass
class DensityProfile:
    """Bin centers with raw and recorded counts, normalized by N*dx."""

    x: np.ndarray
    raw_count: np.ndarray
    recorded_count: np.ndarray
    delta_x: float
    total: int

    @property
    def raw_density(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.x)
        return self.raw_count / (self.total * self.delta_x)

    @property
    def recorded_density(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.x)
        return self.recorded_count / (self.total * self.delta_x)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.x, self.recorded_density, self.raw_density])


def density_profile(detector: DetectorArray, total_particles: int) -> DensityProfile:
    if total_particles <= 0:
        raise ValueError("total_particles must be positive")
    return DensityProfile(detector.centers, detector.raw(), detector.recorded(),
                          detector.delta_x, int(total_particles))


def buildup_snapshot(detector: DetectorArray) -> DensityProfile:
    """Profile of a detector that has seen only the first m particles, m
    being however many it was offered; m = 0 gives an all-zero profile."""
    m = detector.n_records
    return DensityProfile(detector.centers, detector.raw(), detector.recorded(),
                          detector.delta_x, m)
