import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasedet.detector import (ChannelAccumulator, DetectionBin, DetectorArray, GeometryMismatch,
                               buildup_snapshot, density_profile, finalize_bin, merge, n_bins_for,
                               record, recorded_count)


def one_bin(k=1):
    return DetectorArray(0.0, 1.0, 1.0, k)


def test_record_single_phase():
    det = record(one_bin(), 0.5, 0.0, 0)
    assert det.sums[0, 0] == 1 + 0j and det.counts[0, 0] == 1


def test_record_cancel():
    det = one_bin()
    det.record(0.5, 0.0, 0).record(0.5, math.pi, 0)
    assert abs(det.sums[0, 0]) < 1e-15 and det.counts[0, 0] == 2


def test_record_four_quadrants():
    det = one_bin()
    for ph in (0, math.pi / 2, math.pi, 3 * math.pi / 2):
        det.record(0.5, ph, 0)
    assert abs(det.sums[0, 0]) < 1e-15 and det.counts[0, 0] == 4
    assert det.recorded()[0] == pytest.approx(0.0, abs=1e-30)


def test_finalize_examples():
    phi = 0.7
    b = DetectionBin(0.0, 1.0, [ChannelAccumulator()])
    b.channels[0].add(phi)
    assert finalize_bin(b) == pytest.approx(complex(math.cos(phi), math.sin(phi)))
    assert recorded_count(b) == pytest.approx(1.0)

    b = DetectionBin(0.0, 1.0, [ChannelAccumulator(), ChannelAccumulator()])
    b.channels[0].add(0.0)
    b.channels[1].add(0.0)
    assert finalize_bin(b) == 2 and recorded_count(b) == 4 and b.raw_count == 2


@pytest.mark.parametrize("n", [1, 2, 7, 1000])
def test_coherent_channel_gives_n(n):
    det = one_bin()
    det.record_many(np.full(n, 0.5), np.zeros(n), 0)
    assert det.recorded()[0] == n
    det = one_bin()
    det.record_many(np.full(n, 0.5), np.full(n, 1.234), 0)
    assert det.recorded()[0] == pytest.approx(n, rel=1e-12)


def test_empty_bin_and_empty_channel():
    b = DetectionBin(0.0, 1.0, [ChannelAccumulator(), ChannelAccumulator()])
    assert recorded_count(b) == 0
    b.channels[1].add(0.3)
    assert recorded_count(b) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 50), p1=st.floats(-10, 10), p2=st.floats(-10, 10))
def test_two_uniform_channels(n, p1, p2):
    det = one_bin(2)
    det.record_many(np.full(n, 0.5), np.full(n, p1), 0)
    det.record_many(np.full(n, 0.5), np.full(n, p2), 1)
    assert det.recorded()[0] == pytest.approx(2 * n * (1 + math.cos(p1 - p2)), abs=1e-9 * n)


def test_phase_gap_pi_is_node():
    det = one_bin(2)
    det.record_many(np.full(5, 0.5), np.full(5, 0.0), 0)
    det.record_many(np.full(5, 0.5), np.full(5, math.pi), 1)
    assert det.recorded()[0] == pytest.approx(0.0, abs=1e-24)


def test_bins_tile_half_open():
    det = DetectorArray(-1.0, 1.0, 0.5, 1)
    assert det.n_bins == 4
    det.record_many([-1.0, -0.5, 0.999, 1.0, -1.0001], np.zeros(5), 0)
    assert det.raw().tolist() == [1, 1, 0, 1]
    assert det.overflow == 2
    assert n_bins_for(0, 1, 0.3) == 4
    assert n_bins_for(-91, 91, 0.01) == 18200


def test_non_finite_rejected():
    det = one_bin()
    det.record_many([0.5, np.nan, 0.5, np.inf], [0.0, 0.0, np.nan, 0.0], 0)
    assert det.rejected == 3 and det.raw()[0] == 1 and det.n_records == 4


def test_channel_out_of_range():
    with pytest.raises(ValueError):
        one_bin(2).record(0.5, 0.0, 2)


def test_bad_geometry():
    with pytest.raises(ValueError):
        DetectorArray(0, 1, 0, 1)
    with pytest.raises(ValueError):
        DetectorArray(1, 0, 0.1, 1)
    with pytest.raises(ValueError):
        DetectionBin(0.0, 0.0)


def random_detector(seed, n=2000, k=2, t=1.0):
    rng = np.random.default_rng(seed)
    det = DetectorArray(-3, 3, 0.1, k, t)
    det.record_many(rng.normal(0, 1.5, n), rng.uniform(-50, 50, n), rng.integers(0, k, n))
    return det


def test_merge_identity_and_double():
    d = random_detector(1)
    e = merge(DetectorArray(-3, 3, 0.1, 2, 1.0), d)
    assert np.array_equal(e.counts, d.counts) and np.array_equal(e.sums, d.sums)
    dd = merge(d, d)
    assert np.array_equal(dd.counts, 2 * d.counts)
    assert np.array_equal(dd.sums, 2 * d.sums)
    assert dd.overflow == 2 * d.overflow


def test_merge_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        merge(random_detector(0, t=1.0), random_detector(0, t=2.0))
    with pytest.raises(GeometryMismatch):
        merge(DetectorArray(0, 1, 0.1, 1), DetectorArray(0, 1, 0.1, 2))


@settings(max_examples=30, deadline=None)
@given(seeds=st.tuples(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6)))
def test_merge_associative(seeds):
    a, b, c = (random_detector(s) for s in seeds)
    left = merge(merge(a, b), c)
    right = merge(a, merge(b, c))
    assert np.array_equal(left.counts, right.counts)
    scale = np.maximum(np.abs(left.sums), 1.0)
    assert np.all(np.abs(left.sums - right.sums) <= 1e-10 * scale)
    comm = merge(b, a)
    assert np.array_equal(comm.counts, merge(a, b).counts)


def test_split_merge_matches_serial():
    rng = np.random.default_rng(9)
    x = rng.normal(0, 1, 10_000)
    ph = rng.uniform(0, 100, 10_000)
    ch = rng.integers(0, 2, 10_000)
    serial = DetectorArray(-3, 3, 0.01, 2).record_many(x, ph, ch)
    a = DetectorArray(-3, 3, 0.01, 2).record_many(x[:4321], ph[:4321], ch[:4321])
    b = DetectorArray(-3, 3, 0.01, 2).record_many(x[4321:], ph[4321:], ch[4321:])
    m = merge(a, b)
    assert np.array_equal(m.counts, serial.counts) and m.overflow == serial.overflow
    assert np.allclose(m.sums, serial.sums, rtol=1e-10, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 4), n=st.integers(0, 3000))
def test_conservation_and_bound(seed, k, n):
    det = random_detector(seed, n=n, k=k)
    assert det.raw().sum() + det.overflow + det.rejected == n
    bound = np.sqrt(det.counts).sum(axis=1) ** 2
    assert np.all(det.recorded() <= bound * (1 + 1e-12) + 1e-12)
    assert np.all(bound <= k * det.raw() + 1e-9)
    assert np.all(np.abs(det.sums) <= det.counts + 1e-9)
    assert np.all(det.sums[det.counts == 0] == 0)


def test_density_profile():
    det = DetectorArray(0, 1, 0.25, 1)
    prof = density_profile(det, 10)
    assert not prof.raw_density.any() and not prof.recorded_density.any()
    det.record_many([0.1, 0.1, 0.6], [0.0, 0.0, 1.0], 0)
    prof = density_profile(det, 3)
    assert prof.raw_density.tolist() == pytest.approx([2 / 0.75, 0, 4 / 3, 0])
    assert prof.as_array().shape == (4, 3)
    with pytest.raises(ValueError):
        density_profile(det, 0)


def test_buildup_snapshot():
    det = DetectorArray(0, 1, 0.25, 1)
    prof = buildup_snapshot(det)
    assert prof.total == 0 and not prof.recorded_density.any()
    det.record_many([0.1, 0.3, 5.0], [0.0, 0.0, 0.0], 0)
    prof = buildup_snapshot(det)
    assert prof.total == 3
    assert np.array_equal(prof.raw_density, density_profile(det, 3).raw_density)
